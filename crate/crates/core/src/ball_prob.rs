//! Exact distortion-ball probabilities.
//!
//! For a source word `x` of length `n`, a codebook process `ℚ` and a level
//! `D`, the ball is `B_n(x, D) = { y : Σ_k ρ(x_k, y_k) ≤ nD }` and
//! `L_n = −(1/n) log Q_n(B_n(x, D))`.
//!
//! Distortions are integers over the common denominator `L` of `ρ`, so the
//! ball test is the integer comparison `s ≤ ⌊nDL⌋`. The dynamic program
//! runs over (hidden state, accumulated scaled distortion) and never looks
//! at a floating threshold. Reachability is tracked next to the mass, so a
//! ball is reported empty only when no accepting state can be reached.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::conjugate::solve_slope;
use crate::error::{Error, Result};
use crate::exact::DistortionLevel;
use crate::extended::{ExtendedReal, LogProb};
use crate::measures::{empirical_distribution, DistortionMatrix, FiniteDistribution, ProcessModel, Trellis};
use crate::rate_core;

/// Default cap on live DP cells (hidden states × distortion levels).
pub const DEFAULT_STATE_CAP: u64 = 100_000_000;
/// Longest word accepted by the rational-arithmetic mode.
pub const RATIONAL_MAX_LEN: usize = 64;
/// Largest number of codewords the enumeration oracle will visit.
pub const ENUMERATION_LIMIT: u128 = 10_000_000;

/// A ball-probability query.
#[derive(Debug, Clone, Copy)]
pub struct BallQuery<'a> {
    pub x: &'a [usize],
    pub codebook: &'a ProcessModel,
    pub rho: &'a DistortionMatrix,
    pub d: &'a DistortionLevel,
}

impl<'a> BallQuery<'a> {
    pub fn new(x: &'a [usize], codebook: &'a ProcessModel, rho: &'a DistortionMatrix, d: &'a DistortionLevel) -> Result<Self> {
        let q = BallQuery { x, codebook, rho, d };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        validate_word(self.x, self.codebook, self.rho)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// `⌊nDL⌋`.
    pub fn threshold(&self) -> u64 {
        self.d.scaled_threshold(self.x.len(), self.rho.scale())
    }
}

pub(crate) fn validate_word(x: &[usize], codebook: &ProcessModel, rho: &DistortionMatrix) -> Result<()> {
    if x.is_empty() {
        return Err(Error::invalid("x", "source word must have length at least 1"));
    }
    if let Some((k, s)) = x.iter().enumerate().find(|(_, &s)| s >= rho.rows()) {
        return Err(Error::invalid(
            "x",
            format!("symbol {s} at position {k} outside source alphabet of size {}", rho.rows()),
        ));
    }
    if codebook.alphabet_size() != rho.cols() {
        return Err(Error::invalid(
            "codebook",
            format!(
                "codebook alphabet has {} symbols but rho has {} columns",
                codebook.alphabet_size(),
                rho.cols()
            ),
        ));
    }
    Ok(())
}

/// `log Q_n(B_n)` and `L_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallResult {
    pub log_prob: LogProb,
    pub l_n: ExtendedReal,
}

impl BallResult {
    pub fn new(log_prob: LogProb, n: usize) -> Self {
        BallResult {
            log_prob,
            l_n: log_prob.per_symbol_exponent(n),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallOptions {
    pub state_cap: u64,
}

impl Default for BallOptions {
    fn default() -> Self {
        BallOptions {
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

/// Incremental forward pass over (hidden state, accumulated distortion).
///
/// Symbols of the source word are pushed one at a time; after `n` pushes,
/// [`BallSweep::log_prob_within`] answers `log Q_n(Σ ρ ≤ t / L)` for any
/// `t` up to the sweep's ceiling. Cells above the ceiling are dropped: the
/// accumulated distortion never decreases.
#[derive(Debug, Clone)]
pub struct BallSweep<'a> {
    trellis: Trellis,
    rho: &'a DistortionMatrix,
    ceiling: usize,
    width: usize,
    mass: Vec<f64>,
    reach: Vec<bool>,
    next_mass: Vec<f64>,
    next_reach: Vec<bool>,
    /// Inclusive live range of accumulated distortion.
    lo: usize,
    hi: usize,
    log_scale: f64,
    steps: usize,
    empty: bool,
}

impl<'a> BallSweep<'a> {
    /// A sweep that can answer thresholds up to `ceiling` (scaled units).
    pub fn new(codebook: &ProcessModel, rho: &'a DistortionMatrix, ceiling: u64, max_len: usize, options: BallOptions) -> Result<Self> {
        let reachable_max = (rho.max_scaled() as u128) * (max_len as u128);
        let ceiling = (ceiling as u128).min(reachable_max);
        let trellis = codebook.trellis();
        let required = (trellis.states as u128) * (ceiling + 1);
        if required > options.state_cap as u128 {
            return Err(Error::resource("state_cap", required, options.state_cap));
        }
        let width = ceiling as usize + 1;
        let cells = trellis.states * width;
        Ok(BallSweep {
            trellis,
            rho,
            ceiling: ceiling as usize,
            width,
            mass: vec![0.0; cells],
            reach: vec![false; cells],
            next_mass: vec![0.0; cells],
            next_reach: vec![false; cells],
            lo: 0,
            hi: 0,
            log_scale: 0.0,
            steps: 0,
            empty: false,
        })
    }

    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }

    /// Extend the source word by `symbol`.
    pub fn push(&mut self, symbol: usize) {
        let states = self.trellis.states;
        let width = self.width;
        let row = self.rho.row_scaled(symbol);
        if self.empty {
            self.steps += 1;
            return;
        }
        let (src_lo, src_hi) = if self.steps == 0 { (0, 0) } else { (self.lo, self.hi) };
        let dmin = row.iter().copied().min().unwrap_or(0) as usize;
        let dst_lo = src_lo + dmin;
        let dst_hi = (src_hi + row.iter().copied().max().unwrap_or(0) as usize).min(self.ceiling);
        for to in 0..states {
            let base = to * width;
            if dst_lo <= dst_hi {
                self.next_mass[base + dst_lo..=base + dst_hi].fill(0.0);
                self.next_reach[base + dst_lo..=base + dst_hi].fill(false);
            }
        }
        let mut prior_mass = vec![0.0; states];
        let mut prior_reach = vec![false; states];
        for s in src_lo..=src_hi {
            // Hidden law before emitting at this accumulated distortion.
            if self.steps == 0 {
                for to in 0..states {
                    prior_mass[to] = self.trellis.initial[to];
                    prior_reach[to] = self.trellis.initial[to] > 0.0;
                }
            } else {
                for to in 0..states {
                    let mut m = 0.0;
                    let mut r = false;
                    for from in 0..states {
                        let idx = from * width + s;
                        if self.reach[idx] {
                            let k = self.trellis.trans(from, to);
                            if k > 0.0 {
                                m += self.mass[idx] * k;
                                r = true;
                            }
                        }
                    }
                    prior_mass[to] = m;
                    prior_reach[to] = r;
                }
            }
            for to in 0..states {
                if !prior_reach[to] {
                    continue;
                }
                for (y, &d) in row.iter().enumerate() {
                    let e = self.trellis.emit(to, y);
                    if e <= 0.0 {
                        continue;
                    }
                    let t = s + d as usize;
                    if t > self.ceiling {
                        continue;
                    }
                    let idx = to * width + t;
                    self.next_mass[idx] += prior_mass[to] * e;
                    self.next_reach[idx] = true;
                }
            }
        }
        std::mem::swap(&mut self.mass, &mut self.next_mass);
        std::mem::swap(&mut self.reach, &mut self.next_reach);
        self.steps += 1;

        let mut live_lo = usize::MAX;
        let mut live_hi = 0;
        let mut top = 0.0_f64;
        if dst_lo <= dst_hi {
            for to in 0..states {
                let base = to * width;
                for t in dst_lo..=dst_hi {
                    if self.reach[base + t] {
                        live_lo = live_lo.min(t);
                        live_hi = live_hi.max(t);
                        top = top.max(self.mass[base + t]);
                    }
                }
            }
        }
        if live_lo == usize::MAX {
            self.empty = true;
            return;
        }
        if top > 0.0 {
            for to in 0..states {
                let base = to * width;
                for v in &mut self.mass[base + live_lo..=base + live_hi] {
                    *v /= top;
                }
            }
            self.log_scale += top.ln();
        }
        self.lo = live_lo;
        self.hi = live_hi;
    }

    /// `log Q_n(Σ_k ρ(x_k, Y_k) ≤ threshold / L)` for the pushed word.
    pub fn log_prob_within(&self, threshold: u64) -> LogProb {
        if self.empty || self.steps == 0 || (threshold as usize) < self.lo {
            return LogProb::MinusInfinity;
        }
        let upper = (threshold as usize).min(self.hi);
        let mut total = 0.0;
        let mut reachable = false;
        for to in 0..self.trellis.states {
            let base = to * self.width;
            for t in self.lo..=upper {
                if self.reach[base + t] {
                    reachable = true;
                    total += self.mass[base + t];
                }
            }
        }
        if !reachable {
            return LogProb::MinusInfinity;
        }
        if total > 0.0 {
            LogProb::Finite((total.ln() + self.log_scale).min(0.0))
        } else {
            // Reachable but below the double range relative to the bulk.
            LogProb::Finite(self.log_scale + f64::MIN_POSITIVE.ln())
        }
    }
}

/// `log Q_n(B_n(x, D))` by the integer-scaled forward pass.
pub fn exact_ball_log_prob(q: &BallQuery<'_>) -> Result<BallResult> {
    exact_ball_log_prob_with(q, BallOptions::default())
}

pub fn exact_ball_log_prob_with(q: &BallQuery<'_>, options: BallOptions) -> Result<BallResult> {
    q.validate()?;
    let threshold = q.threshold();
    let mut sweep = BallSweep::new(q.codebook, q.rho, threshold, q.len(), options)?;
    for &s in q.x {
        sweep.push(s);
    }
    Ok(BallResult::new(sweep.log_prob_within(threshold), q.len()))
}

/// `Q_n(B_n(x, D))` in exact rational arithmetic, for words up to
/// [`RATIONAL_MAX_LEN`] symbols. The model's exact entries are used.
pub fn ball_probability_rational(q: &BallQuery<'_>) -> Result<BigRational> {
    q.validate()?;
    if q.len() > RATIONAL_MAX_LEN {
        return Err(Error::invalid(
            "x",
            format!("rational mode supports words up to {RATIONAL_MAX_LEN} symbols, got {}", q.len()),
        ));
    }
    let t = q.codebook.exact_trellis();
    let threshold = q.threshold().min(q.rho.max_scaled() * q.len() as u64) as usize;
    let width = threshold + 1;
    let mut table: Vec<Option<BigRational>> = vec![None; t.states * width];
    for (k, &sym) in q.x.iter().enumerate() {
        let mut next: Vec<Option<BigRational>> = vec![None; t.states * width];
        for to in 0..t.states {
            // prior[s] for this hidden state
            let prior: Vec<Option<BigRational>> = if k == 0 {
                let mut v = vec![None; width];
                if !t.initial[to].is_zero() {
                    v[0] = Some(t.initial[to].clone());
                }
                v
            } else {
                (0..width)
                    .map(|s| {
                        let mut acc: Option<BigRational> = None;
                        for from in 0..t.states {
                            if let Some(m) = &table[from * width + s] {
                                let kk = t.trans(from, to);
                                if !kk.is_zero() {
                                    let add = m * kk;
                                    acc = Some(acc.map_or(add.clone(), |a| a + add));
                                }
                            }
                        }
                        acc
                    })
                    .collect()
            };
            for (s, m) in prior.iter().enumerate() {
                let Some(m) = m else { continue };
                for y in 0..t.symbols {
                    let e = t.emit(to, y);
                    if e.is_zero() {
                        continue;
                    }
                    let dest = s + q.rho.scaled(sym, y) as usize;
                    if dest > threshold {
                        continue;
                    }
                    let slot = &mut next[to * width + dest];
                    let add = m * e;
                    *slot = Some(slot.take().map_or(add.clone(), |a| a + add));
                }
            }
        }
        table = next;
    }
    Ok(table
        .into_iter()
        .flatten()
        .fold(BigRational::zero(), |a, b| a + b))
}

/// Test oracle: `log Q_n(B_n(x, D))` by visiting every codeword.
pub fn enumerate_ball_log_prob(q: &BallQuery<'_>) -> Result<BallResult> {
    q.validate()?;
    let n = q.len();
    let symbols = q.codebook.alphabet_size();
    let count = (symbols as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if count > ENUMERATION_LIMIT {
        return Err(Error::resource("enumeration", count, ENUMERATION_LIMIT as u64));
    }
    let trellis = q.codebook.trellis();
    let scale = q.rho.scale();
    let mut word = vec![0usize; n];
    let mut total = 0.0;
    let mut any = false;
    loop {
        let dist: u64 = q.x.iter().zip(&word).map(|(&a, &b)| q.rho.scaled(a, b)).sum();
        if q.d.admits_average(dist, n, scale) {
            let p = trellis.word_probability(&word);
            if p > 0.0 {
                any = true;
                total += p;
            }
        }
        // odometer
        let mut pos = n;
        loop {
            if pos == 0 {
                let log_prob = if any {
                    LogProb::Finite(total.ln().min(0.0))
                } else {
                    LogProb::MinusInfinity
                };
                return Ok(BallResult::new(log_prob, n));
            }
            pos -= 1;
            word[pos] += 1;
            if word[pos] < symbols {
                break;
            }
            word[pos] = 0;
        }
    }
}

/// Symbols emitted with positive probability by some hidden state.
pub(crate) fn emitted_symbols(t: &Trellis) -> Vec<bool> {
    (0..t.symbols)
        .map(|y| (0..t.states).any(|s| t.emit(s, y) > 0.0))
        .collect()
}

/// Normalized forward vectors of a tilted pass, extended one source symbol
/// at a time. `alpha` carries the tilted mass and `beta` its first moment;
/// both are divided by the running total, whose log goes to `log_acc`.
#[derive(Debug, Clone)]
pub(crate) struct TiltCursor {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    log_acc: f64,
    shift: f64,
    steps: usize,
}

impl TiltCursor {
    pub fn new(states: usize) -> Self {
        TiltCursor {
            alpha: vec![0.0; states],
            beta: vec![0.0; states],
            log_acc: 0.0,
            shift: 0.0,
            steps: 0,
        }
    }

    /// Push one source symbol whose distortion row is `row`. Returns false
    /// if the tilted mass vanished or overflowed.
    pub fn step(&mut self, t: &Trellis, emitted: &[bool], row: &[f64], mu: f64) -> bool {
        let reachable = row.iter().zip(emitted).filter(|(_, &e)| e).map(|(&r, _)| r);
        let c = if mu <= 0.0 {
            reachable.fold(f64::INFINITY, f64::min)
        } else {
            reachable.fold(f64::NEG_INFINITY, f64::max)
        };
        self.shift += c;
        let states = t.states;
        let (prior_a, prior_b) = if self.steps == 0 {
            (t.initial.clone(), vec![0.0; states])
        } else {
            (t.propagate(&self.alpha), t.propagate(&self.beta))
        };
        for s in 0..states {
            let mut e = 0.0;
            let mut f = 0.0;
            for (y, &r) in row.iter().enumerate() {
                let em = t.emit(s, y);
                if em > 0.0 {
                    let w = em * (mu * (r - c)).exp();
                    e += w;
                    f += w * r;
                }
            }
            self.alpha[s] = prior_a[s] * e;
            self.beta[s] = prior_b[s] * e + prior_a[s] * f;
        }
        self.steps += 1;
        let total: f64 = self.alpha.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return false;
        }
        self.alpha.iter_mut().for_each(|v| *v /= total);
        self.beta.iter_mut().for_each(|v| *v /= total);
        self.log_acc += total.ln();
        true
    }

    pub fn pass(&self) -> TiltedPass {
        TiltedPass {
            log_mgf: self.log_acc,
            mean: self.beta.iter().sum(),
            shift: self.shift,
        }
    }
}

/// Forward passes over the codebook trellis for a fixed source word.
pub(crate) struct WordTransfer<'a> {
    trellis: &'a Trellis,
    x: &'a [usize],
    rho: &'a DistortionMatrix,
    /// Symbols emitted with positive probability by some hidden state.
    emitted: Vec<bool>,
}

/// Output of one tilted pass.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TiltedPass {
    /// `log E exp(μ(Σρ − shift))`.
    pub log_mgf: f64,
    /// Tilted mean of `Σ_k ρ(x_k, Y_k)`.
    pub mean: f64,
    /// The shift `Σ_k c_k` factored out of the exponent.
    pub shift: f64,
}

impl<'a> WordTransfer<'a> {
    pub fn new(trellis: &'a Trellis, x: &'a [usize], rho: &'a DistortionMatrix) -> Self {
        let emitted = emitted_symbols(trellis);
        WordTransfer {
            trellis,
            x,
            rho,
            emitted,
        }
    }

    /// One scaled forward pass of `E exp(μ Σ_k ρ(x_k, Y_k))` with its first
    /// moment. `None` if the tilted mass underflows entirely.
    pub fn tilted(&self, mu: f64) -> Option<TiltedPass> {
        let mut cursor = TiltCursor::new(self.trellis.states);
        for &sym in self.x {
            if !cursor.step(self.trellis, &self.emitted, self.rho.row_values(sym), mu) {
                return None;
            }
        }
        Some(cursor.pass())
    }

    /// `min_y Σ_k ρ(x_k, y_k)` over codewords of positive probability
    /// (scaled units) and the log-probability of attaining it.
    pub fn essential_minimum(&self) -> (u64, f64) {
        let t = self.trellis;
        let states = t.states;
        let mut best = vec![u64::MAX; states];
        let mut logm = vec![f64::NEG_INFINITY; states];
        for (k, &sym) in self.x.iter().enumerate() {
            let row = self.rho.row_scaled(sym);
            let mut next_best = vec![u64::MAX; states];
            let mut next_logm = vec![f64::NEG_INFINITY; states];
            for to in 0..states {
                // prior (best, log mass) for `to`
                let (pb, pl) = if k == 0 {
                    if t.initial[to] > 0.0 {
                        (0, t.initial[to].ln())
                    } else {
                        (u64::MAX, f64::NEG_INFINITY)
                    }
                } else {
                    let mut pb = u64::MAX;
                    let mut terms = Vec::new();
                    for from in 0..states {
                        let kk = t.trans(from, to);
                        if best[from] == u64::MAX || kk <= 0.0 {
                            continue;
                        }
                        if best[from] < pb {
                            pb = best[from];
                            terms.clear();
                        }
                        if best[from] == pb {
                            terms.push(logm[from] + kk.ln());
                        }
                    }
                    (pb, log_sum_exp(&terms))
                };
                if pb == u64::MAX {
                    continue;
                }
                let mut eb = u64::MAX;
                let mut mass = 0.0;
                for y in 0..t.symbols {
                    let em = t.emit(to, y);
                    if em <= 0.0 {
                        continue;
                    }
                    if row[y] < eb {
                        eb = row[y];
                        mass = 0.0;
                    }
                    if row[y] == eb {
                        mass += em;
                    }
                }
                if eb == u64::MAX {
                    continue;
                }
                next_best[to] = pb + eb;
                next_logm[to] = pl + mass.ln();
            }
            best = next_best;
            logm = next_logm;
        }
        let overall = best.iter().copied().min().unwrap_or(u64::MAX);
        let terms: Vec<f64> = (0..states)
            .filter(|&s| best[s] == overall)
            .map(|s| logm[s])
            .collect();
        (overall, log_sum_exp(&terms))
    }

    /// `Σ_k E ρ(x_k, Y_k)` under the codebook's position marginals.
    pub fn mean_distortion(&self) -> f64 {
        let marginals = self.trellis.position_marginals(self.x.len());
        self.x
            .iter()
            .zip(&marginals)
            .map(|(&sym, m)| m.iter().zip(self.rho.row_values(sym)).map(|(a, b)| a * b).sum::<f64>())
            .sum()
    }
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return top;
    }
    top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln()
}

/// `R_n(δ_x, Q_n, D) = (1/n) sup_{λ ≤ 0} [λnD − log E e^{λ Σ_k ρ(x_k, Y_k)}]`.
///
/// Memoryless codebooks use the identity `R_n(δ_x, Q^n, D) = R(P_x, Q, D)`
/// with `P_x` the empirical distribution; other codebooks go through
/// [`word_rate_transfer`].
pub fn word_rate(x: &[usize], codebook: &ProcessModel, rho: &DistortionMatrix, d: &DistortionLevel) -> Result<ExtendedReal> {
    validate_word(x, codebook, rho)?;
    match codebook {
        ProcessModel::Iid(q) => empirical_rate(x, q, rho, d),
        _ => word_rate_transfer(x, codebook, rho, d),
    }
}

/// [`word_rate`] computed by transfer-matrix passes for any codebook.
pub fn word_rate_transfer(x: &[usize], codebook: &ProcessModel, rho: &DistortionMatrix, d: &DistortionLevel) -> Result<ExtendedReal> {
    validate_word(x, codebook, rho)?;
    let trellis = codebook.trellis();
    let transfer = WordTransfer::new(&trellis, x, rho);
    Ok(word_rate_from_transfer(&transfer, x.len(), rho.scale(), d))
}

pub(crate) fn word_rate_from_transfer(transfer: &WordTransfer<'_>, n: usize, scale: u64, d: &DistortionLevel) -> ExtendedReal {
    let nf = n as f64;
    let (floor, log_floor_mass) = transfer.essential_minimum();
    match d.compare_average(floor, n, scale) {
        std::cmp::Ordering::Greater => return ExtendedReal::PlusInfinity,
        std::cmp::Ordering::Equal => return ExtendedReal::Finite((0.0 - log_floor_mass / nf).max(0.0)),
        std::cmp::Ordering::Less => {}
    }
    let target = d.value();
    if target >= transfer.mean_distortion() / nf {
        return ExtendedReal::ZERO;
    }
    let floor_avg = floor as f64 / (scale as f64 * nf);
    let slope = |mu: f64| match transfer.tilted(mu) {
        Some(pass) => pass.mean / nf,
        None => floor_avg,
    };
    let mu = solve_slope(slope, target);
    let value = match transfer.tilted(mu) {
        Some(pass) => mu * (target - pass.shift / nf) - pass.log_mgf / nf,
        None => 0.0 - log_floor_mass / nf,
    };
    ExtendedReal::Finite(value.max(0.0))
}

/// `R(P_x, Q, D)` with `P_x` the empirical distribution of `x`.
pub fn empirical_rate(x: &[usize], q: &FiniteDistribution, rho: &DistortionMatrix, d: &DistortionLevel) -> Result<ExtendedReal> {
    let p = empirical_distribution(x, rho.rows())?;
    Ok(rate_core::rate(&p, q, rho, d)?.rate)
}

/// `log Q_n(B_n)`, `L_n` and `R_n(δ_x, Q_n, D)` for one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallReport {
    pub n: usize,
    pub ball: BallResult,
    pub word_rate: ExtendedReal,
}

impl BallReport {
    pub fn finite(&self) -> bool {
        self.ball.l_n.is_finite()
    }
}

pub fn ball_report(q: &BallQuery<'_>, options: BallOptions) -> Result<BallReport> {
    let ball = exact_ball_log_prob_with(q, options)?;
    let word_rate = word_rate(q.x, q.codebook, q.rho, q.d)?;
    Ok(BallReport {
        n: q.len(),
        ball,
        word_rate,
    })
}

/// Ball probability of a single codeword set, exact: `Q_n(A)` for a set of
/// words `A` given as a predicate. Used by block-bound checks.
pub fn set_probability(codebook: &ProcessModel, n: usize, mut member: impl FnMut(&[usize]) -> bool) -> f64 {
    let t = codebook.trellis();
    let symbols = t.symbols;
    let mut word = vec![0usize; n];
    let mut total = 0.0;
    loop {
        if member(&word) {
            total += t.word_probability(&word);
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return total;
            }
            pos -= 1;
            word[pos] += 1;
            if word[pos] < symbols {
                break;
            }
            word[pos] = 0;
        }
    }
}

impl From<&BigRational> for LogProb {
    fn from(p: &BigRational) -> Self {
        if p.is_zero() {
            LogProb::MinusInfinity
        } else if p.is_one() {
            LogProb::Finite(0.0)
        } else {
            LogProb::Finite(crate::exact::rational_to_f64(p).ln())
        }
    }
}
