//! Rates for sources and codebooks with memory.
//!
//! `Λ_n(P_n, Q_n, λ) = E_X log E_Y e^{λ ρ_n(X, Y)}` with `ρ_n` the average
//! per-letter distortion over `n` letters, its scaled conjugate
//! `R_n = sup_{λ ≤ 0} [λD − (1/n) Λ_n(nλ)]`, and the `± log C / n`
//! sandwich around the limit rate.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball_prob::{emitted_symbols, TiltCursor, TiltedPass, WordTransfer};
use crate::conjugate::solve_slope;
use crate::error::{Error, Result};
use crate::exact::DistortionLevel;
use crate::extended::ExtendedReal;
use crate::measures::{
    mixing_constant, rng_from_seed, sample_path_with, stream_seed, DistortionMatrix, FiniteDistribution, HiddenMarkov,
    ProcessModel, StochasticMatrix, Trellis,
};
use crate::rate_core::{d_ave_exact, d_min_exact, Regime};

/// Largest number of source words the exact mode will enumerate.
pub const EXACT_WORD_LIMIT: u128 = 10_000_000;

/// How the expectation over source words is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaMode {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

impl LambdaMode {
    pub fn name(&self) -> &'static str {
        match self {
            LambdaMode::Exact => "exact",
            LambdaMode::MonteCarlo { .. } => "mc",
        }
    }

    pub fn trials(&self) -> Option<usize> {
        match self {
            LambdaMode::Exact => None,
            LambdaMode::MonteCarlo { trials, .. } => Some(*trials),
        }
    }
}

impl fmt::Display for LambdaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A value of `Λ_n` (or of a rate) with its Monte Carlo standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaEstimate {
    pub value: f64,
    pub std_error: Option<f64>,
    pub trials: Option<usize>,
}

/// `R_n(P_n, Q_n, D)` with the optimizing slope and regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RnEstimate {
    pub value: ExtendedReal,
    pub lambda_star: Option<f64>,
    pub regime: Regime,
    pub std_error: Option<f64>,
    pub trials: Option<usize>,
}

fn check_models(source: &ProcessModel, codebook: &ProcessModel, rho: &DistortionMatrix, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "block length must be at least 1"));
    }
    if source.alphabet_size() != rho.rows() {
        return Err(Error::invalid(
            "source",
            format!(
                "source alphabet has {} symbols but rho has {} rows",
                source.alphabet_size(),
                rho.rows()
            ),
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

fn check_mode(source: &ProcessModel, n: usize, mode: LambdaMode) -> Result<()> {
    match mode {
        LambdaMode::Exact => {
            let words = (source.alphabet_size() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            if words > EXACT_WORD_LIMIT {
                return Err(Error::resource("n", words, EXACT_WORD_LIMIT as u64));
            }
            Ok(())
        }
        LambdaMode::MonteCarlo { trials, .. } if trials < 2 => {
            Err(Error::invalid("trials", "Monte Carlo mode needs at least 2 trials"))
        }
        LambdaMode::MonteCarlo { .. } => Ok(()),
    }
}

/// Probability-weighted sums over source words of one tilted pass.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    mass: f64,
    log_mgf: f64,
    mean: f64,
    shift: f64,
}

impl Moments {
    fn add(&mut self, p: f64, pass: &TiltedPass) {
        self.mass += p;
        self.log_mgf += p * pass.log_mgf;
        self.mean += p * pass.mean;
        self.shift += p * pass.shift;
    }

    fn merge(mut self, other: Moments) -> Moments {
        self.mass += other.mass;
        self.log_mgf += other.log_mgf;
        self.mean += other.mean;
        self.shift += other.shift;
        self
    }
}

/// Depth-first enumeration of source words sharing prefixes, carrying the
/// source forward vector and the codebook tilt cursor.
struct SourceTree<'a> {
    source: Trellis,
    codebook: &'a Trellis,
    emitted: Vec<bool>,
    rho: &'a DistortionMatrix,
    n: usize,
}

impl<'a> SourceTree<'a> {
    fn new(source: &ProcessModel, codebook: &'a Trellis, rho: &'a DistortionMatrix, n: usize) -> Self {
        SourceTree {
            source: source.trellis(),
            codebook,
            emitted: emitted_symbols(codebook),
            rho,
            n,
        }
    }

    /// Unnormalized source forward vector after appending `symbol`.
    fn extend_source(&self, prev: Option<&[f64]>, symbol: usize) -> Vec<f64> {
        let t = &self.source;
        let prior = match prev {
            None => t.initial.clone(),
            Some(a) => t.propagate(a),
        };
        (0..t.states).map(|s| prior[s] * t.emit(s, symbol)).collect()
    }

    fn moments(&self, mu: f64) -> Moments {
        let symbols = self.source.symbols;
        (0..symbols)
            .into_par_iter()
            .map(|s| {
                let mut acc = Moments::default();
                let src = self.extend_source(None, s);
                if src.iter().sum::<f64>() > 0.0 {
                    let mut cursor = TiltCursor::new(self.codebook.states);
                    self.descend(s, src, &mut cursor, mu, 1, &mut acc);
                }
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Moments::default(), Moments::merge)
    }

    fn descend(&self, symbol: usize, src: Vec<f64>, cursor: &mut TiltCursor, mu: f64, depth: usize, acc: &mut Moments) {
        if !cursor.step(self.codebook, &self.emitted, self.rho.row_values(symbol), mu) {
            acc.mass = f64::NAN;
            return;
        }
        if depth == self.n {
            acc.add(src.iter().sum(), &cursor.pass());
            return;
        }
        for s in 0..self.source.symbols {
            let next = self.extend_source(Some(&src), s);
            if next.iter().sum::<f64>() <= 0.0 {
                continue;
            }
            let mut child = cursor.clone();
            self.descend(s, next, &mut child, mu, depth + 1, acc);
        }
    }

    /// Every source word of positive probability with its probability.
    fn words(&self) -> Vec<(f64, Vec<usize>)> {
        let mut out = Vec::new();
        let mut word = Vec::with_capacity(self.n);
        self.collect(None, &mut word, &mut out);
        out
    }

    fn collect(&self, prev: Option<&[f64]>, word: &mut Vec<usize>, out: &mut Vec<(f64, Vec<usize>)>) {
        for s in 0..self.source.symbols {
            let next = self.extend_source(prev, s);
            let p: f64 = next.iter().sum();
            if p <= 0.0 {
                continue;
            }
            word.push(s);
            if word.len() == self.n {
                out.push((p, word.clone()));
            } else {
                self.collect(Some(&next), word, out);
            }
            word.pop();
        }
    }
}

/// Sampled source paths for Monte Carlo mode, one independent stream per
/// trial.
fn sample_words(source: &ProcessModel, n: usize, trials: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(stream_seed(seed, i as u64));
            sample_path_with(source, n, &mut rng)
        })
        .collect()
}

/// `log E_Y e^{μ Σ_k ρ(x_k, Y_k)}` for one word, falling back to the
/// `μ → −∞` asymptote if the tilted mass underflows.
fn word_log_mgf(transfer: &WordTransfer<'_>, mu: f64, scale: u64) -> f64 {
    match transfer.tilted(mu) {
        Some(pass) => pass.log_mgf + mu * pass.shift,
        None => {
            let (floor, log_mass) = transfer.essential_minimum();
            mu * floor as f64 / scale as f64 + log_mass
        }
    }
}

fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `Λ_n(P_n, Q_n, λ) = E_{X_1^n} log E_{Y_1^n} e^{λ ρ_n(X_1^n, Y_1^n)}`,
/// with `ρ_n` the per-letter average. Passing `λ = nλ'` gives the
/// quantity that enters `R_n` at slope `λ'`.
pub fn lambda_n(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    n: usize,
    lambda: f64,
    mode: LambdaMode,
) -> Result<LambdaEstimate> {
    check_models(source, codebook, rho, n)?;
    check_mode(source, n, mode)?;
    if !lambda.is_finite() {
        return Err(Error::invalid("lambda", format!("{lambda} is not finite")));
    }
    let mu = lambda / n as f64;
    let trellis = codebook.trellis();
    match mode {
        LambdaMode::Exact => {
            let tree = SourceTree::new(source, &trellis, rho, n);
            let m = tree.moments(mu);
            if m.mass.is_finite() {
                return Ok(LambdaEstimate {
                    value: m.log_mgf + mu * m.shift,
                    std_error: None,
                    trials: None,
                });
            }
            let value = tree
                .words()
                .iter()
                .map(|(p, w)| p * word_log_mgf(&WordTransfer::new(&trellis, w, rho), mu, rho.scale()))
                .sum();
            Ok(LambdaEstimate {
                value,
                std_error: None,
                trials: None,
            })
        }
        LambdaMode::MonteCarlo { trials, seed } => {
            let words = sample_words(source, n, trials, seed)?;
            let values: Vec<f64> = words
                .par_iter()
                .map(|w| word_log_mgf(&WordTransfer::new(&trellis, w, rho), mu, rho.scale()))
                .collect();
            let (value, se) = mean_and_error(&values);
            Ok(LambdaEstimate {
                value,
                std_error: Some(se),
                trials: Some(trials),
            })
        }
    }
}

/// `R_n(P_n, Q_n, D)`.
pub fn r_n(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    n: usize,
    d: &DistortionLevel,
    mode: LambdaMode,
) -> Result<ExtendedReal> {
    Ok(r_n_estimate(source, codebook, rho, n, d, mode)?.value)
}

/// `R_n(P_n, Q_n, D)` with its slope, regime and (in Monte Carlo mode) the
/// standard error of the objective at the optimizing slope.
///
/// Regime boundaries use the single-letter `D_min = E ρ_Q(X_1)` and
/// `D_ave`, which equal their block versions for stationary sources and
/// codebooks with a finite mixing constant.
pub fn r_n_estimate(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    n: usize,
    d: &DistortionLevel,
    mode: LambdaMode,
) -> Result<RnEstimate> {
    check_models(source, codebook, rho, n)?;
    check_mode(source, n, mode)?;
    let p = source.marginal();
    let q = codebook.marginal();
    let dmin = d_min_exact(&p, &q, rho);
    let nf = n as f64;
    let trellis = codebook.trellis();
    let estimate = |value, lambda_star, regime, std_error| RnEstimate {
        value,
        lambda_star,
        regime,
        std_error,
        trials: mode.trials(),
    };
    if d.exact() < &dmin {
        return Ok(estimate(ExtendedReal::PlusInfinity, None, Regime::BelowDmin, None));
    }
    if d.exact() >= &d_ave_exact(&p, &q, rho) {
        return Ok(estimate(ExtendedReal::ZERO, Some(0.0), Regime::AtOrAboveDave, None));
    }

    // Source words with weights: probabilities in exact mode, 1/trials in
    // Monte Carlo mode.
    let weighted: Vec<(f64, Vec<usize>)> = match mode {
        LambdaMode::Exact if d.exact() == &dmin => SourceTree::new(source, &trellis, rho, n).words(),
        LambdaMode::Exact => Vec::new(),
        LambdaMode::MonteCarlo { trials, seed } => {
            let w = 1.0 / trials as f64;
            sample_words(source, n, trials, seed)?.into_iter().map(|x| (w, x)).collect()
        }
    };

    if d.exact() == &dmin {
        // (1/n) E_X [−log Q_n(A_n(X))], A_n(x) the codewords attaining the
        // essential infimum of the accumulated distortion.
        let per_word: Vec<f64> = weighted
            .par_iter()
            .map(|(_, w)| -WordTransfer::new(&trellis, w, rho).essential_minimum().1 / nf)
            .collect();
        let value: f64 = weighted.iter().zip(&per_word).map(|((p, _), v)| p * v).sum();
        let se = match mode {
            LambdaMode::Exact => None,
            LambdaMode::MonteCarlo { .. } => Some(mean_and_error(&per_word).1),
        };
        return Ok(estimate(ExtendedReal::Finite(value.max(0.0)), None, Regime::AtDmin, se));
    }

    let target = d.value();
    let (lambda, value, se) = match mode {
        LambdaMode::Exact => {
            let tree = SourceTree::new(source, &trellis, rho, n);
            let dmin_f = crate::exact::rational_to_f64(&dmin);
            let slope = |l: f64| {
                let m = tree.moments(l);
                if m.mass.is_finite() {
                    m.mean / nf
                } else {
                    dmin_f
                }
            };
            let lambda = solve_slope(slope, target);
            let m = tree.moments(lambda);
            let value = if m.mass.is_finite() {
                lambda * (target - m.shift / nf) - m.log_mgf / nf
            } else {
                let words = tree.words();
                lambda * target
                    - words
                        .iter()
                        .map(|(p, w)| p * word_log_mgf(&WordTransfer::new(&trellis, w, rho), lambda, rho.scale()))
                        .sum::<f64>()
                        / nf
            };
            (lambda, value, None)
        }
        LambdaMode::MonteCarlo { .. } => {
            let transfers: Vec<WordTransfer<'_>> = weighted
                .iter()
                .map(|(_, w)| WordTransfer::new(&trellis, w, rho))
                .collect();
            let floors: Vec<f64> = transfers
                .iter()
                .map(|t| t.essential_minimum().0 as f64 / (rho.scale() as f64 * nf))
                .collect();
            let slope = |l: f64| {
                let total: f64 = transfers
                    .par_iter()
                    .zip(&floors)
                    .map(|(t, &fl)| t.tilted(l).map_or(fl, |pass| pass.mean / nf))
                    .collect::<Vec<_>>()
                    .iter()
                    .sum();
                total / transfers.len() as f64
            };
            let lambda = solve_slope(slope, target);
            let objective: Vec<f64> = transfers
                .par_iter()
                .map(|t| lambda * target - word_log_mgf(t, lambda, rho.scale()) / nf)
                .collect();
            let (value, se) = mean_and_error(&objective);
            (lambda, value, Some(se))
        }
    };
    Ok(estimate(ExtendedReal::Finite(value.max(0.0)), Some(lambda), Regime::Interior, se))
}

/// Certified interval around `R_∞(ℙ, ℚ, D)` from a single block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RInfBounds {
    pub n_used: usize,
    pub lower: ExtendedReal,
    pub upper: ExtendedReal,
    /// `upper − lower`; infinite when the bounds are.
    pub width: ExtendedReal,
}

/// [`RInfBounds`] together with the quantities that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RInfReport {
    pub bounds: RInfBounds,
    pub mixing_constant: f64,
    pub r_n: RnEstimate,
    pub mode: LambdaMode,
}

impl RInfReport {
    pub const CSV_HEADER: &'static str = "n,C,r_n,lower,upper,width,mode,trials,stderr";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.bounds.n_used,
            self.mixing_constant,
            self.r_n.value,
            self.bounds.lower,
            self.bounds.upper,
            self.bounds.width,
            self.mode,
            opt(self.mode.trials().map(|t| t.to_string())),
            opt(self.r_n.std_error.map(|e| e.to_string())),
        )
    }
}

/// `r_n ∓ log C / n`, clamped to `[0, ∞]`.
pub fn r_inf_bounds(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    d: &DistortionLevel,
    n: usize,
    mode: LambdaMode,
) -> Result<RInfBounds> {
    Ok(r_inf_report(source, codebook, rho, d, n, mode)?.bounds)
}

pub fn r_inf_report(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    d: &DistortionLevel,
    n: usize,
    mode: LambdaMode,
) -> Result<RInfReport> {
    check_models(source, codebook, rho, n)?;
    let c = mixing_constant(codebook)?;
    let r = r_n_estimate(source, codebook, rho, n, d, mode)?;
    let slack = c.ln() / n as f64;
    let bounds = match r.value {
        ExtendedReal::PlusInfinity => RInfBounds {
            n_used: n,
            lower: ExtendedReal::PlusInfinity,
            upper: ExtendedReal::PlusInfinity,
            width: ExtendedReal::PlusInfinity,
        },
        ExtendedReal::Finite(v) => {
            let lower = (v - slack).max(0.0);
            let upper = v + slack;
            RInfBounds {
                n_used: n,
                lower: ExtendedReal::Finite(lower),
                upper: ExtendedReal::Finite(upper),
                width: ExtendedReal::Finite(upper - lower),
            }
        }
    };
    Ok(RInfReport {
        bounds,
        mixing_constant: c,
        r_n: r,
        mode,
    })
}

/// The codebook whose consecutive length-`m` blocks are independent, each
/// distributed as the first `m` letters of `codebook`.
///
/// The result is a hidden Markov model on (phase, hidden state): within a
/// block the original chain runs; at the end of a block the hidden state is
/// redrawn from its stationary law.
pub fn block_codebook(codebook: &ProcessModel, m: usize) -> Result<ProcessModel> {
    if m == 0 {
        return Err(Error::invalid("m", "block length must be at least 1"));
    }
    if codebook.is_memoryless() {
        return Ok(codebook.clone());
    }
    if m == 1 {
        return Ok(ProcessModel::iid(codebook.marginal()));
    }
    let t = codebook.exact_trellis();
    let pi = codebook.hidden_stationary();
    let h = t.states;
    let size = m * h;
    let zero = BigRational::zero();
    let mut trans = vec![vec![zero.clone(); size]; size];
    let mut emit = Vec::with_capacity(size);
    for phase in 0..m {
        for s in 0..h {
            let from = phase * h + s;
            for to in 0..h {
                if phase + 1 < m {
                    trans[from][(phase + 1) * h + to] = t.trans(s, to).clone();
                } else {
                    trans[from][to] = pi.exact()[to].clone();
                }
            }
            emit.push((0..t.symbols).map(|y| t.emit(s, y).clone()).collect::<Vec<_>>());
        }
    }
    let mut initial = vec![zero; size];
    initial[..h].clone_from_slice(&pi.exact()[..h]);
    debug_assert!(initial.iter().fold(BigRational::zero(), |a, b| a + b).is_one());
    Ok(ProcessModel::Hmm(HiddenMarkov::with_initial(
        StochasticMatrix::from_exact(trans)?,
        FiniteDistribution::from_exact(initial)?,
        StochasticMatrix::from_exact(emit)?,
    )))
}

impl FromStr for LambdaMode {
    type Err = Error;

    /// `"exact"`, or `"mc"` with default trials and seed.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(LambdaMode::Exact),
            "mc" => Ok(LambdaMode::MonteCarlo {
                trials: 10_000,
                seed: 0,
            }),
            other => Err(Error::invalid("mode", format!("expected \"exact\" or \"mc\", got {other:?}"))),
        }
    }
}
