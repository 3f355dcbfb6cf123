use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::distribution::{FiniteDistribution, MASS_TOLERANCE};
use crate::error::{Error, Result};
use crate::exact::{probability_from_f64, rational_to_f64};

/// Tolerance for `π K = π`.
pub const STATIONARY_TOLERANCE: f64 = 1e-10;
const POWER_TOLERANCE: f64 = 1e-13;
const POWER_MAX_ITERATIONS: usize = 1_000_000;

/// A row-stochastic matrix, held as doubles and exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    exact: Vec<BigRational>,
}

impl StochasticMatrix {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let exact = rows
            .iter()
            .map(|r| r.iter().map(|&v| probability_from_f64(v)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Self::from_exact(exact)
    }

    pub fn from_exact(rows: Vec<Vec<BigRational>>) -> Result<Self> {
        let n_rows = rows.len();
        if n_rows == 0 {
            return Err(Error::invalid("transition", "matrix has no rows"));
        }
        let n_cols = rows[0].len();
        let mut exact = Vec::with_capacity(n_rows * n_cols);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_cols || n_cols == 0 {
                return Err(Error::invalid(
                    "transition",
                    format!("row {i} has {} entries, expected {n_cols}", row.len()),
                ));
            }
            if row.iter().any(|v| v.is_negative()) {
                return Err(Error::invalid("transition", format!("row {i} has a negative entry")));
            }
            let total: f64 = row.iter().map(rational_to_f64).sum();
            if (total - 1.0).abs() > MASS_TOLERANCE {
                return Err(Error::invalid(
                    "transition",
                    format!("row {i} sums to {total}, expected 1 within {MASS_TOLERANCE:e}"),
                ));
            }
            exact.extend(row);
        }
        let values = exact.iter().map(rational_to_f64).collect();
        Ok(StochasticMatrix {
            rows: n_rows,
            cols: n_cols,
            values,
            exact,
        })
    }

    pub fn identity(size: usize) -> Self {
        let exact: Vec<BigRational> = (0..size * size)
            .map(|i| {
                if i / size == i % size {
                    BigRational::one()
                } else {
                    BigRational::zero()
                }
            })
            .collect();
        let values = exact.iter().map(rational_to_f64).collect();
        StochasticMatrix {
            rows: size,
            cols: size,
            values,
            exact,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn exact(&self, i: usize, j: usize) -> &BigRational {
        &self.exact[i * self.cols + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn all_positive(&self) -> bool {
        self.exact.iter().all(|v| v.is_positive())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    /// Whether the positive-entry graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.rows;
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    let w = if forward { self.get(i, j) } else { self.get(j, i) };
                    if w > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// Largest chain solved in exact arithmetic.
const EXACT_STATIONARY_MAX_STATES: usize = 32;

/// Stationary law of an irreducible chain.
///
/// Small chains whose rows sum to exactly one are solved in rational
/// arithmetic. Otherwise power iteration runs on the lazy chain
/// `(I + K) / 2`, which has the same fixed point and is aperiodic.
pub fn stationary_distribution(transition: &StochasticMatrix) -> Result<FiniteDistribution> {
    if !transition.is_square() {
        return Err(Error::invalid("transition", "matrix must be square"));
    }
    if !transition.is_irreducible() {
        return Err(Error::NonUniqueStationary(
            "transition graph is not strongly connected".into(),
        ));
    }
    if let Some(pi) = exact_stationary(transition) {
        return FiniteDistribution::from_exact(pi);
    }
    let n = transition.rows();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    let mut converged = false;
    for _ in 0..POWER_MAX_ITERATIONS {
        for (j, slot) in next.iter_mut().enumerate() {
            let flow: f64 = (0..n).map(|i| pi[i] * transition.get(i, j)).sum();
            *slot = 0.5 * (pi[j] + flow);
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let change: f64 = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pi, &mut next);
        if change <= POWER_TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonUniqueStationary(format!(
            "power iteration did not converge in {POWER_MAX_ITERATIONS} steps"
        )));
    }
    let residual = stationarity_residual(&pi, transition);
    if residual > STATIONARY_TOLERANCE {
        return Err(Error::NonUniqueStationary(format!(
            "fixed-point residual {residual:e} exceeds {STATIONARY_TOLERANCE:e}"
        )));
    }
    // Renormalize so the exact view sums to one as closely as doubles allow.
    FiniteDistribution::new(pi)
}

/// Solve `π (K − I) = 0`, `Σ π = 1` by Gaussian elimination over the
/// rationals. `None` if the chain is too large or its rows are not exactly
/// stochastic.
fn exact_stationary(k: &StochasticMatrix) -> Option<Vec<BigRational>> {
    let n = k.rows();
    if n > EXACT_STATIONARY_MAX_STATES {
        return None;
    }
    for i in 0..n {
        let total = (0..n).fold(BigRational::zero(), |a, j| a + k.exact(i, j));
        if !total.is_one() {
            return None;
        }
    }
    // Unknowns π_0..π_{n-1}; equation j: Σ_i π_i (K_ij − δ_ij) = 0, with
    // the last equation replaced by normalization.
    let mut a: Vec<Vec<BigRational>> = (0..n)
        .map(|j| {
            let mut row: Vec<BigRational> = (0..n)
                .map(|i| {
                    let mut v = k.exact(i, j).clone();
                    if i == j {
                        v -= BigRational::one();
                    }
                    v
                })
                .collect();
            row.push(BigRational::zero());
            row
        })
        .collect();
    a[n - 1] = vec![BigRational::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=n {
                    let delta = &factor * &a[col][c];
                    a[r][c] -= delta;
                }
            }
        }
    }
    let pi: Vec<BigRational> = a.into_iter().map(|row| row[n].clone()).collect();
    if pi.iter().any(|v| v.is_negative()) {
        return None;
    }
    Some(pi)
}

/// `max_j |(π K)_j − π_j|`.
pub fn stationarity_residual(pi: &[f64], transition: &StochasticMatrix) -> f64 {
    let n = pi.len();
    (0..n)
        .map(|j| {
            let flow: f64 = (0..n).map(|i| pi[i] * transition.get(i, j)).sum();
            (flow - pi[j]).abs()
        })
        .fold(0.0, f64::max)
}

/// A stationary finite-state Markov chain whose states are the symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    transition: StochasticMatrix,
    stationary: FiniteDistribution,
}

impl MarkovChain {
    pub fn new(transition: StochasticMatrix) -> Result<Self> {
        let stationary = stationary_distribution(&transition)?;
        Ok(MarkovChain {
            transition,
            stationary,
        })
    }

    pub fn transition(&self) -> &StochasticMatrix {
        &self.transition
    }

    pub fn stationary(&self) -> &FiniteDistribution {
        &self.stationary
    }
}

/// A hidden Markov model: a hidden chain with an initial law, and an
/// emission kernel from hidden states to observed symbols.
///
/// Models built with [`HiddenMarkov::new`] start from the stationary law of
/// the hidden chain. The block codebook construction uses a non-stationary
/// initial law (phase zero) and is built crate-internally.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenMarkov {
    transition: StochasticMatrix,
    initial: FiniteDistribution,
    emission: StochasticMatrix,
    stationary: bool,
}

impl HiddenMarkov {
    pub fn new(transition: StochasticMatrix, emission: StochasticMatrix) -> Result<Self> {
        if emission.rows() != transition.rows() {
            return Err(Error::invalid(
                "emission",
                format!(
                    "emission has {} rows but the hidden chain has {} states",
                    emission.rows(),
                    transition.rows()
                ),
            ));
        }
        let initial = stationary_distribution(&transition)?;
        Ok(HiddenMarkov {
            transition,
            initial,
            emission,
            stationary: true,
        })
    }

    pub(crate) fn with_initial(
        transition: StochasticMatrix,
        initial: FiniteDistribution,
        emission: StochasticMatrix,
    ) -> Self {
        debug_assert_eq!(transition.rows(), initial.len());
        debug_assert_eq!(transition.rows(), emission.rows());
        HiddenMarkov {
            transition,
            initial,
            emission,
            stationary: false,
        }
    }

    pub fn transition(&self) -> &StochasticMatrix {
        &self.transition
    }

    /// Law of the first hidden state (the stationary law unless built as a
    /// block codebook).
    pub fn hidden_initial(&self) -> &FiniteDistribution {
        &self.initial
    }

    pub fn emission(&self) -> &StochasticMatrix {
        &self.emission
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }
}

/// A source or codebook process on a finite alphabet.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessModel {
    Iid(FiniteDistribution),
    Markov(MarkovChain),
    Hmm(HiddenMarkov),
}

impl ProcessModel {
    pub fn iid(marginal: FiniteDistribution) -> Self {
        ProcessModel::Iid(marginal)
    }

    pub fn markov(transition: Vec<Vec<f64>>) -> Result<Self> {
        Ok(ProcessModel::Markov(MarkovChain::new(StochasticMatrix::new(transition)?)?))
    }

    pub fn hmm(transition: Vec<Vec<f64>>, emission: Vec<Vec<f64>>) -> Result<Self> {
        Ok(ProcessModel::Hmm(HiddenMarkov::new(
            StochasticMatrix::new(transition)?,
            StochasticMatrix::new(emission)?,
        )?))
    }

    /// Observation alphabet size.
    pub fn alphabet_size(&self) -> usize {
        match self {
            ProcessModel::Iid(d) => d.len(),
            ProcessModel::Markov(m) => m.transition.rows(),
            ProcessModel::Hmm(h) => h.emission.cols(),
        }
    }

    pub fn hidden_states(&self) -> usize {
        match self {
            ProcessModel::Iid(_) => 1,
            ProcessModel::Markov(m) => m.transition.rows(),
            ProcessModel::Hmm(h) => h.transition.rows(),
        }
    }

    pub fn is_memoryless(&self) -> bool {
        matches!(self, ProcessModel::Iid(_))
    }

    /// Law of the first observed symbol.
    pub fn marginal(&self) -> FiniteDistribution {
        match self {
            ProcessModel::Iid(d) => d.clone(),
            ProcessModel::Markov(m) => m.stationary.clone(),
            ProcessModel::Hmm(h) => {
                let k = h.emission.cols();
                let exact = (0..k)
                    .map(|y| {
                        (0..h.initial.len()).fold(BigRational::zero(), |acc, s| {
                            acc + &h.initial.exact()[s] * h.emission.exact(s, y)
                        })
                    })
                    .collect();
                FiniteDistribution::from_exact(exact)
                    .expect("marginal of a valid HMM is a distribution")
            }
        }
    }

    /// The hidden-state trellis (initial law, transition, emission) in
    /// doubles. IID models have one hidden state; Markov models emit their
    /// state.
    pub fn trellis(&self) -> Trellis {
        match self {
            ProcessModel::Iid(d) => Trellis {
                states: 1,
                symbols: d.len(),
                initial: vec![1.0],
                transition: vec![1.0],
                emission: d.probs().to_vec(),
            },
            ProcessModel::Markov(m) => {
                let n = m.transition.rows();
                Trellis {
                    states: n,
                    symbols: n,
                    initial: m.stationary.probs().to_vec(),
                    transition: m.transition.values().to_vec(),
                    emission: StochasticMatrix::identity(n).values().to_vec(),
                }
            }
            ProcessModel::Hmm(h) => Trellis {
                states: h.transition.rows(),
                symbols: h.emission.cols(),
                initial: h.initial.probs().to_vec(),
                transition: h.transition.values().to_vec(),
                emission: h.emission.values().to_vec(),
            },
        }
    }

    /// Same as [`ProcessModel::trellis`] with exact rational entries.
    pub fn exact_trellis(&self) -> ExactTrellis {
        match self {
            ProcessModel::Iid(d) => ExactTrellis {
                states: 1,
                symbols: d.len(),
                initial: vec![BigRational::one()],
                transition: vec![BigRational::one()],
                emission: d.exact().to_vec(),
            },
            ProcessModel::Markov(m) => {
                let n = m.transition.rows();
                ExactTrellis {
                    states: n,
                    symbols: n,
                    initial: m.stationary.exact().to_vec(),
                    transition: m.transition.exact.clone(),
                    emission: StochasticMatrix::identity(n).exact,
                }
            }
            ProcessModel::Hmm(h) => ExactTrellis {
                states: h.transition.rows(),
                symbols: h.emission.cols(),
                initial: h.initial.exact().to_vec(),
                transition: h.transition.exact.clone(),
                emission: h.emission.exact.clone(),
            },
        }
    }

    /// The hidden chain's transition matrix and stationary law, if any.
    fn hidden_chain(&self) -> Option<(&StochasticMatrix, &FiniteDistribution)> {
        match self {
            ProcessModel::Iid(_) => None,
            ProcessModel::Markov(m) => Some((&m.transition, &m.stationary)),
            ProcessModel::Hmm(h) => Some((&h.transition, &h.initial)),
        }
    }

    /// Stationary law of the hidden chain (the marginal for IID models).
    pub fn hidden_stationary(&self) -> FiniteDistribution {
        match self.hidden_chain() {
            Some((_, pi)) => pi.clone(),
            None => FiniteDistribution::new(vec![1.0]).expect("point mass"),
        }
    }
}

/// Hidden-state representation shared by all process kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct Trellis {
    pub states: usize,
    pub symbols: usize,
    pub initial: Vec<f64>,
    /// Row-major `states × states`.
    pub transition: Vec<f64>,
    /// Row-major `states × symbols`.
    pub emission: Vec<f64>,
}

impl Trellis {
    #[inline]
    pub fn trans(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.states + to]
    }

    #[inline]
    pub fn emit(&self, state: usize, symbol: usize) -> f64 {
        self.emission[state * self.symbols + symbol]
    }

    /// Hidden-state law after one transition from `alpha`.
    pub fn propagate(&self, alpha: &[f64]) -> Vec<f64> {
        (0..self.states)
            .map(|to| (0..self.states).map(|from| alpha[from] * self.trans(from, to)).sum())
            .collect()
    }

    /// Probability of observing exactly the word `y` (forward algorithm).
    pub fn word_probability(&self, y: &[usize]) -> f64 {
        let mut alpha: Vec<f64> = Vec::new();
        for (k, &sym) in y.iter().enumerate() {
            let prior = if k == 0 {
                self.initial.clone()
            } else {
                self.propagate(&alpha)
            };
            alpha = prior
                .iter()
                .enumerate()
                .map(|(s, p)| p * self.emit(s, sym))
                .collect();
        }
        alpha.iter().sum()
    }

    /// Marginal law of the observed symbol at each of the first `n`
    /// positions.
    pub fn position_marginals(&self, n: usize) -> Vec<Vec<f64>> {
        let mut hidden = self.initial.clone();
        let mut out = Vec::with_capacity(n);
        for k in 0..n {
            if k > 0 {
                hidden = self.propagate(&hidden);
            }
            out.push(
                (0..self.symbols)
                    .map(|y| (0..self.states).map(|s| hidden[s] * self.emit(s, y)).sum())
                    .collect(),
            );
        }
        out
    }
}

/// Exact rational twin of [`Trellis`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTrellis {
    pub states: usize,
    pub symbols: usize,
    pub initial: Vec<BigRational>,
    pub transition: Vec<BigRational>,
    pub emission: Vec<BigRational>,
}

impl ExactTrellis {
    pub fn trans(&self, from: usize, to: usize) -> &BigRational {
        &self.transition[from * self.states + to]
    }

    pub fn emit(&self, state: usize, symbol: usize) -> &BigRational {
        &self.emission[state * self.symbols + symbol]
    }
}

/// The constant `C ≥ 1` with `C⁻¹ ℚ(A)ℚ(B) ≤ ℚ(A∩B) ≤ C ℚ(A)ℚ(B)` for past
/// events `A` and future events `B`.
///
/// For IID codebooks `C = 1`. For Markov chains (and HMMs, through their
/// hidden chain) it is the largest ratio between a transition probability
/// `K(s, s')` and the stationary mass `π(s')`, in either direction.
pub fn mixing_constant(model: &ProcessModel) -> Result<f64> {
    let Some((k, pi)) = model.hidden_chain() else {
        return Ok(1.0);
    };
    if let ProcessModel::Hmm(h) = model {
        if !h.is_stationary() {
            return Err(Error::InfiniteMixing(
                "hidden chain does not start from its stationary law".into(),
            ));
        }
    }
    let n = k.rows();
    let mut c: f64 = 1.0;
    for s in 0..n {
        for t in 0..n {
            let kst = k.get(s, t);
            if kst <= 0.0 {
                return Err(Error::InfiniteMixing(format!(
                    "transition entry ({s},{t}) is zero"
                )));
            }
            let p = pi.prob(t);
            c = c.max(kst / p).max(p / kst);
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(rows: Vec<Vec<f64>>) -> StochasticMatrix {
        StochasticMatrix::new(rows).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&chain(vec![vec![0.5, 0.5], vec![0.5, 0.5]])).unwrap();
        assert_eq!(pi.probs(), &[0.5, 0.5]);
        let pi = stationary_distribution(&chain(vec![vec![0.0, 1.0], vec![1.0, 0.0]])).unwrap();
        assert_eq!(pi.probs(), &[0.5, 0.5]);
        // Oracle: π₀·0.1 = π₁·0.2 with π₀ + π₁ = 1 gives (2/3, 1/3).
        let k = chain(vec![vec![0.9, 0.1], vec![0.2, 0.8]]);
        let pi = stationary_distribution(&k).unwrap();
        assert!((pi.prob(0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((pi.prob(1) - 1.0 / 3.0).abs() < 1e-12);
        assert!(stationarity_residual(pi.probs(), &k) <= STATIONARY_TOLERANCE);
    }

    #[test]
    fn reducible_chain_is_rejected() {
        let k = chain(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(
            stationary_distribution(&k),
            Err(Error::NonUniqueStationary(_))
        ));
    }

    #[test]
    fn bad_rows_are_rejected() {
        assert!(StochasticMatrix::new(vec![vec![0.5, 0.4]]).is_err());
        assert!(StochasticMatrix::new(vec![vec![0.5, 0.5], vec![1.0]]).is_err());
        assert!(ProcessModel::hmm(vec![vec![1.0]], vec![vec![0.5, 0.5], vec![0.5, 0.5]]).is_err());
    }

    #[test]
    fn mixing_constant_examples() {
        let iid = ProcessModel::iid(FiniteDistribution::new(vec![0.3, 0.7]).unwrap());
        assert_eq!(mixing_constant(&iid).unwrap(), 1.0);
        let flat = ProcessModel::markov(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        assert_eq!(mixing_constant(&flat).unwrap(), 1.0);
        let sticky = ProcessModel::markov(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
        assert!((mixing_constant(&sticky).unwrap() - 1.25).abs() < 1e-12);
        let periodic = ProcessModel::markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(
            mixing_constant(&periodic),
            Err(Error::InfiniteMixing(_))
        ));
    }

    #[test]
    fn hmm_marginal_and_trellis() {
        let h = ProcessModel::hmm(
            vec![vec![0.6, 0.4], vec![0.4, 0.6]],
            vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        )
        .unwrap();
        let m = h.marginal();
        assert!((m.prob(0) - 0.55).abs() < 1e-12);
        let t = h.trellis();
        let total: f64 = [[0, 0], [0, 1], [1, 0], [1, 1]]
            .iter()
            .map(|w| t.word_probability(w))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!((mixing_constant(&h).unwrap() - 1.25).abs() < 1e-12);
    }
}
