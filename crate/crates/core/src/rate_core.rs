//! The single-letter rate function `R(P, Q, D)`.
//!
//! `R(P, Q, D)` is the smallest relative entropy `H(W ‖ P⊗Q)` over couplings
//! `W` with source marginal `P` and expected distortion at most `D`. It
//! equals the one-sided conjugate
//!
//! ```text
//! Λ*(D) = sup_{λ ≤ 0} [ λD − Λ(λ) ],    Λ(λ) = Σ_x P(x) log Σ_y Q(y) e^{λρ(x,y)}
//! ```
//!
//! and splits into four regimes around `D_min = E ρ_Q(X)` and
//! `D_ave = E ρ(X, Y)` with `X ~ P`, `Y ~ Q` independent:
//!
//! | regime          | rate                                   |
//! |-----------------|----------------------------------------|
//! | `D < D_min`     | `+∞`                                   |
//! | `D = D_min`     | `E_X[−log Q{y : ρ(X,y) = ρ_Q(X)}]`    |
//! | interior        | `λ_D D − Λ(λ_D)` with `Λ'(λ_D) = D`    |
//! | `D ≥ D_ave`     | `0`                                    |
//!
//! Regime boundaries are decided in exact rational arithmetic. Every sum
//! over `y` is taken in the log domain after shifting by the extreme
//! exponent, so `λ` near `−700` and beyond is safe.

use std::fmt;

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::conjugate::solve_slope;
use crate::error::{Error, Result};
use crate::exact::DistortionLevel;
use crate::extended::ExtendedReal;
use crate::measures::{rho_q_scaled, DistortionMatrix, FiniteDistribution};

/// Where `D` sits relative to `D_min` and `D_ave`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    BelowDmin,
    AtDmin,
    Interior,
    AtOrAboveDave,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Regime::BelowDmin => "BelowDmin",
            Regime::AtDmin => "AtDmin",
            Regime::Interior => "Interior",
            Regime::AtOrAboveDave => "AtOrAboveDave",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "BelowDmin" => Ok(Regime::BelowDmin),
            "AtDmin" => Ok(Regime::AtDmin),
            "Interior" => Ok(Regime::Interior),
            "AtOrAboveDave" => Ok(Regime::AtOrAboveDave),
            other => Err(Error::invalid("regime", format!("unknown regime {other:?}"))),
        }
    }
}

/// `R(P, Q, D)` together with its optimizing slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEvaluation {
    pub distortion: f64,
    /// Nats per symbol.
    pub rate: ExtendedReal,
    /// `λ_D ≤ 0`; `None` when the rate is infinite or `D = D_min`.
    pub lambda_star: Option<f64>,
    pub regime: Regime,
}

/// A joint law on `S × T`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    joint: Vec<f64>,
}

impl Coupling {
    pub fn new(joint: Vec<Vec<f64>>) -> Result<Self> {
        let rows = joint.len();
        let cols = joint.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || joint.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("joint", "coupling must be a nonempty rectangular matrix"));
        }
        let flat: Vec<f64> = joint.into_iter().flatten().collect();
        if flat.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("joint", "entries must be finite and nonnegative"));
        }
        let total: f64 = flat.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("joint", format!("total mass {total} is not 1")));
        }
        Ok(Coupling {
            rows,
            cols,
            joint: flat,
        })
    }

    /// The independent coupling `P ⊗ Q`.
    pub fn product(p: &FiniteDistribution, q: &FiniteDistribution) -> Self {
        let joint = p
            .probs()
            .iter()
            .flat_map(|&px| q.probs().iter().map(move |&qy| px * qy))
            .collect();
        Coupling {
            rows: p.len(),
            cols: q.len(),
            joint,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.joint[x * self.cols + y]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.joint.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// `W_S`, the source marginal.
    pub fn row_sums(&self) -> Vec<f64> {
        self.joint.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|y| (0..self.rows).map(|x| self.get(x, y)).sum())
            .collect()
    }

    /// `E_W ρ`.
    pub fn expected_distortion(&self, rho: &DistortionMatrix) -> f64 {
        (0..self.rows)
            .flat_map(|x| (0..self.cols).map(move |y| (x, y)))
            .map(|(x, y)| self.get(x, y) * rho.get(x, y))
            .sum()
    }
}

fn check_shapes(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix) -> Result<()> {
    if p.len() != rho.rows() {
        return Err(Error::invalid(
            "P",
            format!("source alphabet has {} symbols but rho has {} rows", p.len(), rho.rows()),
        ));
    }
    if q.len() != rho.cols() {
        return Err(Error::invalid(
            "Q",
            format!("codebook alphabet has {} symbols but rho has {} columns", q.len(), rho.cols()),
        ));
    }
    Ok(())
}

/// `log Σ_y Q(y) e^{λ(ρ(x,y) − shift)}` over `supp Q`, and the tilted mean
/// of `ρ(x, ·)`. The largest exponent is factored out before summing.
pub(crate) fn tilt(q: &[f64], row: &[f64], shift: f64, lambda: f64) -> (f64, f64) {
    let top = q
        .iter()
        .zip(row)
        .filter(|(&qy, _)| qy > 0.0)
        .map(|(_, &r)| lambda * (r - shift))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut mass = 0.0;
    let mut moment = 0.0;
    for (&qy, &r) in q.iter().zip(row) {
        if qy > 0.0 {
            let w = qy * (lambda * (r - shift) - top).exp();
            mass += w;
            moment += w * r;
        }
    }
    (top + mass.ln(), moment / mass)
}

fn support_extremes(q: &FiniteDistribution, row: &[f64]) -> (f64, f64) {
    q.probs()
        .iter()
        .zip(row)
        .filter(|(&qy, _)| qy > 0.0)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, &r)| (lo.min(r), hi.max(r)))
}

/// `Λ(P, Q, λ) = Σ_x P(x) log Σ_y Q(y) e^{λρ(x,y)}`, finite for every real
/// `λ` on finite alphabets.
pub fn lambda_fn(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix, lambda: f64) -> ExtendedReal {
    let total = p
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &px)| px > 0.0)
        .map(|(x, &px)| {
            let row = rho.row_values(x);
            let (lo, hi) = support_extremes(q, row);
            let shift = if lambda <= 0.0 { lo } else { hi };
            let (log_mass, _) = tilt(q.probs(), row, shift, lambda);
            px * (lambda * shift + log_mass)
        })
        .sum();
    ExtendedReal::Finite(total)
}

/// Slope of `Λ` without the argument check.
pub(crate) fn slope_unchecked(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix, lambda: f64) -> f64 {
    p.probs()
        .iter()
        .enumerate()
        .filter(|(_, &px)| px > 0.0)
        .map(|(x, &px)| {
            let row = rho.row_values(x);
            let shift = support_extremes(q, row).0;
            px * tilt(q.probs(), row, shift, lambda).1
        })
        .sum()
}

/// `Λ'(λ) = E_X[ E_Y ρe^{λρ} / E_Y e^{λρ} ]` for `λ < 0`.
pub fn lambda_prime(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix, lambda: f64) -> Result<f64> {
    check_shapes(p, q, rho)?;
    if !(lambda < 0.0) {
        return Err(Error::invalid("lambda", format!("slope is defined for lambda < 0, got {lambda}")));
    }
    Ok(slope_unchecked(p, q, rho, lambda))
}

/// `D_min = E ρ_Q(X)`, exactly.
pub fn d_min_exact(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix) -> BigRational {
    let total = p
        .exact()
        .iter()
        .enumerate()
        .filter(|(_, px)| !px.is_zero())
        .fold(BigRational::zero(), |acc, (x, px)| {
            acc + px * BigRational::from_integer(rho_q_scaled(x, q, rho).into())
        });
    total / BigRational::from_integer(rho.scale().into())
}

pub fn d_min(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix) -> f64 {
    crate::exact::rational_to_f64(&d_min_exact(p, q, rho))
}

/// `D_ave = Σ_x Σ_y P(x) Q(y) ρ(x, y)`, exactly.
pub fn d_ave_exact(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix) -> BigRational {
    let mut total = BigRational::zero();
    for (x, px) in p.exact().iter().enumerate() {
        if px.is_zero() {
            continue;
        }
        let inner = q
            .exact()
            .iter()
            .enumerate()
            .fold(BigRational::zero(), |acc, (y, qy)| {
                acc + qy * BigRational::from_integer(rho.scaled(x, y).into())
            });
        total += px * inner;
    }
    total / BigRational::from_integer(rho.scale().into())
}

pub fn d_ave(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix) -> f64 {
    crate::exact::rational_to_f64(&d_ave_exact(p, q, rho))
}

/// Mass `Q(A(x))` of the reproduction symbols attaining `ρ_Q(x)`.
fn attaining_mass(x: usize, q: &FiniteDistribution, rho: &DistortionMatrix) -> f64 {
    let best = rho_q_scaled(x, q, rho);
    rho.row_scaled(x)
        .iter()
        .enumerate()
        .filter(|&(y, &d)| d == best && q.in_support(y))
        .map(|(y, _)| q.prob(y))
        .sum()
}

/// The rate at `D = D_min`: `Σ_x P(x) · (−log Q{y : ρ(x,y) = ρ_Q(x)})`.
pub fn rate_at_dmin(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix) -> ExtendedReal {
    let mut total = 0.0;
    for (x, &px) in p.probs().iter().enumerate() {
        if !p.in_support(x) {
            continue;
        }
        let mass = attaining_mass(x, q, rho);
        if mass <= 0.0 {
            return ExtendedReal::PlusInfinity;
        }
        total -= px * mass.ln();
    }
    ExtendedReal::Finite(total.max(0.0))
}

/// Interior value `λ(D − D_min) − Σ_x P(x) log Σ_y Q(y) e^{λ(ρ(x,y) − ρ_Q(x))}`,
/// which is `λD − Λ(λ)` rearranged to avoid cancellation for large `|λ|`.
fn interior_value(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix, lambda: f64, d: f64, dmin: f64) -> f64 {
    let tail: f64 = p
        .probs()
        .iter()
        .enumerate()
        .filter(|(_, &px)| px > 0.0)
        .map(|(x, &px)| {
            let row = rho.row_values(x);
            let shift = support_extremes(q, row).0;
            px * tilt(q.probs(), row, shift, lambda).0
        })
        .sum();
    lambda * (d - dmin) - tail
}

/// `R(P, Q, D)` with the four-way regime split.
pub fn rate(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix, d: &DistortionLevel) -> Result<RateEvaluation> {
    check_shapes(p, q, rho)?;
    let dmin = d_min_exact(p, q, rho);
    let distortion = d.value();
    if d.exact() < &dmin {
        return Ok(RateEvaluation {
            distortion,
            rate: ExtendedReal::PlusInfinity,
            lambda_star: None,
            regime: Regime::BelowDmin,
        });
    }
    if d.exact() == &dmin {
        return Ok(RateEvaluation {
            distortion,
            rate: rate_at_dmin(p, q, rho),
            lambda_star: None,
            regime: Regime::AtDmin,
        });
    }
    if d.exact() >= &d_ave_exact(p, q, rho) {
        return Ok(RateEvaluation {
            distortion,
            rate: ExtendedReal::ZERO,
            lambda_star: Some(0.0),
            regime: Regime::AtOrAboveDave,
        });
    }
    let lambda = solve_slope(|l| slope_unchecked(p, q, rho, l), distortion);
    let dmin_f = crate::exact::rational_to_f64(&dmin);
    let value = interior_value(p, q, rho, lambda, distortion, dmin_f);
    Ok(RateEvaluation {
        distortion,
        rate: ExtendedReal::Finite(value.max(0.0)),
        lambda_star: Some(lambda),
        regime: Regime::Interior,
    })
}

/// A coupling in `W(P, D)` attaining `R(P, Q, D)`.
pub fn optimal_coupling(p: &FiniteDistribution, q: &FiniteDistribution, rho: &DistortionMatrix, d: &DistortionLevel) -> Result<Coupling> {
    let eval = rate(p, q, rho, d)?;
    let (rows, cols) = (p.len(), q.len());
    let mut joint = vec![0.0; rows * cols];
    match eval.regime {
        Regime::BelowDmin => {
            return Err(Error::infeasible(
                "D",
                format!("rate is infinite at D = {}; no coupling has finite relative entropy", d.value()),
            ))
        }
        Regime::AtOrAboveDave => return Ok(Coupling::product(p, q)),
        Regime::AtDmin => {
            for x in 0..rows {
                let px = p.prob(x);
                if px == 0.0 {
                    continue;
                }
                let best = rho_q_scaled(x, q, rho);
                let mass = attaining_mass(x, q, rho);
                for y in 0..cols {
                    if q.in_support(y) && rho.scaled(x, y) == best {
                        joint[x * cols + y] = px * q.prob(y) / mass;
                    }
                }
            }
        }
        Regime::Interior => {
            let lambda = eval.lambda_star.expect("interior regime carries a slope");
            for x in 0..rows {
                let px = p.prob(x);
                if px == 0.0 {
                    continue;
                }
                let row = rho.row_values(x);
                let shift = support_extremes(q, row).0;
                let weights: Vec<f64> = (0..cols)
                    .map(|y| {
                        if q.prob(y) > 0.0 {
                            q.prob(y) * (lambda * (row[y] - shift)).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let z: f64 = weights.iter().sum();
                for (y, w) in weights.into_iter().enumerate() {
                    joint[x * cols + y] = px * w / z;
                }
            }
        }
    }
    Ok(Coupling { rows, cols, joint })
}

/// `H(W ‖ P⊗Q)` in nats, with `0 · log 0 = 0`.
pub fn relative_entropy(w: &Coupling, p: &FiniteDistribution, q: &FiniteDistribution) -> ExtendedReal {
    let mut total = 0.0;
    for x in 0..w.rows() {
        for y in 0..w.cols() {
            let mass = w.get(x, y);
            if mass == 0.0 {
                continue;
            }
            let reference = p.prob(x) * q.prob(y);
            if reference == 0.0 {
                return ExtendedReal::PlusInfinity;
            }
            total += mass * (mass / reference).ln();
        }
    }
    ExtendedReal::Finite(total)
}

pub const DEFAULT_RD_ITERATIONS: usize = 10_000;
pub const DEFAULT_RD_TOLERANCE: f64 = 1e-8;

/// Result of the outer minimization over codebook marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct RateDistortionSolution {
    /// A lower bound on `R(P, D)` within the convergence gap of it.
    pub value: f64,
    /// The final output marginal.
    pub output: FiniteDistribution,
    /// Final slope; `None` at the smallest feasible `D` (slope `−∞`).
    pub lambda: Option<f64>,
}

/// Alternating maximization of `Q ↦ Λ(P, Q, λ)` at a fixed slope.
struct OutputIteration<'a> {
    p: &'a [f64],
    rho: &'a DistortionMatrix,
    /// Per-`x` weights `e^{λ(ρ(x,y) − min_y ρ(x,y))}` (indicators at `λ = −∞`).
    weights: Vec<f64>,
    cols: usize,
}

struct OutputState {
    q: Vec<f64>,
    /// `log Σ_y Q(y) w_x(y)` per active `x` (weighted by `P(x)` and summed).
    log_partition: f64,
    slope: f64,
    gap: f64,
}

impl<'a> OutputIteration<'a> {
    fn new(p: &'a FiniteDistribution, rho: &'a DistortionMatrix, lambda: Option<f64>) -> Self {
        let cols = rho.cols();
        let mut weights = vec![0.0; rho.rows() * cols];
        for x in 0..rho.rows() {
            let row_s = rho.row_scaled(x);
            let best = *row_s.iter().min().expect("nonempty row");
            let best_f = best as f64 / rho.scale() as f64;
            for y in 0..cols {
                weights[x * cols + y] = match lambda {
                    Some(l) => (l * (rho.get(x, y) - best_f)).exp(),
                    None => f64::from(u8::from(row_s[y] == best)),
                };
            }
        }
        OutputIteration {
            p: p.probs(),
            rho,
            weights,
            cols,
        }
    }

    fn evaluate(&self, q: Vec<f64>) -> (OutputState, Vec<f64>) {
        let mut coeff = vec![0.0; self.cols];
        let mut log_partition = 0.0;
        let mut slope = 0.0;
        for (x, &px) in self.p.iter().enumerate() {
            if px == 0.0 {
                continue;
            }
            let w = &self.weights[x * self.cols..(x + 1) * self.cols];
            let z: f64 = q.iter().zip(w).map(|(a, b)| a * b).sum();
            log_partition += px * z.ln();
            let moment: f64 = (0..self.cols).map(|y| q[y] * w[y] * self.rho.get(x, y)).sum();
            slope += px * moment / z;
            for y in 0..self.cols {
                coeff[y] += px * w[y] / z;
            }
        }
        let gap = coeff.iter().copied().fold(f64::NEG_INFINITY, f64::max).ln().max(0.0);
        (
            OutputState {
                q,
                log_partition,
                slope,
                gap,
            },
            coeff,
        )
    }

    fn run(&self, iterations: usize, tolerance: f64) -> OutputState {
        let mut q = vec![1.0 / self.cols as f64; self.cols];
        for _ in 0..iterations {
            let (state, coeff) = self.evaluate(q);
            if state.gap <= tolerance {
                return state;
            }
            q = state.q.iter().zip(&coeff).map(|(a, c)| a * c).collect();
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);
        }
        self.evaluate(q).0
    }
}

/// `R(P, D) = inf_Q R(P, Q, D)` by alternating minimization; see
/// [`rate_distortion_solve`].
pub fn rate_distortion(p: &FiniteDistribution, rho: &DistortionMatrix, d: &DistortionLevel, iterations: usize, tolerance: f64) -> Result<f64> {
    rate_distortion_solve(p, rho, d, iterations, tolerance).map(|s| s.value)
}

/// Minimize `R(P, Q, D)` over `Q`.
///
/// For a fixed slope `λ < 0`, `Q ↦ Λ(P, Q, λ)` is concave and is maximized
/// by the multiplicative update `Q(y) ← Q(y) Σ_x P(x) e^{λρ(x,y)} / Σ_{y'} Q(y') e^{λρ(x,y')}`.
/// The log of the largest update factor bounds the remaining gap; the outer
/// search matches the slope of the maximized `Λ` to `D`. The returned value
/// subtracts the final gap, so it never exceeds `R(P, Q', D)` for any `Q'`.
pub fn rate_distortion_solve(p: &FiniteDistribution, rho: &DistortionMatrix, d: &DistortionLevel, iterations: usize, tolerance: f64) -> Result<RateDistortionSolution> {
    if p.len() != rho.rows() {
        return Err(Error::invalid("P", "source alphabet does not match rho"));
    }
    let scale = BigRational::from_integer(rho.scale().into());
    let floor_d = p
        .exact()
        .iter()
        .enumerate()
        .fold(BigRational::zero(), |acc, (x, px)| {
            acc + px * BigRational::from_integer((*rho.row_scaled(x).iter().min().expect("row")).into())
        })
        / &scale;
    if d.exact() < &floor_d {
        return Err(Error::infeasible(
            "D",
            format!("D = {} is below the smallest achievable distortion {}", d.value(), floor_d),
        ));
    }
    let column_costs: Vec<BigRational> = (0..rho.cols())
        .map(|y| {
            p.exact()
                .iter()
                .enumerate()
                .fold(BigRational::zero(), |acc, (x, px)| {
                    acc + px * BigRational::from_integer(rho.scaled(x, y).into())
                })
                / &scale
        })
        .collect();
    let (best_col, best_cost) = column_costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.cmp(b.1))
        .expect("nonempty");
    if d.exact() >= best_cost {
        return Ok(RateDistortionSolution {
            value: 0.0,
            output: FiniteDistribution::point_mass(rho.cols(), best_col)?,
            lambda: Some(0.0),
        });
    }
    let floor_f = crate::exact::rational_to_f64(&floor_d);
    if d.exact() == &floor_d {
        let state = OutputIteration::new(p, rho, None).run(iterations, tolerance);
        return Ok(RateDistortionSolution {
            value: (-state.log_partition - state.gap).max(0.0),
            output: FiniteDistribution::new(state.q)?,
            lambda: None,
        });
    }
    let target = d.value();
    let lambda = solve_slope(
        |l| OutputIteration::new(p, rho, Some(l)).run(iterations, tolerance).slope,
        target,
    );
    let state = OutputIteration::new(p, rho, Some(lambda)).run(iterations, tolerance);
    let value = lambda * (target - floor_f) - state.log_partition - state.gap;
    let output = normalized(state.q)?;
    Ok(RateDistortionSolution {
        value: value.max(0.0),
        output,
        lambda: Some(lambda),
    })
}

fn normalized(mut q: Vec<f64>) -> Result<FiniteDistribution> {
    let total: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= total);
    FiniteDistribution::new(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(v: &[f64]) -> FiniteDistribution {
        FiniteDistribution::new(v.to_vec()).unwrap()
    }

    fn level(s: &str) -> DistortionLevel {
        s.parse().unwrap()
    }

    fn coin() -> FiniteDistribution {
        dist(&[0.5, 0.5])
    }

    fn delta0() -> FiniteDistribution {
        FiniteDistribution::point_mass(2, 0).unwrap()
    }

    /// `ln 2 − H_b(0.1)` in nats.
    const BERNOULLI_RATE: f64 = 0.368_064_2;

    #[test]
    fn lambda_fn_examples() {
        let ham = DistortionMatrix::hamming(2);
        assert_eq!(lambda_fn(&coin(), &dist(&[0.3, 0.7]), &ham, 0.0), ExtendedReal::Finite(0.0));
        let v = lambda_fn(&coin(), &coin(), &ham, -1.0).to_f64();
        assert!((v - ((1.0 + (-1f64).exp()) / 2.0).ln()).abs() < 1e-15);
        assert!((v + 0.379_885).abs() < 1e-6);
        assert_eq!(lambda_fn(&delta0(), &delta0(), &ham, -3.0), ExtendedReal::Finite(0.0));
        // Deep slopes stay finite.
        assert!(lambda_fn(&coin(), &dist(&[0.5, 0.5]), &ham, -1e6).is_finite());
    }

    #[test]
    fn lambda_prime_examples() {
        let ham = DistortionMatrix::hamming(2);
        let near_zero = lambda_prime(&coin(), &coin(), &ham, -1e-9).unwrap();
        assert!((near_zero - 0.5).abs() < 1e-8);
        let v = lambda_prime(&coin(), &coin(), &ham, -(9f64.ln())).unwrap();
        assert!((v - 0.1).abs() < 1e-14);
        let h = 1e-6;
        let l = -(9f64.ln());
        let fd = (lambda_fn(&coin(), &coin(), &ham, l + h).to_f64() - lambda_fn(&coin(), &coin(), &ham, l - h).to_f64()) / (2.0 * h);
        assert!((fd - 0.1).abs() < 1e-6);
        assert!(lambda_prime(&coin(), &coin(), &ham, -50.0).unwrap().abs() < 1e-9);
        assert!(matches!(
            lambda_prime(&coin(), &coin(), &ham, 0.0),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn d_min_examples() {
        let abs = DistortionMatrix::abs_diff(2);
        assert_eq!(d_min(&coin(), &delta0(), &abs), 0.5);
        assert_eq!(d_min(&coin(), &coin(), &DistortionMatrix::hamming(2)), 0.0);
        let rho = DistortionMatrix::from_ratios(&[vec![(0, 1), (1, 1)], vec![(2, 1), (0, 1)]]).unwrap();
        let p = FiniteDistribution::from_exact(vec![
            crate::exact::parse_rational("0.3").unwrap(),
            crate::exact::parse_rational("0.7").unwrap(),
        ])
        .unwrap();
        assert_eq!(d_min_exact(&p, &delta0(), &rho), crate::exact::parse_rational("1.4").unwrap());
    }

    #[test]
    fn d_ave_examples() {
        let ham = DistortionMatrix::hamming(2);
        assert_eq!(d_ave(&coin(), &coin(), &ham), 0.5);
        let p = dist(&[0.25, 0.75]);
        assert_eq!(d_ave(&p, &delta0(), &DistortionMatrix::abs_diff(2)), 0.75);
        assert_eq!(d_ave(&p, &coin(), &DistortionMatrix::zeros(2, 2)), 0.0);
    }

    #[test]
    fn rate_examples() {
        let ham = DistortionMatrix::hamming(2);
        let r = rate(&coin(), &coin(), &ham, &level("0.6")).unwrap();
        assert_eq!(r.rate, ExtendedReal::ZERO);
        assert_eq!(r.regime, Regime::AtOrAboveDave);
        assert_eq!(r.lambda_star, Some(0.0));

        let r = rate(&coin(), &delta0(), &DistortionMatrix::abs_diff(2), &level("0.4")).unwrap();
        assert_eq!(r.rate, ExtendedReal::PlusInfinity);
        assert_eq!(r.regime, Regime::BelowDmin);

        let r = rate(&coin(), &coin(), &ham, &level("0.1")).unwrap();
        assert_eq!(r.regime, Regime::Interior);
        let h = -(0.1f64 * 0.1f64.ln() + 0.9 * 0.9f64.ln());
        assert!((r.rate.to_f64() - (2f64.ln() - h)).abs() < 1e-12);
        assert!((r.rate.to_f64() - BERNOULLI_RATE).abs() < 1e-7);
        assert!((r.lambda_star.unwrap() + 2.197_224_6).abs() < 1e-7);

        assert!(rate(&coin(), &coin(), &ham, &level("1/2")).unwrap().regime == Regime::AtOrAboveDave);
    }

    /// Grid-search oracle for the conjugate, independent of the bisection.
    #[test]
    fn rate_matches_grid_oracle() {
        let ham = DistortionMatrix::hamming(2);
        let mut best = f64::NEG_INFINITY;
        let mut l = -30.0;
        while l <= 0.0 {
            let v = l * 0.1 - ((1.0 + f64::exp(l)) / 2.0).ln();
            best = best.max(v);
            l += 1e-5;
        }
        let r = rate(&coin(), &coin(), &ham, &level("0.1")).unwrap().rate.to_f64();
        assert!((r - best).abs() < 1e-9, "{r} vs {best}");
    }

    #[test]
    fn rate_at_dmin_examples() {
        assert_eq!(rate_at_dmin(&coin(), &delta0(), &DistortionMatrix::abs_diff(2)), ExtendedReal::Finite(0.0));
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.25, 0.75]);
        let v = rate_at_dmin(&p, &q, &DistortionMatrix::hamming(2)).to_f64();
        assert!((v - 0.836_988_2).abs() < 1e-7);
        let p = dist(&[0.2, 0.8]);
        let q = dist(&[0.6, 0.4]);
        let cross = -(0.2 * 0.6f64.ln() + 0.8 * 0.4f64.ln());
        assert!((rate_at_dmin(&p, &q, &DistortionMatrix::hamming(2)).to_f64() - cross).abs() < 1e-15);
    }

    #[test]
    fn tie_at_dmin_routes_to_closed_form() {
        let r = rate(&coin(), &delta0(), &DistortionMatrix::abs_diff(2), &level("1/2")).unwrap();
        assert_eq!(r.regime, Regime::AtDmin);
        assert_eq!(r.rate, ExtendedReal::Finite(0.0));
    }

    #[test]
    fn couplings() {
        let ham = DistortionMatrix::hamming(2);
        let w = optimal_coupling(&coin(), &coin(), &ham, &level("0.7")).unwrap();
        assert_eq!(w, Coupling::product(&coin(), &coin()));
        assert_eq!(relative_entropy(&w, &coin(), &coin()), ExtendedReal::Finite(0.0));

        let p = dist(&[0.2, 0.3, 0.5]);
        let q = dist(&[0.3, 0.3, 0.4]);
        let w = optimal_coupling(&p, &q, &DistortionMatrix::hamming(3), &level("0")).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(w.get(x, y), if x == y { p.prob(x) } else { 0.0 });
            }
        }

        let w = optimal_coupling(&coin(), &coin(), &ham, &level("0.1")).unwrap();
        for (got, want) in w.row_sums().iter().zip(coin().probs()) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(w.expected_distortion(&ham) <= 0.1 + 1e-9);
        assert!((relative_entropy(&w, &coin(), &coin()).to_f64() - BERNOULLI_RATE).abs() < 1e-7);
        let r = rate(&coin(), &coin(), &ham, &level("0.1")).unwrap().rate.to_f64();
        assert!((relative_entropy(&w, &coin(), &coin()).to_f64() - r).abs() < 1e-9);

        assert!(matches!(
            optimal_coupling(&coin(), &delta0(), &DistortionMatrix::abs_diff(2), &level("0.4")),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn relative_entropy_examples() {
        let p = dist(&[1.0, 0.0]);
        let w = Coupling::new(vec![vec![0.5, 0.0], vec![0.0, 0.0]]);
        assert!(w.is_err());
        let w = Coupling::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!((relative_entropy(&w, &p, &coin()).to_f64() - 2f64.ln()).abs() < 1e-15);
        let w = Coupling::new(vec![vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(relative_entropy(&w, &p, &delta0()), ExtendedReal::PlusInfinity);
    }

    #[test]
    fn rate_distortion_examples() {
        let ham = DistortionMatrix::hamming(2);
        let v = rate_distortion(&coin(), &ham, &level("0.1"), DEFAULT_RD_ITERATIONS, DEFAULT_RD_TOLERANCE).unwrap();
        assert!((v - BERNOULLI_RATE).abs() < 1e-7, "{v}");
        let uniform_rate = rate(&coin(), &coin(), &ham, &level("0.1")).unwrap().rate.to_f64();
        assert!(v <= uniform_rate + 1e-8);

        let v = rate_distortion(&dist(&[0.3, 0.7]), &ham, &level("0.3"), DEFAULT_RD_ITERATIONS, DEFAULT_RD_TOLERANCE).unwrap();
        assert_eq!(v, 0.0);

        let v = rate_distortion(&dist(&[1.0, 0.0]), &ham, &level("0"), DEFAULT_RD_ITERATIONS, DEFAULT_RD_TOLERANCE).unwrap();
        assert_eq!(v, 0.0);

        let rho = DistortionMatrix::from_ratios(&[vec![(1, 1), (2, 1)], vec![(2, 1), (1, 1)]]).unwrap();
        assert!(matches!(
            rate_distortion(&coin(), &rho, &level("1/2"), 100, 1e-8),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn rate_distortion_at_smallest_distortion() {
        // Hamming with a full-support source: D = 0 forces the identity
        // channel, so R(P, 0) = H(P).
        let p = dist(&[0.2, 0.3, 0.5]);
        let h: f64 = -p.probs().iter().map(|v| v * v.ln()).sum::<f64>();
        let v = rate_distortion(&p, &DistortionMatrix::hamming(3), &level("0"), DEFAULT_RD_ITERATIONS, DEFAULT_RD_TOLERANCE).unwrap();
        assert!((v - h).abs() < 1e-7, "{v} vs {h}");
    }
}
