//! Shared instance generators and oracles for integration tests.
#![allow(dead_code)]

use aeplab::measures::{DistortionMatrix, FiniteDistribution, ProcessModel};
use num_rational::BigRational;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random rational distribution with denominators up to `12 · size`.
/// With `allow_zeros`, entries may vanish (never all of them).
pub fn random_distribution(rng: &mut impl Rng, size: usize, allow_zeros: bool) -> FiniteDistribution {
    loop {
        let weights: Vec<u64> = (0..size)
            .map(|_| {
                if allow_zeros && rng.gen_bool(0.25) {
                    0
                } else {
                    rng.gen_range(1..=12)
                }
            })
            .collect();
        let total: u64 = weights.iter().sum();
        if total == 0 {
            continue;
        }
        let exact = weights
            .iter()
            .map(|&w| BigRational::new(w.into(), total.into()))
            .collect();
        return FiniteDistribution::from_exact(exact).unwrap();
    }
}

/// Random `ρ` with entries `p/q`, `q ≤ 4`, value at most 4.
pub fn random_rho(rng: &mut impl Rng, rows: usize, cols: usize) -> DistortionMatrix {
    let entries: Vec<Vec<(u64, u64)>> = (0..rows)
        .map(|_| {
            (0..cols)
                .map(|_| {
                    let q = rng.gen_range(1..=4);
                    (rng.gen_range(0..=4 * q), q)
                })
                .collect()
        })
        .collect();
    DistortionMatrix::from_ratios(&entries).unwrap()
}

/// Random small-integer `ρ` (entries in `0..=max`).
pub fn random_integer_rho(rng: &mut impl Rng, rows: usize, cols: usize, max: u64) -> DistortionMatrix {
    let entries: Vec<Vec<(u64, u64)>> = (0..rows)
        .map(|_| (0..cols).map(|_| (rng.gen_range(0..=max), 1)).collect())
        .collect();
    DistortionMatrix::from_ratios(&entries).unwrap()
}

fn random_stochastic(rng: &mut impl Rng, rows: usize, cols: usize, allow_zeros: bool) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| random_distribution(rng, cols, allow_zeros).probs().to_vec())
        .collect()
}

/// IID, Markov (strictly positive) or HMM (positive hidden chain,
/// emissions possibly sparse) codebook, chosen by `kind % 3`.
pub fn random_codebook(rng: &mut impl Rng, kind: usize, symbols: usize) -> ProcessModel {
    match kind % 3 {
        0 => ProcessModel::iid(random_distribution(rng, symbols, true)),
        1 => ProcessModel::markov(random_stochastic(rng, symbols, symbols, false)).unwrap(),
        _ => {
            let hidden = rng.gen_range(2..=3);
            ProcessModel::hmm(
                random_stochastic(rng, hidden, hidden, false),
                random_stochastic(rng, hidden, symbols, true),
            )
            .unwrap()
        }
    }
}

/// `ln 2 − H_b(0.1)` in nats.
pub fn bernoulli_target() -> f64 {
    let h = -(0.1f64 * 0.1f64.ln() + 0.9 * 0.9f64.ln());
    std::f64::consts::LN_2 - h
}

/// `sup_{λ ∈ [lo, 0]} f(λ)` on a uniform grid, a deliberately naive oracle.
pub fn grid_sup(lo: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let steps = (-lo / step).round() as usize;
    (0..=steps).map(|i| f(-(i as f64) * step)).fold(f64::NEG_INFINITY, f64::max)
}

/// Enumerate all words of length `n` over `symbols`.
pub fn all_words(symbols: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..symbols).map(move |s| {
                    let mut v = w.clone();
                    v.push(s);
                    v
                })
            })
            .collect();
    }
    out
}
