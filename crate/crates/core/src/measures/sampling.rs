//! Seeded path sampling.
//!
//! All randomness comes from [`ChaCha8Rng`], seeded from a 64-bit value.
//! ChaCha output is specified bit-for-bit, so paths are identical across
//! platforms and runs. Independent streams (trials, seeds in an ensemble)
//! are derived with [`stream_seed`], so serial and parallel drivers see the
//! same numbers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::process::ProcessModel;
use crate::error::{Error, Result};

/// The generator used throughout the crate.
pub type PathRng = ChaCha8Rng;

/// Generator for a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> PathRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for stream `index` under the base `seed`.
pub fn stream_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Inverse-CDF draw from a (possibly unnormalized-by-rounding) weight row.
fn draw(weights: &[f64], rng: &mut impl Rng) -> usize {
    let u: f64 = rng.gen();
    let total: f64 = weights.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Sample `n` observed symbols from `model`, starting from its initial
/// (stationary) law.
pub fn sample_path_with(model: &ProcessModel, n: usize, rng: &mut impl Rng) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::invalid("n", "path length must be at least 1"));
    }
    let t = model.trellis();
    let mut out = Vec::with_capacity(n);
    let mut state = draw(&t.initial, rng);
    for k in 0..n {
        if k > 0 {
            state = draw(&t.transition[state * t.states..(state + 1) * t.states], rng);
        }
        let row = &t.emission[state * t.symbols..(state + 1) * t.symbols];
        out.push(if matches!(model, ProcessModel::Markov(_)) {
            state
        } else {
            draw(row, rng)
        });
    }
    Ok(out)
}

/// Sample a path of length `n` with a fresh generator seeded by `seed`.
pub fn sample_path(model: &ProcessModel, n: usize, seed: u64) -> Result<Vec<usize>> {
    sample_path_with(model, n, &mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{empirical_distribution, FiniteDistribution};

    #[test]
    fn point_mass_path() {
        let m = ProcessModel::iid(FiniteDistribution::point_mass(2, 0).unwrap());
        for seed in [0, 1, 99] {
            assert_eq!(sample_path(&m, 5, seed).unwrap(), vec![0; 5]);
        }
    }

    #[test]
    fn periodic_chain_alternates() {
        let m = ProcessModel::markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let mut saw = [false; 2];
        for seed in 0..32 {
            let p = sample_path(&m, 4, seed).unwrap();
            let first = p[0];
            saw[first] = true;
            let expected: Vec<usize> = (0..4).map(|k| (first + k) % 2).collect();
            assert_eq!(p, expected);
        }
        assert!(saw[0] && saw[1]);
    }

    #[test]
    fn ergodic_average() {
        let m = ProcessModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let path = sample_path(&m, 100_000, 7).unwrap();
        let e = empirical_distribution(&path, 2).unwrap();
        assert!((e.prob(0) - 2.0 / 3.0).abs() < 0.01, "{:?}", e.probs());
    }

    #[test]
    fn reproducible() {
        let m = ProcessModel::hmm(
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
            vec![vec![0.5, 0.25, 0.25], vec![0.1, 0.1, 0.8]],
        )
        .unwrap();
        assert_eq!(sample_path(&m, 200, 3).unwrap(), sample_path(&m, 200, 3).unwrap());
        assert_ne!(stream_seed(1, 0), stream_seed(1, 1));
        assert!(sample_path(&m, 0, 3).is_err());
    }
}
