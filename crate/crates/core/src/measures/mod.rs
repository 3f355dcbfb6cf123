//! Alphabets, distributions, distortion matrices and process models.

mod distortion;
mod distribution;
mod process;
mod sampling;

pub use distortion::{DistortionMatrix, MAX_FLOAT_DENOMINATOR};
pub use distribution::{empirical_distribution, FiniteDistribution, MASS_TOLERANCE};
pub use process::{
    mixing_constant, stationarity_residual, stationary_distribution, ExactTrellis, HiddenMarkov,
    MarkovChain, ProcessModel, StochasticMatrix, Trellis, STATIONARY_TOLERANCE,
};
pub use sampling::{rng_from_seed, sample_path, sample_path_with, stream_seed, PathRng};

/// `ρ_Q(x)`: the smallest distortion symbol `x` can see from a reproduction
/// symbol in the support of `q`.
pub fn rho_q(x: usize, q: &FiniteDistribution, rho: &DistortionMatrix) -> f64 {
    rho_q_scaled(x, q, rho) as f64 / rho.scale() as f64
}

/// [`rho_q`] as an integer multiple of `1 / rho.scale()`.
pub fn rho_q_scaled(x: usize, q: &FiniteDistribution, rho: &DistortionMatrix) -> u64 {
    rho.row_scaled(x)
        .iter()
        .enumerate()
        .filter(|&(y, _)| q.in_support(y))
        .map(|(_, &d)| d)
        .min()
        .expect("a distribution has nonempty support")
}
