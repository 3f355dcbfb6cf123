//! Simulation of `L_n` along sampled source paths, the pathology verdict
//! for `D = D_min`, the random subsequence of finite `L_n`, and the walk
//! `W_n = Σ_k (ρ_Q(X_k) − D_min)`.
//!
//! Finite-horizon runs only give evidence about almost-sure limits: an
//! "infinitely often" statement is checked over windows and seed
//! ensembles, never as such.

use std::io::{BufRead, Write};

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ball_prob::{word_rate, BallOptions, BallSweep};
use crate::error::{Error, Result};
use crate::exact::{rational_to_f64, DistortionLevel};
use crate::extended::ExtendedReal;
use crate::measures::{rho_q_scaled, sample_path, DistortionMatrix, ProcessModel};
use crate::rate_core::{d_min_exact, rate_at_dmin};

/// Conditions under which `L_n` fails to converge with positive
/// probability: `0 < D = D_min < ∞`, finite rate at `D_min`, and
/// `ρ_Q(X_1)` not almost surely constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathologyVerdict {
    pub pathological: bool,
    pub d_equals_dmin: bool,
    pub d_positive: bool,
    pub dmin_finite: bool,
    pub rate_finite: bool,
    pub rho_q_constant: bool,
}

fn check_shapes(source: &ProcessModel, codebook: &ProcessModel, rho: &DistortionMatrix) -> Result<()> {
    if source.alphabet_size() != rho.rows() {
        return Err(Error::invalid(
            "source",
            format!("source alphabet has {} symbols but rho has {} rows", source.alphabet_size(), rho.rows()),
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

pub fn classify_pathology(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    d: &DistortionLevel,
) -> Result<PathologyVerdict> {
    check_shapes(source, codebook, rho)?;
    let p = source.marginal();
    let q = codebook.marginal();
    let dmin = d_min_exact(&p, &q, rho);
    let d_equals_dmin = d.exact() == &dmin;
    let d_positive = d.exact() > &BigRational::from_integer(0.into());
    // Every entry of ρ is finite, so D_min is.
    let dmin_finite = true;
    let rate_finite = rate_at_dmin(&p, &q, rho).is_finite();
    let mut levels = p.support().into_iter().map(|x| rho_q_scaled(x, &q, rho));
    let first = levels.next();
    let rho_q_constant = levels.all(|v| Some(v) == first);
    Ok(PathologyVerdict {
        pathological: d_positive && d_equals_dmin && dmin_finite && rate_finite && !rho_q_constant,
        d_equals_dmin,
        d_positive,
        dmin_finite,
        rate_finite,
        rho_q_constant,
    })
}

/// One step of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub l_n: ExtendedReal,
    pub word_rate: ExtendedReal,
    /// `(1/n) Σ_{k ≤ n} ρ_Q(x_k)`.
    pub cum_rho_q_mean: f64,
    /// `(1/n) Σ_{k ≤ n} ρ_Q(x_k) ≤ D`, decided exactly.
    pub in_nm: bool,
    /// `W_n = Σ_{k ≤ n} (ρ_Q(x_k) − D_min)`.
    pub walk_value: f64,
}

/// Sample a source path of length `n_max` and follow it.
pub fn run_trajectory(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    d: &DistortionLevel,
    n_max: usize,
    seed: u64,
) -> Result<Vec<TrajectoryRecord>> {
    run_trajectory_with(source, codebook, rho, d, n_max, seed, BallOptions::default())
}

pub fn run_trajectory_with(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    d: &DistortionLevel,
    n_max: usize,
    seed: u64,
    options: BallOptions,
) -> Result<Vec<TrajectoryRecord>> {
    if n_max == 0 {
        return Err(Error::invalid("n_max", "must be at least 1"));
    }
    check_shapes(source, codebook, rho)?;
    let x = sample_path(source, n_max, seed)?;
    trajectory_for_path(&x, source, codebook, rho, d, options)
}

/// Follow a given source path. `source` only supplies `D_min` for the walk.
pub fn trajectory_for_path(
    x: &[usize],
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    d: &DistortionLevel,
    options: BallOptions,
) -> Result<Vec<TrajectoryRecord>> {
    check_shapes(source, codebook, rho)?;
    crate::ball_prob::validate_word(x, codebook, rho)?;
    let n_max = x.len();
    let q = codebook.marginal();
    let dmin = d_min_exact(&source.marginal(), &q, rho);
    let scale = rho.scale();
    let ceiling = d.scaled_threshold(n_max, scale);
    let mut sweep = BallSweep::new(codebook, rho, ceiling, n_max, options)?;
    let rho_q: Vec<u64> = (0..rho.rows()).map(|s| rho_q_scaled(s, &q, rho)).collect();
    // W_n = (Σ scaled ρ_Q · den − n · num · L) / (L · den), exactly.
    let walk_den = BigInt::from(scale) * dmin.denom();
    let mut cum: u64 = 0;
    let mut records = Vec::with_capacity(n_max);
    for (k, &s) in x.iter().enumerate() {
        let n = k + 1;
        sweep.push(s);
        cum += rho_q[s];
        let l_n = sweep.log_prob_within(d.scaled_threshold(n, scale)).per_symbol_exponent(n);
        let word = word_rate(&x[..n], codebook, rho, d)?;
        let walk_num = BigInt::from(cum) * dmin.denom() - BigInt::from(n) * dmin.numer() * BigInt::from(scale);
        records.push(TrajectoryRecord {
            n,
            l_n,
            word_rate: word,
            cum_rho_q_mean: cum as f64 / (scale as f64 * n as f64),
            in_nm: d.admits_average(cum, n, scale),
            walk_value: rational_to_f64(&BigRational::new(walk_num, walk_den.clone())),
        });
    }
    Ok(records)
}

/// The times `n` at which `L_n` is finite.
///
/// These must coincide with the times at which the running mean of
/// `ρ_Q(x_k)` is at most `D`; a mismatch is reported as a consistency error.
pub fn finite_subsequence(records: &[TrajectoryRecord]) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for r in records {
        if r.l_n.is_finite() != r.in_nm {
            return Err(Error::Consistency(format!(
                "at n = {}: L_n = {} but the running ρ_Q mean test says {}",
                r.n,
                r.l_n,
                if r.in_nm { "inside" } else { "outside" }
            )));
        }
        if r.in_nm {
            out.push(r.n);
        }
    }
    Ok(out)
}

/// Counts over the walk `W_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkStatistics {
    pub positive: usize,
    pub nonpositive: usize,
    /// Longest run of consecutive `W_n > 0`.
    pub longest_excursion: usize,
    /// Number of `n` where `W_n > 0` differs from `W_{n-1} > 0`.
    pub sign_changes: usize,
}

pub fn walk_statistics(records: &[TrajectoryRecord]) -> WalkStatistics {
    let mut stats = WalkStatistics {
        positive: 0,
        nonpositive: 0,
        longest_excursion: 0,
        sign_changes: 0,
    };
    let mut run = 0;
    let mut prev: Option<bool> = None;
    for r in records {
        let up = r.walk_value > 0.0;
        if up {
            stats.positive += 1;
            run += 1;
            stats.longest_excursion = stats.longest_excursion.max(run);
        } else {
            stats.nonpositive += 1;
            run = 0;
        }
        if prev.is_some_and(|p| p != up) {
            stats.sign_changes += 1;
        }
        prev = Some(up);
    }
    stats
}

/// Whether every window of `window` consecutive records holds a finite `L_n`.
pub fn finite_in_every_window(records: &[TrajectoryRecord], window: usize) -> bool {
    if window == 0 {
        return true;
    }
    records.chunks(window).all(|c| c.iter().any(|r| r.l_n.is_finite()))
}

/// Trajectories for several seeds, computed in parallel and returned in
/// seed order.
pub fn run_ensemble(
    source: &ProcessModel,
    codebook: &ProcessModel,
    rho: &DistortionMatrix,
    d: &DistortionLevel,
    n_max: usize,
    seeds: &[u64],
    options: BallOptions,
) -> Result<Vec<(u64, Vec<TrajectoryRecord>)>> {
    if seeds.is_empty() {
        return Err(Error::invalid("seeds", "at least one seed is required"));
    }
    seeds
        .par_iter()
        .map(|&seed| run_trajectory_with(source, codebook, rho, d, n_max, seed, options).map(|r| (seed, r)))
        .collect()
}

/// Window length used for finite-horizon "infinitely often" checks.
pub const DEFAULT_WINDOW: usize = 50;

/// Ensemble evidence for the pathology: how many seeds show an infinite
/// `L_n`, how many show a finite one in every window, and where the
/// finite subsequence ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub seeds: usize,
    pub n_max: usize,
    pub window: usize,
    pub seeds_with_infinite_l: usize,
    pub seeds_finite_every_window: usize,
    pub seeds_with_positive_walk: usize,
    pub seeds_with_nonpositive_walk: usize,
    /// Largest `|L_{N_m} − R|` at the last finite time, over seeds that
    /// have one; `R` is the rate at `D`.
    pub max_last_finite_gap: Option<f64>,
}

pub fn summarize_ensemble(
    runs: &[(u64, Vec<TrajectoryRecord>)],
    rate: ExtendedReal,
    window: usize,
) -> Result<EnsembleSummary> {
    let mut summary = EnsembleSummary {
        seeds: runs.len(),
        n_max: runs.iter().map(|(_, r)| r.len()).max().unwrap_or(0),
        window,
        seeds_with_infinite_l: 0,
        seeds_finite_every_window: 0,
        seeds_with_positive_walk: 0,
        seeds_with_nonpositive_walk: 0,
        max_last_finite_gap: None,
    };
    for (_, records) in runs {
        let finite = finite_subsequence(records)?;
        if finite.len() < records.len() {
            summary.seeds_with_infinite_l += 1;
        }
        if finite_in_every_window(records, window) {
            summary.seeds_finite_every_window += 1;
        }
        let walk = walk_statistics(records);
        if walk.positive > 0 {
            summary.seeds_with_positive_walk += 1;
        }
        if walk.nonpositive > 0 {
            summary.seeds_with_nonpositive_walk += 1;
        }
        if let (Some(&last), ExtendedReal::Finite(r)) = (finite.last(), rate) {
            let gap = (records[last - 1].l_n.to_f64() - r).abs();
            summary.max_last_finite_gap = Some(summary.max_last_finite_gap.map_or(gap, |g: f64| g.max(gap)));
        }
    }
    Ok(summary)
}

pub const TRAJECTORY_CSV_HEADER: &str = "seed,n,l_n,word_rate,cum_rho_q_mean,in_Nm,walk_value";

pub fn write_trajectory_csv(out: &mut (impl Write + ?Sized), seed: u64, records: &[TrajectoryRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(
            out,
            "{seed},{},{},{},{},{},{}",
            r.n, r.l_n, r.word_rate, r.cum_rho_q_mean, r.in_nm, r.walk_value
        )?;
    }
    Ok(())
}

/// Read rows written by [`write_trajectory_csv`] (header optional).
pub fn read_trajectory_csv(input: impl BufRead) -> Result<Vec<(u64, TrajectoryRecord)>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::invalid("trajectory csv", e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line == TRAJECTORY_CSV_HEADER {
            continue;
        }
        let bad = |what: &str| Error::invalid("trajectory csv", format!("line {}: bad {what}", i + 1));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad("column count"));
        }
        out.push((
            f[0].parse().map_err(|_| bad("seed"))?,
            TrajectoryRecord {
                n: f[1].parse().map_err(|_| bad("n"))?,
                l_n: f[2].parse().map_err(|_| bad("l_n"))?,
                word_rate: f[3].parse().map_err(|_| bad("word_rate"))?,
                cum_rho_q_mean: f[4].parse().map_err(|_| bad("cum_rho_q_mean"))?,
                in_nm: f[5].parse().map_err(|_| bad("in_Nm"))?,
                walk_value: f[6].parse().map_err(|_| bad("walk_value"))?,
            },
        ));
    }
    Ok(out)
}
