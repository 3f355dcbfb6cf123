//! Acceptance suite. Each test prints one `PASS`/`FAIL` line per check
//! with the measured value, the tolerance and the runtime, then asserts.

mod common;

use std::io::Write;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use aeplab::aep_harness::{
    finite_in_every_window, finite_subsequence, run_ensemble, run_trajectory, trajectory_for_path, walk_statistics,
    TrajectoryRecord,
};
use aeplab::ball_prob::{enumerate_ball_log_prob, exact_ball_log_prob, word_rate, BallOptions, BallQuery};
use aeplab::measures::{mixing_constant, rho_q_scaled, DistortionMatrix, FiniteDistribution, ProcessModel};
use aeplab::process_rate::{block_codebook, lambda_n, r_inf_bounds, LambdaMode};
use aeplab::rate_core::{d_ave_exact, d_min_exact, optimal_coupling, rate, rate_at_dmin, relative_entropy, Coupling};
use aeplab::{DistortionLevel, ExtendedReal, LogProb};
use num_rational::BigRational;
use rand::Rng;

/// Written to the process stdout directly so the line survives libtest's
/// output capture for passing tests.
fn report(check: &str, pass: bool, detail: impl AsRef<str>, elapsed: Duration) -> bool {
    let line = format!(
        "\n{} {check}: {} ({:.3} s)\n",
        if pass { "PASS" } else { "FAIL" },
        detail.as_ref(),
        elapsed.as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    let _ = out.flush();
    pass
}

fn level(s: &str) -> DistortionLevel {
    s.parse().unwrap()
}

fn periodic_instance() -> (ProcessModel, ProcessModel, DistortionMatrix, DistortionLevel) {
    (
        ProcessModel::markov(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
        ProcessModel::iid(FiniteDistribution::point_mass(2, 0).unwrap()),
        DistortionMatrix::abs_diff(2),
        level("1/2"),
    )
}

fn coin() -> ProcessModel {
    ProcessModel::iid(FiniteDistribution::uniform(2).unwrap())
}

#[test]
fn periodic_counterexample_pattern() {
    let start = Instant::now();
    let (src, cb, rho, d) = periodic_instance();
    let path = |first: usize| (0..200).map(|k| (first + k) % 2).collect::<Vec<_>>();
    let from_one = trajectory_for_path(&path(1), &src, &cb, &rho, &d, BallOptions::default()).unwrap();
    let from_zero = trajectory_for_path(&path(0), &src, &cb, &rho, &d, BallOptions::default()).unwrap();
    let mut bad = 0;
    for r in &from_one {
        let want = if r.n % 2 == 1 { ExtendedReal::PlusInfinity } else { ExtendedReal::Finite(0.0) };
        bad += usize::from(r.l_n != want);
    }
    bad += from_zero.iter().filter(|r| r.l_n != ExtendedReal::Finite(0.0)).count();
    // The same pattern from sampled paths, whichever state they start in.
    for seed in 0..4 {
        let recs = run_trajectory(&src, &cb, &rho, &d, 200, seed).unwrap();
        let starts_at_one = recs[0].l_n.is_infinite();
        for r in &recs {
            let infinite = starts_at_one && r.n % 2 == 1;
            let want = if infinite { ExtendedReal::PlusInfinity } else { ExtendedReal::Finite(0.0) };
            bad += usize::from(r.l_n != want);
        }
    }
    let elapsed = start.elapsed();
    let ok = report(
        "periodic counterexample: L_n = inf at odd n and 0 at even n from x1=1, 0 for all n from x1=0 (n <= 200, exact)",
        bad == 0 && elapsed < Duration::from_secs(1),
        format!("{bad} mismatches, runtime budget 1 s"),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn bernoulli_aep_convergence() {
    let start = Instant::now();
    let target = common::grid_sup(-30.0, 1e-5, |l| l * 0.1 - (0.5 + 0.5 * l.exp()).ln());
    let closed_form = common::bernoulli_target();
    let ham = DistortionMatrix::hamming(2);
    let d = level("0.1");
    let seeds: Vec<u64> = (0..10).collect();
    let runs = run_ensemble(&coin(), &coin(), &ham, &d, 2000, &seeds, BallOptions::default()).unwrap();
    let finals: Vec<f64> = runs.iter().map(|(_, r)| r[1999].l_n.to_f64()).collect();
    let close = finals.iter().filter(|v| (*v - target).abs() <= 0.01).count();
    let elapsed = start.elapsed();
    let ok = report(
        "Bernoulli(1/2)/uniform/Hamming, D=0.1: |L_2000 - R| <= 0.01 for >= 9 of 10 seeds",
        close >= 9 && (target - 0.3680642).abs() < 1e-6 && (target - closed_form).abs() < 1e-8 && elapsed < Duration::from_secs(60),
        format!("{close}/10 within tolerance, grid-oracle R = {target:.7}, L_2000 = {finals:.4?}"),
        elapsed,
    );
    assert!(ok);
}

/// A random coupling with first marginal `p`, supported where `q` is, and
/// expected distortion at most `d` (requires `d ≥ D_min`).
fn random_feasible_coupling(
    rng: &mut impl Rng,
    p: &FiniteDistribution,
    q: &FiniteDistribution,
    rho: &DistortionMatrix,
    d: f64,
) -> Coupling {
    let (rows, cols) = (p.len(), q.len());
    let support = q.support();
    let mut random = vec![vec![0.0; cols]; rows];
    let mut floor = vec![vec![0.0; cols]; rows];
    for x in 0..rows {
        let w: Vec<f64> = support.iter().map(|_| rng.gen_range(0.0..1.0f64).powi(3)).collect();
        let total: f64 = w.iter().sum::<f64>().max(1e-300);
        for (k, &y) in support.iter().enumerate() {
            random[x][y] = p.prob(x) * w[k] / total;
        }
        let best = rho_q_scaled(x, q, rho);
        let y = *support.iter().find(|&&y| rho.scaled(x, y) == best).unwrap();
        floor[x][y] = p.prob(x);
    }
    let dist = |w: &Vec<Vec<f64>>| -> f64 {
        (0..rows).flat_map(|x| (0..cols).map(move |y| (x, y))).map(|(x, y)| w[x][y] * rho.get(x, y)).sum()
    };
    let (dr, df) = (dist(&random), dist(&floor));
    let t = if dr <= d { 1.0 } else { ((d - df) / (dr - df)).clamp(0.0, 1.0) * (1.0 - 1e-9) };
    let joint = (0..rows)
        .map(|x| (0..cols).map(|y| t * random[x][y] + (1.0 - t) * floor[x][y]).collect())
        .collect();
    Coupling::new(joint).unwrap()
}

#[test]
fn duality_on_random_instances() {
    let start = Instant::now();
    let mut rng = common::rng(20240601);
    let mut worst_gap: f64 = 0.0;
    let mut worst_beat: f64 = f64::NEG_INFINITY;
    let mut regimes = [0usize; 4];
    let mut failures = 0;
    for i in 0..200 {
        let s = rng.gen_range(1..=5);
        let t = rng.gen_range(1..=5);
        let p = common::random_distribution(&mut rng, s, true);
        let q = common::random_distribution(&mut rng, t, true);
        let rho = common::random_rho(&mut rng, s, t);
        let dmin = d_min_exact(&p, &q, &rho);
        let dave = d_ave_exact(&p, &q, &rho);
        let d = match i % 4 {
            0 if dmin > BigRational::from_integer(0.into()) => &dmin / BigRational::from_integer(2.into()),
            1 => dmin.clone(),
            2 if dave > dmin => {
                let u = BigRational::new(rng.gen_range(1..100).into(), 100.into());
                &dmin + (&dave - &dmin) * u
            }
            _ => &dave + BigRational::new(rng.gen_range(0..5).into(), 4.into()),
        };
        let d = DistortionLevel::from_rational(d).unwrap();
        let eval = rate(&p, &q, &rho, &d).unwrap();
        regimes[eval.regime as usize] += 1;
        let ExtendedReal::Finite(r) = eval.rate else {
            if optimal_coupling(&p, &q, &rho, &d).is_ok() {
                failures += 1;
            }
            continue;
        };
        let w = optimal_coupling(&p, &q, &rho, &d).unwrap();
        let h = relative_entropy(&w, &p, &q).to_f64();
        worst_gap = worst_gap.max((h - r).abs());
        if (h - r).abs() > 1e-9 || w.expected_distortion(&rho) > d.value() + 1e-9 {
            failures += 1;
        }
        for _ in 0..20 {
            let v = random_feasible_coupling(&mut rng, &p, &q, &rho, d.value());
            let hv = relative_entropy(&v, &p, &q).to_f64();
            worst_beat = worst_beat.max(r - hv);
            if hv < r - 1e-9 {
                failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = report(
        "duality: H(W*||PxQ) = R within 1e-9, no feasible coupling beats R by > 1e-9 (200 instances)",
        failures == 0 && regimes.iter().all(|&c| c > 0) && elapsed < Duration::from_secs(30),
        format!(
            "{failures} failures, max |H - R| = {worst_gap:.2e}, max (R - H_random) = {worst_beat:.2e}, regimes [below, at D_min, interior, above D_ave] = {regimes:?}"
        ),
        elapsed,
    );
    assert!(ok);
}

struct BallCase {
    x: Vec<usize>,
    codebook: ProcessModel,
    rho: DistortionMatrix,
    d: DistortionLevel,
}

fn random_ball_cases(count: usize) -> Vec<BallCase> {
    let mut rng = common::rng(7);
    (0..count)
        .map(|i| {
            let s = rng.gen_range(1..=3);
            let t = rng.gen_range(1..=3);
            let n = rng.gen_range(1..=8);
            let codebook = common::random_codebook(&mut rng, i, t);
            let rho = common::random_rho(&mut rng, s, t);
            let x: Vec<usize> = (0..n).map(|_| rng.gen_range(0..s)).collect();
            // Half the levels land exactly on an attainable average.
            let d = if i % 2 == 0 {
                let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..t)).collect();
                let total: u64 = x.iter().zip(&y).map(|(&a, &b)| rho.scaled(a, b)).sum();
                DistortionLevel::from_ratio(total, n as u64 * rho.scale()).unwrap()
            } else {
                DistortionLevel::from_ratio(rng.gen_range(0..=400), 100).unwrap()
            };
            BallCase { x, codebook, rho, d }
        })
        .collect()
}

#[test]
fn dp_matches_enumeration() {
    let start = Instant::now();
    let cases = random_ball_cases(600);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut kinds = [0usize; 3];
    for (i, c) in cases.iter().enumerate() {
        kinds[i % 3] += 1;
        let q = BallQuery::new(&c.x, &c.codebook, &c.rho, &c.d).unwrap();
        let dp = exact_ball_log_prob(&q).unwrap().log_prob;
        let brute = enumerate_ball_log_prob(&q).unwrap().log_prob;
        match (dp, brute) {
            (LogProb::Finite(a), LogProb::Finite(b)) => {
                worst = worst.max((a - b).abs());
                mismatches += usize::from((a - b).abs() > 1e-12);
            }
            (a, b) => mismatches += usize::from(a != b),
        }
    }
    let elapsed = start.elapsed();
    let ok = report(
        "exact DP vs enumeration on 600 random ball queries (n <= 8, |S|,|T| <= 3, IID/Markov/HMM)",
        mismatches == 0 && elapsed < Duration::from_secs(60),
        format!("{mismatches} mismatches, max |diff| = {worst:.2e} (tol 1e-12), codebooks {kinds:?}"),
        elapsed,
    );
    assert!(ok);
}

/// Chernoff bound check on one record; returns the violation, if any.
fn chernoff_violation(
    l_n: ExtendedReal,
    word: ExtendedReal,
    at_or_below_floor: bool,
) -> Option<String> {
    match (l_n, word) {
        (ExtendedReal::Finite(l), ExtendedReal::Finite(w)) => {
            if w > l + 1e-9 {
                Some(format!("word rate {w} exceeds L_n {l}"))
            } else if at_or_below_floor && (w - l).abs() > 1e-9 {
                Some(format!("expected equality at D <= essinf, got {w} vs {l}"))
            } else {
                None
            }
        }
        (ExtendedReal::PlusInfinity, ExtendedReal::PlusInfinity) => None,
        (l, w) => Some(format!("finiteness differs: L_n = {l}, word rate = {w}")),
    }
}

fn floor_test(x: &[usize], codebook: &ProcessModel, rho: &DistortionMatrix, d: &DistortionLevel) -> bool {
    let q = codebook.marginal();
    let total: u64 = x.iter().map(|&s| rho_q_scaled(s, &q, rho)).sum();
    // D ≤ (1/n) Σ ρ_Q(x_k)
    d.compare_average(total, x.len(), rho.scale()).is_ge()
}

#[test]
fn chernoff_bound_on_all_instances() {
    let start = Instant::now();
    let mut checked = 0;
    let mut equalities = 0;
    let mut violations = Vec::new();
    for c in random_ball_cases(600) {
        let q = BallQuery::new(&c.x, &c.codebook, &c.rho, &c.d).unwrap();
        let l_n = exact_ball_log_prob(&q).unwrap().l_n;
        let w = word_rate(&c.x, &c.codebook, &c.rho, &c.d).unwrap();
        let eq = floor_test(&c.x, &c.codebook, &c.rho, &c.d);
        equalities += usize::from(eq);
        checked += 1;
        if let Some(v) = chernoff_violation(l_n, w, eq) {
            violations.push(v);
        }
    }
    let ham = DistortionMatrix::hamming(2);
    let d = level("0.1");
    let seeds: Vec<u64> = (0..10).collect();
    for (_, recs) in run_ensemble(&coin(), &coin(), &ham, &d, 2000, &seeds, BallOptions::default()).unwrap() {
        for r in recs {
            checked += 1;
            if let Some(v) = chernoff_violation(r.l_n, r.word_rate, false) {
                violations.push(format!("n = {}: {v}", r.n));
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = report(
        "Chernoff: word rate <= L_n, same finiteness, equality within 1e-9 when D <= essinf",
        violations.is_empty(),
        format!(
            "{checked} records checked ({equalities} at or below the essential infimum), {} violations{}",
            violations.len(),
            violations.first().map(|v| format!(", first: {v}")).unwrap_or_default()
        ),
        elapsed,
    );
    assert!(ok);
}

#[test]
fn memory_sandwich() {
    let start = Instant::now();
    let src = ProcessModel::markov(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let cb = ProcessModel::markov(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
    let ham = DistortionMatrix::hamming(2);
    let d = level("0.25");
    let c = mixing_constant(&cb).unwrap();
    let log_c = c.ln();
    let mut lines = Vec::new();
    let mut width_ok = true;
    let mut bounds = Vec::new();
    for n in [4usize, 8, 16] {
        let b = r_inf_bounds(&src, &cb, &ham, &d, n, LambdaMode::Exact).unwrap();
        let want = 2.0 * log_c / n as f64;
        width_ok &= (b.width.to_f64() - want).abs() <= 1e-9;
        lines.push(format!("n={n}: [{:.9}, {:.9}] width {:.3e}", b.lower.to_f64(), b.upper.to_f64(), b.width.to_f64()));
        bounds.push(b);
    }
    let nested = bounds.windows(2).all(|w| {
        w[1].lower.to_f64() >= w[0].lower.to_f64() - 1e-9 && w[1].upper.to_f64() <= w[0].upper.to_f64() + 1e-9
    });
    let mut split_worst: f64 = f64::NEG_INFINITY;
    for lambda in [-4.0, -1.0, -0.25, 0.5] {
        let big = |k: usize| lambda_n(&src, &cb, &ham, k, k as f64 * lambda, LambdaMode::Exact).unwrap().value;
        for n in 1..=5usize {
            for m in 1..=(6 - n) {
                let excess = (big(n + m) - big(n) - big(m)).abs() - log_c;
                split_worst = split_worst.max(excess);
            }
        }
    }
    let elapsed = start.elapsed();
    let ok1 = report(
        "memory sandwich widths = 2 log(1.25)/n within 1e-9 for n in {4, 8, 16}",
        width_ok && (c - 1.25).abs() < 1e-12,
        format!("C = {c}, {}", lines.join("; ")),
        elapsed,
    );
    let ok2 = report("memory sandwich intervals nested", nested, "n = 4 ⊇ 8 ⊇ 16 at slack 1e-9", elapsed);
    let ok3 = report(
        "block splits: |L_{n+m} - L_n - L_m| <= log C + 1e-9 for n + m <= 6, four slopes",
        split_worst <= 1e-9 && elapsed < Duration::from_secs(60),
        format!("max excess over log C = {split_worst:.3e}"),
        elapsed,
    );
    assert!(ok1 && ok2 && ok3);
}

/// The 100-seed ensemble, computed once and shared by the checks below.
fn coin_pathology_runs() -> &'static (Vec<(u64, Vec<TrajectoryRecord>)>, Duration) {
    static RUNS: OnceLock<(Vec<(u64, Vec<TrajectoryRecord>)>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let start = Instant::now();
        let q = ProcessModel::iid(FiniteDistribution::point_mass(2, 0).unwrap());
        let rho = DistortionMatrix::abs_diff(2);
        let seeds: Vec<u64> = (0..100).collect();
        let runs = run_ensemble(&coin(), &q, &rho, &level("1/2"), 10_000, &seeds, BallOptions::default()).unwrap();
        (runs, start.elapsed())
    })
}

#[test]
fn pathology_ensemble_infinite_and_limit() {
    let (runs, elapsed) = coin_pathology_runs();
    let runs = runs.as_slice();
    let elapsed = *elapsed;
    let q = FiniteDistribution::point_mass(2, 0).unwrap();
    let r = rate_at_dmin(&FiniteDistribution::uniform(2).unwrap(), &q, &DistortionMatrix::abs_diff(2)).to_f64();
    let with_inf = runs.iter().filter(|(_, recs)| recs.iter().any(|r| r.l_n.is_infinite())).count();
    let mut worst_gap: f64 = 0.0;
    let mut all_consistent = true;
    for (_, recs) in runs {
        match finite_subsequence(recs) {
            Ok(nm) => {
                let last = *nm.last().expect("the walk returns to zero");
                worst_gap = worst_gap.max((recs[last - 1].l_n.to_f64() - r).abs());
            }
            Err(_) => all_consistent = false,
        }
    }
    let recurrent = runs.iter().filter(|(_, recs)| walk_statistics(recs).nonpositive > 0).count();
    let ok1 = report(
        "coin/point-mass pathology: >= 95 of 100 seeds have some L_n = inf (n <= 10^4)",
        with_inf >= 95 && elapsed < Duration::from_secs(120),
        format!("{with_inf}/100 seeds"),
        elapsed,
    );
    let ok2 = report(
        "coin/point-mass pathology: L at the last N_m within 0.05 of R(D_min) = 0",
        all_consistent && worst_gap <= 0.05 && recurrent == runs.len(),
        format!("max gap {worst_gap:.3e}, finite <=> running-mean test on every record: {all_consistent}"),
        elapsed,
    );
    assert!(ok1 && ok2);
}

/// Every window of 50 consecutive times must contain a finite `L_n`. For the
/// fair-coin walk this asks that no excursion of `Σ x_k − n/2` above zero
/// lasts 50 steps in 10^4 steps, which almost every seed violates; the
/// check is kept as stated and reported.
#[test]
fn pathology_ensemble_finite_in_every_window() {
    let (runs, elapsed) = coin_pathology_runs();
    let runs = runs.as_slice();
    let elapsed = *elapsed;
    let passing = runs.iter().filter(|(_, recs)| finite_in_every_window(recs, 50)).count();
    let longest = runs
        .iter()
        .map(|(_, recs)| walk_statistics(recs).longest_excursion)
        .collect::<Vec<_>>();
    let median = {
        let mut v = longest.clone();
        v.sort_unstable();
        v[v.len() / 2]
    };
    let ok = report(
        "coin/point-mass pathology: every seed has a finite L_n in every window of 50",
        passing == runs.len(),
        format!("{passing}/100 seeds satisfy it; median longest run of infinite L_n = {median}"),
        elapsed,
    );
    assert!(ok, "{passing}/100 seeds have a finite L_n in every window; excursions of the walk outlast the window");
}

#[test]
fn block_codebook_cylinder_bound() {
    let start = Instant::now();
    let cb = ProcessModel::markov(vec![vec![0.6, 0.4], vec![0.4, 0.6]]).unwrap();
    let c = mixing_constant(&cb).unwrap();
    let m = 2;
    let hat = block_codebook(&cb, m).unwrap();
    let (full, blocks) = (cb.trellis(), hat.trellis());
    let mut events = 0usize;
    let mut violations = 0usize;
    for n in 1..=4usize {
        let ell = n.div_ceil(m) - 1;
        let bound = c.powi(ell as i32);
        let words = common::all_words(2, n);
        let q: Vec<f64> = words.iter().map(|w| full.word_probability(w)).collect();
        let qh: Vec<f64> = words.iter().map(|w| blocks.word_probability(w)).collect();
        for mask in 0u64..(1u64 << words.len()) {
            let (mut a, mut b) = (0.0, 0.0);
            for k in 0..words.len() {
                if mask >> k & 1 == 1 {
                    a += q[k];
                    b += qh[k];
                }
            }
            events += 1;
            if a < b / bound - 1e-12 || a > b * bound + 1e-12 {
                violations += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = report(
        "block codebook m=2: C^-l Qhat_n(A) <= Q_n(A) <= C^l Qhat_n(A) for every event, n <= 4",
        violations == 0 && elapsed < Duration::from_secs(10),
        format!("{violations} violations over {events} events"),
        elapsed,
    );
    assert!(ok);
}
