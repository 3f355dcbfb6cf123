//! Python bindings for `aeplab`.
//!
//! Infinite rates and exponents come back as `float('inf')`; a `None`
//! slope means the rate has no optimizing `λ` (infinite rate or `D = D_min`).
//! Distortion levels may be given as floats or as exact strings like `"1/2"`.

use aeplab::aep_harness::{self, TrajectoryRecord};
use aeplab::ball_prob::{self, BallOptions, BallQuery};
use aeplab::measures::{self, DistortionMatrix, FiniteDistribution, ProcessModel};
use aeplab::modelfile::ModelFile;
use aeplab::process_rate::{self, LambdaMode};
use aeplab::rate_core;
use aeplab::{DistortionLevel, Error};
use pyo3::exceptions::{PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyString};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Resource { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Consistency(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn level(d: &Bound<'_, PyAny>) -> PyResult<DistortionLevel> {
    if let Ok(s) = d.cast::<PyString>() {
        return s.to_str()?.parse().map_err(to_py);
    }
    DistortionLevel::from_f64(d.extract::<f64>()?).map_err(to_py)
}

fn mode(name: &str, trials: usize, seed: u64) -> PyResult<LambdaMode> {
    match name {
        "exact" => Ok(LambdaMode::Exact),
        "mc" => Ok(LambdaMode::MonteCarlo { trials, seed }),
        other => Err(PyValueError::new_err(format!("mode: expected \"exact\" or \"mc\", got {other:?}"))),
    }
}

/// A finite-alphabet stationary process: IID, Markov or hidden Markov.
#[pyclass(name = "Process", module = "aeplab_py", frozen)]
pub struct PyProcess {
    inner: ProcessModel,
}

#[pymethods]
impl PyProcess {
    #[staticmethod]
    fn iid(probs: Vec<f64>) -> PyResult<Self> {
        let d = FiniteDistribution::new(probs).map_err(to_py)?;
        Ok(PyProcess {
            inner: ProcessModel::iid(d),
        })
    }

    #[staticmethod]
    fn markov(transition: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyProcess {
            inner: ProcessModel::markov(transition).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn hmm(transition: Vec<Vec<f64>>, emission: Vec<Vec<f64>>) -> PyResult<Self> {
        Ok(PyProcess {
            inner: ProcessModel::hmm(transition, emission).map_err(to_py)?,
        })
    }

    /// Load a JSON model file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyProcess {
            inner: aeplab::modelfile::load_process(path).map_err(to_py)?,
        })
    }

    #[getter]
    fn alphabet_size(&self) -> usize {
        self.inner.alphabet_size()
    }

    fn marginal(&self) -> Vec<f64> {
        self.inner.marginal().probs().to_vec()
    }

    fn mixing_constant(&self) -> PyResult<f64> {
        measures::mixing_constant(&self.inner).map_err(to_py)
    }

    /// The block codebook that restarts from the stationary law every `m` symbols.
    fn block(&self, m: usize) -> PyResult<Self> {
        Ok(PyProcess {
            inner: process_rate::block_codebook(&self.inner, m).map_err(to_py)?,
        })
    }

    fn sample(&self, n: usize, seed: u64) -> PyResult<Vec<usize>> {
        measures::sample_path(&self.inner, n, seed).map_err(to_py)
    }

    fn to_json(&self) -> String {
        ModelFile::describe(&self.inner, None).to_json()
    }

    fn __repr__(&self) -> String {
        let kind = match self.inner {
            ProcessModel::Iid(_) => "iid",
            ProcessModel::Markov(_) => "markov",
            ProcessModel::Hmm(_) => "hmm",
        };
        format!("Process({kind}, alphabet_size={})", self.inner.alphabet_size())
    }
}

/// A nonnegative rational distortion matrix `ρ(x, y)`.
#[pyclass(name = "Distortion", module = "aeplab_py", frozen)]
pub struct PyDistortion {
    inner: DistortionMatrix,
}

#[pymethods]
impl PyDistortion {
    /// Entries as floats or exact strings.
    #[new]
    fn new(rows: Vec<Vec<Bound<'_, PyAny>>>) -> PyResult<Self> {
        let text = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v.cast::<PyString>() {
                        Ok(s) => Ok(s.to_str()?.to_string()),
                        Err(_) => Ok(format!("{}", v.extract::<f64>()?)),
                    })
                    .collect::<PyResult<Vec<String>>>()
            })
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyDistortion {
            inner: DistortionMatrix::from_strings(&text).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn hamming(size: usize) -> Self {
        PyDistortion {
            inner: DistortionMatrix::hamming(size),
        }
    }

    #[staticmethod]
    fn abs_diff(size: usize) -> Self {
        PyDistortion {
            inner: DistortionMatrix::abs_diff(size),
        }
    }

    /// Load the `rho` field of a JSON model file.
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyDistortion {
            inner: aeplab::modelfile::load_distortion(path).map_err(to_py)?,
        })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.rows(), self.inner.cols())
    }

    fn to_rows(&self) -> Vec<Vec<String>> {
        self.inner.to_strings()
    }
}

/// `R(P, Q, D)` on single-letter marginals: `(rate, lambda_star, regime)`.
#[pyfunction]
fn rate(p: Vec<f64>, q: Vec<f64>, rho: &PyDistortion, d: &Bound<'_, PyAny>) -> PyResult<(f64, Option<f64>, String)> {
    let p = FiniteDistribution::new(p).map_err(to_py)?;
    let q = FiniteDistribution::new(q).map_err(to_py)?;
    let e = rate_core::rate(&p, &q, &rho.inner, &level(d)?).map_err(to_py)?;
    Ok((e.rate.to_f64(), e.lambda_star, e.regime.to_string()))
}

/// `Λ(λ) = E_P log E_Q e^{λ ρ(X, Y)}`.
#[pyfunction]
fn lambda_fn(p: Vec<f64>, q: Vec<f64>, rho: &PyDistortion, lam: f64) -> PyResult<f64> {
    let p = FiniteDistribution::new(p).map_err(to_py)?;
    let q = FiniteDistribution::new(q).map_err(to_py)?;
    Ok(rate_core::lambda_fn(&p, &q, &rho.inner, lam).to_f64())
}

/// `(D_min, D_ave)`.
#[pyfunction]
fn distortion_range(p: Vec<f64>, q: Vec<f64>, rho: &PyDistortion) -> PyResult<(f64, f64)> {
    let p = FiniteDistribution::new(p).map_err(to_py)?;
    let q = FiniteDistribution::new(q).map_err(to_py)?;
    Ok((rate_core::d_min(&p, &q, &rho.inner), rate_core::d_ave(&p, &q, &rho.inner)))
}

/// `(log Q_n(B_n), L_n)` for the ball of radius `D` around `x`.
#[pyfunction]
#[pyo3(signature = (x, codebook, rho, d, state_cap = ball_prob::DEFAULT_STATE_CAP))]
fn ball_log_prob(
    x: Vec<usize>,
    codebook: &PyProcess,
    rho: &PyDistortion,
    d: &Bound<'_, PyAny>,
    state_cap: u64,
) -> PyResult<(f64, f64)> {
    let d = level(d)?;
    let q = BallQuery::new(&x, &codebook.inner, &rho.inner, &d).map_err(to_py)?;
    let r = ball_prob::exact_ball_log_prob_with(&q, BallOptions { state_cap }).map_err(to_py)?;
    Ok((r.log_prob.to_f64(), r.l_n.to_f64()))
}

/// The exact ball probability as a `"p/q"` string.
#[pyfunction]
fn ball_probability_exact(x: Vec<usize>, codebook: &PyProcess, rho: &PyDistortion, d: &Bound<'_, PyAny>) -> PyResult<String> {
    let d = level(d)?;
    let q = BallQuery::new(&x, &codebook.inner, &rho.inner, &d).map_err(to_py)?;
    Ok(ball_prob::ball_probability_rational(&q).map_err(to_py)?.to_string())
}

/// `R_n(δ_x, Q_n, D)`.
#[pyfunction]
fn word_rate(x: Vec<usize>, codebook: &PyProcess, rho: &PyDistortion, d: &Bound<'_, PyAny>) -> PyResult<f64> {
    let d = level(d)?;
    Ok(ball_prob::word_rate(&x, &codebook.inner, &rho.inner, &d).map_err(to_py)?.to_f64())
}

/// `(1/n) Λ_n(n λ)` with its standard error in Monte Carlo mode.
#[pyfunction]
#[pyo3(signature = (source, codebook, rho, n, lam, mode = "exact", trials = 10_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn lambda_n(
    source: &PyProcess,
    codebook: &PyProcess,
    rho: &PyDistortion,
    n: usize,
    lam: f64,
    mode: &str,
    trials: usize,
    seed: u64,
) -> PyResult<(f64, Option<f64>)> {
    let m = self::mode(mode, trials, seed)?;
    let e = process_rate::lambda_n(&source.inner, &codebook.inner, &rho.inner, n, lam, m).map_err(to_py)?;
    Ok((e.value, e.std_error))
}

/// `(1/n) R_n(P_n, Q_n, D)`.
#[pyfunction]
#[pyo3(signature = (source, codebook, rho, n, d, mode = "exact", trials = 10_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn r_n(
    source: &PyProcess,
    codebook: &PyProcess,
    rho: &PyDistortion,
    n: usize,
    d: &Bound<'_, PyAny>,
    mode: &str,
    trials: usize,
    seed: u64,
) -> PyResult<f64> {
    let m = self::mode(mode, trials, seed)?;
    let v = process_rate::r_n(&source.inner, &codebook.inner, &rho.inner, n, &level(d)?, m).map_err(to_py)?;
    Ok(v.to_f64())
}

/// Certified `(lower, upper)` bounds on the process rate from block length `n`.
#[pyfunction]
#[pyo3(signature = (source, codebook, rho, d, n, mode = "exact", trials = 10_000, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn r_inf_bounds(
    source: &PyProcess,
    codebook: &PyProcess,
    rho: &PyDistortion,
    d: &Bound<'_, PyAny>,
    n: usize,
    mode: &str,
    trials: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let m = self::mode(mode, trials, seed)?;
    let b = process_rate::r_inf_bounds(&source.inner, &codebook.inner, &rho.inner, &level(d)?, n, m).map_err(to_py)?;
    Ok((b.lower.to_f64(), b.upper.to_f64()))
}

fn record_dict<'py>(py: Python<'py>, r: &TrajectoryRecord) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("l_n", r.l_n.to_f64())?;
    d.set_item("word_rate", r.word_rate.to_f64())?;
    d.set_item("cum_rho_q_mean", r.cum_rho_q_mean)?;
    d.set_item("in_nm", r.in_nm)?;
    d.set_item("walk_value", r.walk_value)?;
    Ok(d)
}

/// `L_n` for `n = 1..=n_max` along one sampled source path, as dicts.
#[pyfunction]
fn trajectory<'py>(
    py: Python<'py>,
    source: &PyProcess,
    codebook: &PyProcess,
    rho: &PyDistortion,
    d: &Bound<'py, PyAny>,
    n_max: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let d = level(d)?;
    let records = py
        .detach(|| aep_harness::run_trajectory(&source.inner, &codebook.inner, &rho.inner, &d, n_max, seed))
        .map_err(to_py)?;
    records.iter().map(|r| record_dict(py, r)).collect()
}

/// The pathology verdict as a dict of flags.
#[pyfunction]
fn classify_pathology<'py>(
    py: Python<'py>,
    source: &PyProcess,
    codebook: &PyProcess,
    rho: &PyDistortion,
    d: &Bound<'py, PyAny>,
) -> PyResult<Bound<'py, PyDict>> {
    let v = aep_harness::classify_pathology(&source.inner, &codebook.inner, &rho.inner, &level(d)?).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("pathological", v.pathological)?;
    out.set_item("d_equals_dmin", v.d_equals_dmin)?;
    out.set_item("d_positive", v.d_positive)?;
    out.set_item("dmin_finite", v.dmin_finite)?;
    out.set_item("rate_finite", v.rate_finite)?;
    out.set_item("rho_q_constant", v.rho_q_constant)?;
    Ok(out)
}

/// Register the classes and functions on `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProcess>()?;
    m.add_class::<PyDistortion>()?;
    m.add_function(wrap_pyfunction!(rate, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_fn, m)?)?;
    m.add_function(wrap_pyfunction!(distortion_range, m)?)?;
    m.add_function(wrap_pyfunction!(ball_log_prob, m)?)?;
    m.add_function(wrap_pyfunction!(ball_probability_exact, m)?)?;
    m.add_function(wrap_pyfunction!(word_rate, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_n, m)?)?;
    m.add_function(wrap_pyfunction!(r_n, m)?)?;
    m.add_function(wrap_pyfunction!(r_inf_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(trajectory, m)?)?;
    m.add_function(wrap_pyfunction!(classify_pathology, m)?)?;
    Ok(())
}

#[pymodule]
fn aeplab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}
