//! Python bindings (`stable_deconv`).

use pyo3::create_exception;
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;

use stable_deconv_core as core;
use stable_deconv_core::asymptotics;
use stable_deconv_core::estimator::{estimate_grid_cf, scaled_vh, DEFAULT_CF_NODES};
use stable_deconv_core::harness::{run_clt_experiment, ExperimentSpec};
use stable_deconv_core::rng::{stream, Purpose};
use stable_deconv_core::verify::{run_checks, Mutation, Profile};

create_exception!(stable_deconv, UnsupportedRegimeError, PyValueError);

fn to_py(e: core::Error) -> PyErr {
    match e {
        core::Error::NumericalFailure(_) => PyArithmeticError::new_err(e.to_string()),
        core::Error::UnsupportedRegime { .. } => UnsupportedRegimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// Symmetric stable noise with characteristic function exp(-|t|^λ/μ).
#[pyclass(frozen, from_py_object)]
#[derive(Clone, Copy)]
struct StableParams(core::StableParams);

#[pymethods]
impl StableParams {
    #[new]
    fn new(lambda_: f64, mu: f64) -> PyResult<Self> {
        core::StableParams::new(lambda_, mu).map(Self).map_err(to_py)
    }

    #[getter]
    fn lambda_(&self) -> f64 {
        self.0.lambda()
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu()
    }

    #[getter]
    fn regime(&self) -> &'static str {
        self.0.regime().name()
    }

    fn cf(&self, t: f64) -> f64 {
        core::stable_cf(&self.0, t)
    }

    fn density(&self, z: f64) -> PyResult<f64> {
        core::stable_density(&self.0, z).map_err(to_py)
    }

    /// `n` variates from the stream keyed by `seed`.
    #[pyo3(signature = (n, seed=0))]
    fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut out = vec![0.0; n];
        core::stable::stable_sample_into(&self.0, &mut stream(seed, 0, Purpose::Sample), &mut out);
        out
    }

    fn __repr__(&self) -> String {
        format!("StableParams(lambda_={}, mu={})", self.0.lambda(), self.0.mu())
    }
}

/// Target density of Y.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Target(core::TargetDensity);

#[pymethods]
impl Target {
    #[staticmethod]
    #[pyo3(signature = (mean=0.0, sd=1.0))]
    fn normal(mean: f64, sd: f64) -> PyResult<Self> {
        core::TargetDensity::normal(mean, sd).map(Self).map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (location=0.0, scale=1.0))]
    fn laplace(location: f64, scale: f64) -> PyResult<Self> {
        core::TargetDensity::laplace(location, scale).map(Self).map_err(to_py)
    }

    fn density(&self, y: f64) -> f64 {
        self.0.density(y)
    }
}

/// Deconvolution estimator with bandwidth `h`. Values come back as
/// `(mantissa, log_scale)`, meaning `mantissa * exp(log_scale)`.
#[pyclass(frozen)]
struct Estimator(core::Estimator);

#[pymethods]
impl Estimator {
    #[new]
    fn new(h: f64, noise: StableParams) -> PyResult<Self> {
        core::EstimatorConfig::new(h, noise.0).map(|c| Self(core::Estimator::new(c))).map_err(to_py)
    }

    #[getter]
    fn h(&self) -> f64 {
        self.0.config().h
    }

    #[getter]
    fn log_scale(&self) -> f64 {
        self.0.config().log_scale()
    }

    fn kernel(&self, u: f64) -> PyResult<f64> {
        scaled_vh(u, self.0.config()).map_err(to_py)
    }

    fn estimate_at(&self, data: Vec<f64>, x: f64) -> PyResult<(f64, f64)> {
        let v = self.0.estimate_at(&data, x).map_err(to_py)?;
        Ok((v.mantissa, v.log_scale))
    }

    fn estimate_grid(&self, py: Python<'_>, data: Vec<f64>, grid: Vec<f64>) -> PyResult<Vec<(f64, f64)>> {
        let values = py.detach(|| self.0.estimate_grid(&data, &grid)).map_err(to_py)?;
        Ok(values.iter().map(|v| (v.mantissa, v.log_scale)).collect())
    }

    #[pyo3(signature = (data, grid, nodes=DEFAULT_CF_NODES))]
    fn estimate_grid_cf(&self, data: Vec<f64>, grid: Vec<f64>, nodes: usize) -> PyResult<Vec<(f64, f64)>> {
        let values = estimate_grid_cf(&data, &grid, self.0.config(), nodes).map_err(to_py)?;
        Ok(values.iter().map(|v| (v.mantissa, v.log_scale)).collect())
    }
}

#[pyfunction]
fn w1(u: f64, noise: StableParams) -> f64 {
    asymptotics::w1(u, &noise.0)
}

#[pyfunction]
fn w2(u: f64, noise: StableParams) -> f64 {
    asymptotics::w2(u, &noise.0)
}

#[pyfunction]
fn scaled_c(h: f64, noise: StableParams) -> PyResult<f64> {
    asymptotics::scaled_c(h, &noise.0).map_err(to_py)
}

/// Limiting variance of the normalized estimator at `x`.
#[pyfunction]
fn sigma2(noise: StableParams, target: Target, x: f64) -> PyResult<f64> {
    asymptotics::sigma2(&noise.0, &target.0, x).map(|s| s.value).map_err(to_py)
}

#[pyfunction]
fn log_normalization(n: usize, h: f64, noise: StableParams) -> PyResult<f64> {
    asymptotics::log_normalization(n, h, &noise.0).map_err(to_py)
}

/// Runs a limit-law experiment from a JSON spec; returns the report as JSON.
#[pyfunction]
fn simulate(py: Python<'_>, spec_json: &str) -> PyResult<String> {
    let spec = ExperimentSpec::from_json(spec_json).map_err(to_py)?;
    py.detach(|| run_clt_experiment(&spec).and_then(|r| r.to_json())).map_err(to_py)
}

/// Invariant suite rows as `(name, value, bound, passed)`.
#[pyfunction]
#[pyo3(signature = (profile="default"))]
fn verify(profile: &str) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let rows = run_checks(Profile::parse(profile).map_err(to_py)?, Mutation::None).map_err(to_py)?;
    Ok(rows
        .into_iter()
        .map(|r| {
            let ok = r.passed();
            (r.name, r.value, r.bound, ok)
        })
        .collect())
}

#[pymodule]
pub fn stable_deconv(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<StableParams>()?;
    m.add_class::<Target>()?;
    m.add_class::<Estimator>()?;
    m.add_function(wrap_pyfunction!(w1, m)?)?;
    m.add_function(wrap_pyfunction!(w2, m)?)?;
    m.add_function(wrap_pyfunction!(scaled_c, m)?)?;
    m.add_function(wrap_pyfunction!(sigma2, m)?)?;
    m.add_function(wrap_pyfunction!(log_normalization, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add("UnsupportedRegimeError", m.py().get_type::<UnsupportedRegimeError>())?;
    Ok(())
}
