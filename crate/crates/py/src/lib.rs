//! Python bindings for the twin-beam holometer model.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use twinbeam::estimation::{self, AsymptoticBranch, EstimatorKind, EstimatorSpec};
use twinbeam::fock;
use twinbeam::gaussian::centered_photon_moments;
use twinbeam::holometer::propagate_central;
use twinbeam::observables;
use twinbeam::phase_noise::{self, PhaseNoiseModel};
use twinbeam::sweep::{self, SweepSpec, UncertaintyPreset};
use twinbeam::{InputKind, ReadoutMoments};

fn err(e: twinbeam::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

pub fn parse_input_kind(s: &str) -> Result<InputKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "coherent_only" => Ok(InputKind::CoherentOnly),
        "twb" => Ok(InputKind::Twb),
        "two_squeezed" => Ok(InputKind::TwoSqueezed),
        _ => Err(format!("unknown input kind '{s}' (coherent_only, twb, two_squeezed)")),
    }
}

pub fn input_kind_name(k: InputKind) -> &'static str {
    match k {
        InputKind::CoherentOnly => "coherent_only",
        InputKind::Twb => "twb",
        InputKind::TwoSqueezed => "two_squeezed",
    }
}

pub fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    [
        EstimatorKind::TwbDifferenceSquared,
        EstimatorKind::TwbSumSquared,
        EstimatorKind::QuadratureProduct,
        EstimatorKind::PlainDifference,
    ]
    .into_iter()
    .find(|k| k.name() == s)
    .ok_or_else(|| format!("unknown estimator '{s}'"))
}

pub fn parse_branch(s: &str) -> Result<AsymptoticBranch, String> {
    AsymptoticBranch::ALL
        .into_iter()
        .find(|b| b.name() == s)
        .ok_or_else(|| format!("unknown asymptotic branch '{s}'"))
}

fn value_err(s: String) -> PyErr {
    PyValueError::new_err(s)
}

/// Physical parameters of the double interferometer.
#[pyclass(name = "HolometerConfig", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: twinbeam::HolometerConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (mu=1e6, lambda_=10.0, eta=1.0, phi0=None, psi=std::f64::consts::FRAC_PI_2, input_kind="twb", phi0_1=None, phi0_2=None, eta_2=None, theta=0.0, theta_xi=None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        mu: f64,
        lambda_: f64,
        eta: f64,
        phi0: Option<f64>,
        psi: f64,
        input_kind: &str,
        phi0_1: Option<f64>,
        phi0_2: Option<f64>,
        eta_2: Option<f64>,
        theta: f64,
        theta_xi: Option<f64>,
    ) -> PyResult<Self> {
        let default = twinbeam::HolometerConfig::default();
        let phi = phi0.unwrap_or(default.phi0_1);
        let inner = twinbeam::HolometerConfig {
            mu,
            lambda: lambda_,
            eta,
            eta_2,
            psi,
            phi0_1: phi0_1.unwrap_or(phi),
            phi0_2: phi0_2.unwrap_or(phi),
            input_kind: parse_input_kind(input_kind).map_err(value_err)?,
            theta,
            theta_xi,
        };
        inner.validate().map_err(err)?;
        Ok(PyConfig { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: twinbeam::HolometerConfig =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        inner.validate().map_err(err)?;
        Ok(PyConfig { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("config serializes")
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.inner.mu
    }
    #[setter]
    fn set_mu(&mut self, v: f64) {
        self.inner.mu = v;
    }
    #[getter(lambda_)]
    fn lambda(&self) -> f64 {
        self.inner.lambda
    }
    #[setter(lambda_)]
    fn set_lambda(&mut self, v: f64) {
        self.inner.lambda = v;
    }
    #[getter]
    fn eta(&self) -> f64 {
        self.inner.eta
    }
    #[setter]
    fn set_eta(&mut self, v: f64) {
        self.inner.eta = v;
    }
    #[getter]
    fn psi(&self) -> f64 {
        self.inner.psi
    }
    #[setter]
    fn set_psi(&mut self, v: f64) {
        self.inner.psi = v;
    }
    #[getter]
    fn phi0_1(&self) -> f64 {
        self.inner.phi0_1
    }
    #[getter]
    fn phi0_2(&self) -> f64 {
        self.inner.phi0_2
    }
    /// Sets both central phases.
    #[setter]
    fn set_phi0(&mut self, v: f64) {
        self.inner.phi0_1 = v;
        self.inner.phi0_2 = v;
    }
    #[getter]
    fn input_kind(&self) -> &'static str {
        input_kind_name(self.inner.input_kind)
    }
    #[setter]
    fn set_input_kind(&mut self, v: &str) -> PyResult<()> {
        self.inner.input_kind = parse_input_kind(v).map_err(value_err)?;
        Ok(())
    }

    fn tau(&self) -> (f64, f64) {
        (self.inner.tau_1(), self.inner.tau_2())
    }

    fn regime_k(&self) -> f64 {
        self.inner.regime_k()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("HolometerConfig({})", self.to_json())
    }
}

fn moments_dict<'py>(py: Python<'py>, m: &ReadoutMoments) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean_1", m.mean_1)?;
    d.set_item("mean_2", m.mean_2)?;
    d.set_item("var_1", m.var_1)?;
    d.set_item("var_2", m.var_2)?;
    d.set_item("cov", m.cov)?;
    let centered: BTreeMap<(usize, usize), f64> = m.centered.iter().map(|(k, v)| (*k, *v)).collect();
    d.set_item("centered", centered)?;
    Ok(d)
}

/// Joint photon-number moments of the two readouts from the Gaussian engine.
#[pyfunction]
#[pyo3(signature = (config, max_order=2))]
fn photon_moments<'py>(py: Python<'py>, config: &PyConfig, max_order: usize) -> PyResult<Bound<'py, PyDict>> {
    let p = propagate_central(&config.inner).map_err(err)?;
    let m = centered_photon_moments(&p.state, (0, 1), max_order).map_err(err)?;
    moments_dict(py, &m)
}

/// The same moments from the truncated Fock-basis simulation.
#[pyfunction]
#[pyo3(signature = (config, max_order=4))]
fn oracle_moments<'py>(py: Python<'py>, config: &PyConfig, max_order: usize) -> PyResult<Bound<'py, PyDict>> {
    let m = fock::oracle_moments(&config.inner, max_order).map_err(err)?;
    moments_dict(py, &m)
}

/// Engine against oracle: `(max relative deviation, pass)`.
#[pyfunction]
fn oracle_check(config: &PyConfig) -> PyResult<(f64, bool)> {
    let c = sweep::oracle_check(&config.inner);
    match c.error {
        Some(e) => Err(PyValueError::new_err(e)),
        None => Ok((c.max_rel_dev, c.pass)),
    }
}

/// `(NRF₋, NRF₊, k)` at the configured phases.
#[pyfunction]
fn nrf(config: &PyConfig) -> PyResult<(f64, f64, f64)> {
    let r = observables::nrf(&config.inner).map_err(err)?;
    Ok((r.nrf_minus, r.nrf_plus, r.regime_k))
}

#[pyfunction]
fn nrf_coherent_limit(eta: f64, tau: f64, lambda_: f64) -> f64 {
    observables::nrf_coherent_limit(eta, tau, lambda_)
}

/// Zero-order uncertainty of an estimator, with the classical benchmark.
#[pyfunction]
#[pyo3(signature = (config, estimator="TwbDifferenceSquared", allow_phase_override=false))]
fn u0<'py>(py: Python<'py>, config: &PyConfig, estimator: &str, allow_phase_override: bool) -> PyResult<Bound<'py, PyDict>> {
    let mut spec = EstimatorSpec::new(parse_estimator(estimator).map_err(value_err)?);
    if allow_phase_override {
        spec = spec.with_phase_override();
    }
    let r = estimation::u0(&config.inner, &spec).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("u0", r.u0)?;
    d.set_item("u_cl", r.u_cl)?;
    d.set_item("ratio", r.ratio)?;
    d.set_item("numerator_var", r.numerator_var)?;
    d.set_item("denominator", r.denominator)?;
    d.set_item("regime_k", r.regime_k)?;
    Ok(d)
}

#[pyfunction]
fn classical_benchmark(config: &PyConfig) -> PyResult<f64> {
    estimation::classical_benchmark(&config.inner).map_err(err)
}

/// Asymptotic ratio, e.g. `"SQ_large_lambda"` or `"TWB_B"`.
#[pyfunction]
fn u0_asymptotic(config: &PyConfig, branch: &str) -> PyResult<f64> {
    Ok(estimation::u0_asymptotic(&config.inner, parse_branch(branch).map_err(value_err)?))
}

#[pyfunction]
#[pyo3(signature = (config, estimator="TwbDifferenceSquared"))]
fn mixed_derivative(config: &PyConfig, estimator: &str) -> PyResult<f64> {
    let spec = EstimatorSpec::new(parse_estimator(estimator).map_err(value_err)?);
    estimation::mixed_derivative(&config.inner, &spec).map_err(err)
}

/// Injects `epsilon` and recovers it from parallel and perpendicular runs.
#[pyfunction]
#[pyo3(signature = (config, estimator, sigma2, epsilon, n_samples=100_000, seed=2024))]
fn recover_covariance<'py>(
    py: Python<'py>,
    config: &PyConfig,
    estimator: &str,
    sigma2: f64,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = EstimatorSpec::new(parse_estimator(estimator).map_err(value_err)?);
    let row = sweep::mc_row(&config.inner, &spec, sigma2, epsilon, n_samples, seed).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("epsilon_hat", row.recovery.epsilon_hat)?;
    d.set_item("std_error", row.recovery.std_error)?;
    d.set_item("pull", row.pull())?;
    d.set_item("denominator", row.recovery.denominator)?;
    Ok(d)
}

/// `(A₁₁, A₂₂, A₁₂, Var₀, prediction)` of the small-noise variance expansion.
#[pyfunction]
fn variance_expansion(config: &PyConfig, estimator: &str, sigma2: f64, epsilon: f64) -> PyResult<(f64, f64, f64, f64, f64)> {
    let spec = EstimatorSpec::new(parse_estimator(estimator).map_err(value_err)?);
    let x = phase_noise::variance_expansion(&config.inner, &spec, sigma2, epsilon).map_err(err)?;
    Ok((x.a_11, x.a_22, x.a_12, x.var_zero, x.predict(sigma2, epsilon)))
}

/// Direct Monte-Carlo variance of the estimator under correlated noise:
/// `(value, standard error)`.
#[pyfunction]
#[pyo3(signature = (config, estimator, sigma2, epsilon, n_samples=100_000, seed=2024))]
fn mc_variance(config: &PyConfig, estimator: &str, sigma2: f64, epsilon: f64, n_samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    let spec = EstimatorSpec::new(parse_estimator(estimator).map_err(value_err)?);
    let noise = PhaseNoiseModel::parallel(sigma2, epsilon, seed).map_err(err)?;
    let e = phase_noise::mc_variance(&config.inner, &spec, &noise, n_samples).map_err(err)?;
    Ok((e.mean, e.std_error))
}

fn run_sweep(spec: SweepSpec) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let t = spec.run().map_err(err)?;
    Ok((t.columns, t.rows))
}

/// NRF against transmissivity; `spec_json` replaces the default sweep.
#[pyfunction]
#[pyo3(signature = (spec_json=None))]
fn nrf_scan(spec_json: Option<&str>) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let spec = match spec_json {
        Some(s) => serde_json::from_str(s).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => SweepSpec::nrf_default(),
    };
    run_sweep(spec)
}

/// Uncertainty ratios for a preset (`"phi0-eta"`, `"phi0-lambda"`,
/// `"eta-lambda"`), optionally on a different grid.
#[pyfunction]
#[pyo3(signature = (preset="phi0-eta", grid=None))]
fn uncertainty_scan(preset: &str, grid: Option<Vec<f64>>) -> PyResult<(Vec<String>, Vec<Vec<f64>>)> {
    let preset: UncertaintyPreset = serde_json::from_value(serde_json::Value::String(preset.into()))
        .map_err(|_| PyValueError::new_err(format!("unknown preset '{preset}'")))?;
    let mut spec = SweepSpec::uncertainty_default(preset);
    if let Some(g) = grid {
        spec.grid = sweep::Grid::Values(g);
    }
    run_sweep(spec)
}

#[pymodule]
fn twinbeam_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(photon_moments, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_moments, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_check, m)?)?;
    m.add_function(wrap_pyfunction!(nrf, m)?)?;
    m.add_function(wrap_pyfunction!(nrf_coherent_limit, m)?)?;
    m.add_function(wrap_pyfunction!(u0, m)?)?;
    m.add_function(wrap_pyfunction!(classical_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(u0_asymptotic, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_derivative, m)?)?;
    m.add_function(wrap_pyfunction!(recover_covariance, m)?)?;
    m.add_function(wrap_pyfunction!(variance_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(mc_variance, m)?)?;
    m.add_function(wrap_pyfunction!(nrf_scan, m)?)?;
    m.add_function(wrap_pyfunction!(uncertainty_scan, m)?)?;
    Ok(())
}
