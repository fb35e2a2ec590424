//! Phase-covariance estimators and their zero-order photon-noise
//! uncertainty.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::centered_photon_moments;
use crate::holometer::{
    build_input, propagate_input, transmissivity, HolometerConfig, PropagatedState, QuadratureStats,
};

/// Denominators with smaller magnitude are reported as singular.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

/// Benchmark is reported as overflowing below this transmissivity.
pub const BENCHMARK_MIN_TRANSMISSIVITY: f64 = 1e-24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    /// `Ĉ = (N₁ - N₂)²`, paired with `ψ = π/2`.
    TwbDifferenceSquared,
    /// `Ĉ = (N₁ + N₂)²`, paired with `ψ = 0`.
    TwbSumSquared,
    /// `Ĉ = (Y₁ - ⟨Y₁⟩)(Y₂ - ⟨Y₂⟩)` on the signal quadratures.
    QuadratureProduct,
    /// `Ĉ = N₁ - N₂`. Linear in each output, so its mixed derivative
    /// vanishes; only kept to be rejected.
    PlainDifference,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::TwbDifferenceSquared => "TwbDifferenceSquared",
            EstimatorKind::TwbSumSquared => "TwbSumSquared",
            EstimatorKind::QuadratureProduct => "QuadratureProduct",
            EstimatorKind::PlainDifference => "PlainDifference",
        }
    }

    /// Coherent phase the estimator is designed for, if any.
    pub fn paired_psi(self) -> Option<f64> {
        match self {
            EstimatorKind::TwbDifferenceSquared => Some(FRAC_PI_2),
            EstimatorKind::TwbSumSquared => Some(0.0),
            _ => None,
        }
    }

    /// Sign `s` in `N₁ + s·N₂`.
    fn photon_sign(self) -> Option<f64> {
        match self {
            EstimatorKind::TwbDifferenceSquared => Some(-1.0),
            EstimatorKind::TwbSumSquared => Some(1.0),
            _ => None,
        }
    }
}

/// Finite-difference steps for the mixed derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DerivativeStep {
    /// Steps `coarse·s` and `fine·s` with `s = max(φ₀, floor)`, combined by
    /// Richardson extrapolation. `coarse/fine` must be 10.
    Richardson { coarse: f64, fine: f64, floor: f64 },
    /// Plain central difference with a fixed step.
    Fixed(f64),
}

impl Default for DerivativeStep {
    fn default() -> Self {
        DerivativeStep::Richardson {
            coarse: 1e-3,
            fine: 1e-4,
            floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub derivative_step: DerivativeStep,
    /// Accept a coherent phase other than the paired one (logged as a warning).
    pub allow_phase_override: bool,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind) -> Self {
        EstimatorSpec {
            kind,
            derivative_step: DerivativeStep::default(),
            allow_phase_override: false,
        }
    }

    pub fn with_phase_override(mut self) -> Self {
        self.allow_phase_override = true;
        self
    }

    pub(crate) fn check(&self, config: &HolometerConfig) -> Result<()> {
        if self.kind == EstimatorKind::PlainDifference {
            return Err(Error::DegenerateEstimator(self.kind.name()));
        }
        if let Some(expected) = self.kind.paired_psi() {
            // ψ enters through 2ψ only
            let d = (config.psi - expected).rem_euclid(PI);
            if d.min(PI - d) > 1e-9 {
                if !self.allow_phase_override {
                    return Err(Error::PhaseMismatch {
                        kind: self.kind.name(),
                        expected,
                        actual: config.psi,
                    });
                }
                log::warn!(
                    "{} used at psi = {} instead of {}",
                    self.kind.name(),
                    config.psi,
                    expected
                );
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyResult {
    pub u0: f64,
    pub u_cl: f64,
    pub ratio: f64,
    /// `Var[Ĉ]` at the central phases.
    pub numerator_var: f64,
    /// `⟨∂²Ĉ/∂φ₁∂φ₂⟩` at the central phases.
    pub denominator: f64,
    pub regime_k: f64,
}

/// `U_CL = √2/(ημ cos²(φ₀/2))`.
pub fn classical_benchmark(config: &HolometerConfig) -> Result<f64> {
    if !(config.eta > 0.0) || !(config.mu > 0.0) {
        return Err(Error::InvalidParameter(
            "classical benchmark needs eta > 0 and mu > 0".into(),
        ));
    }
    let tau = transmissivity(config.phi0_1);
    let u = SQRT_2 / (config.eta * config.mu * tau);
    if tau < BENCHMARK_MIN_TRANSMISSIVITY || !u.is_finite() {
        return Err(Error::Overflow(format!(
            "classical benchmark diverges at phi0 = {}",
            config.phi0_1
        )));
    }
    Ok(u)
}

/// Published asymptotic forms of `U⁽⁰⁾/U_CL`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticBranch {
    #[serde(rename = "SQ_large_lambda")]
    SqLargeLambda,
    #[serde(rename = "SQ_small_lambda")]
    SqSmallLambda,
    #[serde(rename = "TWB_A_large_lambda")]
    TwbALargeLambda,
    #[serde(rename = "TWB_A_small_lambda")]
    TwbASmallLambda,
    #[serde(rename = "TWB_B")]
    TwbB,
}

impl AsymptoticBranch {
    pub const ALL: [AsymptoticBranch; 5] = [
        AsymptoticBranch::SqLargeLambda,
        AsymptoticBranch::SqSmallLambda,
        AsymptoticBranch::TwbALargeLambda,
        AsymptoticBranch::TwbASmallLambda,
        AsymptoticBranch::TwbB,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AsymptoticBranch::SqLargeLambda => "SQ_large_lambda",
            AsymptoticBranch::SqSmallLambda => "SQ_small_lambda",
            AsymptoticBranch::TwbALargeLambda => "TWB_A_large_lambda",
            AsymptoticBranch::TwbASmallLambda => "TWB_A_small_lambda",
            AsymptoticBranch::TwbB => "TWB_B",
        }
    }
}

/// Asymptotic uncertainty ratio for the requested branch, evaluated at
/// `φ₀ = phi0_1`.
pub fn u0_asymptotic(config: &HolometerConfig, branch: AsymptoticBranch) -> f64 {
    let (eta, lambda, phi0) = (config.eta, config.lambda, config.phi0_1);
    let sq_large = 1.0 - eta * (1.0 + phi0.cos()) / 2.0
        + eta * (0.5 * phi0).cos().powi(2) / (4.0 * lambda);
    match branch {
        AsymptoticBranch::SqLargeLambda => sq_large,
        AsymptoticBranch::SqSmallLambda => {
            let s = lambda.sqrt();
            1.0 - eta * (1.0 + phi0.cos()) * s * (1.0 - s)
        }
        AsymptoticBranch::TwbALargeLambda => 2.0 * 5f64.sqrt() * (1.0 - eta),
        AsymptoticBranch::TwbASmallLambda => (2.0 * (1.0 - eta) / eta).sqrt(),
        AsymptoticBranch::TwbB => SQRT_2 * sq_large,
    }
}

/// `(E∥ - E⊥)/D`.
pub fn estimate_phase_covariance(mean_parallel: f64, mean_perp: f64, denominator: f64) -> Result<f64> {
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(Error::Singular(format!("denominator = {denominator}")));
    }
    Ok((mean_parallel - mean_perp) / denominator)
}

fn quadrature_stats(p: &PropagatedState) -> QuadratureStats {
    p.readout_gaussian().quadratures(p.config.signal_quadrature_angle())
}

/// `⟨Ĉ⟩`-generating correlator whose mixed derivative gives the estimator
/// denominator: `⟨N₁N₂⟩` for photon-number readouts, `⟨Y₁Y₂⟩` otherwise.
fn correlator(kind: EstimatorKind, p: &PropagatedState) -> Result<f64> {
    match kind {
        EstimatorKind::QuadratureProduct => {
            let q = quadrature_stats(p);
            Ok(q.mean_1 * q.mean_2 + q.cov)
        }
        _ => {
            let m = centered_photon_moments(&p.state, (0, 1), 2)?;
            Ok(m.mean_1 * m.mean_2 + m.cov)
        }
    }
}

/// Central mixed difference of `f` at `(x, x)` with step `h`.
pub fn central_mixed_difference<F>(f: &mut F, x: f64, h: f64) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let pp = f(x + h, x + h)?;
    let pm = f(x + h, x - h)?;
    let mp = f(x - h, x + h)?;
    let mm = f(x - h, x - h)?;
    Ok(((pp - pm) - (mp - mm)) / (4.0 * h * h))
}

/// Mixed second derivative of `f` at `(x, x)` under a step policy.
pub fn mixed_derivative_with<F>(mut f: F, x: f64, step: DerivativeStep) -> Result<f64>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let check = |h: f64| {
        // the step must survive being added to x
        if !(h > 0.0) || (x + h) - x < 0.5 * h || h < 1e-12 * x.abs() {
            Err(Error::StepUnderflow(format!("step {h} at phi0 = {x}")))
        } else {
            Ok(h)
        }
    };
    match step {
        DerivativeStep::Fixed(h) => central_mixed_difference(&mut f, x, check(h)?),
        DerivativeStep::Richardson {
            coarse,
            fine,
            floor,
        } => {
            let scale = x.abs().max(floor);
            let h1 = check(coarse * scale)?;
            let h2 = check(fine * scale)?;
            let d1 = central_mixed_difference(&mut f, x, h1)?;
            let d2 = central_mixed_difference(&mut f, x, h2)?;
            let r2 = (h1 / h2).powi(2);
            Ok((r2 * d2 - d1) / (r2 - 1.0))
        }
    }
}

/// Second derivative of a one-variable `f` at `x` under a step policy.
pub fn second_derivative_with<F>(mut f: F, x: f64, step: DerivativeStep) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let f0 = f(x)?;
    let mut diff = |h: f64| -> Result<f64> {
        if !(h > 0.0) || (x + h) - x < 0.5 * h {
            return Err(Error::StepUnderflow(format!("step {h} at {x}")));
        }
        Ok(((f(x + h)? - f0) + (f(x - h)? - f0)) / (h * h))
    };
    match step {
        DerivativeStep::Fixed(h) => diff(h),
        DerivativeStep::Richardson {
            coarse,
            fine,
            floor,
        } => {
            let scale = x.abs().max(floor);
            let (h1, h2) = (coarse * scale, fine * scale);
            let d1 = diff(h1)?;
            let d2 = diff(h2)?;
            let r2 = (h1 / h2).powi(2);
            Ok((r2 * d2 - d1) / (r2 - 1.0))
        }
    }
}

/// `⟨∂²Ĉ/∂φ₁∂φ₂⟩` at `φ₁ = φ₂ = φ₀`.
///
/// For photon-number readouts only the cross term `∓2N₁N₂` depends on both
/// phases; for the quadrature product the centering constants drop out.
pub fn mixed_derivative(config: &HolometerConfig, spec: &EstimatorSpec) -> Result<f64> {
    let kind = spec.kind;
    if kind == EstimatorKind::PlainDifference {
        return Err(Error::DegenerateEstimator(kind.name()));
    }
    let input = build_input(config)?;
    let d = mixed_derivative_with(
        |p1, p2| correlator(kind, &propagate_input(&input, config, p1, p2)?),
        config.phi0_1,
        spec.derivative_step,
    )?;
    Ok(match kind.photon_sign() {
        Some(s) => 2.0 * s * d,
        None => d,
    })
}

/// `∂²⟨N₁N₂⟩/∂φ₁∂φ₂ = η₁η₂μ² sin φ₁ sin φ₂ / 4` for coherent light alone.
pub fn coherent_mixed_derivative(config: &HolometerConfig) -> f64 {
    config.eta_1() * config.eta_2() * config.mu * config.mu * config.phi0_1.sin() * config.phi0_2.sin()
        / 4.0
}

/// `Var[Ĉ]` at the central phases.
pub fn estimator_variance(config: &HolometerConfig, kind: EstimatorKind) -> Result<f64> {
    let input = build_input(config)?;
    let p = propagate_input(&input, config, config.phi0_1, config.phi0_2)?;
    match kind {
        EstimatorKind::QuadratureProduct => {
            // Gaussian fourth moment: ⟨δY₁²δY₂²⟩ - ⟨δY₁δY₂⟩² = v₁v₂ + c²
            let q = quadrature_stats(&p);
            Ok(q.var_1 * q.var_2 + q.cov * q.cov)
        }
        EstimatorKind::PlainDifference => Err(Error::DegenerateEstimator(kind.name())),
        _ => {
            let s = kind.photon_sign().unwrap_or(-1.0);
            let m = centered_photon_moments(&p.state, (0, 1), 4)?;
            let second = m.combined_moment(s, 2).ok_or_else(missing)?;
            let fourth = m.combined_moment(s, 4).ok_or_else(missing)?;
            Ok(fourth - second * second)
        }
    }
}

fn missing() -> Error {
    Error::Undefined("centered moments missing".into())
}

/// Zero-order uncertainty `U⁽⁰⁾ = √(2 Var[Ĉ]) / |⟨∂²Ĉ/∂φ₁∂φ₂⟩|`.
pub fn u0(config: &HolometerConfig, spec: &EstimatorSpec) -> Result<UncertaintyResult> {
    config.validate()?;
    if config.phi0_1 != config.phi0_2 {
        return Err(Error::Unsupported(
            "uncertainty is defined for equal central phases".into(),
        ));
    }
    spec.check(config)?;
    let numerator_var = estimator_variance(config, spec.kind)?;
    let denominator = mixed_derivative(config, spec)?;
    if !(denominator.abs() >= DENOMINATOR_FLOOR) {
        return Err(Error::Singular(format!(
            "mixed derivative {denominator} below {DENOMINATOR_FLOOR}"
        )));
    }
    let u0 = (2.0 * numerator_var.max(0.0)).sqrt() / denominator.abs();
    let u_cl = classical_benchmark(config)?;
    Ok(UncertaintyResult {
        u0,
        u_cl,
        ratio: u0 / u_cl,
        numerator_var,
        denominator,
        regime_k: config.regime_k(),
    })
}
