//! Closed-form photon statistics at the readout ports, noise-reduction
//! factors and their regime asymptotes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holometer::{HolometerConfig, InputKind};
pub use crate::moments::ReadoutMoments;

/// Coherent contribution `⟨N⟩ = ⟨δN²⟩ = η(1-τ)μ`.
pub fn coherent_mean(eta: f64, tau: f64, mu: f64) -> f64 {
    eta * (1.0 - tau) * mu
}

/// Twin-beam contribution `⟨N⟩ = ητλ`.
pub fn twb_mean(eta: f64, tau: f64, lambda: f64) -> f64 {
    eta * tau * lambda
}

/// `⟨δN²⟩ = ητλ(1 + ητλ)`.
pub fn twb_variance(eta: f64, tau: f64, lambda: f64) -> f64 {
    let n = twb_mean(eta, tau, lambda);
    n * (1.0 + n)
}

/// `⟨δN₁δN₂⟩ = η₁η₂τ₁τ₂λ(1+λ)`.
pub fn twb_covariance(eta_1: f64, eta_2: f64, tau_1: f64, tau_2: f64, lambda: f64) -> f64 {
    eta_1 * eta_2 * tau_1 * tau_2 * lambda * (1.0 + lambda)
}

/// Second-order readout statistics in closed form, for coherent light with
/// or without twin beam.
///
/// The interference term of the covariance uses the signed amplitudes
/// `sin(φᵢ/2)cos(φᵢ/2)` in place of `√(τᵢ(1-τᵢ))`; both agree for `φ ∈ [0, π]`.
pub fn analytic_moments(config: &HolometerConfig) -> Result<ReadoutMoments> {
    config.validate()?;
    let lambda = match config.input_kind {
        InputKind::CoherentOnly => 0.0,
        InputKind::Twb => config.lambda,
        InputKind::TwoSqueezed => {
            return Err(Error::Unsupported(
                "closed-form photon statistics cover coherent and twin-beam inputs".into(),
            ))
        }
    };
    let (e1, e2) = (config.eta_1(), config.eta_2());
    let (t1, t2) = (config.tau_1(), config.tau_2());
    let mu = config.mu;

    let coh1 = coherent_mean(e1, t1, mu);
    let coh2 = coherent_mean(e2, t2, mu);
    let twb1 = twb_mean(e1, t1, lambda);
    let twb2 = twb_mean(e2, t2, lambda);

    let mean_1 = twb1 + coh1;
    let mean_2 = twb2 + coh2;
    let var_1 = twb_variance(e1, t1, lambda) + coh1 + 2.0 * twb1 * coh1;
    let var_2 = twb_variance(e2, t2, lambda) + coh2 + 2.0 * twb2 * coh2;

    let twb_cov = twb_covariance(e1, e2, t1, t2, lambda);
    // √(cov_TWB · N₁^coh · N₂^coh) with signs carried by sin(φ/2)cos(φ/2)
    let (s1, c1) = (0.5 * config.phi0_1).sin_cos();
    let (s2, c2) = (0.5 * config.phi0_2).sin_cos();
    let cross = e1 * e2 * mu * (lambda * (1.0 + lambda)).sqrt() * s1 * c1 * s2 * c2;
    let cov = twb_cov - 2.0 * cross * (2.0 * config.psi).cos();

    Ok(ReadoutMoments::second_order(mean_1, mean_2, var_1, var_2, cov))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// Twin beam dominates the readout port.
    A,
    Transition,
    /// Coherent light dominates the readout port.
    B,
}

/// `k` below which a configuration is labelled regime A.
pub const REGIME_A_MAX_K: f64 = 1e-2;
/// `k` above which a configuration is labelled regime B.
pub const REGIME_B_MIN_K: f64 = 1e2;

impl Regime {
    pub fn classify(k: f64) -> Regime {
        if k < REGIME_A_MAX_K {
            Regime::A
        } else if k > REGIME_B_MIN_K {
            Regime::B
        } else {
            Regime::Transition
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrfResult {
    pub nrf_minus: f64,
    pub nrf_plus: f64,
    pub regime_k: f64,
    pub regime: Regime,
}

impl NrfResult {
    pub fn get(&self, sign: Sign) -> f64 {
        match sign {
            Sign::Plus => self.nrf_plus,
            Sign::Minus => self.nrf_minus,
        }
    }
}

/// `NRF± = ⟨δ(N₁±N₂)²⟩ / ⟨N₁+N₂⟩` for `τ₁ = τ₂ = τ`.
pub fn nrf(config: &HolometerConfig) -> Result<NrfResult> {
    if config.phi0_1 != config.phi0_2 || config.eta_2() != config.eta {
        return Err(Error::Unsupported(
            "noise reduction factors are defined for identical interferometers".into(),
        ));
    }
    let m = analytic_moments(config)?;
    let denom = m.mean_1 + m.mean_2;
    if !(denom > 0.0) {
        return Err(Error::Undefined(
            "⟨N₁+N₂⟩ = 0: no light reaches the readout ports".into(),
        ));
    }
    let lambda = if config.input_kind == InputKind::Twb {
        config.lambda
    } else {
        0.0
    };
    Ok(NrfResult {
        nrf_minus: (m.var_1 + m.var_2 - 2.0 * m.cov) / denom,
        nrf_plus: (m.var_1 + m.var_2 + 2.0 * m.cov) / denom,
        regime_k: config.mu * (1.0 - config.tau_1()) / (config.tau_1() * lambda),
        regime: Regime::classify(config.mu * (1.0 - config.tau_1()) / (config.tau_1() * lambda)),
    })
}

/// Noise-reduction factor assembled term by term from the twin-beam and
/// coherent contributions (identical interferometers).
pub fn nrf_from_components(config: &HolometerConfig, sign: Sign) -> Result<f64> {
    let (eta, tau, lambda, mu) = (config.eta, config.tau_1(), config.lambda, config.mu);
    let s = sign.value();
    let n_coh = coherent_mean(eta, tau, mu);
    let n_twb = twb_mean(eta, tau, lambda);
    let twb_cov = twb_covariance(eta, eta, tau, tau, lambda);
    let twb_var = 2.0 * twb_variance(eta, tau, lambda) + 2.0 * s * twb_cov;
    let numerator = twb_var
        + 2.0 * n_coh * (1.0 + 2.0 * n_twb - s * 2.0 * twb_cov.sqrt() * (2.0 * config.psi).cos());
    let denom = 2.0 * n_coh + 2.0 * n_twb;
    if !(denom > 0.0) {
        return Err(Error::Undefined("⟨N₁+N₂⟩ = 0".into()));
    }
    Ok(numerator / denom)
}

/// `e^{-2r} = 1 + 2λ - 2√(λ(1+λ))`, the noise of the squeezed quadrature
/// of a pure state with `λ` photons per mode, relative to vacuum.
pub fn squeezed_noise(lambda: f64) -> f64 {
    // written as 1/(1+2λ+2√(λ(1+λ))) to avoid cancellation at large λ
    1.0 / (1.0 + 2.0 * lambda + 2.0 * (lambda * (1.0 + lambda)).sqrt())
}

/// Exact `k → ∞` limit of `NRF₋` at `ψ = π/2`: `1 - ητ(1 - e^{-2r})`.
pub fn nrf_coherent_limit(eta: f64, tau: f64, lambda: f64) -> f64 {
    1.0 - eta * tau * (1.0 - squeezed_noise(lambda))
}

/// Regime asymptotes of the noise-reduction factor.
///
/// * A, `-`: `(1-ητ) + ητ(1+2λ-2√(λ(1+λ)))·k`
/// * A, `+`: `1 + ητ(2λ+1)`
/// * B (either sign at its optimal ψ): `1 - ητ + ητ/(4λ)`
pub fn nrf_asymptotic(config: &HolometerConfig, regime: Regime, sign: Sign) -> Result<f64> {
    let (eta, tau, lambda) = (config.eta, config.tau_1(), config.lambda);
    match (regime, sign) {
        (Regime::A, Sign::Minus) => {
            let k = if lambda > 0.0 { config.regime_k() } else { 0.0 };
            let k = if k.is_finite() { k } else { 0.0 };
            let pair = 1.0 + 2.0 * lambda - 2.0 * (lambda * (1.0 + lambda)).sqrt();
            Ok((1.0 - eta * tau) + eta * tau * pair * k)
        }
        (Regime::A, Sign::Plus) => Ok(1.0 + eta * tau * (2.0 * lambda + 1.0)),
        (Regime::B, _) => {
            if lambda <= 0.0 {
                return Err(Error::Undefined("regime-B asymptote needs λ > 0".into()));
            }
            Ok(1.0 - tau * eta + eta * tau / (4.0 * lambda))
        }
        (Regime::Transition, _) => Err(Error::Undefined(
            "no asymptotic form in the transition region".into(),
        )),
    }
}
