//! Input state of the two interferometers and its propagation to the
//! readout modes `c₁`, `c₂`.

use nalgebra::{Matrix2, Matrix4, SMatrix, SVector, Vector2, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_non_negative, check_unit_interval, Error, Result};
use crate::gaussian::GaussianState;
use crate::moments::ReadoutMoments;

/// Mode slots of the four-mode input state.
pub const A1: usize = 0;
pub const B1: usize = 1;
pub const A2: usize = 2;
pub const B2: usize = 3;

/// Quantum light injected in the otherwise unused ports `a₁`, `a₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    CoherentOnly,
    #[serde(alias = "TWB")]
    Twb,
    TwoSqueezed,
}

/// Physical parameters of the double interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HolometerConfig {
    /// Mean photon number of each coherent beam.
    pub mu: f64,
    /// Phase of the coherent beams.
    pub psi: f64,
    /// Mean photon number per quantum mode.
    pub lambda: f64,
    /// Detection efficiency (both detectors unless `eta_2` is set).
    pub eta: f64,
    /// Efficiency of the second detector, if different.
    pub eta_2: Option<f64>,
    pub phi0_1: f64,
    pub phi0_2: f64,
    pub input_kind: InputKind,
    /// Twin-beam phase.
    pub theta: f64,
    /// Squeezing phase; `None` aligns the squeezed quadrature with the
    /// signal quadrature of the readout (`θ_ξ = 2ψ`).
    pub theta_xi: Option<f64>,
}

impl Default for HolometerConfig {
    fn default() -> Self {
        HolometerConfig {
            mu: 1e6,
            psi: std::f64::consts::FRAC_PI_2,
            lambda: 10.0,
            eta: 1.0,
            eta_2: None,
            phi0_1: 0.1,
            phi0_2: 0.1,
            input_kind: InputKind::Twb,
            theta: 0.0,
            theta_xi: None,
        }
    }
}

impl HolometerConfig {
    pub fn validate(&self) -> Result<()> {
        check_non_negative("mu", self.mu)?;
        check_non_negative("lambda", self.lambda)?;
        check_unit_interval("eta", self.eta)?;
        if let Some(e2) = self.eta_2 {
            check_unit_interval("eta_2", e2)?;
        }
        for (name, v) in [
            ("psi", self.psi),
            ("phi0_1", self.phi0_1),
            ("phi0_2", self.phi0_2),
            ("theta", self.theta),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        Ok(())
    }

    pub fn eta_1(&self) -> f64 {
        self.eta
    }

    pub fn eta_2(&self) -> f64 {
        self.eta_2.unwrap_or(self.eta)
    }

    pub fn squeezing_phase(&self) -> f64 {
        self.theta_xi.unwrap_or(2.0 * self.psi)
    }

    /// Angle of the readout quadrature carrying the coherent phase signal.
    pub fn signal_quadrature_angle(&self) -> f64 {
        self.psi + std::f64::consts::FRAC_PI_2
    }

    pub fn tau_1(&self) -> f64 {
        transmissivity(self.phi0_1)
    }

    pub fn tau_2(&self) -> f64 {
        transmissivity(self.phi0_2)
    }

    /// Whether both interferometers sit at the same central phase.
    pub fn is_symmetric(&self) -> bool {
        self.phi0_1 == self.phi0_2 && self.eta_2() == self.eta
    }

    /// `k = μ(1-τ)/(τλ)` at the central phase of interferometer 1.
    pub fn regime_k(&self) -> f64 {
        let tau = self.tau_1();
        self.mu * (1.0 - tau) / (tau * self.lambda)
    }

    pub fn with_phi0(&self, phi0: f64) -> Self {
        HolometerConfig {
            phi0_1: phi0,
            phi0_2: phi0,
            ..self.clone()
        }
    }
}

/// `τ = cos²(φ/2)`.
pub fn transmissivity(phi: f64) -> f64 {
    let c = (0.5 * phi).cos();
    c * c
}

/// Four-mode input state ordered `(a₁, b₁, a₂, b₂)`.
pub fn build_input(config: &HolometerConfig) -> Result<GaussianState> {
    config.validate()?;
    let beam = GaussianState::coherent(Complex64::from_polar(config.mu.sqrt(), config.psi));
    let (a1, a2) = match config.input_kind {
        InputKind::CoherentOnly => (GaussianState::vacuum(1), GaussianState::vacuum(1)),
        InputKind::TwoSqueezed => {
            let sq = GaussianState::squeezed_vacuum(config.lambda, config.squeezing_phase())?;
            (sq.clone(), sq)
        }
        InputKind::Twb => {
            // a₁ b₁ a₂ b₂ from (a₁ a₂) ⊕ b₁ ⊕ b₂ by reordering
            let twb = GaussianState::twin_beam(config.lambda, config.theta)?;
            let full = twb.tensor(&beam).tensor(&beam);
            return full.marginal(&[0, 2, 1, 3]);
        }
    };
    Ok(a1.tensor(&beam).tensor(&a2).tensor(&beam))
}

/// Readout state after both interferometers and detection loss.
#[derive(Debug, Clone)]
pub struct PropagatedState {
    /// Two-mode state of `(c₁, c₂)`.
    pub state: GaussianState,
    pub config: HolometerConfig,
    pub tau_1: f64,
    pub tau_2: f64,
}

/// Mixes `(aᵢ, bᵢ)` at phase `φᵢ`, applies loss to `cᵢ` and traces out the
/// complementary ports.
pub fn propagate_input(
    input: &GaussianState,
    config: &HolometerConfig,
    phi_1: f64,
    phi_2: f64,
) -> Result<PropagatedState> {
    let s = input
        .apply_interferometer(A1, B1, phi_1)?
        .apply_interferometer(A2, B2, phi_2)?
        .apply_loss(A1, config.eta_1())?
        .apply_loss(A2, config.eta_2())?
        .marginal(&[A1, A2])?;
    Ok(PropagatedState {
        state: s,
        config: config.clone(),
        tau_1: transmissivity(phi_1),
        tau_2: transmissivity(phi_2),
    })
}

impl PropagatedState {
    pub fn readout_gaussian(&self) -> ReadoutGaussian {
        ReadoutGaussian {
            mean: Vector4::from_column_slice(self.state.mean().as_slice()),
            cov: Matrix4::from_column_slice(self.state.cov().as_slice()),
        }
    }
}

pub fn propagate(config: &HolometerConfig, phi_1: f64, phi_2: f64) -> Result<PropagatedState> {
    let input = build_input(config)?;
    propagate_input(&input, config, phi_1, phi_2)
}

/// Propagation at the central phases.
pub fn propagate_central(config: &HolometerConfig) -> Result<PropagatedState> {
    propagate(config, config.phi0_1, config.phi0_2)
}

/// Second-order statistics of the readout modes for arbitrary phases,
/// propagated directly on the 8×8 input covariance.
#[derive(Debug, Clone)]
pub struct ReadoutModel {
    mean: SVector<f64, 8>,
    cov: SMatrix<f64, 8, 8>,
    eta: (f64, f64),
    quadrature_angle: f64,
}

/// Mean and covariance of `(x₁, y₁, x₂, y₂)` at the readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutGaussian {
    pub mean: Vector4<f64>,
    pub cov: Matrix4<f64>,
}

/// Signal-quadrature statistics `(⟨Y₁⟩, ⟨Y₂⟩, Var Y₁, Var Y₂, Cov)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureStats {
    pub mean_1: f64,
    pub mean_2: f64,
    pub var_1: f64,
    pub var_2: f64,
    pub cov: f64,
}

/// Rows of the interferometer map giving `(x_c, y_c)` from `(x_a, y_a, x_b, y_b)`.
fn output_rows(phi: f64) -> SMatrix<f64, 2, 4> {
    let (s, c) = (0.5 * phi).sin_cos();
    SMatrix::<f64, 2, 4>::new(c, 0.0, 0.0, -s, 0.0, c, s, 0.0)
}

impl ReadoutModel {
    pub fn new(config: &HolometerConfig) -> Result<Self> {
        let input = build_input(config)?;
        Ok(ReadoutModel {
            mean: SVector::<f64, 8>::from_column_slice(input.mean().as_slice()),
            cov: SMatrix::<f64, 8, 8>::from_column_slice(input.cov().as_slice()),
            eta: (config.eta_1(), config.eta_2()),
            quadrature_angle: config.signal_quadrature_angle(),
        })
    }

    pub fn gaussian(&self, phi_1: f64, phi_2: f64) -> ReadoutGaussian {
        let mut r = SMatrix::<f64, 4, 8>::zeros();
        let (l1, l2) = (self.eta.0.sqrt(), self.eta.1.sqrt());
        r.fixed_view_mut::<2, 4>(0, 0).copy_from(&(output_rows(phi_1) * l1));
        r.fixed_view_mut::<2, 4>(2, 4).copy_from(&(output_rows(phi_2) * l2));
        let mut cov = r * self.cov * r.transpose();
        for (k, eta) in [(0, self.eta.0), (1, self.eta.0), (2, self.eta.1), (3, self.eta.1)] {
            cov[(k, k)] += 0.5 * (1.0 - eta);
        }
        ReadoutGaussian {
            mean: r * self.mean,
            cov,
        }
    }

    pub fn photon_moments(&self, phi_1: f64, phi_2: f64) -> ReadoutMoments {
        self.gaussian(phi_1, phi_2).photon_moments()
    }

    pub fn quadratures(&self, phi_1: f64, phi_2: f64) -> QuadratureStats {
        self.gaussian(phi_1, phi_2).quadratures(self.quadrature_angle)
    }
}

impl ReadoutGaussian {
    fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(2 * i, 2 * j).into_owned()
    }

    fn mean_of(&self, i: usize) -> Vector2<f64> {
        self.mean.fixed_rows::<2>(2 * i).into_owned()
    }

    /// `⟨N⟩ = (tr σ + |m|²)/2 - 1/2`, `Var N = tr σ²/2 - 1/4 + mᵀσm`,
    /// `Cov = tr(σ₁₂σ₁₂ᵀ)/2 + m₁ᵀσ₁₂m₂`.
    pub fn photon_moments(&self) -> ReadoutMoments {
        let n = |i: usize| {
            let (s, m) = (self.block(i, i), self.mean_of(i));
            0.5 * (s.trace() + m.norm_squared()) - 0.5
        };
        let var = |i: usize| {
            let (s, m) = (self.block(i, i), self.mean_of(i));
            0.5 * (s * s).trace() - 0.25 + m.dot(&(s * m))
        };
        let s12 = self.block(0, 1);
        let cov = 0.5 * (s12 * s12.transpose()).trace() + self.mean_of(0).dot(&(s12 * self.mean_of(1)));
        ReadoutMoments::second_order(n(0), n(1), var(0), var(1), cov)
    }

    pub fn quadratures(&self, angle: f64) -> QuadratureStats {
        let (s, c) = angle.sin_cos();
        let e = Vector2::new(c, s);
        let q = |i: usize, j: usize| e.dot(&(self.block(i, j) * e));
        QuadratureStats {
            mean_1: e.dot(&self.mean_of(0)),
            mean_2: e.dot(&self.mean_of(1)),
            var_1: q(0, 0),
            var_2: q(1, 1),
            cov: q(0, 1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::centered_photon_moments;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn cfg(kind: InputKind, mu: f64, lambda: f64, eta: f64, phi: f64) -> HolometerConfig {
        HolometerConfig {
            mu,
            lambda,
            eta,
            input_kind: kind,
            phi0_1: phi,
            phi0_2: phi,
            ..Default::default()
        }
    }

    #[test]
    fn coherent_only_vacuum() {
        let s = build_input(&cfg(InputKind::CoherentOnly, 0.0, 3.0, 1.0, 0.3)).unwrap();
        assert_eq!(s, GaussianState::vacuum(4));
    }

    #[test]
    fn twin_beam_input_statistics() {
        let lambda = 2.5;
        let s = build_input(&cfg(InputKind::Twb, 1.0, lambda, 1.0, 0.3)).unwrap();
        let m = centered_photon_moments(&s, (A1, A2), 2).unwrap();
        assert_relative_eq!(m.cov, lambda * (1.0 + lambda), epsilon = 1e-12);
        assert_relative_eq!(m.var_1, lambda * (1.0 + lambda), epsilon = 1e-12);
        assert_relative_eq!(m.mean_2, lambda, epsilon = 1e-12);
    }

    #[test]
    fn squeezed_input_quadrature() {
        let lambda: f64 = 0.8;
        let c = HolometerConfig {
            theta_xi: Some(0.0),
            ..cfg(InputKind::TwoSqueezed, 1.0, lambda, 1.0, 0.3)
        };
        let s = build_input(&c).unwrap();
        let r = lambda.sqrt().asinh();
        // y of a₁ and a₂ squeezed, vacuum normalization 1/2
        assert_relative_eq!(s.cov()[(1, 1)], 0.5 * (-2.0 * r).exp(), epsilon = 1e-13);
        assert_relative_eq!(s.cov()[(5, 5)], 0.5 * (-2.0 * r).exp(), epsilon = 1e-13);
    }

    #[test]
    fn coherent_only_statistics() {
        let (mu, eta, phi) = (5.0, 0.7, 1.1);
        let c = cfg(InputKind::CoherentOnly, mu, 0.0, eta, phi);
        let p = propagate_central(&c).unwrap();
        let m = centered_photon_moments(&p.state, (0, 1), 2).unwrap();
        let expected = eta * (1.0 - p.tau_1) * mu;
        assert_relative_eq!(m.mean_1, expected, epsilon = 1e-12);
        assert_relative_eq!(m.var_1, expected, epsilon = 1e-12);
        assert!(m.cov.abs() < 1e-12);
    }

    #[test]
    fn twin_beam_only_covariance() {
        let (lambda, eta) = (1.3, 0.8);
        let c = HolometerConfig {
            phi0_2: 0.9,
            ..cfg(InputKind::Twb, 0.0, lambda, eta, 0.4)
        };
        let p = propagate_central(&c).unwrap();
        let m = centered_photon_moments(&p.state, (0, 1), 2).unwrap();
        assert_relative_eq!(
            m.cov,
            eta * eta * p.tau_1 * p.tau_2 * lambda * (1.0 + lambda),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mixed_covariance_at_quarter_phase() {
        let (mu, lambda, eta, phi) = (40.0, 0.6, 0.9, 0.7);
        let c = HolometerConfig {
            psi: FRAC_PI_2,
            ..cfg(InputKind::Twb, mu, lambda, eta, phi)
        };
        let p = propagate_central(&c).unwrap();
        let m = centered_photon_moments(&p.state, (0, 1), 2).unwrap();
        let tau = p.tau_1;
        let twb = eta * eta * tau * tau * lambda * (1.0 + lambda);
        let coh = eta * (1.0 - tau) * mu;
        assert_relative_eq!(m.cov, twb + 2.0 * (twb * coh * coh).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn symmetric_config_exchange() {
        let c = cfg(InputKind::Twb, 7.0, 0.4, 0.85, 0.5);
        let p = propagate_central(&c).unwrap();
        let m = centered_photon_moments(&p.state, (0, 1), 4).unwrap();
        let swapped = centered_photon_moments(&p.state, (1, 0), 4).unwrap();
        for (&(a, b), v) in &m.centered {
            assert_relative_eq!(*v, swapped.centered[&(b, a)], max_relative = 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let mut c = HolometerConfig::default();
        c.eta = 1.2;
        assert!(build_input(&c).is_err());
        c.eta = 0.5;
        c.mu = -1.0;
        assert!(build_input(&c).is_err());
    }

    #[test]
    fn config_json_field_names() {
        let c = HolometerConfig::default();
        let json = serde_json::to_value(&c).unwrap();
        for key in ["mu", "psi", "lambda", "eta", "phi0_1", "phi0_2", "input_kind", "theta", "theta_xi"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        let parsed: HolometerConfig =
            serde_json::from_str(r#"{"mu": 3.0, "input_kind": "two_squeezed"}"#).unwrap();
        assert_eq!(parsed.mu, 3.0);
        assert_eq!(parsed.input_kind, InputKind::TwoSqueezed);
        assert_eq!(parsed.lambda, HolometerConfig::default().lambda);
    }

    #[test]
    fn readout_model_matches_engine() {
        for kind in [InputKind::Twb, InputKind::TwoSqueezed, InputKind::CoherentOnly] {
            let c = HolometerConfig {
                eta_2: Some(0.6),
                theta: 0.3,
                ..cfg(kind, 25.0, 0.7, 0.85, 0.4)
            };
            let model = ReadoutModel::new(&c).unwrap();
            let (p1, p2) = (0.4, -1.3);
            let fast = model.photon_moments(p1, p2);
            let p = propagate(&c, p1, p2).unwrap();
            let slow = centered_photon_moments(&p.state, (0, 1), 2).unwrap();
            for (a, b) in [
                (fast.mean_1, slow.mean_1),
                (fast.mean_2, slow.mean_2),
                (fast.var_1, slow.var_1),
                (fast.var_2, slow.var_2),
                (fast.cov, slow.cov),
            ] {
                assert_relative_eq!(a, b, max_relative = 1e-12, epsilon = 1e-12);
            }
            let g = model.gaussian(p1, p2);
            for i in 0..4 {
                assert_relative_eq!(g.mean[i], p.state.mean()[i], epsilon = 1e-12);
                for j in 0..4 {
                    assert_relative_eq!(g.cov[(i, j)], p.state.cov()[(i, j)], epsilon = 1e-12);
                }
            }
        }
    }
}
