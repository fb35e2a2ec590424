//! Monte-Carlo averaging of the estimators over correlated phase noise and
//! recovery of the injected phase covariance.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{
    estimate_phase_covariance, mixed_derivative, mixed_derivative_with, second_derivative_with,
    EstimatorKind, EstimatorSpec,
};
use crate::gaussian::{centered_photon_moments, GaussianState};
use crate::holometer::{build_input, propagate_input, HolometerConfig, ReadoutModel};

/// Smallest sample count accepted by the Monte-Carlo drivers.
pub const MIN_SAMPLES: usize = 1000;
/// Largest marginal phase variance for the second-order expansion.
pub const MAX_EXPANSION_SIGMA2: f64 = 1e-4;

/// Mixes a seed into the stream used by the uncorrelated configuration.
const PERP_SEED_MIX: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NoiseConfiguration {
    /// Correlated phase fluctuations.
    Parallel,
    /// Independent phase fluctuations with the same marginals.
    Perpendicular,
}

/// Zero-mean bivariate Gaussian phase noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseNoiseModel {
    /// Marginal variance of each phase (rad²).
    pub sigma2: f64,
    /// `E[δφ₁δφ₂]` (rad²); zero for the perpendicular configuration.
    pub epsilon: f64,
    pub configuration: NoiseConfiguration,
    pub sampler_seed: u64,
}

impl PhaseNoiseModel {
    pub fn new(sigma2: f64, epsilon: f64, configuration: NoiseConfiguration, sampler_seed: u64) -> Result<Self> {
        let epsilon = match configuration {
            NoiseConfiguration::Parallel => epsilon,
            NoiseConfiguration::Perpendicular => 0.0,
        };
        let m = PhaseNoiseModel {
            sigma2,
            epsilon,
            configuration,
            sampler_seed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn parallel(sigma2: f64, epsilon: f64, seed: u64) -> Result<Self> {
        PhaseNoiseModel::new(sigma2, epsilon, NoiseConfiguration::Parallel, seed)
    }

    pub fn perpendicular(sigma2: f64, seed: u64) -> Result<Self> {
        PhaseNoiseModel::new(sigma2, 0.0, NoiseConfiguration::Perpendicular, seed)
    }

    /// Matched `(∥, ⊥)` models drawn from distinct streams derived from `seed`.
    pub fn pair(sigma2: f64, epsilon: f64, seed: u64) -> Result<(Self, Self)> {
        Ok((
            PhaseNoiseModel::parallel(sigma2, epsilon, seed)?,
            PhaseNoiseModel::perpendicular(sigma2, seed ^ PERP_SEED_MIX)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 >= 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma2 = {} must be ≥ 0", self.sigma2)));
        }
        if !(self.epsilon.abs() <= self.sigma2) {
            return Err(Error::InvalidParameter(format!(
                "|epsilon| = {} exceeds sigma2 = {}",
                self.epsilon.abs(),
                self.sigma2
            )));
        }
        Ok(())
    }

    /// `n` draws of `(δφ₁, δφ₂)`.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.sampler_seed);
        let sigma = self.sigma2.sqrt();
        let rho = if self.sigma2 > 0.0 {
            self.epsilon / self.sigma2
        } else {
            0.0
        };
        let rho_c = (1.0 - rho * rho).max(0.0).sqrt();
        (0..n)
            .map(|_| {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                (sigma * z1, sigma * (rho * z1 + rho_c * z2))
            })
            .collect()
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Pairwise summation; the result does not depend on how batches are split.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 32 {
        return values.iter().sum();
    }
    let (a, b) = values.split_at(values.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Mean about the first sample, so constant data are reproduced exactly.
fn mean_of(values: &[f64]) -> f64 {
    let first = values[0];
    let shifted: Vec<f64> = values.iter().map(|v| v - first).collect();
    first + pairwise_sum(&shifted) / values.len() as f64
}

/// Mean and standard error, two-pass.
pub fn summarize(values: &[f64]) -> McEstimate {
    let n = values.len();
    let mean = mean_of(values);
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = if n > 1 {
        pairwise_sum(&sq) / (n - 1) as f64
    } else {
        0.0
    };
    McEstimate {
        mean,
        std_error: (var / n as f64).sqrt(),
        n_samples: n,
    }
}

/// `⟨Ĉ⟩` and `⟨Ĉ²⟩` at arbitrary phases, with the centering constants of
/// the estimator fixed at the central phases.
pub struct EstimatorEvaluator {
    kind: EstimatorKind,
    model: ReadoutModel,
    input: GaussianState,
    config: HolometerConfig,
    /// `(⟨Y₁⟩, ⟨Y₂⟩)` or `(⟨N₁ ± N₂⟩, 0)` at the central phases.
    center: (f64, f64),
}

impl EstimatorEvaluator {
    pub fn new(config: &HolometerConfig, kind: EstimatorKind) -> Result<Self> {
        let model = ReadoutModel::new(config)?;
        let (p1, p2) = (config.phi0_1, config.phi0_2);
        let center = match kind {
            EstimatorKind::QuadratureProduct => {
                let q = model.quadratures(p1, p2);
                (q.mean_1, q.mean_2)
            }
            EstimatorKind::PlainDifference => return Err(Error::DegenerateEstimator(kind.name())),
            _ => {
                let m = model.photon_moments(p1, p2);
                (m.mean_1 + photon_sign(kind) * m.mean_2, 0.0)
            }
        };
        Ok(EstimatorEvaluator {
            kind,
            model,
            input: build_input(config)?,
            config: config.clone(),
            center,
        })
    }

    /// `⟨Ĉ(φ₁, φ₂)⟩`.
    pub fn mean(&self, phi_1: f64, phi_2: f64) -> f64 {
        match self.kind {
            EstimatorKind::QuadratureProduct => {
                let q = self.model.quadratures(phi_1, phi_2);
                let (u1, u2) = (q.mean_1 - self.center.0, q.mean_2 - self.center.1);
                q.cov + u1 * u2
            }
            _ => {
                let s = photon_sign(self.kind);
                let m = self.model.photon_moments(phi_1, phi_2);
                let shift = m.mean_1 + s * m.mean_2 - self.center.0;
                m.var_1 + m.var_2 + 2.0 * s * m.cov + shift * shift
            }
        }
    }

    /// `⟨Ĉ(φ₁, φ₂)²⟩`.
    pub fn second_moment(&self, phi_1: f64, phi_2: f64) -> Result<f64> {
        match self.kind {
            EstimatorKind::QuadratureProduct => {
                let q = self.model.quadratures(phi_1, phi_2);
                let (u1, u2) = (q.mean_1 - self.center.0, q.mean_2 - self.center.1);
                Ok((q.var_1 + u1 * u1) * (q.var_2 + u2 * u2) + 2.0 * q.cov * q.cov + 4.0 * u1 * u2 * q.cov)
            }
            _ => {
                let s = photon_sign(self.kind);
                let p = propagate_input(&self.input, &self.config, phi_1, phi_2)?;
                let m = centered_photon_moments(&p.state, (0, 1), 4)?;
                let k = |order| {
                    m.combined_moment(s, order)
                        .ok_or_else(|| Error::Undefined("centered moments missing".into()))
                };
                let shift = m.mean_1 + s * m.mean_2 - self.center.0;
                let (k2, k3, k4) = (k(2)?, k(3)?, k(4)?);
                Ok(k4 + 4.0 * k3 * shift + 6.0 * k2 * shift * shift + shift.powi(4))
            }
        }
    }
}

fn photon_sign(kind: EstimatorKind) -> f64 {
    match kind {
        EstimatorKind::TwbSumSquared => 1.0,
        _ => -1.0,
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "n_samples = {n} below the minimum {MIN_SAMPLES}"
        )));
    }
    Ok(())
}

/// `E_x[⟨Ĉ⟩]` over explicit phase samples.
pub fn mc_expectation_from_samples(
    config: &HolometerConfig,
    spec: &EstimatorSpec,
    samples: &[(f64, f64)],
) -> Result<McEstimate> {
    spec.check(config)?;
    let eval = EstimatorEvaluator::new(config, spec.kind)?;
    let values: Vec<f64> = samples
        .iter()
        .map(|(d1, d2)| eval.mean(config.phi0_1 + d1, config.phi0_2 + d2))
        .collect();
    Ok(summarize(&values))
}

/// `E_x[⟨Ĉ⟩]` with its Monte-Carlo standard error.
pub fn mc_expectation(
    config: &HolometerConfig,
    spec: &EstimatorSpec,
    noise: &PhaseNoiseModel,
    n_samples: usize,
) -> Result<McEstimate> {
    noise.validate()?;
    check_samples(n_samples)?;
    mc_expectation_from_samples(config, spec, &noise.samples(n_samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceRecovery {
    pub epsilon_hat: f64,
    pub std_error: f64,
    pub mean_parallel: McEstimate,
    pub mean_perp: McEstimate,
    pub denominator: f64,
}

impl CovarianceRecovery {
    /// `(ε̂ - ε)/SE`.
    pub fn pull(&self, injected: f64) -> f64 {
        (self.epsilon_hat - injected) / self.std_error
    }
}

/// `ε̂ = (E∥[Ĉ] - E⊥[Ĉ]) / ⟨∂²Ĉ/∂φ₁∂φ₂⟩`.
pub fn recover_covariance(
    config: &HolometerConfig,
    spec: &EstimatorSpec,
    noise_par: &PhaseNoiseModel,
    noise_perp: &PhaseNoiseModel,
    n_samples: usize,
) -> Result<CovarianceRecovery> {
    if noise_par.configuration != NoiseConfiguration::Parallel
        || noise_perp.configuration != NoiseConfiguration::Perpendicular
    {
        return Err(Error::InvalidParameter(
            "expected a parallel and a perpendicular noise model".into(),
        ));
    }
    if noise_par.sigma2 != noise_perp.sigma2 {
        return Err(Error::InvalidParameter(format!(
            "marginal variances differ: {} vs {}",
            noise_par.sigma2, noise_perp.sigma2
        )));
    }
    let mean_parallel = mc_expectation(config, spec, noise_par, n_samples)?;
    let mean_perp = mc_expectation(config, spec, noise_perp, n_samples)?;
    let denominator = mixed_derivative(config, spec)?;
    let epsilon_hat = estimate_phase_covariance(mean_parallel.mean, mean_perp.mean, denominator)?;
    let std_error = mean_parallel.std_error.hypot(mean_perp.std_error) / denominator.abs();
    Ok(CovarianceRecovery {
        epsilon_hat,
        std_error,
        mean_parallel,
        mean_perp,
        denominator,
    })
}

/// Second-order expansion of `Var_x[Ĉ]` in the phase noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceExpansion {
    pub a_11: f64,
    pub a_22: f64,
    pub a_12: f64,
    /// `Var[Ĉ]` at the central phases.
    pub var_zero: f64,
}

impl VarianceExpansion {
    /// `Var₀ + A₁₁σ² + A₂₂σ² + A₁₂ε`.
    pub fn predict(&self, sigma2: f64, epsilon: f64) -> f64 {
        self.var_zero + (self.a_11 + self.a_22) * sigma2 + self.a_12 * epsilon
    }
}

/// Coefficients from `F = ⟨Ĉ²⟩` and `G = ⟨Ĉ⟩`:
/// `A_kk = F_kk/2 - G·G_kk`, `A₁₂ = F₁₂ - 2G·G₁₂`.
pub fn variance_expansion(
    config: &HolometerConfig,
    spec: &EstimatorSpec,
    sigma2: f64,
    epsilon: f64,
) -> Result<VarianceExpansion> {
    PhaseNoiseModel::parallel(sigma2, epsilon, 0)?;
    if sigma2 > MAX_EXPANSION_SIGMA2 {
        return Err(Error::InvalidParameter(format!(
            "sigma2 = {sigma2} outside the small-noise range (≤ {MAX_EXPANSION_SIGMA2})"
        )));
    }
    spec.check(config)?;
    let eval = EstimatorEvaluator::new(config, spec.kind)?;
    let (p1, p2) = (config.phi0_1, config.phi0_2);
    let step = spec.derivative_step;
    let g0 = eval.mean(p1, p2);
    let f0 = eval.second_moment(p1, p2)?;
    let g11 = second_derivative_with(|x| Ok(eval.mean(x, p2)), p1, step)?;
    let g22 = second_derivative_with(|x| Ok(eval.mean(p1, x)), p2, step)?;
    let f11 = second_derivative_with(|x| eval.second_moment(x, p2), p1, step)?;
    let f22 = second_derivative_with(|x| eval.second_moment(p1, x), p2, step)?;
    // mixed differences are taken along the diagonal through (φ₀, φ₀)
    let shift = p2 - p1;
    let g12 = mixed_derivative_with(|a, b| Ok(eval.mean(a, b + shift)), p1, step)?;
    let f12 = mixed_derivative_with(|a, b| eval.second_moment(a, b + shift), p1, step)?;
    Ok(VarianceExpansion {
        a_11: 0.5 * f11 - g0 * g11,
        a_22: 0.5 * f22 - g0 * g22,
        a_12: f12 - 2.0 * g0 * g12,
        var_zero: f0 - g0 * g0,
    })
}

/// Direct Monte-Carlo `Var_x[Ĉ] = E_x[⟨Ĉ²⟩] - E_x[⟨Ĉ⟩]²`, with a delta-method
/// standard error.
pub fn mc_variance(
    config: &HolometerConfig,
    spec: &EstimatorSpec,
    noise: &PhaseNoiseModel,
    n_samples: usize,
) -> Result<McEstimate> {
    noise.validate()?;
    check_samples(n_samples)?;
    spec.check(config)?;
    let eval = EstimatorEvaluator::new(config, spec.kind)?;
    let mut g = Vec::with_capacity(n_samples);
    let mut f = Vec::with_capacity(n_samples);
    for (d1, d2) in noise.samples(n_samples) {
        let (a, b) = (config.phi0_1 + d1, config.phi0_2 + d2);
        g.push(eval.mean(a, b));
        f.push(eval.second_moment(a, b)?);
    }
    let (gm, fm) = (mean_of(&g), mean_of(&f));
    let n = n_samples as f64;
    let centered = |v: &[f64], m: f64| -> Vec<f64> { v.iter().map(|x| x - m).collect() };
    let (dg, df) = (centered(&g, gm), centered(&f, fm));
    let prod = |a: &[f64], b: &[f64]| pairwise_sum(&a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<_>>()) / (n - 1.0);
    let (var_g, var_f, cov_fg) = (prod(&dg, &dg), prod(&df, &df), prod(&df, &dg));
    let var = var_f + 4.0 * gm * gm * var_g - 4.0 * gm * cov_fg;
    Ok(McEstimate {
        mean: fm - gm * gm,
        std_error: (var.max(0.0) / n).sqrt(),
        n_samples,
    })
}

/// Noise-averaged `⟨N₁⟩` and `⟨δN₁²⟩` of the first interferometer.
pub fn mc_single_arm(
    config: &HolometerConfig,
    noise: &PhaseNoiseModel,
    n_samples: usize,
) -> Result<(McEstimate, McEstimate)> {
    noise.validate()?;
    check_samples(n_samples)?;
    let model = ReadoutModel::new(config)?;
    let (means, vars): (Vec<f64>, Vec<f64>) = noise
        .samples(n_samples)
        .into_iter()
        .map(|(d1, d2)| {
            let m = model.photon_moments(config.phi0_1 + d1, config.phi0_2 + d2);
            (m.mean_1, m.var_1)
        })
        .unzip();
    Ok((summarize(&means), summarize(&vars)))
}
