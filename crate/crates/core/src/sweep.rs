//! Parameter sweeps, oracle suites and Monte-Carlo runs as numeric tables.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::{classical_benchmark, u0, u0_asymptotic, AsymptoticBranch, EstimatorKind, EstimatorSpec, UncertaintyResult};
use crate::fock::{oracle_moments, BsConvention, FockState};
use crate::gaussian::centered_photon_moments;
use crate::holometer::{propagate_central, HolometerConfig, InputKind};
use crate::moments::ReadoutMoments;
use crate::observables::nrf;
use crate::phase_noise::{recover_covariance, CovarianceRecovery, PhaseNoiseModel};

/// Relative tolerance of the oracle comparison.
pub const ORACLE_REL_TOL: f64 = 1e-8;
/// Absolute floor for moments that vanish identically.
pub const ORACLE_ABS_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    Phi0,
    Eta,
    Lambda,
    Tau,
    Psi,
}

impl SweepVariable {
    pub fn name(self) -> &'static str {
        match self {
            SweepVariable::Phi0 => "phi0",
            SweepVariable::Eta => "eta",
            SweepVariable::Lambda => "lambda",
            SweepVariable::Tau => "tau",
            SweepVariable::Psi => "psi",
        }
    }

    pub fn apply(self, config: &mut HolometerConfig, value: f64) {
        match self {
            SweepVariable::Phi0 => {
                config.phi0_1 = value;
                config.phi0_2 = value;
            }
            SweepVariable::Eta => config.eta = value,
            SweepVariable::Lambda => config.lambda = value,
            SweepVariable::Tau => {
                let phi = 2.0 * value.sqrt().acos();
                config.phi0_1 = phi;
                config.phi0_2 = phi;
            }
            SweepVariable::Psi => config.psi = value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

/// Explicit values, or `points` values from `min` to `max` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range {
        min: f64,
        max: f64,
        points: usize,
        #[serde(default)]
        spacing: Spacing,
    },
}

impl Grid {
    pub fn linear(min: f64, max: f64, points: usize) -> Self {
        Grid::Range {
            min,
            max,
            points,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(min: f64, max: f64, points: usize) -> Self {
        Grid::Range {
            min,
            max,
            points,
            spacing: Spacing::Log,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range {
                min,
                max,
                points,
                spacing,
            } => {
                if points == 0 {
                    return Err(Error::InvalidParameter("grid has no points".into()));
                }
                if !min.is_finite() || !max.is_finite() {
                    return Err(Error::InvalidParameter("grid bounds must be finite".into()));
                }
                if spacing == Spacing::Log && !(min > 0.0 && max > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "log grid needs positive bounds, got [{min}, {max}]"
                    )));
                }
                let at = |t: f64| match spacing {
                    Spacing::Linear => min + (max - min) * t,
                    Spacing::Log => (min.ln() + (max.ln() - min.ln()) * t).exp(),
                };
                if points == 1 {
                    vec![min]
                } else {
                    // pin the end points so they are exact
                    (0..points)
                        .map(|i| match i {
                            0 => min,
                            _ if i == points - 1 => max,
                            _ => at(i as f64 / (points - 1) as f64),
                        })
                        .collect()
                }
            }
        };
        if v.is_empty() {
            return Err(Error::InvalidParameter("grid is empty".into()));
        }
        if let Some(x) = v.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid value {x} is not finite")));
        }
        Ok(v)
    }
}

/// A second swept parameter, one curve per value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepOutput {
    /// `NRF₋` at `ψ = π/2`.
    NrfMinus,
    /// `NRF₊` at `ψ = 0`.
    NrfPlus,
    U0Twb,
    U0Sq,
    U0TwbSum,
    UCl,
    /// `U⁽⁰⁾/U_CL` for the three readouts.
    Ratios,
    RegimeK,
    /// The asymptotic ratio forms, one column each.
    Asymptotes,
}

impl SweepOutput {
    fn columns(self) -> Vec<String> {
        let fixed: &[&str] = match self {
            SweepOutput::NrfMinus => &["nrf_minus"],
            SweepOutput::NrfPlus => &["nrf_plus"],
            SweepOutput::U0Twb => &["u0_twb"],
            SweepOutput::U0Sq => &["u0_sq"],
            SweepOutput::U0TwbSum => &["u0_twb_sum"],
            SweepOutput::UCl => &["u_cl"],
            SweepOutput::Ratios => &["ratio_twb", "ratio_sq", "ratio_twb_sum"],
            SweepOutput::RegimeK => &["regime_k"],
            SweepOutput::Asymptotes => {
                return AsymptoticBranch::ALL
                    .iter()
                    .map(|b| format!("asym_{}", b.name()))
                    .collect()
            }
        };
        fixed.iter().map(|s| s.to_string()).collect()
    }
}

/// Named defaults for the uncertainty scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UncertaintyPreset {
    /// Ratio against `φ₀` for several efficiencies (λ = 10).
    Phi0Eta,
    /// Ratio against `φ₀` for several brightnesses (η = 0.95).
    Phi0Lambda,
    /// Ratio against `η` for several brightnesses (φ₀ = 10⁻⁸).
    EtaLambda,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Grid,
    #[serde(default)]
    pub family: Option<Family>,
    pub base_config: HolometerConfig,
    pub outputs: Vec<SweepOutput>,
}

const UNCERTAINTY_OUTPUTS: [SweepOutput; 7] = [
    SweepOutput::UCl,
    SweepOutput::U0Twb,
    SweepOutput::U0Sq,
    SweepOutput::U0TwbSum,
    SweepOutput::Ratios,
    SweepOutput::RegimeK,
    SweepOutput::Asymptotes,
];

impl SweepSpec {
    /// `NRF₋(ψ=π/2)` and `NRF₊(ψ=0)` against `τ` (η = 1, μ = 10⁶).
    pub fn nrf_default() -> Self {
        SweepSpec {
            variable: SweepVariable::Tau,
            grid: Grid::linear(0.0, 1.0, 101),
            family: Some(Family {
                variable: SweepVariable::Lambda,
                values: vec![0.1, 1.0, 10.0],
            }),
            base_config: HolometerConfig {
                mu: 1e6,
                eta: 1.0,
                psi: FRAC_PI_2,
                input_kind: InputKind::Twb,
                ..Default::default()
            },
            outputs: vec![SweepOutput::NrfMinus, SweepOutput::NrfPlus, SweepOutput::RegimeK],
        }
    }

    pub fn uncertainty_default(preset: UncertaintyPreset) -> Self {
        let base = HolometerConfig {
            mu: 3e12,
            psi: FRAC_PI_2,
            input_kind: InputKind::Twb,
            ..Default::default()
        };
        let (variable, grid, family, base_config) = match preset {
            UncertaintyPreset::Phi0Eta => (
                SweepVariable::Phi0,
                Grid::log(1e-9, 1.0, 73),
                Family {
                    variable: SweepVariable::Eta,
                    values: vec![0.9, 0.95, 0.99, 1.0],
                },
                HolometerConfig { lambda: 10.0, ..base },
            ),
            UncertaintyPreset::Phi0Lambda => (
                SweepVariable::Phi0,
                Grid::log(1e-9, 1.0, 73),
                Family {
                    variable: SweepVariable::Lambda,
                    values: vec![0.1, 1.0, 10.0],
                },
                HolometerConfig { eta: 0.95, ..base },
            ),
            UncertaintyPreset::EtaLambda => (
                SweepVariable::Eta,
                Grid::linear(0.9, 1.0, 101),
                Family {
                    variable: SweepVariable::Lambda,
                    values: vec![1e-3, 0.1, 1.0, 3.0, 10.0],
                },
                HolometerConfig {
                    phi0_1: 1e-8,
                    phi0_2: 1e-8,
                    ..base
                },
            ),
        };
        SweepSpec {
            variable,
            grid,
            family: Some(family),
            base_config,
            outputs: UNCERTAINTY_OUTPUTS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.values()?;
        if self.outputs.is_empty() {
            return Err(Error::InvalidParameter("no outputs requested".into()));
        }
        if let Some(f) = &self.family {
            if f.values.is_empty() {
                return Err(Error::InvalidParameter("family has no values".into()));
            }
            if f.variable == self.variable {
                return Err(Error::InvalidParameter(format!(
                    "family and grid both sweep {}",
                    f.variable.name()
                )));
            }
        }
        Ok(())
    }

    /// Column names; every row ends with `ok` (1, or 0 if a cell failed).
    pub fn columns(&self) -> Vec<String> {
        let mut c = vec![self.variable.name().to_string()];
        if let Some(f) = &self.family {
            c.push(f.variable.name().to_string());
        }
        c.extend(self.outputs.iter().flat_map(|o| o.columns()));
        c.push("ok".into());
        c
    }

    /// `(family value, grid value)` pairs in output order.
    pub fn points(&self) -> Result<Vec<(Option<f64>, f64)>> {
        self.validate()?;
        let grid = self.grid.values()?;
        Ok(match &self.family {
            None => grid.into_iter().map(|x| (None, x)).collect(),
            Some(f) => f
                .values
                .iter()
                .flat_map(|&v| grid.iter().map(move |&x| (Some(v), x)))
                .collect(),
        })
    }

    fn sweeps_psi(&self) -> bool {
        self.variable == SweepVariable::Psi
            || self.family.as_ref().is_some_and(|f| f.variable == SweepVariable::Psi)
    }

    /// One table row. Cells that cannot be evaluated are NaN and clear `ok`.
    pub fn evaluate(&self, family: Option<f64>, x: f64) -> Vec<f64> {
        let mut config = self.base_config.clone();
        let mut row = vec![x];
        if let (Some(f), Some(v)) = (&self.family, family) {
            f.variable.apply(&mut config, v);
            row.push(v);
        }
        self.variable.apply(&mut config, x);
        let mut ok = true;
        let mut cell = |r: Result<f64>| match r {
            Ok(v) => v,
            Err(e) => {
                log::warn!("{}={x}: {e}", self.variable.name());
                ok = false;
                f64::NAN
            }
        };
        let keep_psi = self.sweeps_psi();
        let mut uncertainty = Uncertainties::new(&config, keep_psi);
        for out in &self.outputs {
            match out {
                SweepOutput::NrfMinus => {
                    let c = with_psi(&config, FRAC_PI_2, keep_psi);
                    row.push(cell(nrf(&c).map(|r| r.nrf_minus)));
                }
                SweepOutput::NrfPlus => {
                    let c = with_psi(&config, 0.0, keep_psi);
                    row.push(cell(nrf(&c).map(|r| r.nrf_plus)));
                }
                SweepOutput::U0Twb => row.push(cell(uncertainty.twb().map(|r| r.u0))),
                SweepOutput::U0Sq => row.push(cell(uncertainty.sq().map(|r| r.u0))),
                SweepOutput::U0TwbSum => row.push(cell(uncertainty.twb_sum().map(|r| r.u0))),
                SweepOutput::UCl => row.push(cell(classical_benchmark(&config))),
                SweepOutput::Ratios => {
                    row.push(cell(uncertainty.twb().map(|r| r.ratio)));
                    row.push(cell(uncertainty.sq().map(|r| r.ratio)));
                    row.push(cell(uncertainty.twb_sum().map(|r| r.ratio)));
                }
                SweepOutput::RegimeK => row.push(config.regime_k()),
                SweepOutput::Asymptotes => {
                    row.extend(AsymptoticBranch::ALL.iter().map(|&b| u0_asymptotic(&config, b)))
                }
            }
        }
        row.push(if ok { 1.0 } else { 0.0 });
        row
    }

    pub fn run(&self) -> Result<Table> {
        let rows = self
            .points()?
            .into_iter()
            .map(|(f, x)| self.evaluate(f, x))
            .collect();
        Ok(Table {
            columns: self.columns(),
            rows,
        })
    }
}

fn with_psi(config: &HolometerConfig, psi: f64, keep: bool) -> HolometerConfig {
    let mut c = config.clone();
    if !keep {
        c.psi = psi;
    }
    c
}

/// The three readouts of one sweep point, computed on first use.
struct Uncertainties<'a> {
    config: &'a HolometerConfig,
    keep_psi: bool,
    cache: [Option<Result<UncertaintyResult>>; 3],
}

impl<'a> Uncertainties<'a> {
    fn new(config: &'a HolometerConfig, keep_psi: bool) -> Self {
        Uncertainties {
            config,
            keep_psi,
            cache: [None, None, None],
        }
    }

    fn get(&mut self, slot: usize, input: InputKind, kind: EstimatorKind, psi: f64) -> Result<UncertaintyResult> {
        if self.cache[slot].is_none() {
            let mut c = with_psi(self.config, psi, self.keep_psi);
            c.input_kind = input;
            let mut spec = EstimatorSpec::new(kind);
            if self.keep_psi {
                spec = spec.with_phase_override();
            }
            self.cache[slot] = Some(u0(&c, &spec));
        }
        self.cache[slot].clone().expect("filled above")
    }

    fn twb(&mut self) -> Result<UncertaintyResult> {
        self.get(0, InputKind::Twb, EstimatorKind::TwbDifferenceSquared, FRAC_PI_2)
    }

    fn sq(&mut self) -> Result<UncertaintyResult> {
        let psi = self.config.psi;
        self.get(1, InputKind::TwoSqueezed, EstimatorKind::QuadratureProduct, psi)
    }

    fn twb_sum(&mut self) -> Result<UncertaintyResult> {
        self.get(2, InputKind::Twb, EstimatorKind::TwbSumSquared, 0.0)
    }
}

/// Numeric table written as CSV with a `#` header line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = format!("# {}\n", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_float(v)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest representation that parses back to the same `f64`; exponent
/// form outside `[1e-5, 1e16)`.
pub fn format_float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Engine against Fock oracle for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub config: HolometerConfig,
    pub max_rel_dev: f64,
    pub pass: bool,
    pub error: Option<String>,
}

/// Largest relative deviation over all moments, and whether each lies
/// within `rel·max(|a|,|b|) + abs`. Moments smaller than `abs/rel` are
/// measured against that size instead of their own.
pub fn compare_moments(a: &ReadoutMoments, b: &ReadoutMoments, rel: f64, abs: f64) -> (f64, bool) {
    let mut worst = 0.0f64;
    let mut ok = true;
    let floor = abs / rel;
    let mut check = |x: f64, y: f64| {
        let d = (x - y).abs();
        let scale = x.abs().max(y.abs());
        worst = worst.max(d / scale.max(floor));
        ok &= d <= rel * scale + abs;
    };
    check(a.mean_1, b.mean_1);
    check(a.mean_2, b.mean_2);
    for (key, &v) in &a.centered {
        // a missing moment compares as NaN and fails
        check(v, b.centered.get(key).copied().unwrap_or(f64::NAN));
    }
    (worst, ok)
}

pub fn oracle_check(config: &HolometerConfig) -> OracleCheck {
    let run = || -> Result<(f64, bool)> {
        let engine = centered_photon_moments(&propagate_central(config)?.state, (0, 1), 4)?;
        let oracle = oracle_moments(config, 4)?;
        Ok(compare_moments(&engine, &oracle, ORACLE_REL_TOL, ORACLE_ABS_TOL))
    };
    match run() {
        Ok((max_rel_dev, pass)) => OracleCheck {
            config: config.clone(),
            max_rel_dev,
            pass,
            error: None,
        },
        Err(e) => OracleCheck {
            config: config.clone(),
            max_rel_dev: f64::NAN,
            pass: false,
            error: Some(e.to_string()),
        },
    }
}

/// Random twin-beam configurations inside the oracle's range
/// (μ ≤ 4, λ ≤ 1, τ, η ∈ (0, 1], ψ, θ ∈ [0, 2π)).
pub fn random_oracle_configs(n: usize, seed: u64) -> Vec<HolometerConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| HolometerConfig {
            mu: rng.random_range(0.0..=4.0),
            lambda: rng.random_range(0.0..=1.0),
            eta: 1.0 - rng.random_range(0.0..1.0),
            psi: rng.random_range(0.0..2.0 * PI),
            theta: rng.random_range(0.0..2.0 * PI),
            phi0_1: 2.0 * (1.0 - rng.random_range(0.0..1.0f64)).sqrt().acos(),
            phi0_2: 2.0 * (1.0 - rng.random_range(0.0..1.0f64)).sqrt().acos(),
            input_kind: InputKind::Twb,
            ..Default::default()
        })
        .collect()
}

/// Probability of `|1,1⟩` after a balanced beam splitter acting on `|1,1⟩`.
/// Zero for a unitary convention.
pub fn hom_coincidence(convention: BsConvention) -> Result<f64> {
    let one = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let out = FockState::product(&[one.clone(), one])?.apply_bs_with(0, 1, 0.5, convention)?;
    Ok(out.amplitude(&[1, 1])?.norm_sqr())
}

pub fn oracle_table(checks: &[OracleCheck]) -> Table {
    let columns = [
        "index", "mu", "lambda", "tau_1", "tau_2", "eta", "psi", "theta", "max_rel_dev", "pass",
    ];
    let rows = checks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let k = &c.config;
            vec![
                i as f64,
                k.mu,
                k.lambda,
                k.tau_1(),
                k.tau_2(),
                k.eta,
                k.psi,
                k.theta,
                c.max_rel_dev,
                if c.pass { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    Table {
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

/// Monte-Carlo covariance recovery for one injected `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McRow {
    pub epsilon: f64,
    pub recovery: CovarianceRecovery,
}

impl McRow {
    pub fn pull(&self) -> f64 {
        self.recovery.pull(self.epsilon)
    }
}

pub fn mc_row(
    config: &HolometerConfig,
    spec: &EstimatorSpec,
    sigma2: f64,
    epsilon: f64,
    n_samples: usize,
    seed: u64,
) -> Result<McRow> {
    let (par, perp) = PhaseNoiseModel::pair(sigma2, epsilon, seed)?;
    Ok(McRow {
        epsilon,
        recovery: recover_covariance(config, spec, &par, &perp, n_samples)?,
    })
}

pub fn mc_table(rows: &[McRow]) -> Table {
    let columns = [
        "epsilon",
        "epsilon_hat",
        "std_error",
        "pull",
        "mean_parallel",
        "se_parallel",
        "mean_perp",
        "se_perp",
        "denominator",
    ];
    let rows = rows
        .iter()
        .map(|r| {
            let c = &r.recovery;
            vec![
                r.epsilon,
                c.epsilon_hat,
                c.std_error,
                r.pull(),
                c.mean_parallel.mean,
                c.mean_parallel.std_error,
                c.mean_perp.mean,
                c.mean_perp.std_error,
                c.denominator,
            ]
        })
        .collect();
    Table {
        columns: columns.iter().map(|s| s.to_string()).collect(),
        rows,
    }
}

/// Coefficient of determination of `y` against `x`; `None` if `x` or `y`
/// is constant.
pub fn r_squared(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxx > 0.0 && syy > 0.0).then(|| sxy * sxy / (sxx * syy))
}
