mod config;

use std::f64::consts::FRAC_PI_2;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use twinbeam::estimation::{EstimatorKind, EstimatorSpec};
use twinbeam::fock::BsConvention;
use twinbeam::sweep::{
    hom_coincidence, mc_row, mc_table, oracle_check, oracle_table, r_squared, random_oracle_configs, Family, Grid,
    SweepOutput, SweepSpec, SweepVariable, Table, UncertaintyPreset,
};
use twinbeam::{HolometerConfig, InputKind};

use config::ConfigFile;

const DEFAULT_SEED: u64 = 2024;
const MAX_PULL: f64 = 3.0;
const MIN_R_SQUARED: f64 = 0.99;
const HOM_TOLERANCE: f64 = 1e-12;

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Verification(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Verification(_) => 2,
        }
    }
}

impl From<twinbeam::Error> for CliError {
    fn from(e: twinbeam::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

/// Photon statistics and phase-covariance uncertainty of two interferometers
/// fed with coherent and quantum light.
#[derive(Parser)]
#[command(name = "twinbeam", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON file with `HolometerConfig` fields and command options.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed for sampled configurations and noise (default: 2024).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// NRF₋ at ψ = π/2 and NRF₊ at ψ = 0 against the transmissivity.
    NrfScan {
        #[command(flatten)]
        common: Common,
    },
    /// Uncertainty ratios of the twin-beam and squeezed readouts.
    UncertaintyScan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Gaussian engine against the Fock-basis oracle.
    OracleCheck {
        #[command(flatten)]
        common: Common,
        /// Number of random configurations.
        #[arg(long)]
        n_configs: Option<usize>,
        /// Check only the configuration given by the file and defaults.
        #[arg(long)]
        single: bool,
        /// Beam-splitter convention for the two-photon interference check.
        #[arg(long, value_enum, default_value_t = Convention::Symmetric)]
        convention: Convention,
    },
    /// Monte-Carlo recovery of an injected phase covariance.
    McEstimate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Phi0Eta,
    Phi0Lambda,
    EtaLambda,
}

impl From<Preset> for UncertaintyPreset {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Phi0Eta => UncertaintyPreset::Phi0Eta,
            Preset::Phi0Lambda => UncertaintyPreset::Phi0Lambda,
            Preset::EtaLambda => UncertaintyPreset::EtaLambda,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Convention {
    Symmetric,
    BrokenSymmetricReal,
}

const SWEEP_KEYS: [&str; 6] = ["variable", "grid", "family", "outputs", "seed", "threads"];

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            match &e {
                CliError::Invalid(m) => eprintln!("error: {m}"),
                CliError::Verification(m) => eprintln!("verification failed: {m}"),
            }
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::NrfScan { common } => {
            let file = ConfigFile::load(common.config.as_deref(), &SWEEP_KEYS)?;
            let spec = sweep_spec(&file, SweepSpec::nrf_default())?;
            scan(&common, &file, &spec, "nrf-scan")
        }
        Command::UncertaintyScan { common, preset } => {
            let mut keys = SWEEP_KEYS.to_vec();
            keys.push("preset");
            let file = ConfigFile::load(common.config.as_deref(), &keys)?;
            let preset = match preset {
                Some(p) => p.into(),
                None => file.get("preset")?.unwrap_or(UncertaintyPreset::Phi0Eta),
            };
            let spec = sweep_spec(&file, SweepSpec::uncertainty_default(preset))?;
            scan(&common, &file, &spec, "uncertainty-scan")
        }
        Command::OracleCheck {
            common,
            n_configs,
            single,
            convention,
        } => oracle(&common, n_configs, single, convention),
        Command::McEstimate { common } => mc(&common),
    }
}

fn setup_threads(common: &Common, file: &ConfigFile) -> Result<(), CliError> {
    let threads = match common.threads {
        Some(t) => Some(t),
        None => file.get::<usize>("threads")?,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Invalid("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn seed(common: &Common, file: &ConfigFile) -> Result<u64, CliError> {
    Ok(match common.seed {
        Some(s) => s,
        None => file.get("seed")?.unwrap_or(DEFAULT_SEED),
    })
}

fn sweep_spec(file: &ConfigFile, mut spec: SweepSpec) -> Result<SweepSpec, CliError> {
    spec.base_config = file.holometer(&spec.base_config)?;
    if let Some(v) = file.get::<SweepVariable>("variable")? {
        spec.variable = v;
    }
    if let Some(g) = file.get::<Grid>("grid")? {
        spec.grid = g;
    }
    if file.has("family") {
        spec.family = file.get::<Option<Family>>("family")?.flatten();
    }
    if let Some(o) = file.get::<Vec<SweepOutput>>("outputs")? {
        spec.outputs = o;
    }
    spec.validate()?;
    Ok(spec)
}

fn write_table(common: &Common, table: &Table) -> Result<(), CliError> {
    let csv = table.to_csv();
    match &common.out {
        Some(path) => {
            fs::write(path, csv).map_err(|e| CliError::Invalid(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

/// One JSON line on stderr.
fn summary<T: Serialize>(value: &T) {
    eprintln!("{}", serde_json::to_string(value).expect("summary serializes"));
}

fn scan(common: &Common, file: &ConfigFile, spec: &SweepSpec, name: &str) -> Result<(), CliError> {
    setup_threads(common, file)?;
    let rows: Vec<Vec<f64>> = spec
        .points()?
        .par_iter()
        .map(|&(f, x)| spec.evaluate(f, x))
        .collect();
    let flagged = rows.iter().filter(|r| r.last() != Some(&1.0)).count();
    let table = Table {
        columns: spec.columns(),
        rows,
    };
    write_table(common, &table)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        command: &'a str,
        rows: usize,
        flagged: usize,
    }
    summary(&Summary {
        command: name,
        rows: table.rows.len(),
        flagged,
    });
    Ok(())
}

fn oracle(common: &Common, n_configs: Option<usize>, single: bool, convention: Convention) -> Result<(), CliError> {
    let file = ConfigFile::load(common.config.as_deref(), &["n_configs", "seed", "threads"])?;
    setup_threads(common, &file)?;
    let bs = match convention {
        Convention::Symmetric => BsConvention::Symmetric,
        Convention::BrokenSymmetricReal => BsConvention::BrokenSymmetricReal,
    };
    let hom = hom_coincidence(bs)?;
    let configs = if single {
        let c = file.holometer(&HolometerConfig {
            mu: 1.0,
            lambda: 0.5,
            eta: 1.0,
            phi0_1: 0.5,
            phi0_2: 0.5,
            ..Default::default()
        })?;
        c.validate()?;
        vec![c]
    } else {
        let n = match n_configs {
            Some(n) => n,
            None => file.get("n_configs")?.unwrap_or(100),
        };
        if n == 0 {
            return Err(CliError::Invalid("n_configs must be at least 1".into()));
        }
        random_oracle_configs(n, seed(common, &file)?)
    };
    let checks: Vec<_> = configs.par_iter().map(oracle_check).collect();
    for (i, c) in checks.iter().enumerate() {
        if let Some(e) = &c.error {
            log::warn!("config {i}: {e}");
        }
    }
    write_table(common, &oracle_table(&checks))?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let max_rel_dev = checks.iter().map(|c| c.max_rel_dev).fold(0.0, f64::max);
    let hom_pass = hom <= HOM_TOLERANCE;
    #[derive(Serialize)]
    struct Summary {
        command: &'static str,
        configs: usize,
        failed: usize,
        max_rel_dev: f64,
        hom_coincidence: f64,
        hom_pass: bool,
    }
    summary(&Summary {
        command: "oracle-check",
        configs: checks.len(),
        failed,
        max_rel_dev,
        hom_coincidence: hom,
        hom_pass,
    });
    if !hom_pass {
        return Err(CliError::Verification(format!(
            "two-photon coincidence {hom} after a balanced beam splitter"
        )));
    }
    if failed > 0 {
        return Err(CliError::Verification(format!("{failed} of {} configurations disagree", checks.len())));
    }
    Ok(())
}

fn mc(common: &Common) -> Result<(), CliError> {
    let file = ConfigFile::load(
        common.config.as_deref(),
        &["estimator", "sigma2", "epsilons", "n_samples", "seed", "threads"],
    )?;
    setup_threads(common, &file)?;
    let kind: EstimatorKind = file.get("estimator")?.unwrap_or(EstimatorKind::QuadratureProduct);
    let input_kind = match kind {
        EstimatorKind::QuadratureProduct => InputKind::TwoSqueezed,
        _ => InputKind::Twb,
    };
    let psi = kind.paired_psi().unwrap_or(FRAC_PI_2);
    let config = file.holometer(&HolometerConfig {
        mu: 1e6,
        lambda: 1.0,
        eta: 0.9,
        psi,
        phi0_1: 0.5,
        phi0_2: 0.5,
        input_kind,
        ..Default::default()
    })?;
    config.validate()?;
    let sigma2: f64 = file.get("sigma2")?.unwrap_or(1e-5);
    let epsilons: Vec<f64> = file.get("epsilons")?.unwrap_or_else(|| vec![0.0, 1e-8, 1e-7, 1e-6]);
    let n_samples: usize = file.get("n_samples")?.unwrap_or(100_000);
    if epsilons.is_empty() {
        return Err(CliError::Invalid("epsilons is empty".into()));
    }
    let seed = seed(common, &file)?;
    let spec = EstimatorSpec::new(kind);
    // the same seed for every ε: common random numbers across the sweep
    let rows = epsilons
        .par_iter()
        .map(|&eps| mc_row(&config, &spec, sigma2, eps, n_samples, seed))
        .collect::<Result<Vec<_>, _>>()?;
    write_table(common, &mc_table(&rows))?;
    let hats: Vec<f64> = rows.iter().map(|r| r.recovery.epsilon_hat).collect();
    let r2 = r_squared(&epsilons, &hats);
    let max_abs_pull = rows.iter().map(|r| r.pull().abs()).fold(0.0, f64::max);
    #[derive(Serialize)]
    struct Entry {
        epsilon: f64,
        epsilon_hat: f64,
        std_error: f64,
        pull: f64,
    }
    #[derive(Serialize)]
    struct Summary {
        command: &'static str,
        estimator: &'static str,
        sigma2: f64,
        n_samples: usize,
        seed: u64,
        runs: Vec<Entry>,
        max_abs_pull: f64,
        r_squared: Option<f64>,
    }
    summary(&Summary {
        command: "mc-estimate",
        estimator: kind.name(),
        sigma2,
        n_samples,
        seed,
        runs: rows
            .iter()
            .map(|r| Entry {
                epsilon: r.epsilon,
                epsilon_hat: r.recovery.epsilon_hat,
                std_error: r.recovery.std_error,
                pull: r.pull(),
            })
            .collect(),
        max_abs_pull,
        r_squared: r2,
    });
    if !(max_abs_pull <= MAX_PULL) {
        return Err(CliError::Verification(format!("|pull| = {max_abs_pull:.2} exceeds {MAX_PULL}")));
    }
    if let Some(r2) = r2 {
        if epsilons.len() >= 3 && r2 < MIN_R_SQUARED {
            return Err(CliError::Verification(format!("linearity R² = {r2:.4} below {MIN_R_SQUARED}")));
        }
    }
    Ok(())
}
