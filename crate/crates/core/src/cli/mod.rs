//! The `drlogit` command line: `fit`, `simulate` and `compare`.
//!
//! Each command is also callable in-process through [`cmd_fit`], [`cmd_simulate`] and
//! [`cmd_compare`], which take a resolved [`RunConfig`] and write their tables to a
//! caller-supplied writer.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{Command, ConfigFile, Overrides, RunConfig, SEED_ENV};

use crate::error::Error;
use crate::estimators::{EfficiencyComparison, EstimateReport, SolveDiagnostics};
use crate::format::sig6;
use crate::io::read_dataset;
use crate::model::{Basis, Dataset, Side, ZFamily};
use crate::nuisance::{fit_covariate, fit_covariate_y1, fit_outcome_mle};
use crate::sim::{
    markdown_table, run_scenario, select_scenarios, text_table, EstimatorSummary, MonteCarloConfig, MonteCarloSummary,
    Scenario,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or configuration; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// The computation failed; exit status 1.
    #[error(transparent)]
    Run(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Run(e.into())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "drlogit", version, about = "Doubly robust estimation for logistic partially linear models")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Estimate β on a CSV dataset with columns y, z1..zp, x1..xq.
    Fit(FitArgs),
    /// Monte Carlo study over built-in scenarios.
    Simulate(SimArgs),
    /// Monte Carlo variances of several φ variants over built-in scenarios.
    Compare(SimArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// φ variants (identity, simple, optimal), comma separated.
    #[arg(long, value_delimiter = ',')]
    phi: Option<Vec<String>>,
    /// Confidence level of the Wald intervals.
    #[arg(long)]
    level: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimArgs {
    #[command(flatten)]
    common: Common,
    /// Scenario names or case prefixes (S1, S2-gauss, ...).
    scenarios: Vec<String>,
    /// Same as the positional names, comma separated.
    #[arg(long = "scenarios", value_delimiter = ',')]
    scenario_list: Vec<String>,
    #[arg(long)]
    workers: Option<usize>,
    /// Base seed, added to each scenario's catalog seed. Falls back to DRLOGIT_SEED.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<usize>,
    /// Sample size per replication.
    #[arg(long)]
    n: Option<usize>,
}

fn resolve(command: Command, common: Common, mut flags: Overrides) -> CliResult<RunConfig> {
    let file = match &common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    flags.phi = common.phi;
    flags.level = common.level;
    flags.out_dir = common.out;
    RunConfig::resolve(command, file, flags, std::env::var(SEED_ENV).ok())
}

fn sim_overrides(a: &SimArgs) -> Overrides {
    Overrides {
        seed: a.seed,
        workers: a.workers,
        scenarios: {
            let names: Vec<String> = a.scenarios.iter().chain(&a.scenario_list).cloned().collect();
            (!names.is_empty()).then_some(names)
        },
        n: a.n,
        replications: a.replications,
        ..Default::default()
    }
}

/// Parses `args` (program name first) and runs the selected command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let stdout = &mut std::io::stdout().lock();
    let result = match cli.command {
        Sub::Fit(a) => {
            let flags = Overrides {
                data: a.data,
                ..Default::default()
            };
            resolve(Command::Fit, a.common, flags).and_then(|cfg| cmd_fit(&cfg, stdout).map(drop))
        }
        Sub::Simulate(a) => {
            let flags = sim_overrides(&a);
            resolve(Command::Simulate, a.common, flags).and_then(|cfg| cmd_simulate(&cfg, stdout).map(drop))
        }
        Sub::Compare(a) => {
            let flags = sim_overrides(&a);
            resolve(Command::Compare, a.common, flags).and_then(|cfg| cmd_compare(&cfg, stdout).map(drop))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("drlogit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn create_out_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::InvalidInput(format!("cannot create output directory {}: {e}", dir.display())).into())
}

/// Bernoulli for columns holding only 0 and 1, Gaussian otherwise.
pub fn infer_families(data: &Dataset) -> Vec<ZFamily> {
    (0..data.p())
        .map(|j| {
            if (0..data.n()).all(|i| matches!(data.z(i)[j], v if v == 0.0 || v == 1.0)) {
                ZFamily::Bernoulli
            } else {
                ZFamily::Gaussian
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeModelRecord {
    pub beta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRecord {
    pub estimator: String,
    pub beta_hat: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub ci_lower: Vec<f64>,
    pub ci_upper: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub diagnostics: SolveDiagnostics,
}

impl EstimateRecord {
    fn new(estimator: String, r: &EstimateReport) -> Self {
        let p = r.beta_hat.len();
        EstimateRecord {
            estimator,
            beta_hat: r.beta_hat.iter().copied().collect(),
            std_errors: r.std_errors.iter().copied().collect(),
            ci_lower: r.wald_ci.iter().map(|c| c.0).collect(),
            ci_upper: r.wald_ci.iter().map(|c| c.1).collect(),
            covariance: (0..p).map(|i| r.covariance.row(i).iter().copied().collect()).collect(),
            diagnostics: r.diagnostics.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedEstimate {
    pub estimator: String,
    pub error: String,
}

/// Contents of `estimates.json`.
#[derive(Debug, Clone, Serialize)]
pub struct FitOutput {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub n_y1: usize,
    pub basis: Basis,
    pub z_families: Vec<ZFamily>,
    pub level: f64,
    pub outcome_model: OutcomeModelRecord,
    pub estimates: Vec<EstimateRecord>,
    pub failures: Vec<FailedEstimate>,
}

impl FitOutput {
    pub fn estimate(&self, label: &str) -> Option<&EstimateRecord> {
        self.estimates.iter().find(|e| e.estimator == label)
    }

    pub fn table(&self) -> String {
        let mut out = format!(
            "{:<14} {:>4} {:>12} {:>12} {:>12} {:>12}\n",
            "estimator", "j", "estimate", "std_error", "ci_lower", "ci_upper"
        );
        for e in &self.estimates {
            for j in 0..e.beta_hat.len() {
                out.push_str(&format!(
                    "{:<14} {:>4} {:>12} {:>12} {:>12} {:>12}\n",
                    e.estimator,
                    j + 1,
                    sig6(e.beta_hat[j]),
                    sig6(e.std_errors[j]),
                    sig6(e.ci_lower[j]),
                    sig6(e.ci_upper[j]),
                ));
            }
        }
        for f in &self.failures {
            out.push_str(&format!("{:<14} failed: {}\n", f.estimator, f.error));
        }
        out
    }
}

/// Fits every configured estimator to one dataset. Fails only if all estimators fail.
pub fn fit_dataset(data: &Dataset, cfg: &RunConfig) -> CliResult<FitOutput> {
    let basis = cfg.basis.clone().unwrap_or_else(|| Basis::linear(data.q()));
    basis.validate_for(data.q())?;
    let families = match &cfg.z_families {
        Some(f) if f.len() != data.p() => {
            return Err(CliError::Usage(format!(
                "z_families lists {} families but the data has {} Z columns",
                f.len(),
                data.p()
            )))
        }
        Some(f) => f.clone(),
        None => infer_families(data),
    };
    let outcome = fit_outcome_mle(data, &basis)?;
    let needs = |side| cfg.estimators.iter().any(|e| e.needs_side(side));
    let covar0 = if needs(Side::Y0) { Some(fit_covariate(data, &basis, &families)?) } else { None };
    let covar1 = if needs(Side::Y1) { Some(fit_covariate_y1(data, &basis, &families)?) } else { None };

    let mut estimates = Vec::new();
    let mut failures = Vec::new();
    for est in &cfg.estimators {
        match est
            .run(data, &outcome, covar0.as_ref(), covar1.as_ref(), &basis)
            .and_then(|r| r.relevel(cfg.level))
        {
            Ok(r) => estimates.push(EstimateRecord::new(est.label(), &r)),
            Err(e) => failures.push(FailedEstimate {
                estimator: est.label(),
                error: e.to_string(),
            }),
        }
    }
    if estimates.is_empty() {
        let msgs: Vec<String> = failures.iter().map(|f| format!("{}: {}", f.estimator, f.error)).collect();
        return Err(Error::InvalidInput(format!("every estimator failed ({})", msgs.join("; "))).into());
    }
    Ok(FitOutput {
        n: data.n(),
        p: data.p(),
        q: data.q(),
        n_y1: data.count_y1(),
        basis,
        z_families: families,
        level: cfg.level,
        outcome_model: OutcomeModelRecord {
            beta: outcome.params.beta.iter().copied().collect(),
            alpha: outcome.params.alpha.iter().copied().collect(),
            converged: outcome.converged,
            iterations: outcome.iterations,
        },
        estimates,
        failures,
    })
}

/// `drlogit fit`: reads the CSV, writes `estimates.json` to the output directory and prints a table.
pub fn cmd_fit(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<FitOutput> {
    let path = cfg.data.as_ref().ok_or_else(|| CliError::Usage("fit needs --data FILE".into()))?;
    let data = read_dataset(path)?;
    let result = fit_dataset(&data, cfg)?;
    create_out_dir(&cfg.out_dir)?;
    write_json_file(&cfg.out_dir.join("estimates.json"), &result)?;
    writeln!(out, "n = {}, Y=1: {}, level = {}", result.n, result.n_y1, result.level)?;
    out.write_all(result.table().as_bytes())?;
    Ok(result)
}

fn scenarios_for(cfg: &RunConfig) -> CliResult<Vec<Scenario>> {
    let mut out = Vec::new();
    for sc in select_scenarios(&cfg.scenarios).map_err(|e| CliError::Usage(e.to_string()))? {
        let seed = cfg.seed.map_or(sc.seed, |base| base.wrapping_add(sc.seed));
        let n = cfg.n.unwrap_or(sc.n);
        let reps = cfg.replications.unwrap_or(sc.replications);
        out.push(sc.with_size(n, reps).with_seed(seed));
    }
    Ok(out)
}

fn monte_carlo(cfg: &RunConfig) -> CliResult<Vec<MonteCarloSummary>> {
    let mc = MonteCarloConfig {
        estimators: cfg.estimators.clone(),
        workers: cfg.workers,
        level: cfg.level,
    };
    scenarios_for(cfg)?
        .iter()
        .map(|sc| run_scenario(sc, &mc).map_err(CliError::from))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRecord {
    pub scenario: String,
    pub beta_star: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub rows: Vec<EstimatorSummary>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SimulateOutput {
    pub level: f64,
    pub estimators: Vec<String>,
    pub scenarios: Vec<ScenarioRecord>,
}

/// `drlogit simulate`: per-scenario `<name>.csv` and `<name>.json`, plus `summary.md` and
/// `summary.json`.
pub fn cmd_simulate(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<SimulateOutput> {
    let runs = monte_carlo(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    let mut all_rows = Vec::new();
    let mut md = String::from("# Monte Carlo summary\n\n");
    for s in &runs {
        s.write_csv(&cfg.out_dir.join(format!("{}.csv", s.scenario)))?;
        s.write_json(&cfg.out_dir.join(format!("{}.json", s.scenario)))?;
        md.push_str(&format!(
            "## {}\n\nβ* = {:?}, n = {}, replications = {}\n\n",
            s.scenario, s.beta_star, s.n, s.replications
        ));
        md.push_str(&markdown_table(&s.rows));
        md.push('\n');
        all_rows.extend(s.rows.iter().cloned());
    }
    std::fs::write(cfg.out_dir.join("summary.md"), md)?;
    let output = SimulateOutput {
        level: cfg.level,
        estimators: cfg.estimators.iter().map(|e| e.label()).collect(),
        scenarios: runs
            .iter()
            .map(|s| ScenarioRecord {
                scenario: s.scenario.clone(),
                beta_star: s.beta_star.clone(),
                n: s.n,
                replications: s.replications,
                rows: s.rows.clone(),
            })
            .collect(),
    };
    write_json_file(&cfg.out_dir.join("summary.json"), &output)?;
    out.write_all(text_table(&all_rows).as_bytes())?;
    Ok(output)
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRecord {
    pub scenario: String,
    pub beta_star: Vec<f64>,
    pub replications: usize,
    pub comparison: EfficiencyComparison,
    /// `ratios[a][b][j] = var(a) / var(b)` for component `j`.
    pub ratios: Vec<Vec<Vec<f64>>>,
}

/// `drlogit compare`: Monte Carlo variances of the `Y = 0` estimator under each φ, written
/// to `compare.json` and `compare.md`.
pub fn cmd_compare(cfg: &RunConfig, out: &mut dyn Write) -> CliResult<Vec<ComparisonRecord>> {
    if cfg.phi.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least two phi variants, got {}",
            cfg.phi.len()
        )));
    }
    let runs = monte_carlo(cfg)?;
    create_out_dir(&cfg.out_dir)?;
    let mut records = Vec::new();
    let mut md = String::from("# Relative efficiency\n\n");
    for s in &runs {
        let c = s.efficiency()?;
        let k = c.labels.len();
        let ratios = (0..k)
            .map(|a| (0..k).map(|b| (0..c.p()).map(|j| c.ratio(a, b, j)).collect()).collect())
            .collect();
        let table = c.to_table();
        writeln!(out, "{} (β* = {:?})", s.scenario, s.beta_star)?;
        out.write_all(table.as_bytes())?;
        md.push_str(&format!("## {}\n\n```\n{}```\n\n", s.scenario, table));
        records.push(ComparisonRecord {
            scenario: s.scenario.clone(),
            beta_star: s.beta_star.clone(),
            replications: s.replications,
            comparison: c,
            ratios,
        });
    }
    std::fs::write(cfg.out_dir.join("compare.md"), md)?;
    write_json_file(&cfg.out_dir.join("compare.json"), &records)?;
    Ok(records)
}
