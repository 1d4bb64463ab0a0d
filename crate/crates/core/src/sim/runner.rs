use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::Scenario;
use super::sample_with;
use crate::error::{Error, Result};
use crate::estimators::{EfficiencyComparison, EstimatorKind, DEFAULT_LEVEL};
use crate::format::sig6;
use crate::model::{PhiSpec, Side};
use crate::nuisance::{fit_covariate, fit_covariate_y1, fit_outcome_mle};

/// A run is abandoned when more than this fraction of replications fail for some estimator.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub estimators: Vec<EstimatorKind>,
    pub workers: usize,
    pub level: f64,
}

impl MonteCarloConfig {
    /// MLE baseline, the three `Y = 0` variants and the simple `Y = 1` variant.
    pub fn default_estimators() -> Vec<EstimatorKind> {
        vec![
            EstimatorKind::Mle,
            EstimatorKind::dr0(PhiSpec::Identity),
            EstimatorKind::dr0(PhiSpec::Simple),
            EstimatorKind::dr0(PhiSpec::optimal()),
            EstimatorKind::dr1(PhiSpec::Simple),
        ]
    }
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            estimators: Self::default_estimators(),
            workers: 1,
            level: DEFAULT_LEVEL,
        }
    }
}

/// One estimator's output in one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub beta_hat: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub covered: Vec<bool>,
}

/// One row of the summary table (one estimator, one component of β).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub scenario: String,
    pub estimator: String,
    pub bias: f64,
    /// Empirical SD of β̂ over successful replications (divisor = their count).
    pub sd: f64,
    pub mean_se: f64,
    pub rmse: f64,
    pub coverage: f64,
    /// Monte Carlo standard error of the bias, `sd / √R`.
    pub mcse: f64,
    pub n_fail: usize,
}

#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub scenario: String,
    pub beta_star: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub level: f64,
    pub estimators: Vec<EstimatorKind>,
    pub rows: Vec<EstimatorSummary>,
    /// `draws[k][r]`: estimator `k`, replication `r`; `None` when it failed.
    pub draws: Vec<Vec<Option<Draw>>>,
}

fn run_replication(sc: &Scenario, cfg: &MonteCarloConfig, rep: usize) -> Vec<Option<Draw>> {
    let k = cfg.estimators.len();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);
    rng.set_stream(rep as u64);
    let Ok(data) = sample_with(&sc.law, sc.n, &mut rng) else {
        return vec![None; k];
    };
    let basis = &sc.working_basis;
    let Ok(outcome) = fit_outcome_mle(&data, basis) else {
        return vec![None; k];
    };
    let families = sc.law.families();
    let needs = |side| cfg.estimators.iter().any(|e| e.needs_side(side));
    let covar0 = if needs(Side::Y0) { fit_covariate(&data, basis, &families).ok() } else { None };
    let covar1 = if needs(Side::Y1) { fit_covariate_y1(&data, basis, &families).ok() } else { None };
    cfg.estimators
        .iter()
        .map(|est| {
            let report = est
                .run(&data, &outcome, covar0.as_ref(), covar1.as_ref(), basis)
                .and_then(|r| if cfg.level == DEFAULT_LEVEL { Ok(r) } else { r.relevel(cfg.level) })
                .ok()?;
            if report.beta_hat.iter().chain(report.std_errors.iter()).any(|v| !v.is_finite()) {
                return None;
            }
            let covered = (0..report.beta_hat.len())
                .map(|j| report.covers(j, sc.law.beta_star[j]))
                .collect();
            Some(Draw {
                beta_hat: report.beta_hat.iter().copied().collect(),
                std_errors: report.std_errors.iter().copied().collect(),
                covered,
            })
        })
        .collect()
}

fn summarise(scenario: &str, label: &str, truth: f64, j: usize, draws: &[Option<Draw>]) -> EstimatorSummary {
    let ok: Vec<&Draw> = draws.iter().flatten().collect();
    let n_fail = draws.len() - ok.len();
    let r = ok.len() as f64;
    if ok.is_empty() {
        return EstimatorSummary {
            scenario: scenario.to_string(),
            estimator: label.to_string(),
            bias: f64::NAN,
            sd: f64::NAN,
            mean_se: f64::NAN,
            rmse: f64::NAN,
            coverage: f64::NAN,
            mcse: f64::NAN,
            n_fail,
        };
    }
    let mean = ok.iter().map(|d| d.beta_hat[j]).sum::<f64>() / r;
    let var = ok.iter().map(|d| (d.beta_hat[j] - mean).powi(2)).sum::<f64>() / r;
    let bias = mean - truth;
    let sd = var.sqrt();
    EstimatorSummary {
        scenario: scenario.to_string(),
        estimator: label.to_string(),
        bias,
        sd,
        mean_se: ok.iter().map(|d| d.std_errors[j]).sum::<f64>() / r,
        rmse: (bias * bias + var).sqrt(),
        coverage: ok.iter().filter(|d| d.covered[j]).count() as f64 / r,
        mcse: sd / r.sqrt(),
        n_fail,
    }
}

/// Runs every replication of `sc` and summarises each estimator.
///
/// Replication `r` draws from a ChaCha8 stream `r` keyed by the scenario seed, so results do
/// not depend on `workers`. Failed fits are counted per estimator; the run aborts only if some
/// estimator fails in more than 20% of replications.
pub fn run_scenario(sc: &Scenario, cfg: &MonteCarloConfig) -> Result<MonteCarloSummary> {
    if cfg.estimators.is_empty() {
        return Err(Error::InvalidInput("no estimators requested".into()));
    }
    crate::estimators::normal_critical(cfg.level)?;
    if cfg.estimators.contains(&EstimatorKind::ClosedForm) && !(sc.law.p() == 1 && sc.law.all_bernoulli()) {
        return Err(Error::InvalidInput(format!(
            "closed-form estimator needs a single binary Z; scenario {} does not have one",
            sc.name
        )));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    let per_rep: Vec<Vec<Option<Draw>>> = pool.install(|| {
        (0..sc.replications)
            .into_par_iter()
            .map(|rep| run_replication(sc, cfg, rep))
            .collect()
    });
    let k = cfg.estimators.len();
    let draws: Vec<Vec<Option<Draw>>> = (0..k)
        .map(|e| per_rep.iter().map(|row| row[e].clone()).collect())
        .collect();
    for (est, d) in cfg.estimators.iter().zip(&draws) {
        let fails = d.iter().filter(|x| x.is_none()).count();
        if fails as f64 > MAX_FAILURE_FRACTION * sc.replications as f64 {
            return Err(Error::Aborted(format!(
                "scenario {}: estimator {} failed in {fails} of {} replications",
                sc.name,
                est.label(),
                sc.replications
            )));
        }
    }
    let p = sc.law.p();
    let mut rows = Vec::new();
    for (est, d) in cfg.estimators.iter().zip(&draws) {
        for j in 0..p {
            let label = if p == 1 { est.label() } else { format!("{}[{}]", est.label(), j + 1) };
            rows.push(summarise(&sc.name, &label, sc.law.beta_star[j], j, d));
        }
    }
    Ok(MonteCarloSummary {
        scenario: sc.name.clone(),
        beta_star: sc.law.beta_star.clone(),
        n: sc.n,
        replications: sc.replications,
        level: cfg.level,
        estimators: cfg.estimators.clone(),
        rows,
        draws,
    })
}

impl MonteCarloSummary {
    pub fn row(&self, estimator: &str) -> Option<&EstimatorSummary> {
        self.rows.iter().find(|r| r.estimator == estimator)
    }

    /// Empirical variances of β̂ over the replications in which every estimator succeeded.
    pub fn efficiency(&self) -> Result<EfficiencyComparison> {
        let reps = self.draws.first().map_or(0, |d| d.len());
        let common: Vec<usize> = (0..reps).filter(|&r| self.draws.iter().all(|d| d[r].is_some())).collect();
        if common.len() < 2 {
            return Err(Error::InvalidInput("fewer than two replications succeeded for every estimator".into()));
        }
        let p = self.beta_star.len();
        let m = common.len() as f64;
        let variances = self
            .draws
            .iter()
            .map(|d| {
                (0..p)
                    .map(|j| {
                        let vals: Vec<f64> = common.iter().map(|&r| d[r].as_ref().expect("common").beta_hat[j]).collect();
                        let mean = vals.iter().sum::<f64>() / m;
                        vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m
                    })
                    .collect()
            })
            .collect();
        EfficiencyComparison::from_variances(self.estimators.iter().map(|e| e.label()).collect(), variances)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.rows)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_rows_csv(path, &self.rows)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json()?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

pub fn write_rows_csv(path: &Path, rows: &[EstimatorSummary]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Markdown table of summary rows, numbers to 6 significant digits.
pub fn markdown_table(rows: &[EstimatorSummary]) -> String {
    let mut out = String::from(
        "| scenario | estimator | bias | sd | mean_se | rmse | coverage | mcse | n_fail |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            r.scenario,
            r.estimator,
            sig6(r.bias),
            sig6(r.sd),
            sig6(r.mean_se),
            sig6(r.rmse),
            sig6(r.coverage),
            sig6(r.mcse),
            r.n_fail
        ));
    }
    out
}

/// Fixed-width text table of summary rows.
pub fn text_table(rows: &[EstimatorSummary]) -> String {
    let mut out = format!(
        "{:<12} {:<14} {:>12} {:>12} {:>12} {:>12} {:>10} {:>12} {:>6}\n",
        "scenario", "estimator", "bias", "sd", "mean_se", "rmse", "coverage", "mcse", "fail"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<12} {:<14} {:>12} {:>12} {:>12} {:>12} {:>10} {:>12} {:>6}\n",
            r.scenario,
            r.estimator,
            sig6(r.bias),
            sig6(r.sd),
            sig6(r.mean_se),
            sig6(r.rmse),
            sig6(r.coverage),
            sig6(r.mcse),
            r.n_fail
        ));
    }
    out
}
