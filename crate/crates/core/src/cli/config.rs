use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::CliError;
use crate::error::Error;
use crate::estimators::{EstimatorKind, DEFAULT_LEVEL};
use crate::model::{Basis, BasisTerm, PhiSpec, ZFamily};
use crate::quadrature::DEFAULT_ORDER;

pub const SEED_ENV: &str = "DRLOGIT_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Fit,
    Simulate,
    Compare,
}

/// Contents of a JSON configuration file; every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub data: Option<PathBuf>,
    pub basis: Option<Vec<BasisTerm>>,
    pub z_families: Option<Vec<ZFamily>>,
    pub phi: Option<Vec<String>>,
    pub estimators: Option<Vec<String>>,
    pub level: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub scenarios: Option<Vec<String>>,
    pub quadrature_order: Option<usize>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidInput(format!("config {}: {e}", path.display())).into())
    }
}

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub phi: Option<Vec<String>>,
    pub level: Option<f64>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub scenarios: Option<Vec<String>>,
    pub n: Option<usize>,
    pub replications: Option<usize>,
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub data: Option<PathBuf>,
    pub scenarios: Vec<String>,
    /// `None` means "intercept plus every X column".
    pub basis: Option<Basis>,
    /// `None` means "Bernoulli for 0/1 columns, Gaussian otherwise".
    pub z_families: Option<Vec<ZFamily>>,
    pub phi: Vec<PhiSpec>,
    pub estimators: Vec<EstimatorKind>,
    pub level: f64,
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub quadrature_order: usize,
    pub n: Option<usize>,
    pub replications: Option<usize>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    /// Merges flags over the file over defaults. The seed falls back to `env_seed`
    /// (the value of `DRLOGIT_SEED`) when neither flags nor file set it.
    pub fn resolve(
        command: Command,
        file: ConfigFile,
        flags: Overrides,
        env_seed: Option<String>,
    ) -> Result<Self, CliError> {
        let order = file.quadrature_order.unwrap_or(DEFAULT_ORDER);
        PhiSpec::Optimal { order }.validate()?;

        let phi_names = flags.phi.clone().or(file.phi.clone());
        let phi: Vec<PhiSpec> = match &phi_names {
            Some(names) => names
                .iter()
                .map(|s| PhiSpec::parse(s, order))
                .collect::<crate::Result<_>>()?,
            None => vec![PhiSpec::Identity, PhiSpec::Simple, PhiSpec::Optimal { order }],
        };

        let mut estimators: Vec<EstimatorKind> = match (&file.estimators, command) {
            (_, Command::Compare) => phi.iter().map(|p| EstimatorKind::dr0(*p)).collect(),
            (Some(list), _) => list
                .iter()
                .map(|s| EstimatorKind::parse(s, order))
                .collect::<crate::Result<_>>()?,
            (None, Command::Simulate) if phi_names.is_none() => crate::sim::MonteCarloConfig::default_estimators()
                .into_iter()
                .map(|e| match e {
                    EstimatorKind::Dr {
                        side,
                        phi: PhiSpec::Optimal { .. },
                    } => EstimatorKind::Dr {
                        side,
                        phi: PhiSpec::Optimal { order },
                    },
                    other => other,
                })
                .collect(),
            (None, _) => std::iter::once(EstimatorKind::Mle)
                .chain(phi.iter().map(|p| EstimatorKind::dr0(*p)))
                .collect(),
        };
        if let (Some(_), Some(_)) = (&flags.phi, &file.estimators) {
            if command != Command::Compare {
                // A --phi flag re-targets every doubly robust estimator named in the file.
                let mut rewritten = Vec::new();
                for e in estimators {
                    let mapped: Vec<EstimatorKind> = match e {
                        EstimatorKind::Dr { side, .. } => phi.iter().map(|p| EstimatorKind::Dr { side, phi: *p }).collect(),
                        other => vec![other],
                    };
                    for m in mapped {
                        if !rewritten.contains(&m) {
                            rewritten.push(m);
                        }
                    }
                }
                estimators = rewritten;
            }
        }
        if estimators.is_empty() {
            return Err(usage("no estimators requested"));
        }

        let level = flags.level.or(file.level).unwrap_or(DEFAULT_LEVEL);
        if !(level > 0.0 && level < 1.0) {
            return Err(usage(format!("confidence level must lie in (0, 1), got {level}")));
        }
        let workers = flags.workers.or(file.workers).unwrap_or(1);
        if workers == 0 {
            return Err(usage("worker count must be at least 1"));
        }
        let seed = match flags.seed.or(file.seed) {
            Some(s) => Some(s),
            None => match env_seed {
                Some(v) => Some(v.trim().parse::<u64>().map_err(|_| {
                    usage(format!("{SEED_ENV} must be a non-negative integer, got `{v}`"))
                })?),
                None => None,
            },
        };
        let scenarios = flags.scenarios.or(file.scenarios).unwrap_or_else(|| match command {
            Command::Compare => vec!["S1b0".into(), "S1b1".into()],
            _ => vec!["S1".into(), "S2".into(), "S3".into(), "S4".into()],
        });
        let data = flags.data.or(file.data);

        match command {
            Command::Fit => {
                let path = data.as_ref().ok_or_else(|| usage("fit needs --data FILE"))?;
                if !path.is_file() {
                    return Err(usage(format!("data file {} does not exist", path.display())));
                }
            }
            Command::Compare if phi.len() < 2 => {
                return Err(usage(format!(
                    "compare needs at least two phi variants, got {}",
                    phi.len()
                )));
            }
            _ => {}
        }
        let basis = file.basis.map(Basis::new).transpose()?;
        for (name, v) in [("n", flags.n.or(file.n)), ("replications", flags.replications.or(file.replications))] {
            if v == Some(0) {
                return Err(usage(format!("{name} must be positive")));
            }
        }

        Ok(RunConfig {
            command,
            data,
            scenarios,
            basis,
            z_families: file.z_families,
            phi,
            estimators,
            level,
            seed,
            out_dir: flags.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("drlogit-out")),
            workers,
            quadrature_order: order,
            n: flags.n.or(file.n),
            replications: flags.replications.or(file.replications),
        })
    }
}
