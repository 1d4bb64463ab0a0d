//! Estimators of β: the doubly robust estimating equation for any φ, its `Y = 1` mirror,
//! the closed form for binary `Z`, and the outcome-model MLE baseline.

mod efficiency;
mod report;
mod solve;
mod table;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use efficiency::{efficiency_compare, report_label, EfficiencyComparison};
pub use report::{normal_critical, EstimateReport, SolveDiagnostics};
pub use solve::{
    closed_form_binary, closed_form_report, influence_assemble, mle_report, solve_beta, solve_beta_tau_prime,
    solve_beta_y1, InfluenceAssembly, TauPrimeSolution, DEFAULT_LEVEL,
};

use crate::error::{Error, Result};
use crate::model::{Basis, Dataset, PhiSpec, Side};
use crate::nuisance::{CovariateFit, OutcomeFit};

/// One entry of the estimator menu used by the simulation harness and the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum EstimatorKind {
    /// Outcome-model maximum likelihood.
    Mle,
    Dr { side: Side, phi: PhiSpec },
    /// Closed form for a single binary `Z` (simple φ).
    ClosedForm,
}

impl EstimatorKind {
    pub fn dr0(phi: PhiSpec) -> Self {
        EstimatorKind::Dr { side: Side::Y0, phi }
    }

    pub fn dr1(phi: PhiSpec) -> Self {
        EstimatorKind::Dr { side: Side::Y1, phi }
    }

    /// Parses `mle`, `closed-form`, `dr0-<phi>` or `dr1-<phi>` (`dr-<phi>` is `dr0-<phi>`).
    pub fn parse(name: &str, order: usize) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        match lower.as_str() {
            "mle" => return Ok(EstimatorKind::Mle),
            "closed-form" => return Ok(EstimatorKind::ClosedForm),
            _ => {}
        }
        let (side, rest) = if let Some(rest) = lower.strip_prefix("dr0-") {
            (Side::Y0, rest)
        } else if let Some(rest) = lower.strip_prefix("dr1-") {
            (Side::Y1, rest)
        } else if let Some(rest) = lower.strip_prefix("dr-") {
            (Side::Y0, rest)
        } else {
            return Err(Error::InvalidInput(format!(
                "unknown estimator `{name}` (expected mle, closed-form, dr0-<phi> or dr1-<phi>)"
            )));
        };
        Ok(EstimatorKind::Dr {
            side,
            phi: PhiSpec::parse(rest, order)?,
        })
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorKind::Mle => "mle".into(),
            EstimatorKind::ClosedForm => "closed-form".into(),
            EstimatorKind::Dr { side, phi } => format!("dr{}-{}", side.level(), phi.name()),
        }
    }

    pub fn needs_side(&self, side: Side) -> bool {
        match self {
            EstimatorKind::Mle => false,
            EstimatorKind::ClosedForm => side == Side::Y0,
            EstimatorKind::Dr { side: s, .. } => *s == side,
        }
    }

    /// Runs the estimator given the nuisance fits it needs.
    pub fn run(
        &self,
        data: &Dataset,
        outcome: &OutcomeFit,
        covar0: Option<&CovariateFit>,
        covar1: Option<&CovariateFit>,
        basis: &Basis,
    ) -> Result<EstimateReport> {
        fn need<'c>(kind: &EstimatorKind, c: Option<&'c CovariateFit>, side: Side) -> Result<&'c CovariateFit> {
            c.ok_or_else(|| {
                Error::InvalidInput(format!(
                    "estimator {} needs a covariate model fitted on Y={}",
                    kind.label(),
                    side.level()
                ))
            })
        }
        match *self {
            EstimatorKind::Mle => mle_report(outcome),
            EstimatorKind::ClosedForm => closed_form_report(data, outcome, need(self, covar0, Side::Y0)?, basis),
            EstimatorKind::Dr { side: Side::Y0, phi } => solve_beta(data, outcome, need(self, covar0, Side::Y0)?, phi, basis),
            EstimatorKind::Dr { side: Side::Y1, phi } => {
                solve_beta_y1(data, outcome, need(self, covar1, Side::Y1)?, phi, basis)
            }
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::parse(s, crate::quadrature::DEFAULT_ORDER)
    }
}

impl TryFrom<String> for EstimatorKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<EstimatorKind> for String {
    fn from(k: EstimatorKind) -> String {
        k.label()
    }
}
