use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::model::{PhiSpec, Side};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub iterations: usize,
    pub final_eq_norm: f64,
    /// Ratio of extreme singular values of the β-Jacobian at the solution.
    pub jacobian_condition: f64,
    pub step_halvings: usize,
    /// The solve from the nuisance estimate failed and was restarted from zero.
    pub restarted: bool,
    /// Largest condition number of `M(x)` met while evaluating the optimal φ.
    pub max_phi_condition: Option<f64>,
}

impl SolveDiagnostics {
    pub(crate) fn closed_form() -> Self {
        SolveDiagnostics {
            iterations: 0,
            final_eq_norm: 0.0,
            jacobian_condition: f64::NAN,
            step_halvings: 0,
            restarted: false,
            max_phi_condition: None,
        }
    }
}

/// A point estimate of β with its sandwich covariance and Wald intervals.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub beta_hat: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub std_errors: DVector<f64>,
    /// `(lower, upper)` per component at `level`.
    pub wald_ci: Vec<(f64, f64)>,
    pub level: f64,
    /// `n × p`; `β̂ - β ≈ n⁻¹ Σ ψᵢ`.
    pub influence: DMatrix<f64>,
    pub diagnostics: SolveDiagnostics,
    /// `None` for the outcome-model maximum likelihood baseline.
    pub phi_used: Option<PhiSpec>,
    pub side: Side,
}

/// Two-sided standard normal critical value for confidence `level`.
pub fn normal_critical(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidInput(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + level / 2.0))
}

impl EstimateReport {
    pub(crate) fn from_influence(
        beta_hat: DVector<f64>,
        influence: DMatrix<f64>,
        level: f64,
        diagnostics: SolveDiagnostics,
        phi_used: Option<PhiSpec>,
        side: Side,
    ) -> Result<Self> {
        let n = influence.nrows() as f64;
        let covariance = influence.tr_mul(&influence) / (n * n);
        let std_errors = covariance.diagonal().map(|v| v.max(0.0).sqrt());
        let mut report = EstimateReport {
            beta_hat,
            covariance,
            std_errors,
            wald_ci: Vec::new(),
            level,
            influence,
            diagnostics,
            phi_used,
            side,
        };
        report.set_level(level)?;
        Ok(report)
    }

    fn set_level(&mut self, level: f64) -> Result<()> {
        let c = normal_critical(level)?;
        self.level = level;
        self.wald_ci = self
            .beta_hat
            .iter()
            .zip(self.std_errors.iter())
            .map(|(b, s)| (b - c * s, b + c * s))
            .collect();
        Ok(())
    }

    /// Same estimate with intervals recomputed at another confidence level.
    pub fn relevel(&self, level: f64) -> Result<Self> {
        let mut out = self.clone();
        out.set_level(level)?;
        Ok(out)
    }

    /// Whether the Wald interval for component `j` contains `value`.
    pub fn covers(&self, j: usize, value: f64) -> bool {
        let (lo, hi) = self.wald_ci[j];
        lo <= value && value <= hi
    }
}
