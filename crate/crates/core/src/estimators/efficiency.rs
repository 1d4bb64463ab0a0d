use serde::Serialize;

use super::report::EstimateReport;
use crate::error::{Error, Result};

/// Estimated variances of several estimators of the same β, with pairwise ratios.
#[derive(Debug, Clone, Serialize)]
pub struct EfficiencyComparison {
    pub labels: Vec<String>,
    /// `variances[k][j]`: estimator `k`, component `j`.
    pub variances: Vec<Vec<f64>>,
}

impl EfficiencyComparison {
    pub fn from_variances(labels: Vec<String>, variances: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != variances.len() || labels.is_empty() {
            return Err(Error::InvalidInput("need one variance vector per label".into()));
        }
        let p = variances[0].len();
        if variances.iter().any(|v| v.len() != p) {
            return Err(Error::InvalidInput("variance vectors differ in length".into()));
        }
        Ok(EfficiencyComparison { labels, variances })
    }

    pub fn p(&self) -> usize {
        self.variances[0].len()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `var(a) / var(b)` for component `j`.
    pub fn ratio(&self, a: usize, b: usize, j: usize) -> f64 {
        self.variances[a][j] / self.variances[b][j]
    }

    /// Estimator indices from smallest to largest variance of component `j`.
    pub fn ordering(&self, j: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.labels.len()).collect();
        idx.sort_by(|&a, &b| self.variances[a][j].total_cmp(&self.variances[b][j]));
        idx
    }

    /// Plain-text table of variances and ratios to the smallest variance, per component.
    pub fn to_table(&self) -> String {
        let width = self.labels.iter().map(|l| l.len()).max().unwrap_or(0).max(9);
        let mut out = String::new();
        for j in 0..self.p() {
            let best = self.ordering(j)[0];
            out.push_str(&format!("beta[{}]\n", j + 1));
            out.push_str(&format!("  {:<width$}  {:>12}  {:>12}\n", "estimator", "variance", "ratio"));
            for k in self.ordering(j) {
                out.push_str(&format!(
                    "  {:<width$}  {:>12}  {:>12}\n",
                    self.labels[k],
                    crate::format::sig6(self.variances[k][j]),
                    crate::format::sig6(self.ratio(k, best, j)),
                ));
            }
        }
        out
    }
}

/// Label used for a report in tables: `mle`, or `dr0-<phi>` / `dr1-<phi>`.
pub fn report_label(report: &EstimateReport) -> String {
    match report.phi_used {
        None => "mle".to_string(),
        Some(phi) => format!("dr{}-{}", report.side.level(), phi.name()),
    }
}

/// Tabulates the sandwich variances of `reports` (all on the same data) and their ratios.
pub fn efficiency_compare(reports: &[EstimateReport]) -> Result<EfficiencyComparison> {
    let labels = reports.iter().map(report_label).collect();
    let variances = reports
        .iter()
        .map(|r| r.covariance.diagonal().iter().copied().collect())
        .collect();
    EfficiencyComparison::from_variances(labels, variances)
}
