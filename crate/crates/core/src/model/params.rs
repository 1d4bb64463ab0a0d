use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kernels::expit;
use crate::error::{check_dim, Error, Result};
use crate::quadrature::DEFAULT_ORDER;

/// Coefficients `(β, α)` of the working outcome model `P(Y=1|Z,X) = expit{βᵀZ + αᵀb(X)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeModelParams {
    pub beta: DVector<f64>,
    pub alpha: DVector<f64>,
}

impl OutcomeModelParams {
    pub fn new(beta: DVector<f64>, alpha: DVector<f64>) -> Result<Self> {
        if beta.iter().chain(alpha.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("outcome parameters must be finite".into()));
        }
        Ok(OutcomeModelParams { beta, alpha })
    }

    pub fn from_slices(beta: &[f64], alpha: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(beta), DVector::from_column_slice(alpha))
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    pub fn m(&self) -> usize {
        self.alpha.len()
    }

    /// `g(x; α) = αᵀb(x)` given an evaluated basis row.
    pub fn g(&self, b: &[f64]) -> f64 {
        self.alpha.iter().zip(b).map(|(a, v)| a * v).sum()
    }

    pub fn beta_dot(&self, z: &[f64]) -> f64 {
        self.beta.iter().zip(z).map(|(a, v)| a * v).sum()
    }

    pub fn linear_predictor(&self, z: &[f64], b: &[f64]) -> f64 {
        self.beta_dot(z) + self.g(b)
    }

    /// Parameters of the relabelled model `Y -> 1 - Y`, i.e. `(-β, -α)`.
    pub fn negated(&self) -> Self {
        OutcomeModelParams {
            beta: -&self.beta,
            alpha: -&self.alpha,
        }
    }

    pub(crate) fn check(&self, p: usize, m: usize) -> Result<()> {
        check_dim("beta", p, self.beta.len())?;
        check_dim("alpha", m, self.alpha.len())
    }
}

/// Conditional family assumed for one component of `Z` given `(Y = y₀, X)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZFamily {
    /// Mean `γⱼᵀb(X)`, variance `γ′ⱼ`; fitted by least squares.
    Gaussian,
    /// Success probability `expit(γⱼᵀb(X))`; fitted by logistic regression.
    Bernoulli,
}

impl FromStr for ZFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(ZFamily::Gaussian),
            "bernoulli" | "binary" => Ok(ZFamily::Bernoulli),
            other => Err(Error::InvalidInput(format!("unknown Z family `{other}`"))),
        }
    }
}

/// Working model `f(X; γ)` for `E(Z | Y = y₀, X)` together with the family used when
/// conditional expectations beyond the mean are needed.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateModelParams {
    /// `p × m`; row `j` holds the coefficients of component `j`.
    pub gamma: DMatrix<f64>,
    pub families: Vec<ZFamily>,
    /// Residual variances γ′; entries for Bernoulli components are ignored.
    pub resid_var: DVector<f64>,
}

impl CovariateModelParams {
    pub fn new(gamma: DMatrix<f64>, families: Vec<ZFamily>, resid_var: DVector<f64>) -> Result<Self> {
        let p = gamma.nrows();
        check_dim("covariate families", p, families.len())?;
        check_dim("residual variances", p, resid_var.len())?;
        if gamma.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("gamma must be finite".into()));
        }
        for (j, fam) in families.iter().enumerate() {
            if *fam == ZFamily::Gaussian && !(resid_var[j] > 0.0 && resid_var[j].is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "residual variance of Gaussian component {} must be positive",
                    j + 1
                )));
            }
        }
        Ok(CovariateModelParams {
            gamma,
            families,
            resid_var,
        })
    }

    /// Scalar component with an intercept-only style coefficient vector.
    pub fn scalar(family: ZFamily, gamma: &[f64], resid_var: f64) -> Result<Self> {
        Self::new(
            DMatrix::from_row_slice(1, gamma.len(), gamma),
            vec![family],
            DVector::from_element(1, resid_var),
        )
    }

    pub fn p(&self) -> usize {
        self.gamma.nrows()
    }

    pub fn m(&self) -> usize {
        self.gamma.ncols()
    }

    fn index(&self, j: usize, b: &[f64]) -> f64 {
        self.gamma.row(j).iter().zip(b).map(|(a, v)| a * v).sum()
    }

    /// `f_j(x; γ)`.
    pub fn mean(&self, j: usize, b: &[f64]) -> f64 {
        let t = self.index(j, b);
        match self.families[j] {
            ZFamily::Gaussian => t,
            ZFamily::Bernoulli => expit(t),
        }
    }

    pub fn means(&self, b: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.p(), (0..self.p()).map(|j| self.mean(j, b)))
    }

    /// Derivative of `f_j` with respect to its linear index.
    pub fn mean_slope(&self, j: usize, b: &[f64]) -> f64 {
        match self.families[j] {
            ZFamily::Gaussian => 1.0,
            ZFamily::Bernoulli => {
                let f = self.mean(j, b);
                f * (1.0 - f)
            }
        }
    }

    pub fn all_bernoulli(&self) -> bool {
        self.families.iter().all(|f| *f == ZFamily::Bernoulli)
    }

    pub(crate) fn check(&self, p: usize, m: usize) -> Result<()> {
        check_dim("gamma rows", p, self.p())?;
        check_dim("gamma columns", m, self.m())
    }
}

/// Choice of the `p × p` instrument matrix φ(X) in the doubly robust estimating function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum PhiSpec {
    Identity,
    /// `expit{g(X; α̂)} · I`.
    Simple,
    /// Variance-minimising choice under the declared families, evaluated with a
    /// Gauss–Hermite rule of the given (odd, ≥ 5) order for Gaussian components.
    Optimal { order: usize },
}

impl PhiSpec {
    pub fn optimal() -> Self {
        PhiSpec::Optimal {
            order: DEFAULT_ORDER,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PhiSpec::Identity => "identity",
            PhiSpec::Simple => "simple",
            PhiSpec::Optimal { .. } => "optimal",
        }
    }

    pub fn parse(name: &str, order: usize) -> Result<Self> {
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "identity" => PhiSpec::Identity,
            "simple" => PhiSpec::Simple,
            "optimal" => PhiSpec::Optimal { order },
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown phi variant `{other}` (expected identity, simple or optimal)"
                )))
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PhiSpec::Optimal { order } if order < 5 || order % 2 == 0 => Err(Error::InvalidInput(
                format!("quadrature order must be odd and at least 5, got {order}"),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for PhiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_spec_parsing() {
        assert_eq!(PhiSpec::parse("Simple", 21).unwrap(), PhiSpec::Simple);
        assert_eq!(PhiSpec::parse("optimal", 7).unwrap(), PhiSpec::Optimal { order: 7 });
        assert!(PhiSpec::parse("optimal", 4).is_err());
        assert!(PhiSpec::parse("optimal", 3).is_err());
        assert!(PhiSpec::parse("bogus", 21).is_err());
        let json = serde_json::to_string(&PhiSpec::optimal()).unwrap();
        assert_eq!(json, r#"{"variant":"optimal","order":21}"#);
    }

    #[test]
    fn covariate_params_validation() {
        assert!(CovariateModelParams::scalar(ZFamily::Gaussian, &[0.0], 0.0).is_err());
        assert!(CovariateModelParams::scalar(ZFamily::Bernoulli, &[0.0], 0.0).is_ok());
        let c = CovariateModelParams::scalar(ZFamily::Bernoulli, &[0.0, 1.0], 1.0).unwrap();
        assert_eq!(c.mean(0, &[1.0, 0.0]), 0.5);
        assert_eq!(c.mean_slope(0, &[1.0, 0.0]), 0.25);
    }
}
