use nalgebra::{DMatrix, DVector};

use super::basis::Basis;
use super::kernels::expit;
use super::params::{CovariateModelParams, OutcomeModelParams, PhiSpec, ZFamily};
use crate::error::{Error, Result};
use crate::quadrature::GaussHermite;

/// Largest condition number accepted for the inner matrix of the optimal instrument.
pub const MAX_CONDITION: f64 = 1e12;

/// Tensor quadrature over more Gaussian components than this is refused.
pub const MAX_GAUSSIAN_COMPONENTS: usize = 3;

/// Evaluated instrument φ(x).
#[derive(Debug, Clone, PartialEq)]
pub struct PhiValue {
    pub matrix: DMatrix<f64>,
    /// Condition number of the inverted matrix (optimal variant only).
    pub condition: Option<f64>,
}

/// Reusable evaluator holding the quadrature rule for one [`PhiSpec`].
#[derive(Debug, Clone)]
pub struct PhiEvaluator {
    spec: PhiSpec,
    rule: Option<GaussHermite>,
}

impl PhiEvaluator {
    pub fn new(spec: PhiSpec) -> Result<Self> {
        spec.validate()?;
        let rule = match spec {
            PhiSpec::Optimal { order } => Some(GaussHermite::new(order)?),
            _ => None,
        };
        Ok(PhiEvaluator { spec, rule })
    }

    pub fn spec(&self) -> PhiSpec {
        self.spec
    }

    /// φ at a point whose basis row `b` has already been evaluated.
    pub fn eval(
        &self,
        b: &[f64],
        outcome: &OutcomeModelParams,
        covar: &CovariateModelParams,
    ) -> Result<PhiValue> {
        let p = outcome.p();
        match self.spec {
            PhiSpec::Identity => Ok(PhiValue {
                matrix: DMatrix::identity(p, p),
                condition: None,
            }),
            PhiSpec::Simple => Ok(PhiValue {
                matrix: DMatrix::identity(p, p) * expit(outcome.g(b)),
                condition: None,
            }),
            PhiSpec::Optimal { .. } => {
                let rule = self.rule.as_ref().expect("optimal evaluator carries a rule");
                optimal(b, outcome, covar, rule)
            }
        }
    }
}

/// Support points `(value, probability)` of each component of `Z | Y = y₀, X` under the
/// declared families.
fn component_points(
    b: &[f64],
    covar: &CovariateModelParams,
    rule: &GaussHermite,
) -> Vec<Vec<(f64, f64)>> {
    (0..covar.p())
        .map(|j| {
            let f = covar.mean(j, b);
            match covar.families[j] {
                ZFamily::Gaussian => rule.normal_points(f, covar.resid_var[j]).collect(),
                ZFamily::Bernoulli => vec![(0.0, 1.0 - f), (1.0, f)],
            }
        })
        .collect()
}

fn optimal(
    b: &[f64],
    outcome: &OutcomeModelParams,
    covar: &CovariateModelParams,
    rule: &GaussHermite,
) -> Result<PhiValue> {
    let p = outcome.p();
    let gaussian = covar
        .families
        .iter()
        .filter(|f| **f == ZFamily::Gaussian)
        .count();
    if gaussian > MAX_GAUSSIAN_COMPONENTS {
        return Err(Error::Unsupported(format!(
            "optimal phi with {gaussian} Gaussian components (tensor quadrature limited to {MAX_GAUSSIAN_COMPONENTS})"
        )));
    }
    let g = outcome.g(b);
    let f = covar.means(b);
    let points = component_points(b, covar, rule);

    let mut outer = DMatrix::<f64>::zeros(p, p);
    let mut weighted = DMatrix::<f64>::zeros(p, p);
    let mut idx = vec![0usize; p];
    let mut z = DVector::<f64>::zeros(p);
    'tensor: loop {
        let mut w = 1.0;
        for j in 0..p {
            let (v, pj) = points[j][idx[j]];
            z[j] = v;
            w *= pj;
        }
        let d = &z - &f;
        let inv_pi = 1.0 + (-(outcome.beta.dot(&z) + g)).exp();
        let dd = &d * d.transpose();
        outer += &dd * w;
        weighted += dd * (w * inv_pi);

        for j in 0..p {
            idx[j] += 1;
            if idx[j] < points[j].len() {
                continue 'tensor;
            }
            idx[j] = 0;
        }
        break;
    }

    if weighted.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("inverse probability weights in optimal phi".into()));
    }
    let condition = symmetric_condition(&weighted);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::Singular {
            what: "optimal-phi inner matrix",
            condition,
        });
    }
    // φ = A M⁻¹ with both symmetric, so φᵀ = M⁻¹ A.
    let lu = weighted.lu();
    let t = lu.solve(&outer).ok_or(Error::Singular {
        what: "optimal-phi inner matrix",
        condition,
    })?;
    Ok(PhiValue {
        matrix: t.transpose(),
        condition: Some(condition),
    })
}

/// Ratio of extreme eigenvalues; infinite when the matrix is not positive definite.
pub(crate) fn symmetric_condition(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// φ(x) for the given instrument choice, evaluated at the plugged-in nuisance parameters.
pub fn phi_eval(
    spec: PhiSpec,
    x: &[f64],
    outcome: &OutcomeModelParams,
    covar: &CovariateModelParams,
    basis: &Basis,
) -> Result<PhiValue> {
    basis.validate_for(x.len())?;
    let b = basis.eval(x);
    outcome.check(outcome.p(), b.len())?;
    covar.check(outcome.p(), b.len())?;
    PhiEvaluator::new(spec)?.eval(b.as_slice(), outcome, covar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simple_at_zero_index_is_half() {
        let outcome = OutcomeModelParams::from_slices(&[0.3], &[0.0]).unwrap();
        let cov = CovariateModelParams::scalar(ZFamily::Gaussian, &[0.0], 1.0).unwrap();
        let v = phi_eval(PhiSpec::Simple, &[], &outcome, &cov, &Basis::intercept_only()).unwrap();
        assert_eq!(v.matrix, DMatrix::from_element(1, 1, 0.5));
        assert!(v.condition.is_none());
    }

    #[test]
    fn optimal_bernoulli_two_point() {
        let outcome = OutcomeModelParams::from_slices(&[0.0], &[0.0]).unwrap();
        let cov = CovariateModelParams::scalar(ZFamily::Bernoulli, &[0.0], 1.0).unwrap();
        let v = phi_eval(PhiSpec::optimal(), &[], &outcome, &cov, &Basis::intercept_only()).unwrap();
        assert_relative_eq!(v.matrix[(0, 0)], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn optimal_reduces_to_simple_at_zero_beta() {
        let basis = Basis::linear(2);
        let outcome = OutcomeModelParams::from_slices(&[0.0, 0.0], &[0.2, -0.4, 0.9]).unwrap();
        let cov = CovariateModelParams::new(
            DMatrix::from_row_slice(2, 3, &[0.1, 0.5, 0.0, -0.3, 0.0, 1.0]),
            vec![ZFamily::Gaussian, ZFamily::Bernoulli],
            DVector::from_vec(vec![1.7, 1.0]),
        )
        .unwrap();
        let x = [0.4, -1.1];
        let v = phi_eval(PhiSpec::optimal(), &x, &outcome, &cov, &basis).unwrap();
        let e = expit(outcome.g(basis.eval(&x).as_slice()));
        assert_relative_eq!(v.matrix, DMatrix::identity(2, 2) * e, epsilon = 1e-12);
    }

    #[test]
    fn refuses_large_tensor() {
        let basis = Basis::intercept_only();
        let outcome = OutcomeModelParams::from_slices(&[0.1; 4], &[0.0]).unwrap();
        let cov = CovariateModelParams::new(
            DMatrix::zeros(4, 1),
            vec![ZFamily::Gaussian; 4],
            DVector::from_element(4, 1.0),
        )
        .unwrap();
        let err = phi_eval(PhiSpec::optimal(), &[], &outcome, &cov, &basis).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn refuses_degenerate_inner_matrix() {
        // Bernoulli component pinned at probability ~0: the centred outer product vanishes.
        let basis = Basis::intercept_only();
        let outcome = OutcomeModelParams::from_slices(&[0.5, 0.5], &[0.0]).unwrap();
        let cov = CovariateModelParams::new(
            DMatrix::from_row_slice(2, 1, &[0.0, -60.0]),
            vec![ZFamily::Gaussian, ZFamily::Bernoulli],
            DVector::from_vec(vec![1.0, 1.0]),
        )
        .unwrap();
        let err = phi_eval(PhiSpec::optimal(), &[], &outcome, &cov, &basis).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }
}
