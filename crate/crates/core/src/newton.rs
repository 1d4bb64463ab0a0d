//! Damped Newton iteration shared by every estimating-equation solver in the crate.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub(crate) const MAX_ITER: usize = 100;
pub(crate) const MAX_HALVINGS: usize = 50;
/// Convergence threshold on the max-norm of the (averaged) estimating equation.
pub(crate) const EQ_TOL: f64 = 1e-10;
/// Iteration continues past `EQ_TOL` while it still makes progress down to this level.
const EQ_TARGET: f64 = 1e-13;

pub(crate) struct NewtonResult {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub halvings: usize,
    pub eq_norm: f64,
    pub jacobian: DMatrix<f64>,
}

fn max_abs(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}

/// Solves `eq(x) = 0` given `eval(x) -> (eq, jacobian)`.
///
/// Each step is halved until the Euclidean norm of the equation decreases.
pub(crate) fn solve<F>(what: &'static str, x0: DVector<f64>, mut eval: F) -> Result<NewtonResult>
where
    F: FnMut(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>,
{
    let mut x = x0;
    let (mut eq, mut jac) = eval(&x)?;
    let mut halvings = 0;
    for iter in 0..=MAX_ITER {
        let norm_inf = max_abs(&eq);
        if norm_inf <= EQ_TARGET {
            return Ok(NewtonResult {
                x,
                iterations: iter,
                halvings,
                eq_norm: norm_inf,
                jacobian: jac,
            });
        }
        if iter == MAX_ITER {
            break;
        }
        let step = jac.clone().lu().solve(&eq).ok_or(Error::Singular {
            what,
            condition: f64::INFINITY,
        })?;
        if step.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular {
                what,
                condition: f64::INFINITY,
            });
        }
        let norm = eq.norm();
        let mut t = 1.0;
        let mut accepted = None;
        for h in 0..=MAX_HALVINGS {
            let trial = &x - &step * t;
            // Errors at a trial point (overflow guards) count as "no decrease".
            if let Ok((eq_t, jac_t)) = eval(&trial) {
                let n_t = eq_t.norm();
                if n_t.is_finite() && n_t < norm {
                    halvings += h;
                    accepted = Some((trial, eq_t, jac_t));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, eqn, jacn)) => {
                x = xn;
                eq = eqn;
                jac = jacn;
            }
            None if norm_inf <= EQ_TOL => {
                return Ok(NewtonResult {
                    x,
                    iterations: iter,
                    halvings,
                    eq_norm: norm_inf,
                    jacobian: jac,
                });
            }
            None => {
                return Err(Error::NonConvergence {
                    what,
                    iterations: iter,
                    residual: norm_inf,
                    hint: " (step halving failed)",
                })
            }
        }
    }
    let norm_inf = max_abs(&eq);
    if norm_inf <= EQ_TOL {
        return Ok(NewtonResult {
            x,
            iterations: MAX_ITER,
            halvings,
            eq_norm: norm_inf,
            jacobian: jac,
        });
    }
    Err(Error::NonConvergence {
        what,
        iterations: MAX_ITER,
        residual: norm_inf,
        hint: "",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_smooth_system() {
        // x² = 2, x·y = 3.
        let r = solve("test", DVector::from_vec(vec![1.0, 1.0]), |v| {
            let eq = DVector::from_vec(vec![v[0] * v[0] - 2.0, v[0] * v[1] - 3.0]);
            let jac = DMatrix::from_row_slice(2, 2, &[2.0 * v[0], 0.0, v[1], v[0]]);
            Ok((eq, jac))
        })
        .unwrap();
        assert!((r.x[0] - 2f64.sqrt()).abs() < 1e-12);
        assert!((r.x[1] - 3.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!(r.eq_norm <= EQ_TOL);
    }

    #[test]
    fn damping_rescues_overshoot() {
        // atan has a Newton iteration that diverges from |x0| > 1.39 without damping.
        let r = solve("atan", DVector::from_element(1, 3.0), |v| {
            Ok((
                DVector::from_element(1, v[0].atan()),
                DMatrix::from_element(1, 1, 1.0 / (1.0 + v[0] * v[0])),
            ))
        })
        .unwrap();
        assert!(r.x[0].abs() < 1e-12);
        assert!(r.halvings > 0);
    }

    #[test]
    fn no_root_reports_failure() {
        let r = solve("exp", DVector::from_element(1, 0.0), |v| {
            Ok((DVector::from_element(1, v[0].exp() + 1.0), DMatrix::from_element(1, 1, v[0].exp())))
        });
        assert!(r.is_err());
    }
}
