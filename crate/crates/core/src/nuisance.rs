//! Nuisance model fits.
//!
//! The outcome model `expit{βᵀZ + αᵀb(X)}` is fitted by maximum likelihood or by the
//! calibrated estimating equation `n⁻¹ Σ (Y/π - 1)(Zᵀ, b(X)ᵀ)ᵀ = 0`. The covariate model
//! `f(X; γ)` for `E(Z | Y = y₀, X)` is fitted on the `Y = y₀` subsample by least squares
//! (Gaussian components) or logistic regression (Bernoulli components).
//!
//! Every fit carries per-observation influence values (`s1`, `s2`) normalised so that
//! `estimate - limit = n⁻¹ Σᵢ sᵢ + o_p(n^{-1/2})` with the sum running over all `n` rows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::model::{expit, symmetric_condition, Basis, CovariateModelParams, Dataset, OutcomeModelParams, Side, ZFamily};
use crate::newton;

/// Fitted probabilities beyond `expit(±SATURATION)` are treated as evidence of separation.
const SATURATION: f64 = 35.0;
/// A `y = 1` row with fitted probability below this makes the calibrated weights diverge.
const MIN_CALIBRATED_PI: f64 = 1e-12;
const MAX_DESIGN_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeFitMethod {
    Mle,
    Calibrated,
}

#[derive(Debug, Clone)]
pub struct OutcomeFit {
    pub params: OutcomeModelParams,
    pub method: OutcomeFitMethod,
    /// Negative mean Jacobian of the fitting equation, `(p+m) × (p+m)`.
    pub info_matrix: DMatrix<f64>,
    /// `n × (p+m)`; row `i` is the influence value of observation `i` on `(β̂, α̂)`.
    pub s1: DMatrix<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm of the fitting equation at the returned parameters.
    pub eq_norm: f64,
}

impl OutcomeFit {
    /// Columns of `s1` belonging to `α`.
    pub fn s1_alpha(&self) -> DMatrix<f64> {
        let p = self.params.p();
        self.s1.columns(p, self.params.m()).into_owned()
    }
}

#[derive(Debug, Clone)]
pub struct CovariateFit {
    pub params: CovariateModelParams,
    /// Which response level the model conditions on.
    pub side: Side,
    /// `n × (p·m)`; block `j` (columns `j·m .. (j+1)·m`) belongs to component `j`.
    /// Rows outside the fitting subsample are zero.
    pub s2: DMatrix<f64>,
    pub subsample_size: usize,
    pub converged: bool,
    /// Max-norm of the (subsample-averaged) normal equations at the fit.
    pub eq_norm: f64,
}

/// `n × k` design with rows `(zᵢᵀ, b(xᵢ)ᵀ)` and the separate basis block.
pub(crate) fn basis_matrix(data: &Dataset, basis: &Basis) -> Result<DMatrix<f64>> {
    basis.validate_for(data.q())?;
    let m = basis.dim();
    let mut out = DMatrix::<f64>::zeros(data.n(), m);
    let mut row = vec![0.0; m];
    for i in 0..data.n() {
        basis.eval_into(data.x(i), &mut row);
        for (k, v) in row.iter().enumerate() {
            out[(i, k)] = *v;
        }
    }
    Ok(out)
}

fn outcome_design(data: &Dataset, bmat: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p, m) = (data.n(), data.p(), bmat.ncols());
    DMatrix::from_fn(n, p + m, |i, k| if k < p { data.z(i)[k] } else { bmat[(i, k - p)] })
}

/// `Wᵀ diag(c) W / n`.
fn weighted_gram(w: &DMatrix<f64>, c: &DVector<f64>, n: f64) -> DMatrix<f64> {
    let mut scaled = w.clone();
    for mut col in scaled.column_iter_mut() {
        col.component_mul_assign(c);
    }
    w.tr_mul(&scaled) / n
}

fn check_rank(what: &'static str, w: &DMatrix<f64>) -> Result<()> {
    let gram = w.tr_mul(w);
    let condition = symmetric_condition(&gram);
    if condition > MAX_DESIGN_CONDITION {
        return Err(Error::Singular { what, condition });
    }
    Ok(())
}

fn inverse_spd(what: &'static str, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(Error::Singular {
            what,
            condition: symmetric_condition(m),
        })
}

/// Row `i` of the result is `inv · (resid_i w_i)`.
fn influence_rows(w: &DMatrix<f64>, resid: &DVector<f64>, inv: &DMatrix<f64>) -> DMatrix<f64> {
    let mut scaled = w.clone();
    for mut col in scaled.column_iter_mut() {
        col.component_mul_assign(resid);
    }
    scaled * inv.transpose()
}

/// Logistic-regression MLE of the outcome model, by damped Newton from zero.
pub fn fit_outcome_mle(data: &Dataset, basis: &Basis) -> Result<OutcomeFit> {
    data.require_both_responses()?;
    let bmat = basis_matrix(data, basis)?;
    let w = outcome_design(data, &bmat);
    check_rank("design matrix [Z, b(X)]", &w)?;
    let n = data.n() as f64;
    let y = DVector::from_iterator(data.n(), data.ys().iter().map(|&v| f64::from(v)));

    let eval = |theta: &DVector<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let eta = &w * theta;
        if eta.iter().any(|e| e.abs() > SATURATION) {
            return Err(separation("outcome MLE"));
        }
        let pi = eta.map(expit);
        let c = pi.map(|v| v * (1.0 - v));
        Ok(((w.tr_mul(&(&y - &pi))) / n, -weighted_gram(&w, &c, n)))
    };
    let res = newton::solve("outcome MLE", DVector::zeros(w.ncols()), eval)?;

    let theta = res.x;
    let pi = (&w * &theta).map(expit);
    let info = -res.jacobian;
    let inv = inverse_spd("outcome information matrix", &info)?;
    let s1 = influence_rows(&w, &(&y - &pi), &inv);
    Ok(OutcomeFit {
        params: split_theta(&theta, data.p()),
        method: OutcomeFitMethod::Mle,
        info_matrix: info,
        s1,
        converged: true,
        iterations: res.iterations,
        eq_norm: res.eq_norm,
    })
}

fn separation(what: &'static str) -> Error {
    Error::NonConvergence {
        what,
        iterations: 0,
        residual: f64::NAN,
        hint: "; fitted probabilities numerically 0 or 1, the data may be separated",
    }
}

fn split_theta(theta: &DVector<f64>, p: usize) -> OutcomeModelParams {
    OutcomeModelParams {
        beta: theta.rows(0, p).into_owned(),
        alpha: theta.rows(p, theta.len() - p).into_owned(),
    }
}

/// Calibrated fit solving `n⁻¹ Σ (Yᵢ/πᵢ - 1)(Zᵢᵀ, b(Xᵢ)ᵀ)ᵀ = 0`, started at the MLE.
pub fn fit_outcome_calibrated(data: &Dataset, basis: &Basis) -> Result<OutcomeFit> {
    let start = fit_outcome_mle(data, basis)?;
    let bmat = basis_matrix(data, basis)?;
    let w = outcome_design(data, &bmat);
    let n = data.n() as f64;
    let ys = data.ys();
    let min_eta = (MIN_CALIBRATED_PI / (1.0 - MIN_CALIBRATED_PI)).ln();

    let eval = |theta: &DVector<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let eta = &w * theta;
        if eta.iter().zip(ys).any(|(e, &y)| y == 1 && *e < min_eta) {
            return Err(Error::NonConvergence {
                what: "calibrated outcome fit",
                iterations: 0,
                residual: f64::INFINITY,
                hint: "; a y=1 row has fitted probability below 1e-12 (weights Y/π diverge)",
            });
        }
        let resid = DVector::from_iterator(ys.len(), eta.iter().zip(ys).map(|(e, &y)| Side::Y0.zeta(y, *e)));
        let c = DVector::from_iterator(ys.len(), eta.iter().zip(ys).map(|(e, &y)| -Side::Y0.zeta_slope(y, *e)));
        Ok((w.tr_mul(&resid) / n, -weighted_gram(&w, &c, n)))
    };
    let theta0 = DVector::from_iterator(
        w.ncols(),
        start.params.beta.iter().chain(start.params.alpha.iter()).copied(),
    );
    eval(&theta0)?;
    let res = newton::solve("calibrated outcome fit", theta0, eval)?;
    let theta = res.x;
    let eta = &w * &theta;
    let resid = DVector::from_iterator(ys.len(), eta.iter().zip(ys).map(|(e, &y)| Side::Y0.zeta(y, *e)));
    let info = -res.jacobian;
    let inv = inverse_spd("calibrated information matrix", &info)?;
    let s1 = influence_rows(&w, &resid, &inv);
    Ok(OutcomeFit {
        params: split_theta(&theta, data.p()),
        method: OutcomeFitMethod::Calibrated,
        info_matrix: info,
        s1,
        converged: true,
        iterations: res.iterations,
        eq_norm: res.eq_norm,
    })
}

/// Covariate model for `E(Z | Y = 0, X)` fitted on the `Y = 0` rows.
pub fn fit_covariate(data: &Dataset, basis: &Basis, families: &[ZFamily]) -> Result<CovariateFit> {
    fit_covariate_side(data, basis, families, Side::Y0)
}

/// Covariate model for `E(Z | Y = 1, X)` fitted on the `Y = 1` rows.
pub fn fit_covariate_y1(data: &Dataset, basis: &Basis, families: &[ZFamily]) -> Result<CovariateFit> {
    fit_covariate_side(data, basis, families, Side::Y1)
}

fn fit_covariate_side(data: &Dataset, basis: &Basis, families: &[ZFamily], side: Side) -> Result<CovariateFit> {
    let (n, p) = (data.n(), data.p());
    check_dim("covariate families", p, families.len())?;
    for (j, fam) in families.iter().enumerate() {
        if *fam == ZFamily::Bernoulli && (0..n).any(|i| !matches!(data.z(i)[j], v if v == 0.0 || v == 1.0)) {
            return Err(Error::InvalidInput(format!(
                "component z{} is declared Bernoulli but has values other than 0/1",
                j + 1
            )));
        }
    }
    let bmat = basis_matrix(data, basis)?;
    let m = bmat.ncols();
    let rows: Vec<usize> = (0..n).filter(|&i| data.y(i) == side.level()).collect();
    let ns = rows.len();
    if ns < m {
        return Err(Error::InvalidInput(format!(
            "covariate model needs at least {m} rows with y = {}, found {ns}",
            side.level()
        )));
    }
    let bs = bmat.select_rows(&rows);
    check_rank("basis matrix on the covariate subsample", &bs)?;

    let mut gamma = DMatrix::<f64>::zeros(p, m);
    let mut resid_var = DVector::<f64>::zeros(p);
    let mut s2 = DMatrix::<f64>::zeros(n, p * m);
    let mut eq_norm: f64 = 0.0;
    let nf = ns as f64;

    for (j, fam) in families.iter().enumerate() {
        let zj = DVector::from_iterator(ns, rows.iter().map(|&i| data.z(i)[j]));
        let (coef, fitted, weights) = match fam {
            ZFamily::Gaussian => {
                let gram = bs.tr_mul(&bs);
                let coef = gram
                    .clone()
                    .cholesky()
                    .ok_or(Error::Singular {
                        what: "least-squares normal equations",
                        condition: symmetric_condition(&gram),
                    })?
                    .solve(&bs.tr_mul(&zj));
                let fitted = &bs * &coef;
                (coef, fitted, DVector::from_element(ns, 1.0))
            }
            ZFamily::Bernoulli => {
                let eval = |g: &DVector<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
                    let t = &bs * g;
                    if t.iter().any(|e| e.abs() > SATURATION) {
                        return Err(separation("covariate logistic fit"));
                    }
                    let f = t.map(expit);
                    let c = f.map(|v| v * (1.0 - v));
                    Ok((bs.tr_mul(&(&zj - &f)) / nf, -weighted_gram(&bs, &c, nf)))
                };
                let res = newton::solve("covariate logistic fit", DVector::zeros(m), eval)?;
                let fitted = (&bs * &res.x).map(expit);
                let w = fitted.map(|v| v * (1.0 - v));
                (res.x, fitted, w)
            }
        };
        let resid = &zj - &fitted;
        eq_norm = eq_norm.max(bs.tr_mul(&resid).amax() / nf);
        resid_var[j] = resid.norm_squared() / nf;
        gamma.row_mut(j).copy_from(&coef.transpose());

        // s2 block: n · (Σ_S wᵢ bᵢ bᵢᵀ)⁻¹ bᵢ eᵢ.
        let normal = weighted_gram(&bs, &weights, 1.0);
        let inv = inverse_spd("covariate normal equations", &normal)?;
        let block = influence_rows(&bs, &resid, &inv) * n as f64;
        for (r, &i) in rows.iter().enumerate() {
            for k in 0..m {
                s2[(i, j * m + k)] = block[(r, k)];
            }
        }
    }
    for (j, fam) in families.iter().enumerate() {
        if *fam == ZFamily::Gaussian && resid_var[j] <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "component z{} is fitted exactly; residual variance is zero",
                j + 1
            )));
        }
        if *fam == ZFamily::Bernoulli && resid_var[j] <= 0.0 {
            resid_var[j] = f64::MIN_POSITIVE;
        }
    }
    Ok(CovariateFit {
        params: CovariateModelParams::new(gamma, families.to_vec(), resid_var)?,
        side,
        s2,
        subsample_size: ns,
        converged: true,
        eq_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn intercept_data(y: &[u8], z: &[f64]) -> Dataset {
        let zr: Vec<Vec<f64>> = z.iter().map(|&v| vec![v]).collect();
        Dataset::new(y.to_vec(), &zr, &vec![vec![]; y.len()]).unwrap()
    }

    #[test]
    fn intercept_only_mle_is_logit_of_mean() {
        // Z ≡ 0 makes the β column degenerate, so use a tiny non-informative Z instead:
        // Z equal on both response groups leaves the intercept at logit(mean y).
        let y = [1, 0, 0, 0, 1, 0, 0, 0];
        let z = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let d = intercept_data(&y, &z);
        let fit = fit_outcome_mle(&d, &Basis::intercept_only()).unwrap();
        assert!(fit.params.beta[0].abs() < 1e-10);
        assert_relative_eq!(fit.params.alpha[0], -(3f64.ln()), epsilon = 1e-10);
        let cal = fit_outcome_calibrated(&d, &Basis::intercept_only()).unwrap();
        assert_relative_eq!(cal.params.alpha[0], -(3f64.ln()), epsilon = 1e-10);
        assert!(cal.params.beta[0].abs() < 1e-10);
    }

    #[test]
    fn z_identically_zero_is_rank_deficient() {
        let d = intercept_data(&[1, 0, 0, 0], &[0.0; 4]);
        assert!(matches!(
            fit_outcome_mle(&d, &Basis::intercept_only()),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn separated_data_fail() {
        let d = Dataset::new(
            vec![0, 0, 0, 1, 1, 1],
            &[vec![0.0], vec![1.0], vec![0.0], vec![1.0], vec![0.0], vec![1.0]],
            &[vec![-3.0], vec![-2.0], vec![-1.0], vec![1.0], vec![2.0], vec![3.0]],
        )
        .unwrap();
        let err = fit_outcome_mle(&d, &Basis::linear(1)).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }), "{err}");
    }

    #[test]
    fn constant_response_rejected() {
        let d = intercept_data(&[1, 1, 1], &[0.0, 1.0, 2.0]);
        assert!(fit_outcome_mle(&d, &Basis::intercept_only()).is_err());
    }

    #[test]
    fn gaussian_covariate_subsample_mean_and_variance() {
        let d = intercept_data(&[0, 1, 0, 1, 0], &[1.0, 9.0, 2.0, -4.0, 3.0]);
        let fit = fit_covariate(&d, &Basis::intercept_only(), &[ZFamily::Gaussian]).unwrap();
        assert_relative_eq!(fit.params.gamma[(0, 0)], 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.params.resid_var[0], 2.0 / 3.0, epsilon = 1e-14);
        assert_eq!(fit.subsample_size, 3);
        // y = 1 rows carry zero influence.
        assert_eq!(fit.s2[(1, 0)], 0.0);
        assert_eq!(fit.s2[(3, 0)], 0.0);
        // s2 = n (Σ 1)⁻¹ e = 5/3 · e on the y = 0 rows.
        assert_relative_eq!(fit.s2[(0, 0)], 5.0 / 3.0 * -1.0, epsilon = 1e-14);

        let altered = d.with_z_row(1, &[100.0]).with_z_row(3, &[-7.5]);
        let fit2 = fit_covariate(&altered, &Basis::intercept_only(), &[ZFamily::Gaussian]).unwrap();
        assert_eq!(fit.params, fit2.params);
    }

    #[test]
    fn y1_covariate_mirror() {
        let d = intercept_data(&[1, 0, 1, 1, 0, 1], &[0.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        let fit = fit_covariate_y1(&d, &Basis::intercept_only(), &[ZFamily::Bernoulli]).unwrap();
        assert_relative_eq!(fit.params.mean(0, &[1.0]), 0.5, epsilon = 1e-12);
        assert_eq!(fit.side, Side::Y1);
        let altered = d.with_z_row(1, &[0.0]);
        let fit2 = fit_covariate_y1(&altered, &Basis::intercept_only(), &[ZFamily::Bernoulli]).unwrap();
        assert_eq!(fit.params, fit2.params);
    }

    #[test]
    fn bernoulli_family_rejects_non_binary_values() {
        let d = intercept_data(&[0, 1, 0], &[0.0, 1.0, 0.5]);
        assert!(fit_covariate(&d, &Basis::intercept_only(), &[ZFamily::Bernoulli]).is_err());
    }

    #[test]
    fn covariate_subsample_too_small() {
        let d = Dataset::new(
            vec![0, 1, 1],
            &[vec![0.0], vec![1.0], vec![0.5]],
            &[vec![1.0], vec![2.0], vec![3.0]],
        )
        .unwrap();
        assert!(fit_covariate(&d, &Basis::linear(1), &[ZFamily::Gaussian]).is_err());
    }
}
