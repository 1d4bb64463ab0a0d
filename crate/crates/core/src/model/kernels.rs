//! Pointwise residuals and doubly robust estimating functions.

use nalgebra::{DMatrix, DVector};

use super::basis::Basis;
use super::params::{CovariateModelParams, OutcomeModelParams};
#[cfg(test)]
use super::params::ZFamily;
use crate::error::{check_dim, Error, Result};

/// `1 / (1 + e^{-c})`, evaluated on the side that cannot overflow.
pub fn expit(c: f64) -> f64 {
    if c >= 0.0 {
        1.0 / (1.0 + (-c).exp())
    } else {
        let e = c.exp();
        e / (1.0 + e)
    }
}

/// Which conditioning level of `Y` the residual and the covariate model refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Side {
    /// `ζ₀ = Y e^{-η} - (1 - Y)` with `f` modelling `E(Z | Y=0, X)`.
    Y0,
    /// `ζ₁ = Y - (1 - Y) e^{η}` with `f` modelling `E(Z | Y=1, X)`.
    Y1,
}

impl Side {
    /// Residual as a function of the linear predictor `η = βᵀz + g`.
    #[inline]
    pub fn zeta(self, y: u8, eta: f64) -> f64 {
        match (self, y) {
            (Side::Y0, 1) => (-eta).exp(),
            (Side::Y0, _) => -1.0,
            (Side::Y1, 1) => 1.0,
            (Side::Y1, _) => -eta.exp(),
        }
    }

    /// `∂ζ/∂η`.
    #[inline]
    pub fn zeta_slope(self, y: u8, eta: f64) -> f64 {
        match (self, y) {
            (Side::Y0, 1) => -(-eta).exp(),
            (Side::Y1, 0) => -eta.exp(),
            _ => 0.0,
        }
    }

    pub fn level(self) -> u8 {
        match self {
            Side::Y0 => 0,
            Side::Y1 => 1,
        }
    }
}

fn eval_basis(x: &[f64], basis: &Basis) -> Result<DVector<f64>> {
    basis.validate_for(x.len())?;
    Ok(basis.eval(x))
}

fn linear_predictor(
    z: &[f64],
    x: &[f64],
    params: &OutcomeModelParams,
    basis: &Basis,
) -> Result<(f64, DVector<f64>)> {
    let b = eval_basis(x, basis)?;
    params.check(z.len(), b.len())?;
    Ok((params.linear_predictor(z, b.as_slice()), b))
}

/// `π(z, x; β, α) = expit{βᵀz + αᵀb(x)}`.
pub fn pi_eval(z: &[f64], x: &[f64], params: &OutcomeModelParams, basis: &Basis) -> Result<f64> {
    Ok(expit(linear_predictor(z, x, params, basis)?.0))
}

/// `ζ₀ = y e^{-βᵀz-g(x;α)} - (1-y)`, the calibrated residual `y/π - 1`.
pub fn zeta0(y: u8, z: &[f64], x: &[f64], params: &OutcomeModelParams, basis: &Basis) -> Result<f64> {
    Ok(Side::Y0.zeta(y, linear_predictor(z, x, params, basis)?.0))
}

/// `ζ₁ = y - (1-y) e^{βᵀz+g(x;α)}`, equal to `(y - π)/(1 - π)`.
pub fn zeta1(y: u8, z: &[f64], x: &[f64], params: &OutcomeModelParams, basis: &Basis) -> Result<f64> {
    Ok(Side::Y1.zeta(y, linear_predictor(z, x, params, basis)?.0))
}

#[allow(clippy::too_many_arguments)]
fn r_side(
    side: Side,
    y: u8,
    z: &[f64],
    x: &[f64],
    beta: &DVector<f64>,
    alpha: &DVector<f64>,
    covar: &CovariateModelParams,
    phi: &DMatrix<f64>,
    basis: &Basis,
) -> Result<DVector<f64>> {
    let p = z.len();
    let b = eval_basis(x, basis)?;
    check_dim("beta", p, beta.len())?;
    check_dim("alpha", b.len(), alpha.len())?;
    covar.check(p, b.len())?;
    check_dim("phi rows", p, phi.nrows())?;
    check_dim("phi columns", p, phi.ncols())?;
    let eta = beta.iter().zip(z).map(|(a, v)| a * v).sum::<f64>() + alpha.dot(&b);
    let resid = DVector::from_column_slice(z) - covar.means(b.as_slice());
    Ok(phi * resid * side.zeta(y, eta))
}

/// Doubly robust estimating function `ζ₀(y,z,x;β,α) · φ(x) · {z - f(x;γ)}`.
///
/// `phi` is the already evaluated `p × p` matrix φ(x) (see [`phi_eval`](super::phi_eval));
/// φ is treated as fixed, not as a function of `β`.
#[allow(clippy::too_many_arguments)]
pub fn r_eval(
    y: u8,
    z: &[f64],
    x: &[f64],
    beta: &DVector<f64>,
    alpha: &DVector<f64>,
    covar: &CovariateModelParams,
    phi: &DMatrix<f64>,
    basis: &Basis,
) -> Result<DVector<f64>> {
    r_side(Side::Y0, y, z, x, beta, alpha, covar, phi, basis)
}

/// Mirror of [`r_eval`] built on `ζ₁` and a model `f₁` for `E(Z | Y=1, X)`.
#[allow(clippy::too_many_arguments)]
pub fn r1_eval(
    y: u8,
    z: &[f64],
    x: &[f64],
    beta: &DVector<f64>,
    alpha: &DVector<f64>,
    covar1: &CovariateModelParams,
    phi: &DMatrix<f64>,
    basis: &Basis,
) -> Result<DVector<f64>> {
    r_side(Side::Y1, y, z, x, beta, alpha, covar1, phi, basis)
}

/// Instrument `u(Z, X)` for the τ′ estimating function.
#[derive(Clone, Copy)]
pub enum Instrument<'a> {
    /// `u(z, x) = C(x) z` with `C` returning a `p × p` matrix; valid for any family.
    Linear(&'a (dyn Fn(&[f64]) -> DMatrix<f64> + Sync)),
    /// Arbitrary `u(z, x) -> R^p`; conditional means are computed by exact enumeration,
    /// so every component of `Z` must be Bernoulli.
    General(&'a (dyn Fn(&[f64], &[f64]) -> DVector<f64> + Sync)),
}

impl Instrument<'_> {
    pub fn eval(&self, z: &[f64], x: &[f64]) -> DVector<f64> {
        match self {
            Instrument::Linear(c) => c(x) * DVector::from_column_slice(z),
            Instrument::General(u) => u(z, x),
        }
    }

    /// `E[u(Z, x) | Y = y₀, X = x; θ]` under the covariate model.
    pub fn conditional_mean(
        &self,
        x: &[f64],
        b: &[f64],
        covar: &CovariateModelParams,
    ) -> Result<DVector<f64>> {
        match self {
            Instrument::Linear(c) => Ok(c(x) * covar.means(b)),
            Instrument::General(u) => {
                if !covar.all_bernoulli() {
                    return Err(Error::Unsupported(
                        "general instruments need binary Z; use a linear-in-Z instrument for \
                         continuous components"
                            .into(),
                    ));
                }
                let p = covar.p();
                if p > 20 {
                    return Err(Error::Unsupported(format!("{p} binary components is too many to enumerate")));
                }
                let f = covar.means(b);
                let mut acc: Option<DVector<f64>> = None;
                let mut z = vec![0.0; p];
                for mask in 0u32..(1 << p) {
                    let mut w = 1.0;
                    for j in 0..p {
                        let on = mask >> j & 1 == 1;
                        z[j] = if on { 1.0 } else { 0.0 };
                        w *= if on { f[j] } else { 1.0 - f[j] };
                    }
                    let term = u(&z, x) * w;
                    acc = Some(match acc {
                        Some(a) => a + term,
                        None => term,
                    });
                }
                Ok(acc.expect("at least one configuration"))
            }
        }
    }
}

/// `τ′ = {y/π(z,x;β,α) - 1} · {u(z,x) - E[u | Y=0, x; θ]}`.
#[allow(clippy::too_many_arguments)]
pub fn tau_prime_eval(
    y: u8,
    z: &[f64],
    x: &[f64],
    beta: &DVector<f64>,
    alpha: &DVector<f64>,
    covar: &CovariateModelParams,
    u: Instrument<'_>,
    basis: &Basis,
) -> Result<DVector<f64>> {
    let p = z.len();
    let b = eval_basis(x, basis)?;
    check_dim("beta", p, beta.len())?;
    check_dim("alpha", b.len(), alpha.len())?;
    covar.check(p, b.len())?;
    let eta = beta.iter().zip(z).map(|(a, v)| a * v).sum::<f64>() + alpha.dot(&b);
    let centred = u.eval(z, x) - u.conditional_mean(x, b.as_slice(), covar)?;
    check_dim("instrument", p, centred.len())?;
    Ok(centred * Side::Y0.zeta(y, eta))
}
