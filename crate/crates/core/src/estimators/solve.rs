use nalgebra::{DMatrix, DVector};

use super::report::{EstimateReport, SolveDiagnostics};
use super::table::KernelTable;
use crate::error::{Error, Result};
use crate::model::{expit, Basis, Dataset, Instrument, PhiSpec, Side, ZFamily};
use crate::newton;
use crate::nuisance::{basis_matrix, CovariateFit, OutcomeFit};

pub const DEFAULT_LEVEL: f64 = 0.95;

/// Influence expansion of β̂ with φ held fixed.
#[derive(Debug, Clone)]
pub struct InfluenceAssembly {
    /// Mean derivative of the estimating function in β, `p × p`.
    pub h: DMatrix<f64>,
    /// Mean derivative in α, `p × m`.
    pub b1: DMatrix<f64>,
    /// Mean derivative in γ, `p × (p·m)`, blocks ordered by component.
    pub b2: DMatrix<f64>,
    /// `n × p`.
    pub influence: DMatrix<f64>,
    pub covariance: DMatrix<f64>,
}

fn general_condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

fn check_side(covar: &CovariateFit, side: Side) -> Result<()> {
    if covar.side != side {
        return Err(Error::InvalidInput(format!(
            "covariate model was fitted on the Y={} subsample but the estimator needs Y={}",
            covar.side.level(),
            side.level()
        )));
    }
    Ok(())
}

fn assemble_table(
    table: &KernelTable,
    beta_hat: &DVector<f64>,
    outcome: &OutcomeFit,
    covar: &CovariateFit,
) -> Result<InfluenceAssembly> {
    let n = table.n();
    if outcome.s1.nrows() != n || covar.s2.nrows() != n {
        return Err(Error::DimensionMismatch {
            what: "nuisance influence rows",
            expected: n,
            found: if outcome.s1.nrows() != n { outcome.s1.nrows() } else { covar.s2.nrows() },
        });
    }
    let (h, b1, b2) = table.derivatives(beta_hat);
    let h_inv = h.clone().try_inverse().ok_or(Error::Singular {
        what: "estimating-equation Jacobian H",
        condition: general_condition(&h),
    })?;
    let r = table.terms(beta_hat);
    let total = r + outcome.s1_alpha() * b1.transpose() + &covar.s2 * b2.transpose();
    let influence = -(total * h_inv.transpose());
    let nf = n as f64;
    let mut covariance = influence.tr_mul(&influence) / (nf * nf);
    covariance = (&covariance + covariance.transpose()) * 0.5;
    Ok(InfluenceAssembly {
        h,
        b1,
        b2,
        influence,
        covariance,
    })
}

/// Derivatives `(H, B₁, B₂)`, influence values and sandwich covariance of the doubly robust
/// estimator at `beta_hat`.
///
/// `ψᵢ = -Ĥ⁻¹{rᵢ + B̂₁ s1ᵢ + B̂₂ s2ᵢ}` where `s1`, `s2` are the nuisance influence values
/// (α-block of the outcome fit and the covariate fit), and the covariance is `n⁻² Σ ψᵢψᵢᵀ`.
/// The side (`Y = 0` or `Y = 1` residual) follows the covariate fit.
pub fn influence_assemble(
    data: &Dataset,
    beta_hat: &DVector<f64>,
    outcome: &OutcomeFit,
    covar: &CovariateFit,
    phi: PhiSpec,
    basis: &Basis,
) -> Result<InfluenceAssembly> {
    let table = KernelTable::dr(data, &outcome.params, &covar.params, phi, covar.side, basis)?;
    assemble_table(&table, beta_hat, outcome, covar)
}

fn solve_table(table: &KernelTable, start: &DVector<f64>) -> Result<(newton::NewtonResult, bool)> {
    let eval = |b: &DVector<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (eq, jac) = table.equation(b);
        if eq.iter().chain(jac.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Overflow("estimating equation is not finite at this β".into()));
        }
        Ok((eq, jac))
    };
    match newton::solve("β estimating equation", start.clone(), eval) {
        Ok(r) => Ok((r, false)),
        Err(first) => {
            if start.iter().all(|v| *v == 0.0) {
                return Err(first);
            }
            newton::solve("β estimating equation", DVector::zeros(start.len()), eval)
                .map(|r| (r, true))
                .map_err(|_| first)
        }
    }
}

fn solve_side(
    data: &Dataset,
    outcome: &OutcomeFit,
    covar: &CovariateFit,
    phi: PhiSpec,
    basis: &Basis,
    side: Side,
) -> Result<EstimateReport> {
    check_side(covar, side)?;
    data.require_both_responses()?;
    let table = KernelTable::dr(data, &outcome.params, &covar.params, phi, side, basis)?;
    let (sol, restarted) = solve_table(&table, &outcome.params.beta)?;
    let assembly = assemble_table(&table, &sol.x, outcome, covar)?;
    let diagnostics = SolveDiagnostics {
        iterations: sol.iterations,
        final_eq_norm: sol.eq_norm,
        jacobian_condition: general_condition(&sol.jacobian),
        step_halvings: sol.halvings,
        restarted,
        max_phi_condition: table.max_phi_condition,
    };
    EstimateReport::from_influence(sol.x, assembly.influence, DEFAULT_LEVEL, diagnostics, Some(phi), side)
}

/// Doubly robust estimate of β from the `Y = 0` residual `ζ₀ φ(X){Z - f(X)}`.
///
/// φ is evaluated once at the plugged-in nuisance estimates and held fixed while β is
/// iterated. Newton starts at the outcome fit's β̂ and restarts from zero if that fails.
/// Intervals are at level 0.95; use [`EstimateReport::relevel`] for others.
pub fn solve_beta(
    data: &Dataset,
    outcome: &OutcomeFit,
    covar: &CovariateFit,
    phi: PhiSpec,
    basis: &Basis,
) -> Result<EstimateReport> {
    solve_side(data, outcome, covar, phi, basis, Side::Y0)
}

/// Mirror-image estimator from the `Y = 1` residual `ζ₁ φ(X){Z - f₁(X)}` with `f₁` modelling
/// `E(Z | Y = 1, X)` (see [`crate::nuisance::fit_covariate_y1`]).
pub fn solve_beta_y1(
    data: &Dataset,
    outcome: &OutcomeFit,
    covar1: &CovariateFit,
    phi: PhiSpec,
    basis: &Basis,
) -> Result<EstimateReport> {
    solve_side(data, outcome, covar1, phi, basis, Side::Y1)
}

/// Maximum likelihood β̂ of the outcome model with a robust sandwich covariance.
pub fn mle_report(outcome: &OutcomeFit) -> Result<EstimateReport> {
    let p = outcome.params.p();
    let influence = outcome.s1.columns(0, p).into_owned();
    let diagnostics = SolveDiagnostics {
        iterations: outcome.iterations,
        final_eq_norm: outcome.eq_norm,
        jacobian_condition: general_condition(&outcome.info_matrix),
        step_halvings: 0,
        restarted: false,
        max_phi_condition: None,
    };
    EstimateReport::from_influence(outcome.params.beta.clone(), influence, DEFAULT_LEVEL, diagnostics, None, Side::Y0)
}

/// Root of `n⁻¹ Σ (Yᵢ/πᵢ - 1){u(Zᵢ,Xᵢ) - E[u | Y=0, Xᵢ; γ̂]} = 0` in β.
#[derive(Debug, Clone)]
pub struct TauPrimeSolution {
    pub beta_hat: DVector<f64>,
    pub diagnostics: SolveDiagnostics,
}

pub fn solve_beta_tau_prime(
    data: &Dataset,
    outcome: &OutcomeFit,
    covar: &CovariateFit,
    u: Instrument<'_>,
    basis: &Basis,
) -> Result<TauPrimeSolution> {
    check_side(covar, Side::Y0)?;
    data.require_both_responses()?;
    let table = KernelTable::tau_prime(data, &outcome.params, &covar.params, u, basis)?;
    let (sol, restarted) = solve_table(&table, &outcome.params.beta)?;
    Ok(TauPrimeSolution {
        diagnostics: SolveDiagnostics {
            iterations: sol.iterations,
            final_eq_norm: sol.eq_norm,
            jacobian_condition: general_condition(&sol.jacobian),
            step_halvings: sol.halvings,
            restarted,
            max_phi_condition: None,
        },
        beta_hat: sol.x,
    })
}

/// Closed-form root of the simple-φ equation for a scalar binary `Z`.
///
/// With `eᵢ = expit(g(xᵢ; α̂))` and `fᵢ = f(xᵢ; γ̂)`, returns `-log(A/B)` where
/// `B = Σ_{y=1,z=1} (1-e)(1-f)` and `A = Σ_{y=1,z=0} (1-e) f + Σ_{y=0} e (z-f)`.
pub fn closed_form_binary(data: &Dataset, outcome: &OutcomeFit, covar: &CovariateFit, basis: &Basis) -> Result<f64> {
    check_side(covar, Side::Y0)?;
    let params = &covar.params;
    if data.p() != 1 || params.p() != 1 || params.families[0] != ZFamily::Bernoulli {
        return Err(Error::InvalidInput("the closed form needs a single Bernoulli Z".into()));
    }
    let bmat = basis_matrix(data, basis)?;
    let m = bmat.ncols();
    outcome.params.check(1, m)?;
    params.check(1, m)?;
    let (mut a, mut b) = (0.0, 0.0);
    let mut row = vec![0.0; m];
    for i in 0..data.n() {
        for k in 0..m {
            row[k] = bmat[(i, k)];
        }
        let e = expit(outcome.params.g(&row));
        let f = params.mean(0, &row);
        let z = data.z(i)[0];
        if z != 0.0 && z != 1.0 {
            return Err(Error::InvalidInput(format!("row {i}: Z = {z} is not binary")));
        }
        match (data.y(i), z == 1.0) {
            (1, true) => b += (1.0 - e) * (1.0 - f),
            (1, false) => a += (1.0 - e) * f,
            _ => a += e * (z - f),
        }
    }
    if a <= 0.0 || b <= 0.0 {
        return Err(Error::NoFiniteRoot(format!(
            "closed form needs A > 0 and B > 0, got A = {a:.6e}, B = {b:.6e}"
        )));
    }
    Ok(-(a / b).ln())
}

/// [`closed_form_binary`] packaged with the simple-φ sandwich covariance.
pub fn closed_form_report(
    data: &Dataset,
    outcome: &OutcomeFit,
    covar: &CovariateFit,
    basis: &Basis,
) -> Result<EstimateReport> {
    let beta = closed_form_binary(data, outcome, covar, basis)?;
    let beta = DVector::from_element(1, beta);
    let table = KernelTable::dr(data, &outcome.params, &covar.params, PhiSpec::Simple, Side::Y0, basis)?;
    let assembly = assemble_table(&table, &beta, outcome, covar)?;
    let mut diagnostics = SolveDiagnostics::closed_form();
    let (eq, jac) = table.equation(&beta);
    diagnostics.final_eq_norm = eq.amax();
    diagnostics.jacobian_condition = general_condition(&jac);
    EstimateReport::from_influence(beta, assembly.influence, DEFAULT_LEVEL, diagnostics, Some(PhiSpec::Simple), Side::Y0)
}
