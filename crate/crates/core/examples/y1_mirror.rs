//! The Y = 1 estimator equals the negated Y = 0 estimator on the relabelled data.
//!
//! ```text
//! cargo run --example y1_mirror
//! ```

use drlogit::estimators::{solve_beta, solve_beta_y1};
use drlogit::model::{Basis, PhiSpec};
use drlogit::nuisance::{fit_covariate, fit_covariate_y1, fit_outcome_mle};
use drlogit::sim::{sample_gaussian_tilted, select_scenarios};

fn main() -> drlogit::Result<()> {
    let sc = select_scenarios(&["S1-gauss".to_string()])?.remove(0);
    let data = sample_gaussian_tilted(&sc.law, 3000, 8)?;
    let flipped = data.flip_response();
    let basis = Basis::linear(2);
    let families = sc.law.families();

    let outcome = fit_outcome_mle(&data, &basis)?;
    let covar0 = fit_covariate(&data, &basis, &families)?;
    let covar1 = fit_covariate_y1(&data, &basis, &families)?;
    let outcome_f = fit_outcome_mle(&flipped, &basis)?;
    let covar0_f = fit_covariate(&flipped, &basis, &families)?;
    for spec in [PhiSpec::Identity, PhiSpec::Simple, PhiSpec::optimal()] {
        let y0 = solve_beta(&data, &outcome, &covar0, spec, &basis)?.beta_hat[0];
        let y1 = solve_beta_y1(&data, &outcome, &covar1, spec, &basis)?.beta_hat[0];
        let mirror = solve_beta(&flipped, &outcome_f, &covar0_f, spec, &basis)?.beta_hat[0];
        println!("{:<9} y0 {y0:.5}  y1 {y1:.5}  -(y0 on flipped data) {:.5}", spec.name(), -mirror);
    }
    Ok(())
}
