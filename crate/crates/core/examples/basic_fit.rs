//! Fits the outcome model and the doubly robust estimator to a CSV file.
//!
//! ```text
//! cargo run --example basic_fit -- [DATA.csv]
//! ```

use std::path::PathBuf;

use drlogit::estimators::{mle_report, solve_beta};
use drlogit::io::read_dataset;
use drlogit::model::{Basis, PhiSpec, ZFamily};
use drlogit::nuisance::{fit_covariate, fit_outcome_mle};

fn main() -> drlogit::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/binary_beta0.csv"));
    let data = read_dataset(&path)?;
    let basis = Basis::linear(data.q());
    println!("{} rows, p = {}, q = {}, {} with y = 1", data.n(), data.p(), data.q(), data.count_y1());

    let outcome = fit_outcome_mle(&data, &basis)?;
    let covar = fit_covariate(&data, &basis, &vec![ZFamily::Bernoulli; data.p()])?;
    println!("alpha_hat = {:.4?}", outcome.params.alpha.as_slice());

    for (name, rep) in [("mle", mle_report(&outcome)?), ("dr0-simple", solve_beta(&data, &outcome, &covar, PhiSpec::Simple, &basis)?)] {
        let (lo, hi) = rep.wald_ci[0];
        println!("{name:<11} beta = {:+.4}  se = {:.4}  95% CI [{lo:+.4}, {hi:+.4}]", rep.beta_hat[0], rep.std_errors[0]);
    }
    Ok(())
}
