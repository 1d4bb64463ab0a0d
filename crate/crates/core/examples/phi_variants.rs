//! Compares the identity, simple and optimal instruments on one Gaussian-Z sample.
//!
//! ```text
//! cargo run --example phi_variants -- [N] [SEED]
//! ```

use drlogit::estimators::{efficiency_compare, mle_report, solve_beta};
use drlogit::model::{Basis, PhiSpec};
use drlogit::nuisance::{fit_covariate, fit_outcome_mle};
use drlogit::sim::{sample_gaussian_tilted, select_scenarios};

fn main() -> drlogit::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let sc = select_scenarios(&["S1b1-gauss".to_string()])?.remove(0);
    let data = sample_gaussian_tilted(&sc.law, n, seed)?;
    let basis = Basis::linear(2);

    let outcome = fit_outcome_mle(&data, &basis)?;
    let covar = fit_covariate(&data, &basis, &sc.law.families())?;
    let mut reports = vec![mle_report(&outcome)?];
    for spec in [PhiSpec::Identity, PhiSpec::Simple, PhiSpec::optimal()] {
        let rep = solve_beta(&data, &outcome, &covar, spec, &basis)?;
        println!(
            "{:<9} beta = {:.4}  se = {:.4}  iterations = {}",
            spec.name(),
            rep.beta_hat[0],
            rep.std_errors[0],
            rep.diagnostics.iterations
        );
        reports.push(rep);
    }
    println!("\ntrue beta = {}; estimated variances:", sc.law.beta_star[0]);
    print!("{}", efficiency_compare(&reports)?.to_table());
    Ok(())
}
