//! Closed-form estimate for a single binary Z next to the Newton root with the simple instrument.
//!
//! ```text
//! cargo run --example closed_form_binary -- [N]
//! ```

use drlogit::estimators::{closed_form_report, solve_beta};
use drlogit::model::{Basis, PhiSpec};
use drlogit::nuisance::{fit_covariate, fit_outcome_mle};
use drlogit::sim::{sample_binary, select_scenarios};

fn main() -> drlogit::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2000);
    let sc = select_scenarios(&["S3-bin".to_string()])?.remove(0);
    let basis = Basis::linear(2);
    println!("{}; true beta = {}", sc.description, sc.law.beta_star[0]);
    println!("{:>4} {:>12} {:>12} {:>10} {:>10}", "seed", "closed form", "newton", "|diff|", "se");
    for seed in 0..5 {
        let data = sample_binary(&sc.law, n, seed)?;
        let outcome = fit_outcome_mle(&data, &basis)?;
        let covar = fit_covariate(&data, &basis, &sc.law.families())?;
        let cf = closed_form_report(&data, &outcome, &covar, &basis)?;
        let newton = solve_beta(&data, &outcome, &covar, PhiSpec::Simple, &basis)?;
        println!(
            "{seed:>4} {:>12.6} {:>12.6} {:>10.1e} {:>10.4}",
            cf.beta_hat[0],
            newton.beta_hat[0],
            (cf.beta_hat[0] - newton.beta_hat[0]).abs(),
            cf.std_errors[0]
        );
    }
    Ok(())
}
