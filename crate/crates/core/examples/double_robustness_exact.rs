//! Exact expectation of the estimating function on a finite law with one working model
//! deliberately wrong. Both columns stay at rounding level; the last one breaks both models.
//!
//! ```text
//! cargo run --example double_robustness_exact
//! ```

use drlogit::model::{phi_eval, r_eval, Basis, BasisTerm, CovariateModelParams, OutcomeModelParams, PhiSpec, ZFamily};
use drlogit::sim::{ComponentLaw, LinearPredictor, TrueLaw, XLaw};
use nalgebra::DVector;

fn main() -> drlogit::Result<()> {
    let quad = |c: [f64; 3]| {
        LinearPredictor::new(vec![(BasisTerm::Intercept, c[0]), (BasisTerm::Linear(0), c[1]), (BasisTerm::Square(0), c[2])])
    };
    let (g, f) = ([-0.4, 0.8, 0.5], [0.3, -1.1, 0.6]);
    let law = TrueLaw::new(
        vec![0.9],
        XLaw::Grid {
            points: vec![vec![-1.0], vec![0.0], vec![1.0]],
            probs: vec![0.3, 0.3, 0.4],
        },
        quad(g),
        vec![ComponentLaw::Bernoulli { logit: quad(f) }],
    )?;
    let exact = law.finite_law()?;
    let basis = Basis::parse(&["1", "x1", "x1^2"])?;
    let beta = DVector::from_element(1, 0.9);

    let expect = |alpha: [f64; 3], gamma: [f64; 3], spec: PhiSpec| -> drlogit::Result<f64> {
        let outcome = OutcomeModelParams::from_slices(&[0.9], &alpha)?;
        let covar = CovariateModelParams::scalar(ZFamily::Bernoulli, &gamma, 1.0)?;
        let e = exact.expectation(|y, z, x| {
            let phi = phi_eval(spec, x, &outcome, &covar, &basis).expect("phi").matrix;
            r_eval(y, z, x, &beta, &outcome.alpha, &covar, &phi, &basis).expect("r")
        });
        Ok(e[0])
    };
    let (wrong_g, wrong_f) = ([0.7, -0.2, -1.0], [-0.8, 0.4, 1.2]);
    println!("{:<9} {:>14} {:>14} {:>14}", "phi", "g wrong", "f wrong", "both wrong");
    for spec in [PhiSpec::Identity, PhiSpec::Simple, PhiSpec::optimal()] {
        println!(
            "{:<9} {:>14.3e} {:>14.3e} {:>14.3e}",
            spec.name(),
            expect(wrong_g, f, spec)?,
            expect(g, wrong_f, spec)?,
            expect(wrong_g, wrong_f, spec)?
        );
    }
    Ok(())
}
