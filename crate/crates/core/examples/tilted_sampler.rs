//! Draws from a Gaussian-Z law by exponential tilting and checks the sample against the
//! closed-form conditional moments.
//!
//! ```text
//! cargo run --release --example tilted_sampler -- [N]
//! ```

use drlogit::model::BasisTerm;
use drlogit::sim::{sample_gaussian_tilted, ComponentLaw, LinearPredictor, TrueLaw, XLaw};

fn main() -> drlogit::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(400_000);
    let (beta, var) = (0.8, 1.5);
    let law = TrueLaw::new(
        vec![beta],
        XLaw::Grid {
            points: vec![vec![-1.0], vec![0.0], vec![1.0]],
            probs: vec![0.25, 0.5, 0.25],
        },
        LinearPredictor::new(vec![(BasisTerm::Intercept, -0.5), (BasisTerm::Linear(0), 0.6)]),
        vec![ComponentLaw::gaussian(LinearPredictor::new(vec![(BasisTerm::Intercept, 0.2), (BasisTerm::Linear(0), 1.0)]), var)],
    )?;
    let data = sample_gaussian_tilted(&law, n, 11)?;
    println!("{:>4} {:>8} {:>10} {:>10} {:>10} {:>10} {:>10}", "x", "rows", "c(x)", "P(Y=1)", "freq", "E(Z|Y=1)", "mean");
    for x in [-1.0, 0.0, 1.0] {
        let (c, p1) = law.gaussian_tilt(&[x])?;
        let rows: Vec<usize> = (0..data.n()).filter(|&i| data.x(i)[0] == x).collect();
        let ones: Vec<usize> = rows.iter().copied().filter(|&i| data.y(i) == 1).collect();
        let freq = ones.len() as f64 / rows.len() as f64;
        let mean1 = ones.iter().map(|&i| data.z(i)[0]).sum::<f64>() / ones.len() as f64;
        println!(
            "{x:>4} {:>8} {c:>10.5} {p1:>10.5} {freq:>10.5} {:>10.5} {mean1:>10.5}",
            rows.len(),
            law.z_laws[0].mean_y1(&[x], beta)
        );
    }
    Ok(())
}
