//! Exact samplers from the odds-ratio factorisation, the scenario catalog and a seeded
//! Monte Carlo runner.

mod law;
mod runner;
mod scenario;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use law::{ComponentLaw, LinearPredictor, TrueLaw, XLaw, MAX_TILT_EXPONENT};
pub use runner::{
    markdown_table, run_scenario, text_table, write_rows_csv, Draw, EstimatorSummary, MonteCarloConfig,
    MonteCarloSummary, MAX_FAILURE_FRACTION,
};
pub use scenario::{scenario_catalog, select_scenarios, Scenario, DEFAULT_N, DEFAULT_REPLICATIONS};

use crate::error::{Error, Result};
use crate::model::Dataset;

/// Draws `n` observations from `law` with a caller-supplied generator.
pub fn sample_with<R: Rng + ?Sized>(law: &TrueLaw, n: usize, rng: &mut R) -> Result<Dataset> {
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n * law.p());
    let mut x = Vec::with_capacity(n * law.q());
    for _ in 0..n {
        let (yi, zi, xi) = law.draw(rng)?;
        y.push(yi);
        z.extend(zi);
        x.extend(xi);
    }
    Dataset::from_flat(y, z, x, law.p(), law.q())
}

/// `n` draws from a law with a single binary `Z`, using the exact normalised 2×2 table at each `x`.
pub fn sample_binary(law: &TrueLaw, n: usize, seed: u64) -> Result<Dataset> {
    if law.p() != 1 || !law.all_bernoulli() {
        return Err(Error::InvalidInput("sample_binary needs a single Bernoulli Z".into()));
    }
    sample_with(law, n, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `n` draws from a law with Gaussian `Z` by exponential tilting:
/// `Y | X` is Bernoulli with the tilted probability, `Z | Y=0, X ~ N(m, σ²)` and
/// `Z | Y=1, X ~ N(m + σ²β*, σ²)` componentwise.
pub fn sample_gaussian_tilted(law: &TrueLaw, n: usize, seed: u64) -> Result<Dataset> {
    if !law.all_gaussian() {
        return Err(Error::InvalidInput("sample_gaussian_tilted needs Gaussian Z".into()));
    }
    sample_with(law, n, &mut ChaCha8Rng::seed_from_u64(seed))
}
