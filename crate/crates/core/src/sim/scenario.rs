use serde::Serialize;

use super::law::{ComponentLaw, LinearPredictor, TrueLaw, XLaw};
use crate::error::{Error, Result};
use crate::model::{Basis, BasisTerm};

#[derive(Debug, Clone, Serialize)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub law: TrueLaw,
    pub working_basis: Basis,
    /// `g*` lies in the span of the working basis.
    pub g_correct: bool,
    /// Every `E(Z_j | Y=0, X)` (mean, or logit for Bernoulli components) lies in the span.
    pub f_correct: bool,
    /// Same for `E(Z_j | Y=1, X)`, the target of the `Y = 1` covariate model.
    pub f1_correct: bool,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
}

impl Scenario {
    /// Builds a scenario; the correctness flags are derived from the law and the basis.
    pub fn new(
        name: &str,
        description: &str,
        law: TrueLaw,
        working_basis: Basis,
        n: usize,
        replications: usize,
        seed: u64,
    ) -> Result<Self> {
        working_basis.validate_for(law.q())?;
        if n == 0 || replications == 0 {
            return Err(Error::InvalidInput("n and replications must be positive".into()));
        }
        let g_correct = law.g_star.expressible_in(&working_basis);
        let f_correct = law.z_laws.iter().all(|c| c.predictor().expressible_in(&working_basis));
        let f1_correct = law
            .z_laws
            .iter()
            .zip(&law.beta_star)
            .all(|(c, b)| c.y1_predictor_expressible_in(&working_basis, *b));
        Ok(Scenario {
            name: name.to_string(),
            description: description.to_string(),
            law,
            working_basis,
            g_correct,
            f_correct,
            f1_correct,
            n,
            replications,
            seed,
        })
    }

    pub fn with_size(mut self, n: usize, replications: usize) -> Self {
        self.n = n;
        self.replications = replications;
        self
    }

    pub fn with_replications(mut self, replications: usize) -> Self {
        self.replications = replications;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_REPLICATIONS: usize = 500;

use BasisTerm::{Intercept, Linear, Product, Square};

fn lp(terms: &[(BasisTerm, f64)]) -> LinearPredictor {
    LinearPredictor::new(terms.to_vec())
}

const G_LIN: &[(BasisTerm, f64)] = &[(Intercept, -0.3), (Linear(0), 0.6), (Linear(1), -0.4)];
const G_SQUARE: &[(BasisTerm, f64)] = &[(Intercept, -1.3), (Linear(0), 0.6), (Linear(1), -0.4), (Square(0), 3.0)];
const G_SQUARE_STRONG: &[(BasisTerm, f64)] =
    &[(Intercept, -2.3), (Linear(0), 0.6), (Linear(1), -0.4), (Square(0), 5.0)];
const G_PRODUCT: &[(BasisTerm, f64)] = &[(Intercept, -0.3), (Linear(0), 0.6), (Linear(1), -0.4), (Product(0, 1), 8.0)];

const M_LIN: &[(BasisTerm, f64)] = &[(Intercept, 0.2), (Linear(0), 0.5), (Linear(1), 0.5)];
const M_STEEP: &[(BasisTerm, f64)] = &[(Intercept, 0.2), (Linear(0), 1.0), (Linear(1), 0.5)];
const M_SQUARE: &[(BasisTerm, f64)] = &[(Intercept, -0.6), (Linear(0), 0.5), (Linear(1), 0.5), (Square(0), 2.4)];
const VAR_SLOPED: &[(BasisTerm, f64)] = &[(Intercept, 1.0), (Linear(0), 0.9)];

const F_LIN: &[(BasisTerm, f64)] = &[(Intercept, -0.2), (Linear(0), 0.8), (Linear(1), -0.5)];
const F_STEEP: &[(BasisTerm, f64)] = &[(Intercept, -0.2), (Linear(0), 3.0), (Linear(1), -0.5)];
const F_SQUARE: &[(BasisTerm, f64)] = &[(Intercept, -1.2), (Linear(0), 0.8), (Linear(1), -0.5), (Square(0), 3.0)];

fn law(beta: f64, g: &[(BasisTerm, f64)], z: ComponentLaw) -> TrueLaw {
    TrueLaw::new(
        vec![beta],
        XLaw::UniformCube {
            dim: 2,
            lo: -1.0,
            hi: 1.0,
        },
        lp(g),
        vec![z],
    )
    .expect("catalog laws are valid")
}

fn bernoulli(logit: &[(BasisTerm, f64)]) -> ComponentLaw {
    ComponentLaw::Bernoulli { logit: lp(logit) }
}

fn gaussian(mean: &[(BasisTerm, f64)], var: &[(BasisTerm, f64)]) -> ComponentLaw {
    ComponentLaw::Gaussian {
        mean: lp(mean),
        var: lp(var),
    }
}

/// The built-in scenarios.
///
/// `X ~ Uniform[-1, 1]²`, scalar `Z`, working basis `(1, x1, x2)`, `n = 2000`, 500
/// replications. Misspecification comes from a term outside the basis (`x1²` or `x1·x2`) in
/// `g*` and/or in `E(Z | Y=0, X)` (its mean for Gaussian `Z`, its logit for binary `Z`).
///
/// | name | β* | g* | `Z \| Y=0, X` |
/// |------|----|----|---------------|
/// | S1-bin   | 0.5 | linear | logit linear |
/// | S1-gauss | 0.5 | linear | N(linear, 1) |
/// | S2-bin   | 0.5 | linear + 8·x1·x2 | logit linear, steep in x1 |
/// | S2-gauss | 0.5 | linear + 5·x1² | N(linear, 1 + 0.9·x1) |
/// | S3-bin   | 0.5 | linear | logit linear + 3·x1² |
/// | S3-gauss | 0.5 | linear | N(linear + 2.4·x1², 1) |
/// | S4-bin   | 0.5 | linear + 3·x1² | logit linear + 3·x1² |
/// | S4-gauss | 0.5 | linear + 3·x1² | N(linear + 2.4·x1², 1) |
/// | S1b0-*, S1b1-* | 0, 1 | as S1 | as S1 |
///
/// With f correct and a constant variance the outcome-model MLE is almost unaffected by a
/// wrong g, so the S2 laws add a steep or heteroscedastic `Z` that lets the misfit of g reach
/// the MLE. `E(Z | Y=1, X)` stays in the working span wherever `E(Z | Y=0, X)` does.
pub fn scenario_catalog() -> Vec<Scenario> {
    let cases: Vec<(&str, &str, TrueLaw)> = vec![
        ("S1-bin", "both working models correct (binary Z)", law(0.5, G_LIN, bernoulli(F_LIN))),
        ("S1-gauss", "both working models correct (Gaussian Z)", law(0.5, G_LIN, gaussian(M_LIN, &[(Intercept, 1.0)]))),
        ("S2-bin", "outcome model misspecified, covariate model correct (binary Z)", law(0.5, G_PRODUCT, bernoulli(F_STEEP))),
        ("S2-gauss", "outcome model misspecified, covariate model correct (Gaussian Z)", law(0.5, G_SQUARE_STRONG, gaussian(M_STEEP, VAR_SLOPED))),
        ("S3-bin", "outcome model correct, covariate model misspecified (binary Z)", law(0.5, G_LIN, bernoulli(F_SQUARE))),
        ("S3-gauss", "outcome model correct, covariate model misspecified (Gaussian Z)", law(0.5, G_LIN, gaussian(M_SQUARE, &[(Intercept, 1.0)]))),
        ("S4-bin", "both working models misspecified (binary Z)", law(0.5, G_SQUARE, bernoulli(F_SQUARE))),
        ("S4-gauss", "both working models misspecified (Gaussian Z)", law(0.5, G_SQUARE, gaussian(M_SQUARE, &[(Intercept, 1.0)]))),
        ("S1b0-bin", "both correct, beta* = 0 (binary Z)", law(0.0, G_LIN, bernoulli(F_LIN))),
        ("S1b0-gauss", "both correct, beta* = 0 (Gaussian Z)", law(0.0, G_LIN, gaussian(M_LIN, &[(Intercept, 1.0)]))),
        ("S1b1-bin", "both correct, beta* = 1 (binary Z)", law(1.0, G_LIN, bernoulli(F_LIN))),
        ("S1b1-gauss", "both correct, beta* = 1 (Gaussian Z)", law(1.0, G_LIN, gaussian(M_LIN, &[(Intercept, 1.0)]))),
    ];
    let basis = Basis::linear(2);
    cases
        .into_iter()
        .enumerate()
        .map(|(k, (name, description, law))| {
            Scenario::new(name, description, law, basis.clone(), DEFAULT_N, DEFAULT_REPLICATIONS, 20_000 + 101 * k as u64)
                .expect("catalog scenarios are valid")
        })
        .collect()
}

/// Resolves user-supplied names against the catalog.
///
/// A name matches a scenario exactly (case-insensitive) or names a case, in which case both
/// editions are returned (`S1` gives `S1-bin` and `S1-gauss`).
pub fn select_scenarios(names: &[String]) -> Result<Vec<Scenario>> {
    let catalog = scenario_catalog();
    let mut out: Vec<Scenario> = Vec::new();
    for raw in names {
        let name = raw.trim();
        let hits: Vec<&Scenario> = catalog
            .iter()
            .filter(|s| {
                s.name.eq_ignore_ascii_case(name)
                    || s.name
                        .rsplit_once('-')
                        .is_some_and(|(case, _)| case.eq_ignore_ascii_case(name))
            })
            .collect();
        if hits.is_empty() {
            let valid: Vec<&str> = catalog.iter().map(|s| s.name.as_str()).collect();
            return Err(Error::InvalidInput(format!(
                "unknown scenario `{name}`; valid names are {} (or a case prefix such as S1)",
                valid.join(", ")
            )));
        }
        for s in hits {
            if !out.iter().any(|o| o.name == s.name) {
                out.push(s.clone());
            }
        }
    }
    Ok(out)
}
