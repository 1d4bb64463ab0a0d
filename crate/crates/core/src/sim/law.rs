use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::model::{expit, Basis, BasisTerm, FiniteLaw, ZFamily};

/// `x ↦ Σ cₖ tₖ(x)` over arbitrary basis terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinearPredictor {
    pub terms: Vec<(BasisTerm, f64)>,
}

impl LinearPredictor {
    pub fn new(terms: Vec<(BasisTerm, f64)>) -> Self {
        LinearPredictor { terms }
    }

    pub fn constant(c: f64) -> Self {
        LinearPredictor::new(vec![(BasisTerm::Intercept, c)])
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(t, c)| c * t.eval(x)).sum()
    }

    /// Whether every term with a non-zero coefficient belongs to `basis`.
    pub fn expressible_in(&self, basis: &Basis) -> bool {
        self.terms.iter().all(|(t, c)| *c == 0.0 || basis.contains(*t))
    }

    fn min_input_dim(&self) -> usize {
        self.terms
            .iter()
            .map(|(t, _)| match *t {
                BasisTerm::Intercept => 0,
                BasisTerm::Linear(j) | BasisTerm::Square(j) => j + 1,
                BasisTerm::Product(a, b) => a.max(b) + 1,
            })
            .max()
            .unwrap_or(0)
    }
}

/// Distribution of the covariates `X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum XLaw {
    Grid { points: Vec<Vec<f64>>, probs: Vec<f64> },
    UniformCube { dim: usize, lo: f64, hi: f64 },
}

impl XLaw {
    pub fn dim(&self) -> usize {
        match self {
            XLaw::Grid { points, .. } => points.first().map_or(0, |p| p.len()),
            XLaw::UniformCube { dim, .. } => *dim,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            XLaw::Grid { points, probs } => {
                if points.is_empty() || points.len() != probs.len() {
                    return Err(Error::InvalidInput("grid needs one probability per point".into()));
                }
                let q = points[0].len();
                if points.iter().any(|p| p.len() != q) {
                    return Err(Error::InvalidInput("grid points differ in dimension".into()));
                }
                let total: f64 = probs.iter().sum();
                if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput("grid probabilities must be a distribution".into()));
                }
            }
            XLaw::UniformCube { lo, hi, .. } => {
                if !(lo < hi) {
                    return Err(Error::InvalidInput("uniform cube needs lo < hi".into()));
                }
            }
        }
        Ok(())
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            XLaw::Grid { points, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (p, w) in points.iter().zip(probs) {
                    acc += w;
                    if u < acc {
                        return p.clone();
                    }
                }
                points.last().expect("non-empty grid").clone()
            }
            XLaw::UniformCube { dim, lo, hi } => (0..*dim).map(|_| rng.random_range(*lo..*hi)).collect(),
        }
    }
}

/// Law of `Z_j` given `Y = 0, X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ComponentLaw {
    /// `N(mean(X), var(X))`; `var` must be positive on the support of `X`.
    Gaussian { mean: LinearPredictor, var: LinearPredictor },
    /// `P(Z_j = 1 | Y = 0, X) = expit(logit(X))`.
    Bernoulli { logit: LinearPredictor },
}

impl ComponentLaw {
    pub fn family(&self) -> ZFamily {
        match self {
            ComponentLaw::Gaussian { .. } => ZFamily::Gaussian,
            ComponentLaw::Bernoulli { .. } => ZFamily::Bernoulli,
        }
    }

    /// `E(Z_j | Y = 0, X = x)`.
    pub fn mean(&self, x: &[f64]) -> f64 {
        match self {
            ComponentLaw::Gaussian { mean, .. } => mean.eval(x),
            ComponentLaw::Bernoulli { logit } => expit(logit.eval(x)),
        }
    }

    /// Homoscedastic Gaussian component.
    pub fn gaussian(mean: LinearPredictor, var: f64) -> Self {
        ComponentLaw::Gaussian {
            mean,
            var: LinearPredictor::constant(var),
        }
    }

    /// `E(Z_j | Y = 1, X = x)` when the coefficient on `Z_j` is `beta`.
    pub fn mean_y1(&self, x: &[f64], beta: f64) -> f64 {
        match self {
            ComponentLaw::Gaussian { mean, var } => mean.eval(x) + beta * var.eval(x),
            ComponentLaw::Bernoulli { logit } => expit(logit.eval(x) + beta),
        }
    }

    /// Whether `E(Z_j | Y = 1, X)` lies in the span used by a working model on `basis`.
    pub fn y1_predictor_expressible_in(&self, basis: &Basis, beta: f64) -> bool {
        match self {
            ComponentLaw::Gaussian { mean, var } => {
                mean.expressible_in(basis) && (beta == 0.0 || var.expressible_in(basis))
            }
            ComponentLaw::Bernoulli { logit } => logit.expressible_in(basis),
        }
    }

    /// The predictor that a working covariate model must reproduce.
    pub fn predictor(&self) -> &LinearPredictor {
        match self {
            ComponentLaw::Gaussian { mean, .. } => mean,
            ComponentLaw::Bernoulli { logit } => logit,
        }
    }
}

/// Joint law of `(Y, Z, X)` through the odds-ratio factorisation
/// `p(y, z | x) ∝ e^{β*ᵀz y} p(z | Y=0, x) p(y | Z=0, x)`, `p(Y=1 | Z=0, x) = expit(g*(x))`,
/// with independent components of `Z` given `Y = 0, X`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrueLaw {
    pub beta_star: Vec<f64>,
    pub x_law: XLaw,
    pub g_star: LinearPredictor,
    pub z_laws: Vec<ComponentLaw>,
}

fn corners(dim: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    (0..1usize << dim)
        .map(|mask| (0..dim).map(|j| if mask >> j & 1 == 1 { hi } else { lo }).collect())
        .collect()
}

/// Largest `|β*ᵀm(x)|` the Gaussian tilt accepts before `exp` overflows.
pub const MAX_TILT_EXPONENT: f64 = 700.0;

impl TrueLaw {
    pub fn new(beta_star: Vec<f64>, x_law: XLaw, g_star: LinearPredictor, z_laws: Vec<ComponentLaw>) -> Result<Self> {
        check_dim("z_laws", beta_star.len(), z_laws.len())?;
        if beta_star.is_empty() {
            return Err(Error::InvalidInput("β* must have at least one component".into()));
        }
        if beta_star.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidInput("β* must be finite".into()));
        }
        x_law.validate()?;
        let q = x_law.dim();
        let need = z_laws
            .iter()
            .flat_map(|c| match c {
                ComponentLaw::Gaussian { mean, var } => [mean.min_input_dim(), var.min_input_dim()],
                ComponentLaw::Bernoulli { logit } => [logit.min_input_dim(), 0],
            })
            .chain(std::iter::once(g_star.min_input_dim()))
            .max()
            .unwrap_or(0);
        if need > q {
            return Err(Error::InvalidInput(format!(
                "law refers to x{need} but X has dimension {q}"
            )));
        }
        for c in &z_laws {
            if let ComponentLaw::Gaussian { var, .. } = c {
                let bad = match &x_law {
                    XLaw::Grid { points, .. } => points.iter().any(|x| !(var.eval(x) > 0.0)),
                    XLaw::UniformCube { dim, lo, hi } => corners(*dim, *lo, *hi)
                        .iter()
                        .any(|x| !(var.eval(x) > 0.0)),
                };
                if bad {
                    return Err(Error::InvalidInput("Gaussian variances must be positive".into()));
                }
            }
        }
        Ok(TrueLaw {
            beta_star,
            x_law,
            g_star,
            z_laws,
        })
    }

    pub fn p(&self) -> usize {
        self.beta_star.len()
    }

    pub fn q(&self) -> usize {
        self.x_law.dim()
    }

    pub fn families(&self) -> Vec<ZFamily> {
        self.z_laws.iter().map(ComponentLaw::family).collect()
    }

    pub fn all_gaussian(&self) -> bool {
        self.z_laws.iter().all(|c| c.family() == ZFamily::Gaussian)
    }

    pub fn all_bernoulli(&self) -> bool {
        self.z_laws.iter().all(|c| c.family() == ZFamily::Bernoulli)
    }

    /// True `E(Z | Y = 0, X = x)`.
    pub fn f0(&self, x: &[f64]) -> Vec<f64> {
        self.z_laws.iter().map(|c| c.mean(x)).collect()
    }

    /// Normalised `[P(Y=0,Z=0), P(Y=0,Z=1), P(Y=1,Z=0), P(Y=1,Z=1)]` given `x` for scalar binary `Z`.
    pub fn binary_cells(&self, x: &[f64]) -> Result<[f64; 4]> {
        if self.p() != 1 || !self.all_bernoulli() {
            return Err(Error::Unsupported("binary cells need a single Bernoulli Z".into()));
        }
        let e = expit(self.g_star.eval(x));
        let f = self.z_laws[0].mean(x);
        let tilt = self.beta_star[0].exp();
        let raw = [(1.0 - e) * (1.0 - f), (1.0 - e) * f, e * (1.0 - f), e * f * tilt];
        let c: f64 = raw.iter().sum();
        let cells = raw.map(|v| v / c);
        if cells.iter().any(|v| !(*v >= 1e-300)) {
            return Err(Error::Overflow(format!("cell probability underflow at x = {x:?}: {cells:?}")));
        }
        Ok(cells)
    }

    /// `(c(x), P(Y=1 | X=x))` for all-Gaussian `Z`, where
    /// `c(x) = 1 - e + e·exp(β*ᵀm + ½ Σ β*ⱼ² σⱼ²)` and `e = expit(g*(x))`.
    pub fn gaussian_tilt(&self, x: &[f64]) -> Result<(f64, f64)> {
        if !self.all_gaussian() {
            return Err(Error::Unsupported("the tilted sampler needs Gaussian Z".into()));
        }
        let mut lin = 0.0;
        let mut quad = 0.0;
        for (b, c) in self.beta_star.iter().zip(&self.z_laws) {
            if let ComponentLaw::Gaussian { mean, var } = c {
                let v = var.eval(x);
                if !(v > 0.0) {
                    return Err(Error::InvalidInput(format!("Gaussian variance {v} at x = {x:?} is not positive")));
                }
                lin += b * mean.eval(x);
                quad += 0.5 * b * b * v;
            }
        }
        if lin.abs() > MAX_TILT_EXPONENT || (lin + quad).abs() > MAX_TILT_EXPONENT {
            return Err(Error::Overflow(format!(
                "tilt exponent β*ᵀm(x) = {lin} at x = {x:?} is out of range"
            )));
        }
        let e = expit(self.g_star.eval(x));
        let t = (lin + quad).exp();
        let c = (1.0 - e) + e * t;
        Ok((c, e * t / c))
    }

    /// Exact [`FiniteLaw`] for a grid `X` and a single Bernoulli `Z`.
    pub fn finite_law(&self) -> Result<FiniteLaw> {
        let XLaw::Grid { points, probs } = &self.x_law else {
            return Err(Error::Unsupported("exact enumeration needs a grid law for X".into()));
        };
        if self.p() != 1 || !self.all_bernoulli() {
            return Err(Error::Unsupported("exact enumeration needs a single Bernoulli Z".into()));
        }
        let z_law = &self.z_laws[0];
        FiniteLaw::from_factorization(
            points.clone(),
            probs,
            vec![vec![0.0], vec![1.0]],
            |i| {
                let f = z_law.mean(&points[i]);
                vec![1.0 - f, f]
            },
            |x| self.g_star.eval(x),
            &self.beta_star,
        )
    }

    /// Draws one `(y, z, x)` observation.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(u8, Vec<f64>, Vec<f64>)> {
        let x = self.x_law.sample(rng);
        if self.p() == 1 && self.all_bernoulli() {
            let cells = self.binary_cells(&x)?;
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut k = 3;
            for (idx, c) in cells.iter().enumerate() {
                acc += c;
                if u < acc {
                    k = idx;
                    break;
                }
            }
            let y = (k / 2) as u8;
            let z = (k % 2) as f64;
            return Ok((y, vec![z], x));
        }
        if self.all_gaussian() {
            let (_, p1) = self.gaussian_tilt(&x)?;
            let y = u8::from(rng.random::<f64>() < p1);
            let mut z = Vec::with_capacity(self.p());
            for (b, c) in self.beta_star.iter().zip(&self.z_laws) {
                if let ComponentLaw::Gaussian { mean, var } = c {
                    let v = var.eval(&x);
                    let shift = if y == 1 { v * b } else { 0.0 };
                    let normal = Normal::new(mean.eval(&x) + shift, v.sqrt())
                        .map_err(|e| Error::InvalidInput(e.to_string()))?;
                    z.push(normal.sample(rng));
                }
            }
            return Ok((y, z, x));
        }
        Err(Error::Unsupported(
            "sampling needs either a single Bernoulli Z or all-Gaussian Z".into(),
        ))
    }
}
