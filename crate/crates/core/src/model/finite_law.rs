//! Finite-support joint laws of `(Y, Z, X)` and exact expectations over them.

use nalgebra::DVector;

use super::kernels::expit;
use crate::error::{Error, Result};

const NORMALISATION_TOL: f64 = 1e-10;

/// Joint law on `{0,1} × z_points × x_points`, stored as `P(Y=y, Z=z_k, X=x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteLaw {
    x_points: Vec<Vec<f64>>,
    z_points: Vec<Vec<f64>>,
    /// Index `i * nz + k` holds `[P(Y=0, z_k, x_i), P(Y=1, z_k, x_i)]`.
    cells: Vec<[f64; 2]>,
}

impl FiniteLaw {
    /// `cells[i][k] = [P(Y=0, z_k, x_i), P(Y=1, z_k, x_i)]`.
    pub fn new(x_points: Vec<Vec<f64>>, z_points: Vec<Vec<f64>>, cells: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let nz = z_points.len();
        if cells.len() != x_points.len() || cells.iter().any(|row| row.len() != nz) {
            return Err(Error::InvalidInput("cell table does not match the support".into()));
        }
        let flat: Vec<[f64; 2]> = cells.into_iter().flatten().collect();
        if flat.iter().flatten().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidInput("cell probabilities must be finite and non-negative".into()));
        }
        let total: f64 = flat.iter().flatten().sum();
        if (total - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::InvalidInput(format!(
                "law is not normalised: probabilities sum to {total}"
            )));
        }
        Ok(FiniteLaw {
            x_points,
            z_points,
            cells: flat,
        })
    }

    /// Law implied by the odds-ratio factorisation
    /// `p(y, z | x) ∝ e^{βᵀz y} p(z | Y=0, x) p(y | Z=0, x)` with `p(Y=1 | Z=0, x) = expit(g*(x))`.
    ///
    /// `z_given_y0(i)` returns `p(z_k | Y=0, x_i)` for every support point `z_k`.
    pub fn from_factorization(
        x_points: Vec<Vec<f64>>,
        x_probs: &[f64],
        z_points: Vec<Vec<f64>>,
        z_given_y0: impl Fn(usize) -> Vec<f64>,
        g_star: impl Fn(&[f64]) -> f64,
        beta: &[f64],
    ) -> Result<Self> {
        if x_probs.len() != x_points.len() {
            return Err(Error::InvalidInput("x_probs must match x_points".into()));
        }
        let mut cells = Vec::with_capacity(x_points.len());
        for (i, x) in x_points.iter().enumerate() {
            let pz = z_given_y0(i);
            if pz.len() != z_points.len() {
                return Err(Error::InvalidInput("p(z|Y=0,x) has the wrong length".into()));
            }
            let e = expit(g_star(x));
            let mut row: Vec<[f64; 2]> = z_points
                .iter()
                .zip(&pz)
                .map(|(z, &q)| {
                    let tilt: f64 = beta.iter().zip(z).map(|(b, v)| b * v).sum::<f64>().exp();
                    [q * (1.0 - e), q * e * tilt]
                })
                .collect();
            let c: f64 = row.iter().flatten().sum();
            for cell in &mut row {
                cell[0] *= x_probs[i] / c;
                cell[1] *= x_probs[i] / c;
            }
            cells.push(row);
        }
        FiniteLaw::new(x_points, z_points, cells)
    }

    pub fn x_points(&self) -> &[Vec<f64>] {
        &self.x_points
    }

    pub fn z_points(&self) -> &[Vec<f64>] {
        &self.z_points
    }

    /// `P(Y=y, Z=z_k, X=x_i)`.
    pub fn prob(&self, y: u8, k: usize, i: usize) -> f64 {
        self.cells[i * self.z_points.len() + k][y as usize]
    }

    pub fn prob_x(&self, i: usize) -> f64 {
        (0..self.z_points.len())
            .map(|k| self.prob(0, k, i) + self.prob(1, k, i))
            .sum()
    }

    /// `P(Y=1 | Z=z_k, X=x_i)`, or `None` off the support.
    pub fn pi(&self, k: usize, i: usize) -> Option<f64> {
        let (p0, p1) = (self.prob(0, k, i), self.prob(1, k, i));
        (p0 + p1 > 0.0).then(|| p1 / (p0 + p1))
    }

    /// Exact `E[F(Y, Z, X)]` by enumeration over the support.
    pub fn expectation(&self, mut f: impl FnMut(u8, &[f64], &[f64]) -> DVector<f64>) -> DVector<f64> {
        let mut acc: Option<DVector<f64>> = None;
        for (i, x) in self.x_points.iter().enumerate() {
            for (k, z) in self.z_points.iter().enumerate() {
                for y in 0..2u8 {
                    let p = self.prob(y, k, i);
                    if p == 0.0 {
                        continue;
                    }
                    let term = f(y, z, x) * p;
                    acc = Some(match acc {
                        Some(a) => a + term,
                        None => term,
                    });
                }
            }
        }
        acc.expect("a normalised law has positive mass somewhere")
    }
}

/// Largest discrepancy over the support of X between `E[h π (1-π) | X]` and
/// `P(Y=0 | X) E[h π | Y=0, X]`, both computed by exact enumeration.
pub fn orthocomp_identity_check(h: impl Fn(&[f64], &[f64]) -> f64, law: &FiniteLaw) -> Result<f64> {
    let nz = law.z_points.len();
    let mut worst: f64 = 0.0;
    for (i, x) in law.x_points.iter().enumerate() {
        let px = law.prob_x(i);
        if px == 0.0 {
            continue;
        }
        let py0: f64 = (0..nz).map(|k| law.prob(0, k, i)).sum();
        if py0 == 0.0 {
            return Err(Error::InvalidInput(format!(
                "P(Y=0 | X = x_{i}) is zero; conditioning on Y=0 is undefined"
            )));
        }
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for (k, z) in law.z_points.iter().enumerate() {
            let pzx = law.prob(0, k, i) + law.prob(1, k, i);
            let Some(pi) = law.pi(k, i) else { continue };
            if !(pi > 0.0 && pi < 1.0) {
                return Err(Error::InvalidInput(format!(
                    "P(Y=1 | Z, X) must lie in (0,1); got {pi} at cell (z_{k}, x_{i})"
                )));
            }
            let hv = h(z, x);
            lhs += pzx / px * hv * pi * (1.0 - pi);
            rhs += law.prob(0, k, i) / py0 * hv * pi;
        }
        worst = worst.max((lhs - py0 / px * rhs).abs());
    }
    Ok(worst)
}
