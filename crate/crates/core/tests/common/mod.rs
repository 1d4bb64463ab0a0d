#![allow(dead_code)]

use drlogit::model::{expit, Dataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Forward simulation from `P(Y=1 | Z, X) = expit(βz + a0 + a1 x)` with
/// `X ~ U(-1, 1)` and `Z | X` Bernoulli or Gaussian with mean linear in `x`.
pub fn forward_dataset(seed: u64, n: usize, beta: f64, binary: bool) -> Dataset {
    let mut r = rng(seed);
    let a0 = r.random_range(-0.5..0.5);
    let a1 = r.random_range(-1.0..1.0);
    let c0 = r.random_range(-0.5..0.5);
    let c1 = r.random_range(-1.0..1.0);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: f64 = r.random_range(-1.0..1.0);
        let zi = if binary {
            f64::from(r.random::<f64>() < expit(c0 + c1 * xi))
        } else {
            c0 + c1 * xi + normal.sample(&mut r)
        };
        let yi = u8::from(r.random::<f64>() < expit(beta * zi + a0 + a1 * xi));
        y.push(yi);
        z.push(vec![zi]);
        x.push(vec![xi]);
    }
    Dataset::new(y, &z, &x).unwrap()
}

/// A law with scalar binary `Z` and scalar `X` on a finite grid, built from the factorisation
/// `p(y, z | x) ∝ p(z | Y=0, x) · {1-e(x) if y=0, e(x) e^{βz} if y=1}`.
#[derive(Debug, Clone)]
pub struct BinaryGridLaw {
    pub xs: Vec<f64>,
    pub px: Vec<f64>,
    /// `g*(x)` at each grid point.
    pub g: Vec<f64>,
    /// `P(Z=1 | Y=0, x)` at each grid point.
    pub f: Vec<f64>,
    pub beta: f64,
}

impl BinaryGridLaw {
    pub fn random(r: &mut impl Rng) -> Self {
        let xs = vec![-1.0, 0.0, 1.0];
        let w: Vec<f64> = (0..3).map(|_| r.random_range(0.2..1.0)).collect();
        let tot: f64 = w.iter().sum();
        BinaryGridLaw {
            px: w.iter().map(|v| v / tot).collect(),
            g: (0..3).map(|_| r.random_range(-1.5..1.5)).collect(),
            f: (0..3).map(|_| r.random_range(0.1..0.9)).collect(),
            beta: r.random_range(-1.5..1.5),
            xs,
        }
    }

    /// `P(Y=y, Z=z | X=x_i)` indexed `[z][y]`.
    pub fn cells(&self, i: usize) -> [[f64; 2]; 2] {
        let e = expit(self.g[i]);
        let pz = [1.0 - self.f[i], self.f[i]];
        let mut c = [[0.0; 2]; 2];
        for z in 0..2 {
            c[z][0] = pz[z] * (1.0 - e);
            c[z][1] = pz[z] * e * (self.beta * z as f64).exp();
        }
        let tot: f64 = c.iter().flatten().sum();
        for row in &mut c {
            for v in row.iter_mut() {
                *v /= tot;
            }
        }
        c
    }

    /// Exact expectation of `h(y, z, x)` by enumeration.
    pub fn expect(&self, mut h: impl FnMut(u8, f64, f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.xs.len() {
            let c = self.cells(i);
            for z in 0..2 {
                for y in 0..2 {
                    acc += self.px[i] * c[z][y] * h(y as u8, z as f64, self.xs[i]);
                }
            }
        }
        acc
    }
}

/// Coefficients `(c0, c1, c2)` with `c0 + c1 x + c2 x² = v` at `x ∈ {-1, 0, 1}`.
pub fn interpolate3(v: &[f64]) -> [f64; 3] {
    let c0 = v[1];
    let c1 = (v[2] - v[0]) / 2.0;
    let c2 = (v[2] + v[0]) / 2.0 - v[1];
    [c0, c1, c2]
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance `rel_tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        floor: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol || delta.abs() <= 64.0 * f64::EPSILON * (left.abs() + right.abs()) {
            return left + right + delta / 15.0;
        }
        let half = (tol / 2.0).max(floor);
        recurse(f, a, fa, m, fm, lm, flm, left, half, floor, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, half, floor, depth - 1)
    }
    // Composite Simpson on 256 panels sets the scale for the tolerance.
    let panels = 256;
    let h = (b - a) / panels as f64;
    let scale: f64 = (0..panels)
        .map(|k| {
            let lo = a + k as f64 * h;
            simpson(f, lo, f(lo), lo + h, f(lo + h)).2.abs()
        })
        .sum();
    let tol = rel_tol * scale.max(f64::MIN_POSITIVE);
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 1e-3 * tol, 40)
}

/// `c(x)` and `P(Y=1 | X=x)` for scalar Gaussian `Z | Y=0, X ~ N(m, s2)` and `P(Y=1 | Z=0, X) = expit(g)`,
/// by integrating the unnormalised joint density over `z`.
pub fn tilt_by_integration(beta: f64, m: f64, s2: f64, g: f64) -> (f64, f64) {
    let e = expit(g);
    let sd = s2.sqrt();
    let dens = |z: f64| (-(z - m).powi(2) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2).sqrt();
    let lo = m + beta * s2 - 14.0 * sd;
    let hi = m + beta * s2 + 14.0 * sd;
    let lo = lo.min(m - 14.0 * sd);
    let hi = hi.max(m + 14.0 * sd);
    let y1 = adaptive_simpson(&|z| e * (beta * z).exp() * dens(z), lo, hi, 1e-13);
    let y0 = adaptive_simpson(&|z| (1.0 - e) * dens(z), lo, hi, 1e-13);
    let c = y0 + y1;
    (c, y1 / c)
}
