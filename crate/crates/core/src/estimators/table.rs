//! Per-observation quantities that stay fixed while β is iterated.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{Basis, CovariateModelParams, Dataset, Instrument, OutcomeModelParams, PhiEvaluator, PhiSpec, Side};
use crate::nuisance::basis_matrix;

/// Estimating function of the form `ζ(yᵢ, βᵀzᵢ + gᵢ) · aᵢ` with a fixed vector `aᵢ`.
///
/// For the doubly robust function `aᵢ = φ(xᵢ){zᵢ - f(xᵢ)}`; for τ′ it is the centred
/// instrument `u(zᵢ, xᵢ) - E[u | Y=0, xᵢ]`.
pub(crate) struct KernelTable {
    pub side: Side,
    pub y: Vec<u8>,
    /// `n × p`.
    pub z: DMatrix<f64>,
    /// `n × m`.
    pub b: DMatrix<f64>,
    /// `α̂ᵀb(xᵢ)`.
    pub g: DVector<f64>,
    /// `n × p`, row `i` is `aᵢ`.
    pub a: DMatrix<f64>,
    /// Present for the doubly robust function only: φ(xᵢ) and `∂f_j/∂(γⱼᵀb)`.
    pub phi: Option<Vec<DMatrix<f64>>>,
    pub slope: Option<DMatrix<f64>>,
    pub max_phi_condition: Option<f64>,
}

fn z_matrix(data: &Dataset) -> DMatrix<f64> {
    DMatrix::from_fn(data.n(), data.p(), |i, j| data.z(i)[j])
}

impl KernelTable {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.z.ncols()
    }

    pub fn m(&self) -> usize {
        self.b.ncols()
    }

    /// Table for `ζ φ(X){Z - f(X)}` with φ frozen at `outcome` (the plug-in fit) and `covar`.
    ///
    /// On the `Y1` side φ is evaluated on the relabelled model `(-β̂, -α̂)`, which turns the
    /// simple and optimal choices into their mirror images for the `Y = 1` conditioning.
    pub fn dr(
        data: &Dataset,
        outcome: &OutcomeModelParams,
        covar: &CovariateModelParams,
        phi: PhiSpec,
        side: Side,
        basis: &Basis,
    ) -> Result<Self> {
        let (n, p) = (data.n(), data.p());
        let b = basis_matrix(data, basis)?;
        let m = b.ncols();
        outcome.check(p, m)?;
        covar.check(p, m)?;
        let evaluator = PhiEvaluator::new(phi)?;
        let phi_outcome = match side {
            Side::Y0 => outcome.clone(),
            Side::Y1 => outcome.negated(),
        };
        let z = z_matrix(data);
        let mut a = DMatrix::zeros(n, p);
        let mut slope = DMatrix::zeros(n, p);
        let mut phis = Vec::with_capacity(n);
        let mut g = DVector::zeros(n);
        let mut max_cond: Option<f64> = None;
        let mut brow = vec![0.0; m];
        for i in 0..n {
            for k in 0..m {
                brow[k] = b[(i, k)];
            }
            g[i] = outcome.g(&brow);
            let value = evaluator.eval(&brow, &phi_outcome, covar)?;
            if let Some(c) = value.condition {
                max_cond = Some(max_cond.map_or(c, |mc: f64| mc.max(c)));
            }
            let r = DVector::from_iterator(p, (0..p).map(|j| data.z(i)[j] - covar.mean(j, &brow)));
            let ar = &value.matrix * &r;
            for j in 0..p {
                a[(i, j)] = ar[j];
                slope[(i, j)] = covar.mean_slope(j, &brow);
            }
            phis.push(value.matrix);
        }
        Ok(KernelTable {
            side,
            y: data.ys().to_vec(),
            z,
            b,
            g,
            a,
            phi: Some(phis),
            slope: Some(slope),
            max_phi_condition: max_cond,
        })
    }

    /// Table for `τ′ = ζ₀ {u(Z,X) - E[u | Y=0, X; θ]}`.
    pub fn tau_prime(
        data: &Dataset,
        outcome: &OutcomeModelParams,
        covar: &CovariateModelParams,
        u: Instrument<'_>,
        basis: &Basis,
    ) -> Result<Self> {
        let (n, p) = (data.n(), data.p());
        let b = basis_matrix(data, basis)?;
        let m = b.ncols();
        outcome.check(p, m)?;
        covar.check(p, m)?;
        let mut a = DMatrix::zeros(n, p);
        let mut g = DVector::zeros(n);
        let mut brow = vec![0.0; m];
        for i in 0..n {
            for k in 0..m {
                brow[k] = b[(i, k)];
            }
            g[i] = outcome.g(&brow);
            let centred = u.eval(data.z(i), data.x(i)) - u.conditional_mean(data.x(i), &brow, covar)?;
            if centred.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "instrument",
                    expected: p,
                    found: centred.len(),
                });
            }
            a.row_mut(i).copy_from(&centred.transpose());
        }
        Ok(KernelTable {
            side: Side::Y0,
            y: data.ys().to_vec(),
            z: z_matrix(data),
            b,
            g,
            a,
            phi: None,
            slope: None,
            max_phi_condition: None,
        })
    }

    pub fn eta(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.z * beta + &self.g
    }

    /// Per-observation values `ζᵢ aᵢ` as an `n × p` matrix.
    pub fn terms(&self, beta: &DVector<f64>) -> DMatrix<f64> {
        let eta = self.eta(beta);
        let mut out = self.a.clone();
        for i in 0..self.n() {
            let zeta = self.side.zeta(self.y[i], eta[i]);
            out.row_mut(i).scale_mut(zeta);
        }
        out
    }

    /// Mean estimating function and its Jacobian in β.
    pub fn equation(&self, beta: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n() as f64;
        let eta = self.eta(beta);
        let zeta = DVector::from_iterator(self.n(), (0..self.n()).map(|i| self.side.zeta(self.y[i], eta[i])));
        let slope = DVector::from_iterator(
            self.n(),
            (0..self.n()).map(|i| self.side.zeta_slope(self.y[i], eta[i])),
        );
        let eq = self.a.tr_mul(&zeta) / n;
        let mut scaled = self.z.clone();
        for mut col in scaled.column_iter_mut() {
            col.component_mul_assign(&slope);
        }
        let jac = self.a.tr_mul(&scaled) / n;
        (eq, jac)
    }

    /// Mean derivatives `(H, B₁, B₂)` of the estimating function in β, α and γ at `beta`,
    /// with φ held fixed.
    pub fn derivatives(&self, beta: &DVector<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let (n, p, m) = (self.n(), self.p(), self.m());
        let nf = n as f64;
        let eta = self.eta(beta);
        let slope = DVector::from_iterator(n, (0..n).map(|i| self.side.zeta_slope(self.y[i], eta[i])));

        let mut scaled_a = self.a.clone();
        for mut col in scaled_a.column_iter_mut() {
            col.component_mul_assign(&slope);
        }
        let h = scaled_a.tr_mul(&self.z) / nf;
        let b1 = scaled_a.tr_mul(&self.b) / nf;

        let mut b2 = DMatrix::zeros(p, p * m);
        if let (Some(phis), Some(fslope)) = (&self.phi, &self.slope) {
            for i in 0..n {
                let zeta = self.side.zeta(self.y[i], eta[i]);
                for j in 0..p {
                    let c = -zeta * fslope[(i, j)] / nf;
                    if c == 0.0 {
                        continue;
                    }
                    for r in 0..p {
                        let f = c * phis[i][(r, j)];
                        for k in 0..m {
                            b2[(r, j * m + k)] += f * self.b[(i, k)];
                        }
                    }
                }
            }
        }
        (h, b1, b2)
    }
}
