use crate::error::{Error, Result};

/// `n` observations of a binary response `y`, covariates of interest `z` (p-vectors) and other
/// covariates `x` (q-vectors). Rows are stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Vec<u8>,
    z: Vec<f64>,
    x: Vec<f64>,
    p: usize,
    q: usize,
}

impl Dataset {
    /// Builds a dataset from per-row vectors, checking that rows are rectangular and finite.
    pub fn new(y: Vec<u8>, z_rows: &[Vec<f64>], x_rows: &[Vec<f64>]) -> Result<Self> {
        let n = y.len();
        if z_rows.len() != n || x_rows.len() != n {
            return Err(Error::InvalidInput(format!(
                "row counts differ: y has {n}, z has {}, x has {}",
                z_rows.len(),
                x_rows.len()
            )));
        }
        let p = z_rows.first().map_or(0, Vec::len);
        let q = x_rows.first().map_or(0, Vec::len);
        let mut z = Vec::with_capacity(n * p);
        let mut x = Vec::with_capacity(n * q);
        for (i, (zr, xr)) in z_rows.iter().zip(x_rows).enumerate() {
            if zr.len() != p || xr.len() != q {
                return Err(Error::InvalidInput(format!("row {i} has a different width")));
            }
            z.extend_from_slice(zr);
            x.extend_from_slice(xr);
        }
        Dataset::from_flat(y, z, x, p, q)
    }

    /// Builds a dataset from row-major buffers.
    pub fn from_flat(y: Vec<u8>, z: Vec<f64>, x: Vec<f64>, p: usize, q: usize) -> Result<Self> {
        let n = y.len();
        if n == 0 {
            return Err(Error::InvalidInput("dataset has no observations".into()));
        }
        if p == 0 {
            return Err(Error::InvalidInput("z must have at least one column".into()));
        }
        if z.len() != n * p || x.len() != n * q {
            return Err(Error::InvalidInput("buffer sizes do not match n, p, q".into()));
        }
        if let Some(i) = y.iter().position(|&v| v > 1) {
            return Err(Error::InvalidInput(format!("y[{i}] = {} is not 0 or 1", y[i])));
        }
        if z.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite covariate value".into()));
        }
        Ok(Dataset { y, z, x, p, q })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn y(&self, i: usize) -> u8 {
        self.y[i]
    }

    pub fn ys(&self) -> &[u8] {
        &self.y
    }

    pub fn z(&self, i: usize) -> &[f64] {
        &self.z[i * self.p..(i + 1) * self.p]
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.q..(i + 1) * self.q]
    }

    pub fn count_y1(&self) -> usize {
        self.y.iter().filter(|&&v| v == 1).count()
    }

    /// Fitting ops need both response values present.
    pub fn require_both_responses(&self) -> Result<()> {
        let n1 = self.count_y1();
        if n1 == 0 || n1 == self.n() {
            return Err(Error::InvalidInput(format!(
                "response is constant (all y = {}); need at least one 0 and one 1",
                self.y[0]
            )));
        }
        Ok(())
    }

    /// Same covariates with the response relabelled `y -> 1 - y`.
    pub fn flip_response(&self) -> Dataset {
        Dataset {
            y: self.y.iter().map(|&v| 1 - v).collect(),
            ..self.clone()
        }
    }

    pub fn with_z_row(&self, i: usize, z: &[f64]) -> Dataset {
        let mut out = self.clone();
        out.z[i * self.p..(i + 1) * self.p].copy_from_slice(z);
        out
    }
}
