//! Deterministic feature maps `x -> b(x)` shared by the outcome and covariate nuisance models.
//!
//! Terms are written as short strings in configuration files: `1` (intercept), `x2` (raw
//! coordinate, 1-based), `x1^2` (square) and `x1*x3` (product).

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// One feature of a [`Basis`]. Coordinates are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisTerm {
    Intercept,
    Linear(usize),
    Square(usize),
    Product(usize, usize),
}

impl BasisTerm {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            BasisTerm::Intercept => 1.0,
            BasisTerm::Linear(j) => x[j],
            BasisTerm::Square(j) => x[j] * x[j],
            BasisTerm::Product(j, k) => x[j] * x[k],
        }
    }

    fn max_coordinate(&self) -> Option<usize> {
        match *self {
            BasisTerm::Intercept => None,
            BasisTerm::Linear(j) | BasisTerm::Square(j) => Some(j),
            BasisTerm::Product(j, k) => Some(j.max(k)),
        }
    }

    /// Canonical form, so that `x2*x1` and `x1*x2` compare equal.
    fn canonical(self) -> Self {
        match self {
            BasisTerm::Product(j, k) if j == k => BasisTerm::Square(j),
            BasisTerm::Product(j, k) if j > k => BasisTerm::Product(k, j),
            t => t,
        }
    }
}

impl fmt::Display for BasisTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BasisTerm::Intercept => write!(f, "1"),
            BasisTerm::Linear(j) => write!(f, "x{}", j + 1),
            BasisTerm::Square(j) => write!(f, "x{}^2", j + 1),
            BasisTerm::Product(j, k) => write!(f, "x{}*x{}", j + 1, k + 1),
        }
    }
}

fn parse_coord(s: &str) -> Option<usize> {
    let idx: usize = s.trim().strip_prefix('x')?.parse().ok()?;
    idx.checked_sub(1)
}

impl FromStr for BasisTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse basis term `{s}`"));
        if s == "1" {
            return Ok(BasisTerm::Intercept);
        }
        if let Some(base) = s.strip_suffix("^2") {
            return parse_coord(base).map(BasisTerm::Square).ok_or_else(bad);
        }
        if let Some((a, b)) = s.split_once('*') {
            let (j, k) = (parse_coord(a).ok_or_else(bad)?, parse_coord(b).ok_or_else(bad)?);
            return Ok(BasisTerm::Product(j, k).canonical());
        }
        parse_coord(s).map(BasisTerm::Linear).ok_or_else(bad)
    }
}

impl Serialize for BasisTerm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BasisTerm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered list of terms; the first term is always the intercept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Basis {
    terms: Vec<BasisTerm>,
}

impl Basis {
    /// Builds a basis from terms. An intercept is prepended when missing; duplicates are rejected.
    pub fn new(terms: impl IntoIterator<Item = BasisTerm>) -> Result<Self> {
        let mut out = vec![BasisTerm::Intercept];
        for t in terms.into_iter().map(BasisTerm::canonical) {
            if t == BasisTerm::Intercept && out.len() == 1 {
                continue;
            }
            if out.contains(&t) {
                return Err(Error::InvalidInput(format!("duplicate basis term `{t}`")));
            }
            out.push(t);
        }
        Ok(Basis { terms: out })
    }

    pub fn intercept_only() -> Self {
        Basis {
            terms: vec![BasisTerm::Intercept],
        }
    }

    /// Intercept plus every raw coordinate of a `q`-vector.
    pub fn linear(q: usize) -> Self {
        Basis {
            terms: std::iter::once(BasisTerm::Intercept)
                .chain((0..q).map(BasisTerm::Linear))
                .collect(),
        }
    }

    pub fn parse(terms: &[&str]) -> Result<Self> {
        Basis::new(
            terms
                .iter()
                .map(|s| s.parse::<BasisTerm>())
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn terms(&self) -> &[BasisTerm] {
        &self.terms
    }

    /// Output dimension `m`.
    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn contains(&self, term: BasisTerm) -> bool {
        self.terms.contains(&term.canonical())
    }

    /// Smallest covariate dimension the basis can be evaluated on.
    pub fn min_input_dim(&self) -> usize {
        self.terms
            .iter()
            .filter_map(BasisTerm::max_coordinate)
            .max()
            .map_or(0, |j| j + 1)
    }

    pub fn validate_for(&self, q: usize) -> Result<()> {
        let need = self.min_input_dim();
        if need > q {
            return Err(Error::InvalidInput(format!(
                "basis references x{need} but the data have only {q} X columns"
            )));
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.terms.len(), self.terms.iter().map(|t| t.eval(x)))
    }

    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (o, t) in out.iter_mut().zip(&self.terms) {
            *o = t.eval(x);
        }
    }
}

impl<'de> Deserialize<'de> for Basis {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let terms = Vec::<BasisTerm>::deserialize(deserializer)?;
        Basis::new(terms).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
