//! Gauss–Hermite quadrature for expectations under normal laws.
//!
//! Nodes and weights come from the Golub–Welsch eigenproblem on the symmetric Jacobi matrix of
//! the physicists' Hermite polynomials (zero diagonal, off-diagonal `sqrt(k/2)`).

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 21;

/// Rule integrating `e^{-x^2} h(x)` over the real line; exact for polynomials of degree `2K-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidInput("quadrature order must be positive".into()));
        }
        let mut jacobi = DMatrix::<f64>::zeros(order, order);
        for k in 1..order {
            let off = (k as f64 / 2.0).sqrt();
            jacobi[(k - 1, k)] = off;
            jacobi[(k, k - 1)] = off;
        }
        let eig = jacobi.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|i| {
                let v0 = eig.eigenvectors[(0, i)];
                (eig.eigenvalues[i], v0 * v0 * PI.sqrt())
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrise: the rule is exactly symmetric, the eigensolver only approximately so.
        let k = pairs.len();
        for i in 0..k / 2 {
            let (a, b) = (pairs[i], pairs[k - 1 - i]);
            let x = 0.5 * (b.0 - a.0);
            let w = 0.5 * (a.1 + b.1);
            pairs[i] = (-x, w);
            pairs[k - 1 - i] = (x, w);
        }
        if k % 2 == 1 {
            pairs[k / 2].0 = 0.0;
        }
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(GaussHermite { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫ e^{-x^2} h(x) dx`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, h: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * h(x))
            .sum()
    }

    /// Support points and probabilities approximating `Normal(mean, var)`; probabilities sum to 1.
    pub fn normal_points(&self, mean: f64, var: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let scale = (2.0 * var).sqrt();
        let norm = PI.sqrt().recip();
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mean + scale * x, w * norm))
    }

    /// `E[h(Z)]` for `Z ~ Normal(mean, var)`.
    pub fn normal_expectation<F: Fn(f64) -> f64>(&self, mean: f64, var: f64, h: F) -> f64 {
        self.normal_points(mean, var).map(|(z, p)| p * h(z)).sum()
    }
}
