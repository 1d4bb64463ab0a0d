//! Doubly robust estimation of the linear coefficients in a logistic partially linear model
//! `P(Y=1 | Z, X) = expit{βᵀZ + g(X)}`.

pub mod error;
pub mod estimators;
pub mod cli;
pub mod format;
pub mod io;
pub mod model;
pub mod nuisance;
pub mod quadrature;
pub mod sim;

mod newton;

pub use error::{Error, Result};
