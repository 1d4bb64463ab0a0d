//! Domain types, link functions and the doubly robust estimating-function kernels.

mod basis;
mod data;
mod finite_law;
mod kernels;
mod params;
mod phi;

pub use basis::{Basis, BasisTerm};
pub use data::Dataset;
pub use finite_law::{orthocomp_identity_check, FiniteLaw};
pub use kernels::{expit, pi_eval, r1_eval, r_eval, tau_prime_eval, zeta0, zeta1, Instrument, Side};
pub use params::{CovariateModelParams, OutcomeModelParams, PhiSpec, ZFamily};
pub use phi::{phi_eval, PhiEvaluator, PhiValue, MAX_CONDITION, MAX_GAUSSIAN_COMPONENTS};

pub(crate) use phi::symmetric_condition;
