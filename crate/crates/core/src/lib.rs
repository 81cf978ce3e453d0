//! Maximum likelihood estimation over nonnegative matrices of rank at most two.
//!
//! The crate covers the whole pipeline for the weighted likelihood
//! `L(P) = prod_i p_ii^s * prod_{i != j} p_ij^t`:
//!
//! * [`model`]: weight tables, probability matrices in the two normalization
//!   conventions, floating and exact-rational likelihoods.
//! * [`ranktwo`]: the parametrization `P = J + b a^T`, stationarity residuals,
//!   canonical forms and margin normalization.
//! * [`solvers`]: EM for the two-class latent model, damped Newton on the
//!   stationarity system and a deterministic multistart driver.
//! * [`candidates`]: closed-form stationary candidates for `n = 4` in exact
//!   arithmetic, plus the block and corner matrices for general `n`.
//! * [`verify`]: mechanized checks of the structural lemmas and the end-to-end
//!   certificate.

pub mod candidates;
pub mod error;
pub mod model;
pub mod ranktwo;
pub mod rational;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
pub use num_rational::BigRational;
