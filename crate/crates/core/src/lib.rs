//! Low-rank approximate Bayesian inference for generalized linear models.
//!
//! The design matrix `X` is replaced inside the likelihood by its rank-M
//! projection `X U Uᵀ`, where `U` holds the top right singular vectors of
//! `X`. This yields closed-form conjugate posteriors, a Laplace
//! approximation whose covariance is stored in factored form, a
//! Metropolis–Hastings sampler whose likelihood costs O(NM) per step, and
//! computable bounds on the error each approximation introduces.

pub mod bounds;
pub mod conjugate;
pub mod data;
pub mod error;
pub mod factored;
pub mod linalg;
pub mod lr_laplace;
pub mod lr_mcmc;
pub mod models;
pub mod optim;

pub use error::{Error, Result};
