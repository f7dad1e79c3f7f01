//! Global optimization of Gaussian-process Thompson-sampling (GP-TS)
//! acquisition functions.
//!
//! A GP-TS acquisition function is a random sample path drawn from a GP
//! posterior. Sample paths of smooth kernels have many local minima, so
//! optimizing them well is the hard part of the Bayesian-optimization (BO)
//! inner loop. This crate optimizes them globally by
//!
//! 1. drawing the prior sample in a truncated Mercer eigenbasis of the
//!    squared-exponential kernel, which makes it a separable product of
//!    smooth univariate functions ([`spectral`], [`sampling`]);
//! 2. finding *all* critical points of each univariate factor with a
//!    Chebyshev-proxy global rootfinder ([`rootfind`]);
//! 3. combining the univariate critical points into the best multivariate
//!    local minima with a best-first heap search, without enumerating the
//!    full product lattice ([`critical`]);
//! 4. updating the prior sample into a posterior sample with a pathwise
//!    (Matheron) correction and running a projected quasi-Newton
//!    multi-start from the selected minima plus the data points
//!    ([`inner`], [`boxmin`]).
//!
//! The [`bo`] module embeds this in a complete BO loop with exact GP
//! regression and hyperparameter fitting ([`gp`]), alongside baseline
//! acquisitions and inner optimizers ([`baselines`]). The [`bench`] module
//! and the `gp-ts-bench` binary run the Schwefel/Levy benchmark protocol
//! and write CSV traces.
//!
//! See the crate examples for one runnable program per capability.

pub mod baselines;
pub mod bench;
pub mod bo;
pub mod boxmin;
pub mod critical;
pub mod error;
pub mod gp;
pub mod inner;
pub mod kernel;
pub mod lowdisc;
pub mod rng;
pub mod rootfind;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
