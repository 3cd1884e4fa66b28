//! Bayesian optimal observation schedules for continuous-time Markov chain
//! models whose likelihoods are intractable.
//!
//! The engine approximates each posterior with a Laplace approximation built
//! on a Gaussian synthetic likelihood of summary statistics, turns those
//! posteriors into per-dataset utilities (parameter information gain, squared
//! error loss, model information gain, total entropy), averages them by Monte
//! Carlo or randomised quasi-Monte Carlo, and maximises the result over
//! observation times by approximate coordinate exchange.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, configuration
//! and the command-line driver live in the companion `sldesign-cli` crate.
//!
//! Module map:
//!
//! - [`kinetics`]: the five CTMC models, Gillespie and explicit tau-leap
//!   simulation, and an exact uniformization oracle for small state spaces.
//! - [`sampling`]: Owen-scrambled Sobol points, log-normal priors and
//!   prior-predictive batches.
//! - [`summaries`]: summary statistics and informativeness diagnostics.
//! - [`synlik`]: synthetic likelihood moments, regression curvature and R²
//!   screening.
//! - [`laplace`]: Nelder–Mead, Laplace posteriors and evidences, posterior
//!   model probabilities, Laplace importance sampling.
//! - [`utility`]: per-dataset utilities and the expected-utility estimator.
//! - [`design`]: 1-D Gaussian-process emulator, coordinate exchange and
//!   baseline designs.
//! - [`surrogate`]: linear-Gaussian test models with closed-form posteriors.
//! - [`validation`]: posterior model probabilities and importance-sampling
//!   precision on simulated datasets.
#![no_std]
// Float methods come from `num_traits::Float` under no_std. Whenever std is in
// the crate graph its inherent methods shadow the trait import.
#![allow(unused_imports)]

extern crate alloc;

pub mod design;
pub mod error;
pub mod kinetics;
pub mod laplace;
pub mod linalg;
pub mod rng;
pub mod sampling;
pub mod special;
pub mod stats;
pub mod summaries;
pub mod surrogate;
pub mod synlik;
pub mod utility;
pub mod validation;

mod sobol_table;

pub use error::{Error, Result};
