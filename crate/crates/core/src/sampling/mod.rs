//! Random and quasi-random inputs: scrambled Sobol points, log-normal priors
//! and prior-predictive batches.

mod predictive;
mod prior;
mod sobol;

pub use predictive::{data_seed, prior_predictive, quantile_bands, unit_draws, PredictiveDraw, QuantileBands};
pub use prior::{prior_log_density, prior_log_density_log, prior_sample, PriorSpec};
pub use sobol::{sobol_owen, sobol_points, Method, PointBatch, SOBOL_MAX_DIM};
