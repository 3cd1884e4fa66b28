use alloc::vec;
use alloc::vec::Vec;

use super::prior::{prior_sample, PriorSpec};
use super::sobol::{sobol_owen, Method, PointBatch};
use crate::kinetics::{simulate_into, Design, ModelSpec, Simulator, Theta, Trajectory};
use crate::rng::{self, tag};
use crate::stats::quantile_sorted;
use crate::{Error, Result};

/// One draw from the prior predictive distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDraw {
    pub theta: Theta,
    pub traj: Trajectory,
}

/// Unit-cube inputs for `count` parameter draws.
///
/// Under `Rqmc` these are the leading coordinates of one Owen-scrambled Sobol
/// batch. Under `Mc` draw `j` comes from its own stream, so it does not
/// depend on `count`.
pub fn unit_draws(dim: usize, count: usize, method: Method, seed: u64) -> Result<PointBatch> {
    let seed = rng::derive_seed(seed, tag::PARAMS);
    match method {
        Method::Rqmc => sobol_owen(dim, count, seed),
        Method::Mc => {
            let mut values = Vec::with_capacity(dim * count);
            for j in 0..count {
                let mut r = rng::stream(seed, j as u64);
                for _ in 0..dim {
                    values.push(rng::open01(&mut r));
                }
            }
            Ok(PointBatch {
                dim,
                method,
                seed,
                values,
            })
        }
    }
}

/// Seed of the simulation-noise stream for draw `j`.
pub fn data_seed(seed: u64, j: usize) -> u64 {
    rng::derive_path(seed, &[tag::DATA, j as u64])
}

/// `count` pairs from `p(θ) p(y | θ, d)`.
///
/// Parameters take the leading Sobol dimensions under `Rqmc`; trajectory
/// noise always comes from a per-draw seeded stream.
pub fn prior_predictive(
    model: &ModelSpec,
    prior: &PriorSpec,
    design: &Design,
    count: usize,
    method: Method,
    simulator: Simulator,
    seed: u64,
) -> Result<Vec<PredictiveDraw>> {
    if count == 0 {
        return Err(Error::invalid("count", "must be at least 1"));
    }
    if prior.dim() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            got: prior.dim(),
        });
    }
    simulator.validate(design)?;
    let units = unit_draws(prior.dim(), count, method, seed)?;
    let width = model.observed_count();
    let mut out = Vec::with_capacity(count);
    for j in 0..count {
        let theta = prior_sample(prior, units.point(j))?;
        let mut counts = vec![0; design.len() * width];
        let mut r = rng::stream(data_seed(seed, j), 0);
        simulate_into(model, theta.values(), design.times(), simulator, &mut r, &mut counts);
        out.push(PredictiveDraw {
            theta,
            traj: Trajectory::new(design.clone(), width, counts)?,
        });
    }
    Ok(out)
}

/// Pointwise prior-predictive summaries per design time and observed species.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileBands {
    pub times: Vec<f64>,
    /// Indexed `[species][time]`.
    pub mean: Vec<Vec<f64>>,
    pub lower: Vec<Vec<f64>>,
    pub upper: Vec<Vec<f64>>,
}

/// Mean and `(lo, hi)` quantiles of each species at each time.
pub fn quantile_bands(draws: &[PredictiveDraw], lo: f64, hi: f64) -> QuantileBands {
    let first = &draws[0].traj;
    let (l, w) = (first.len(), first.width());
    let mut mean = vec![vec![0.0; l]; w];
    let mut lower = vec![vec![0.0; l]; w];
    let mut upper = vec![vec![0.0; l]; w];
    let mut col = Vec::with_capacity(draws.len());
    for s in 0..w {
        for k in 0..l {
            col.clear();
            col.extend(draws.iter().map(|d| d.traj.row(k)[s] as f64));
            col.sort_by(|a, b| a.total_cmp(b));
            mean[s][k] = col.iter().sum::<f64>() / col.len() as f64;
            lower[s][k] = quantile_sorted(&col, lo);
            upper[s][k] = quantile_sorted(&col, hi);
        }
    }
    QuantileBands {
        times: first.times().to_vec(),
        mean,
        lower,
        upper,
    }
}
