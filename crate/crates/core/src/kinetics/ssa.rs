//! Gillespie's direct method and explicit tau-leaping.
//!
//! Both simulators record the state at each design time. The direct method
//! is exact: it draws an exponential waiting time from the total propensity
//! and picks the firing reaction in proportion to its propensity. Once every
//! propensity is zero the chain is absorbed and holds its state.
//!
//! Tau-leaping advances in steps of at most `tau`, landing exactly on design
//! times, and fires each reaction a Poisson number of times. Counts are
//! clamped reaction by reaction to what the current state can supply, so no
//! count ever goes negative or past the population size.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand::Rng;
use rand_distr::{Distribution, Poisson};

use super::model::{ModelSpec, Theta, MAX_REACTIONS, MAX_SPECIES};
use super::{Design, Trajectory};
use crate::rng::{self, SimRng};
use crate::{Error, Result};

/// Simulation method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Simulator {
    /// Gillespie direct method.
    Exact,
    /// Explicit tau-leap with fixed step `tau`.
    TauLeap { tau: f64 },
}

impl Simulator {
    pub fn validate(&self, design: &Design) -> Result<()> {
        if let Simulator::TauLeap { tau } = *self {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::invalid("tau", "must be positive"));
            }
            if tau > design.smallest_gap() + 1e-12 {
                return Err(Error::invalid(
                    "tau",
                    "must not exceed the smallest design gap",
                ));
            }
        }
        Ok(())
    }
}

/// Exact realisation of the chain at the design times.
pub fn simulate_ssa(model: &ModelSpec, theta: &Theta, design: &Design, seed: u64) -> Result<Trajectory> {
    simulate(model, theta, design, Simulator::Exact, seed)
}

/// Tau-leap approximation of the chain at the design times.
pub fn simulate_tau_leap(
    model: &ModelSpec,
    theta: &Theta,
    design: &Design,
    tau: f64,
    seed: u64,
) -> Result<Trajectory> {
    simulate(model, theta, design, Simulator::TauLeap { tau }, seed)
}

pub fn simulate(
    model: &ModelSpec,
    theta: &Theta,
    design: &Design,
    sim: Simulator,
    seed: u64,
) -> Result<Trajectory> {
    model.check_theta(theta)?;
    sim.validate(design)?;
    let width = model.observed_count();
    let mut counts = vec![0; design.len() * width];
    let mut rng = rng::stream(seed, 0);
    simulate_into(model, theta.values(), design.times(), sim, &mut rng, &mut counts);
    Trajectory::new(design.clone(), width, counts)
}

/// Allocation-light core used by the batch estimators. Writes the observed
/// species at each time into `out` (row-major, `times.len() × observed`).
/// Inputs are assumed validated.
pub fn simulate_into(
    model: &ModelSpec,
    theta: &[f64],
    times: &[f64],
    sim: Simulator,
    rng: &mut SimRng,
    out: &mut [i64],
) {
    match sim {
        Simulator::Exact => gillespie(model, theta, times, rng, out),
        Simulator::TauLeap { tau } => tau_leap(model, theta, times, tau, rng, out),
    }
}

#[inline]
fn record(model: &ModelSpec, state: &[i64; MAX_SPECIES], k: usize, out: &mut [i64]) {
    let mask = model.observed_mask();
    let obs = mask.iter().filter(|&&o| o).count();
    let mut c = 0;
    for (s, &o) in mask.iter().enumerate() {
        if o {
            out[k * obs + c] = state[s];
            c += 1;
        }
    }
}

fn gillespie(model: &ModelSpec, theta: &[f64], times: &[f64], rng: &mut SimRng, out: &mut [i64]) {
    let stoich = model.kind().stoichiometry();
    let mut state = model.initial_array();
    let mut props = [0.0; MAX_REACTIONS];
    let mut t = 0.0;
    let mut next = 0;
    let l = times.len();
    while next < l {
        let nr = model.propensities(&state, theta, &mut props);
        let total: f64 = props[..nr].iter().sum();
        if !(total > 0.0) {
            break;
        }
        t += -rng::open01(rng).ln() / total;
        while next < l && times[next] < t {
            record(model, &state, next, out);
            next += 1;
        }
        if next == l {
            return;
        }
        let mut target = rng.random::<f64>() * total;
        let mut j = 0;
        while j + 1 < nr {
            if target < props[j] {
                break;
            }
            target -= props[j];
            j += 1;
        }
        // floating-point leftovers can land on a zero-propensity reaction
        while props[j] <= 0.0 && j > 0 {
            j -= 1;
        }
        for (s, d) in state.iter_mut().zip(stoich[j].iter()) {
            *s += d;
        }
    }
    while next < l {
        record(model, &state, next, out);
        next += 1;
    }
}

fn poisson_count(rng: &mut SimRng, mean: f64) -> i64 {
    if !(mean > 0.0) {
        return 0;
    }
    match Poisson::new(mean) {
        Ok(p) => {
            let k: f64 = p.sample(rng);
            k as i64
        }
        // means beyond the sampler's range: normal approximation
        Err(_) => {
            let z: f64 = rand_distr::StandardNormal.sample(rng);
            (mean + mean.sqrt() * z).round().max(0.0) as i64
        }
    }
}

fn tau_leap(model: &ModelSpec, theta: &[f64], times: &[f64], tau: f64, rng: &mut SimRng, out: &mut [i64]) {
    let stoich = model.kind().stoichiometry();
    let mut state = model.initial_array();
    let mut props = [0.0; MAX_REACTIONS];
    let mut t = 0.0;
    for (k, &target) in times.iter().enumerate() {
        while t < target {
            let h = tau.min(target - t);
            let nr = model.propensities(&state, theta, &mut props);
            if props[..nr].iter().all(|&a| a <= 0.0) {
                t = target;
                break;
            }
            let mut fires = [0i64; MAX_REACTIONS];
            for j in 0..nr {
                fires[j] = poisson_count(rng, props[j] * h);
            }
            for j in 0..nr {
                let n = fires[j].min(model.capacity(&state, j)).max(0);
                if n > 0 {
                    for (s, d) in state.iter_mut().zip(stoich[j].iter()) {
                        *s += d * n;
                    }
                }
            }
            // h can be a rounding sliver of the remaining interval
            if target - (t + h) < 1e-12 * target.abs().max(1.0) {
                t = target;
            } else {
                t += h;
            }
        }
        record(model, &state, k, out);
    }
}

/// Mean of each observed species at each design time over `reps` runs.
pub fn mean_trajectory(
    model: &ModelSpec,
    theta: &Theta,
    design: &Design,
    sim: Simulator,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    model.check_theta(theta)?;
    sim.validate(design)?;
    let width = model.observed_count();
    let mut acc = vec![0.0; design.len() * width];
    let mut buf = vec![0; design.len() * width];
    for r in 0..reps {
        let mut rng = rng::stream(seed, r as u64);
        simulate_into(model, theta.values(), design.times(), sim, &mut rng, &mut buf);
        for (a, &b) in acc.iter_mut().zip(&buf) {
            *a += b as f64;
        }
    }
    for a in &mut acc {
        *a /= reps as f64;
    }
    Ok(acc)
}
