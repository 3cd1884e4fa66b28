//! Exact transition probabilities by uniformization.
//!
//! For a generator `Q` on an enumerated state space and `Λ ≥ max exit rate`,
//!
//! `P(dt) = Σ_k Poisson(k; Λ dt) · (I + Q/Λ)^k`,
//!
//! truncated once the remaining Poisson mass drops below `1e-12` and
//! renormalised over the retained terms. We take
//! `Λ = 1.05 ×` the largest exit rate. Rows are propagated as vectors, so a
//! single transition row costs `O(K · nnz)` and the full matrix `O(n · K · nnz)`.
//!
//! Only models whose state can be enumerated and is fully determined by the
//! observations are supported by [`exact_log_likelihood`]: death, SI and SIR
//! (where `S = N − I − R`).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use super::model::{ModelKind, ModelSpec, Theta, MAX_REACTIONS, MAX_SPECIES};
use super::Trajectory;
use crate::special::ln_gamma;
use crate::{Error, Result};

/// Largest state space the oracle enumerates.
pub const STATE_CAP: usize = 10_000;
const TAIL_MASS: f64 = 1e-12;
const RATE_INFLATION: f64 = 1.05;

/// Enumerated states of a bounded model.
#[derive(Debug, Clone)]
pub struct StateSpace {
    states: Vec<[i64; MAX_SPECIES]>,
    index: BTreeMap<[i64; MAX_SPECIES], usize>,
}

impl StateSpace {
    pub fn enumerate(model: &ModelSpec) -> Result<Self> {
        let n = model.population();
        let count = match model.kind() {
            ModelKind::Death | ModelKind::Si => (n + 1) as usize,
            ModelKind::Sir => ((n + 1) * (n + 2) / 2) as usize,
            ModelKind::Seir => ((n + 1) * (n + 2) * (n + 3) / 6) as usize,
            ModelKind::LotkaVolterra => return Err(Error::OracleUnsupported("lv")),
        };
        if count > STATE_CAP {
            return Err(Error::StateSpaceTooLarge {
                states: count,
                cap: STATE_CAP,
            });
        }
        let mut states = Vec::with_capacity(count);
        match model.kind() {
            ModelKind::Death | ModelKind::Si => {
                for i in 0..=n {
                    states.push([i, 0, 0, 0]);
                }
            }
            ModelKind::Sir => {
                for s in 0..=n {
                    for i in 0..=(n - s) {
                        states.push([s, i, n - s - i, 0]);
                    }
                }
            }
            ModelKind::Seir => {
                for s in 0..=n {
                    for e in 0..=(n - s) {
                        for i in 0..=(n - s - e) {
                            states.push([s, e, i, n - s - e - i]);
                        }
                    }
                }
            }
            ModelKind::LotkaVolterra => unreachable!(),
        }
        let index = states.iter().enumerate().map(|(k, s)| (*s, k)).collect();
        Ok(Self { states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, k: usize) -> &[i64; MAX_SPECIES] {
        &self.states[k]
    }

    pub fn index_of(&self, state: &[i64; MAX_SPECIES]) -> Option<usize> {
        self.index.get(state).copied()
    }
}

/// Sparse generator with its uniformization constant.
struct Generator {
    /// Off-diagonal rates: `(from, to, rate)`, grouped by `from`.
    row_start: Vec<usize>,
    targets: Vec<(usize, f64)>,
    exit: Vec<f64>,
    lambda: f64,
}

impl Generator {
    fn build(model: &ModelSpec, theta: &[f64], space: &StateSpace) -> Self {
        let stoich = model.kind().stoichiometry();
        let mut props = [0.0; MAX_REACTIONS];
        let mut row_start = Vec::with_capacity(space.len() + 1);
        let mut targets = Vec::new();
        let mut exit = Vec::with_capacity(space.len());
        for st in &space.states {
            row_start.push(targets.len());
            let nr = model.propensities(st, theta, &mut props);
            let mut out = 0.0;
            for j in 0..nr {
                if props[j] <= 0.0 {
                    continue;
                }
                let mut next = *st;
                for (s, d) in next.iter_mut().zip(stoich[j].iter()) {
                    *s += d;
                }
                if let Some(to) = space.index_of(&next) {
                    targets.push((to, props[j]));
                    out += props[j];
                }
            }
            exit.push(out);
        }
        row_start.push(targets.len());
        let max_exit = exit.iter().copied().fold(0.0, f64::max);
        Self {
            row_start,
            targets,
            exit,
            lambda: RATE_INFLATION * max_exit,
        }
    }

    /// v ← v (I + Q/Λ)
    fn step(&self, v: &[f64], out: &mut [f64]) {
        for (o, (&vi, &e)) in out.iter_mut().zip(v.iter().zip(&self.exit)) {
            *o = vi * (1.0 - e / self.lambda);
        }
        for (from, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for &(to, rate) in &self.targets[self.row_start[from]..self.row_start[from + 1]] {
                out[to] += vi * rate / self.lambda;
            }
        }
    }

    /// Distribution after `dt` starting from distribution `v`.
    fn propagate(&self, v: &[f64], dt: f64) -> Vec<f64> {
        if dt == 0.0 || self.lambda == 0.0 {
            return v.to_vec();
        }
        let mean = self.lambda * dt;
        let ln_mean = mean.ln();
        let mut acc = vec![0.0; v.len()];
        let mut cur = v.to_vec();
        let mut next = vec![0.0; v.len()];
        let mut mass = 0.0;
        let mut k = 0u64;
        loop {
            let w = (k as f64 * ln_mean - mean - ln_gamma(k as f64 + 1.0)).exp();
            if w > 0.0 {
                for (a, c) in acc.iter_mut().zip(&cur) {
                    *a += w * c;
                }
            }
            mass += w;
            if 1.0 - mass < TAIL_MASS && k as f64 >= mean {
                break;
            }
            self.step(&cur, &mut next);
            core::mem::swap(&mut cur, &mut next);
            k += 1;
        }
        // renormalise the truncated Poisson mixture
        for a in &mut acc {
            *a /= mass;
        }
        acc
    }
}

/// Row-stochastic transition matrix over an enumerated state space.
#[derive(Debug, Clone)]
pub struct TransitionMatrix {
    pub space: StateSpace,
    /// Row-major `n × n` probabilities.
    pub probs: Vec<f64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.probs[from * self.n() + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let n = self.n();
        &self.probs[from * n..(from + 1) * n]
    }
}

/// Transition probabilities over `dt` for every pair of enumerated states.
pub fn exact_transition_matrix(model: &ModelSpec, theta: &Theta, dt: f64) -> Result<TransitionMatrix> {
    model.check_theta(theta)?;
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::invalid("dt", "must be a nonnegative finite time"));
    }
    let space = StateSpace::enumerate(model)?;
    let generator = Generator::build(model, theta.values(), &space);
    let n = space.len();
    let mut probs = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for from in 0..n {
        e[from] = 1.0;
        let row = generator.propagate(&e, dt);
        probs[from * n..(from + 1) * n].copy_from_slice(&row);
        e[from] = 0.0;
    }
    Ok(TransitionMatrix { space, probs })
}

fn full_state(model: &ModelSpec, observed: &[i64]) -> Result<[i64; MAX_SPECIES]> {
    match model.kind() {
        ModelKind::Death | ModelKind::Si => Ok([observed[0], 0, 0, 0]),
        ModelKind::Sir => {
            let (i, r) = (observed[0], observed[1]);
            Ok([model.population() - i - r, i, r, 0])
        }
        ModelKind::Seir => Err(Error::OracleUnsupported("seir")),
        ModelKind::LotkaVolterra => Err(Error::OracleUnsupported("lv")),
    }
}

/// Log-likelihood of the observations given the state at `start_time`.
///
/// Impossible data (including states outside the enumerated space) give
/// `-∞`, not an error.
pub fn segment_log_likelihood(
    model: &ModelSpec,
    theta: &Theta,
    start_time: f64,
    start_state: &[i64],
    traj: &Trajectory,
) -> Result<f64> {
    model.check_theta(theta)?;
    let space = StateSpace::enumerate(model)?;
    let generator = Generator::build(model, theta.values(), &space);
    let mut full = [0i64; MAX_SPECIES];
    full[..start_state.len()].copy_from_slice(start_state);
    let Some(mut from) = space.index_of(&full) else {
        return Ok(f64::NEG_INFINITY);
    };
    let mut t_prev = start_time;
    let mut dist = vec![0.0; space.len()];
    let mut total = 0.0;
    for k in 0..traj.len() {
        let to_state = full_state(model, traj.row(k))?;
        let Some(to) = space.index_of(&to_state) else {
            return Ok(f64::NEG_INFINITY);
        };
        let t = traj.times()[k];
        if t < t_prev {
            return Err(Error::InvalidDesign("observation before the start time".into()));
        }
        dist.iter_mut().for_each(|d| *d = 0.0);
        dist[from] = 1.0;
        let p = generator.propagate(&dist, t - t_prev)[to];
        if !(p > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        total += p.ln();
        from = to;
        t_prev = t;
    }
    Ok(total)
}

/// Markov-factorised log-likelihood of a trajectory, starting from the
/// model's known initial state at time 0.
pub fn exact_log_likelihood(model: &ModelSpec, theta: &Theta, traj: &Trajectory) -> Result<f64> {
    let init = model.initial();
    let start: Vec<i64> = match model.kind() {
        ModelKind::Sir => vec![init[0], init[1], init[2]],
        _ => init.to_vec(),
    };
    segment_log_likelihood(model, theta, 0.0, &start, traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::Design;
    use crate::special::binomial_log_pmf;

    #[test]
    fn zero_time_is_identity() {
        let m = ModelSpec::si();
        let p = exact_transition_matrix(&m, &Theta::new(vec![0.33, 0.011]).unwrap(), 0.0).unwrap();
        for i in 0..p.n() {
            for j in 0..p.n() {
                assert_eq!(p.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let m = ModelSpec::new(ModelKind::Sir, 20, &[15, 5, 0]).unwrap();
        let p = exact_transition_matrix(&m, &Theta::new(vec![0.9, 0.2]).unwrap(), 1.7).unwrap();
        for i in 0..p.n() {
            let s: f64 = p.row(i).iter().sum();
            assert!((s - 1.0).abs() < 1e-10, "row {i} sums to {s}");
        }
    }

    #[test]
    fn death_rows_match_binomial_thinning() {
        let m = ModelSpec::death();
        let beta = (-0.48f64).exp();
        let dt = 0.8;
        let p = exact_transition_matrix(&m, &Theta::new(vec![beta]).unwrap(), dt).unwrap();
        let keep = (-beta * dt).exp();
        for i in 0..=50u64 {
            for j in 0..=50u64 {
                let exact = if j < i {
                    0.0
                } else {
                    binomial_log_pmf(50 - j, 50 - i, keep).exp()
                };
                assert!((p.get(i as usize, j as usize) - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn large_state_spaces_are_rejected() {
        let m = ModelSpec::seir();
        let err = exact_transition_matrix(&m, &Theta::new(vec![1.0, 1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(err, Err(Error::StateSpaceTooLarge { .. })));
        let lv = ModelSpec::lotka_volterra();
        let err = exact_transition_matrix(&lv, &Theta::new(vec![1.0; 4]).unwrap(), 1.0);
        assert!(matches!(err, Err(Error::OracleUnsupported(_))));
    }

    #[test]
    fn decreasing_death_data_is_impossible() {
        let m = ModelSpec::death();
        let d = Design::from_times(alloc::vec![1.0, 2.0]).unwrap();
        let traj = Trajectory::new(d, 1, alloc::vec![10, 9]).unwrap();
        let ll = exact_log_likelihood(&m, &Theta::new(alloc::vec![0.6]).unwrap(), &traj).unwrap();
        assert_eq!(ll, f64::NEG_INFINITY);
    }

    #[test]
    fn absorbed_death_chain_has_probability_one() {
        let m = ModelSpec::new(ModelKind::Death, 50, &[50]).unwrap();
        let d = Design::from_times(alloc::vec![1.0, 2.0, 5.0]).unwrap();
        let traj = Trajectory::new(d, 1, alloc::vec![50, 50, 50]).unwrap();
        let ll = exact_log_likelihood(&m, &Theta::new(alloc::vec![0.6]).unwrap(), &traj).unwrap();
        assert_eq!(ll, 0.0);
    }
}
