//! Stochastic kinetics: the CTMC models, exact and approximate simulation,
//! and an exact transition-probability oracle for small state spaces.

mod design;
mod model;
pub mod oracle;
mod ssa;

pub use design::{Design, Trajectory};
pub use model::{ModelKind, ModelSpec, Theta, MAX_REACTIONS, MAX_SPECIES};
pub use oracle::{
    exact_log_likelihood, exact_transition_matrix, segment_log_likelihood, StateSpace,
    TransitionMatrix,
};
pub use ssa::{mean_trajectory, simulate, simulate_into, simulate_ssa, simulate_tau_leap, Simulator};
