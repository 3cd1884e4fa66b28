use alloc::vec::Vec;
use core::fmt;
use num_traits::Float;

use crate::{Error, Result};

pub const MAX_SPECIES: usize = 4;
pub const MAX_REACTIONS: usize = 4;

/// The five CTMC models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    /// Pure-birth infection from an external source: `i → i+1` at `β₁(N−i)`.
    Death,
    /// Infection from external and internal sources: `i → i+1` at
    /// `(β₁ + β₂ i)(N−i)`.
    Si,
    /// Susceptible–infectious–recovered; state `(s, i, r)`.
    Sir,
    /// Susceptible–exposed–infectious–recovered; state `(s, e, i, r)`.
    Seir,
    /// Predator–prey with logistic prey growth; state `(x, y)`.
    LotkaVolterra,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Death,
        ModelKind::Si,
        ModelKind::Sir,
        ModelKind::Seir,
        ModelKind::LotkaVolterra,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ModelKind::Death => "death",
            ModelKind::Si => "si",
            ModelKind::Sir => "sir",
            ModelKind::Seir => "seir",
            ModelKind::LotkaVolterra => "lv",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    pub fn species_count(self) -> usize {
        match self {
            ModelKind::Death | ModelKind::Si => 1,
            ModelKind::Sir => 3,
            ModelKind::Seir => 4,
            ModelKind::LotkaVolterra => 2,
        }
    }

    pub fn species_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Death | ModelKind::Si => &["I"],
            ModelKind::Sir => &["S", "I", "R"],
            ModelKind::Seir => &["S", "E", "I", "R"],
            ModelKind::LotkaVolterra => &["prey", "predator"],
        }
    }

    /// Rate parameter names in `Theta` order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            ModelKind::Death => &["beta1"],
            ModelKind::Si => &["beta1", "beta2"],
            ModelKind::Sir => &["beta", "alpha"],
            ModelKind::Seir => &["beta", "alpha_e", "alpha_i"],
            ModelKind::LotkaVolterra => &["a", "b", "c", "K"],
        }
    }

    pub fn param_dim(self) -> usize {
        self.param_names().len()
    }

    pub fn reaction_count(self) -> usize {
        self.stoichiometry().len()
    }

    /// State-change vectors, one per reaction.
    pub fn stoichiometry(self) -> &'static [[i64; MAX_SPECIES]] {
        match self {
            ModelKind::Death | ModelKind::Si => &[[1, 0, 0, 0]],
            ModelKind::Sir => &[[-1, 1, 0, 0], [0, -1, 1, 0]],
            ModelKind::Seir => &[[-1, 1, 0, 0], [0, -1, 1, 0], [0, 0, -1, 1]],
            ModelKind::LotkaVolterra => &[[1, 0, 0, 0], [-1, 0, 0, 0], [-1, 1, 0, 0], [0, -1, 0, 0]],
        }
    }

    fn observed_mask(self) -> &'static [bool] {
        match self {
            ModelKind::Death | ModelKind::Si => &[true],
            ModelKind::Sir => &[false, true, true],
            ModelKind::Seir => &[false, false, true, true],
            ModelKind::LotkaVolterra => &[true, true],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

/// Rate parameters on the natural scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Theta(Vec<f64>);

impl Theta {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("theta", "rates must be finite and strictly positive"));
        }
        Ok(Self(values))
    }

    /// Builds rates from log-scale values.
    pub fn from_log(log_values: &[f64]) -> Result<Self> {
        Self::new(log_values.iter().map(|v| v.exp()).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn log(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.ln()).collect()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A CTMC model instance: the reaction network plus population size and
/// initial condition.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    kind: ModelKind,
    population: i64,
    initial: [i64; MAX_SPECIES],
}

impl ModelSpec {
    /// `population` is N for the epidemic models and ignored for
    /// Lotka–Volterra. `initial` lists one count per species.
    pub fn new(kind: ModelKind, population: i64, initial: &[i64]) -> Result<Self> {
        let sc = kind.species_count();
        if initial.len() != sc {
            return Err(Error::DimensionMismatch {
                expected: sc,
                got: initial.len(),
            });
        }
        if initial.iter().any(|&c| c < 0) {
            return Err(Error::invalid("initial", "counts must be nonnegative"));
        }
        match kind {
            ModelKind::Death | ModelKind::Si => {
                if population < 1 || initial[0] > population {
                    return Err(Error::invalid("population", "need 0 <= I(0) <= N and N >= 1"));
                }
            }
            ModelKind::Sir | ModelKind::Seir => {
                if initial.iter().sum::<i64>() != population {
                    return Err(Error::invalid(
                        "initial",
                        "compartment counts must sum to the population size",
                    ));
                }
            }
            ModelKind::LotkaVolterra => {}
        }
        let mut init = [0; MAX_SPECIES];
        init[..sc].copy_from_slice(initial);
        Ok(Self {
            kind,
            population,
            initial: init,
        })
    }

    /// Death model with `N = 50` and `I(0) = 0`.
    pub fn death() -> Self {
        Self::new(ModelKind::Death, 50, &[0]).expect("valid preset")
    }

    /// SI model with `N = 50` and `I(0) = 0`.
    pub fn si() -> Self {
        Self::new(ModelKind::Si, 50, &[0]).expect("valid preset")
    }

    /// SIR model with 45 susceptible and 5 infectious individuals.
    pub fn sir() -> Self {
        Self::new(ModelKind::Sir, 50, &[45, 5, 0]).expect("valid preset")
    }

    /// SEIR model with 45 susceptible and 5 infectious individuals.
    pub fn seir() -> Self {
        Self::new(ModelKind::Seir, 50, &[45, 0, 5, 0]).expect("valid preset")
    }

    /// Lotka–Volterra model with 90 prey and 35 predators.
    pub fn lotka_volterra() -> Self {
        Self::new(ModelKind::LotkaVolterra, 0, &[90, 35]).expect("valid preset")
    }

    pub fn preset(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Death => Self::death(),
            ModelKind::Si => Self::si(),
            ModelKind::Sir => Self::sir(),
            ModelKind::Seir => Self::seir(),
            ModelKind::LotkaVolterra => Self::lotka_volterra(),
        }
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn population(&self) -> i64 {
        self.population
    }

    pub fn species_count(&self) -> usize {
        self.kind.species_count()
    }

    pub fn initial(&self) -> &[i64] {
        &self.initial[..self.species_count()]
    }

    pub(crate) fn initial_array(&self) -> [i64; MAX_SPECIES] {
        self.initial
    }

    pub fn param_dim(&self) -> usize {
        self.kind.param_dim()
    }

    pub fn observed_mask(&self) -> &'static [bool] {
        self.kind.observed_mask()
    }

    /// Indices of observed species.
    pub fn observed_indices(&self) -> Vec<usize> {
        self.observed_mask()
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| o.then_some(i))
            .collect()
    }

    pub fn observed_count(&self) -> usize {
        self.observed_mask().iter().filter(|&&o| o).count()
    }

    pub fn observed_names(&self) -> Vec<&'static str> {
        self.observed_indices()
            .into_iter()
            .map(|i| self.kind.species_names()[i])
            .collect()
    }

    pub(crate) fn check_theta(&self, theta: &Theta) -> Result<()> {
        if theta.len() != self.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.param_dim(),
                got: theta.len(),
            });
        }
        Ok(())
    }

    /// Reaction propensities at `state`; returns the number of reactions.
    #[inline]
    pub fn propensities(&self, state: &[i64; MAX_SPECIES], theta: &[f64], out: &mut [f64; MAX_REACTIONS]) -> usize {
        let n = self.population as f64;
        match self.kind {
            ModelKind::Death => {
                out[0] = theta[0] * (n - state[0] as f64);
                1
            }
            ModelKind::Si => {
                let i = state[0] as f64;
                out[0] = (theta[0] + theta[1] * i) * (n - i);
                1
            }
            ModelKind::Sir => {
                let (s, i) = (state[0] as f64, state[1] as f64);
                out[0] = theta[0] * s * i / n;
                out[1] = theta[1] * i;
                2
            }
            ModelKind::Seir => {
                let (s, e, i) = (state[0] as f64, state[1] as f64, state[2] as f64);
                out[0] = theta[0] * s * i / n;
                out[1] = theta[1] * e;
                out[2] = theta[2] * i;
                3
            }
            ModelKind::LotkaVolterra => {
                let (x, y) = (state[0] as f64, state[1] as f64);
                let (a, b, c, k) = (theta[0], theta[1], theta[2], theta[3]);
                out[0] = a * x;
                out[1] = a * x * x / k;
                out[2] = b * x * y;
                out[3] = c * y;
                4
            }
        }
    }

    /// Largest number of times reaction `j` can fire from `state` without
    /// driving a count negative or past the population size.
    #[inline]
    pub(crate) fn capacity(&self, state: &[i64; MAX_SPECIES], j: usize) -> i64 {
        match self.kind {
            ModelKind::Death | ModelKind::Si => self.population - state[0],
            ModelKind::Sir | ModelKind::Seir => state[j],
            ModelKind::LotkaVolterra => match j {
                0 => i64::MAX,
                1 | 2 => state[0],
                _ => state[1],
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn propensities_vanish_at_the_boundary() {
        let theta = [0.6, 0.02, 0.3, 900.0];
        for kind in ModelKind::ALL {
            let m = ModelSpec::preset(kind);
            let mut out = [0.0; MAX_REACTIONS];
            let th = &theta[..kind.param_dim()];
            for j in 0..kind.reaction_count() {
                // a state at which reaction j has no capacity
                let mut st = m.initial_array();
                match kind {
                    ModelKind::Death | ModelKind::Si => st[0] = 50,
                    ModelKind::Sir | ModelKind::Seir => st[j] = 0,
                    ModelKind::LotkaVolterra => {
                        if j == 0 {
                            continue;
                        }
                        if j == 3 { st[1] = 0 } else { st[0] = 0 }
                    }
                }
                assert_eq!(m.capacity(&st, j), 0, "{kind} reaction {j}");
                m.propensities(&st, th, &mut out);
                assert_eq!(out[j], 0.0, "{kind} reaction {j}");
            }
        }
    }

    #[test]
    fn presets_match_documented_initial_conditions() {
        assert_eq!(ModelSpec::sir().initial(), &[45, 5, 0]);
        assert_eq!(ModelSpec::seir().initial(), &[45, 0, 5, 0]);
        assert_eq!(ModelSpec::lotka_volterra().initial(), &[90, 35]);
        assert_eq!(ModelSpec::seir().observed_indices(), vec![2, 3]);
        assert_eq!(ModelSpec::sir().observed_names(), vec!["I", "R"]);
    }

    #[test]
    fn theta_rejects_nonpositive_rates() {
        assert!(Theta::new(vec![0.0]).is_err());
        assert!(Theta::new(vec![-1.0, 2.0]).is_err());
        let t = Theta::from_log(&[0.0, 1.0]).unwrap();
        assert_eq!(t.values()[0], 1.0);
    }

    #[test]
    fn si_reduces_to_death_when_beta2_vanishes() {
        let si = ModelSpec::si();
        let death = ModelSpec::death();
        let mut a = [0.0; MAX_REACTIONS];
        let mut b = [0.0; MAX_REACTIONS];
        let st = [17, 0, 0, 0];
        si.propensities(&st, &[0.4, 0.0], &mut a);
        death.propensities(&st, &[0.4], &mut b);
        assert_eq!(a[0], b[0]);
    }

    #[test]
    fn model_ids_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::from_id(k.id()), Some(k));
        }
        assert_eq!(ModelKind::from_id("sis"), None);
    }
}
