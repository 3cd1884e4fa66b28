use sldesign::kinetics::{Design, Simulator};
use sldesign::linalg::{Matrix, Vector};
use sldesign::rng::SimRng;
use sldesign::summaries::SummaryScheme;
use sldesign::surrogate::LinearGaussian;
use sldesign::synlik::{CtmcSummaries, SummaryModel};

use crate::config::ModelEntry;

/// Any configured model bound to a design.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Ctmc(CtmcSummaries),
    Surrogate(LinearGaussian),
}

impl AnyModel {
    pub fn build(
        entry: &ModelEntry,
        design: &Design,
        scheme: &SummaryScheme,
        simulator: Simulator,
    ) -> sldesign::Result<Self> {
        Ok(match entry {
            ModelEntry::Ctmc(spec) => {
                AnyModel::Ctmc(CtmcSummaries::new(spec.clone(), design.clone(), scheme.clone(), simulator)?)
            }
            ModelEntry::Surrogate {
                centers,
                width,
                noise_sd,
            } => AnyModel::Surrogate(LinearGaussian::bumps(design, centers, *width, *noise_sd)?),
        })
    }

    pub fn build_all(
        entries: &[ModelEntry],
        design: &Design,
        scheme: &SummaryScheme,
        simulator: Simulator,
    ) -> sldesign::Result<Vec<Self>> {
        entries
            .iter()
            .map(|e| Self::build(e, design, scheme, simulator))
            .collect()
    }
}

impl SummaryModel for AnyModel {
    fn param_dim(&self) -> usize {
        match self {
            AnyModel::Ctmc(m) => m.param_dim(),
            AnyModel::Surrogate(m) => m.param_dim(),
        }
    }

    fn summary_dim(&self) -> usize {
        match self {
            AnyModel::Ctmc(m) => m.summary_dim(),
            AnyModel::Surrogate(m) => m.summary_dim(),
        }
    }

    fn simulate(&self, log_theta: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        match self {
            AnyModel::Ctmc(m) => m.simulate(log_theta, rng, out),
            AnyModel::Surrogate(m) => m.simulate(log_theta, rng, out),
        }
    }

    fn exact_moments(&self, log_theta: &[f64]) -> Option<(Vector, Matrix, Matrix)> {
        match self {
            AnyModel::Ctmc(m) => m.exact_moments(log_theta),
            AnyModel::Surrogate(m) => m.exact_moments(log_theta),
        }
    }
}
