//! Per-dataset utilities and their Monte Carlo / randomized quasi-Monte
//! Carlo expectation over the prior predictive.
//!
//! Signs: SIGP is the log-posterior minus log-prior density at the
//! generating parameters (an information gain, nonnegative in expectation);
//! SIGM is the log prior minus log posterior probability of the generating
//! model (nonpositive in expectation); SIGT is their sum.
//!
//! Expectations are assembled in three steps so callers can parallelise the
//! middle one: [`plan_draws`] fixes parameters and seeds, [`evaluate_draw`]
//! handles one simulated dataset, and [`aggregate`] combines outcomes in draw
//! order. [`expected_utility`] runs all three sequentially.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::laplace::{check_model_prior, laplace_fit, posterior_model_probs, LaplaceFit, LaplaceOptions, ModelPosterior};
use crate::rng::{self, derive_path, derive_seed, tag};
use crate::sampling::{sobol_owen, Method, PointBatch, PriorSpec};
use crate::synlik::{SummaryModel, SynLikSettings};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UtilityKind {
    Sigp,
    Nsel,
    Sigm,
    Sigt,
}

impl UtilityKind {
    pub const ALL: [UtilityKind; 4] = [Self::Sigp, Self::Nsel, Self::Sigm, Self::Sigt];

    pub fn id(self) -> &'static str {
        match self {
            Self::Sigp => "sigp",
            Self::Nsel => "nsel",
            Self::Sigm => "sigm",
            Self::Sigt => "sigt",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id().eq_ignore_ascii_case(s))
    }

    /// Whether every candidate model is fitted to each dataset.
    pub fn discriminates(self) -> bool {
        matches!(self, Self::Sigm | Self::Sigt)
    }
}

/// Lower bound on posterior model probabilities inside logarithms.
pub const PROB_FLOOR: f64 = 1e-300;

/// `log p̂(x | y) − log p(x)` under the Laplace posterior.
pub fn u_sigp(prior: &PriorSpec, fit: &LaplaceFit, log_theta: &[f64]) -> Result<f64> {
    Ok(fit.log_density(log_theta)? - prior.log_density_log(log_theta))
}

/// `−Σ (xᵢ − x*ᵢ)²` with the Laplace mode as posterior mean.
pub fn u_nsel(fit: &LaplaceFit, log_theta: &[f64]) -> f64 {
    -fit.mode.iter().zip(log_theta).map(|(m, x)| (x - m) * (x - m)).sum::<f64>()
}

/// `log p(m) − log p(m | y)` at the generating model.
pub fn u_sigm(model_prior: &[f64], posterior: &ModelPosterior, m_true: usize) -> f64 {
    model_prior[m_true].ln() - posterior.probs[m_true].max(PROB_FLOOR).ln()
}

pub fn u_sigt(sigp: f64, sigm: f64) -> f64 {
    sigp + sigm
}

/// Candidate models, their priors and the estimator settings.
#[derive(Debug, Clone)]
pub struct UtilityProblem<'a, M> {
    pub models: &'a [M],
    pub priors: &'a [PriorSpec],
    pub model_prior: Vec<f64>,
    pub kind: UtilityKind,
    pub settings: SynLikSettings,
    pub laplace: LaplaceOptions,
}

impl<'a, M: SummaryModel> UtilityProblem<'a, M> {
    /// Uniform model prior and default settings.
    pub fn new(models: &'a [M], priors: &'a [PriorSpec], kind: UtilityKind) -> Result<Self> {
        let k = models.len();
        let p = Self {
            models,
            priors,
            model_prior: vec![1.0 / k as f64; k],
            kind,
            settings: SynLikSettings::default(),
            laplace: LaplaceOptions::default(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::invalid("models", "need at least one model"));
        }
        if self.priors.len() != self.models.len() || self.model_prior.len() != self.models.len() {
            return Err(Error::DimensionMismatch {
                expected: self.models.len(),
                got: self.priors.len().min(self.model_prior.len()),
            });
        }
        for (m, p) in self.models.iter().zip(self.priors) {
            if m.param_dim() != p.dim() {
                return Err(Error::DimensionMismatch {
                    expected: m.param_dim(),
                    got: p.dim(),
                });
            }
        }
        check_model_prior(&self.model_prior)
    }
}

/// Prior-predictive sample size and point set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorOptions {
    /// Draws per generating model.
    pub q: usize,
    pub method: Method,
    /// Independent scrambles behind the randomized quasi-Monte Carlo
    /// standard error.
    pub replicates: usize,
}

impl EstimatorOptions {
    pub fn new(q: usize, method: Method) -> Self {
        Self {
            q,
            method,
            replicates: 16,
        }
    }

    /// Number of point blocks actually used: scrambles for RQMC, one for MC.
    pub fn blocks(&self) -> usize {
        match self.method {
            Method::Mc => 1,
            Method::Rqmc => self.replicates.min(self.q / 2).max(1),
        }
    }
}

/// One prior draw of a generating model and the seed of its dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub model: usize,
    pub index: usize,
    pub block: usize,
    pub log_theta: Vec<f64>,
    pub seed: u64,
}

/// Parameter draws for every generating model, model-major. Draw `j` of
/// model `m` gets a seed that depends only on `(seed, m, j)`, so two designs
/// planned with one seed share parameters and simulation streams.
pub fn plan_draws(priors: &[PriorSpec], opts: &EstimatorOptions, seed: u64) -> Result<Vec<Draw>> {
    if opts.q < 2 {
        return Err(Error::invalid("q", "need at least two draws"));
    }
    if opts.replicates == 0 {
        return Err(Error::invalid("replicates", "must be positive"));
    }
    let blocks = opts.blocks();
    let mut out = Vec::with_capacity(priors.len() * opts.q);
    for (m, prior) in priors.iter().enumerate() {
        let base = derive_path(seed, &[tag::PARAMS, m as u64]);
        let mut index = 0;
        for b in 0..blocks {
            let size = opts.q / blocks + usize::from(b < opts.q % blocks);
            let points = match opts.method {
                Method::Mc => PointBatch::pseudo_random(prior.dim(), size, base),
                Method::Rqmc => sobol_owen(prior.dim(), size, derive_seed(base, b as u64))?,
            };
            for i in 0..size {
                out.push(Draw {
                    model: m,
                    index,
                    block: b,
                    log_theta: prior.sample_log(points.point(i)),
                    seed: derive_path(seed, &[tag::DATA, m as u64, index as u64]),
                });
                index += 1;
            }
        }
    }
    Ok(out)
}

/// Utility of one dataset, split into its information-gain components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DrawUtility {
    pub value: f64,
    pub sigp: f64,
    pub sigm: f64,
}

/// Simulates the dataset of `draw`, fits the required models and evaluates
/// the utility. `None` means a fit failed screening.
pub fn evaluate_draw<M: SummaryModel>(problem: &UtilityProblem<'_, M>, draw: &Draw) -> Result<Option<DrawUtility>> {
    let gen = problem
        .models
        .get(draw.model)
        .ok_or(Error::invalid("draw", "model index out of range"))?;
    let k = problem.models.len();
    let mut s_obs = vec![0.0; gen.summary_dim()];
    gen.simulate(&draw.log_theta, &mut rng::stream(draw.seed, 0), &mut s_obs);
    let fit_seed = |j: usize| derive_path(draw.seed, &[tag::FIT, j as u64]);
    let fit_model = |j: usize| {
        laplace_fit(
            &problem.models[j],
            &problem.priors[j],
            &s_obs,
            &problem.settings,
            &problem.laplace,
            fit_seed(j),
        )
    };
    let kind = problem.kind;
    if kind == UtilityKind::Sigm && k == 1 {
        return Ok(Some(DrawUtility {
            value: 0.0,
            sigp: 0.0,
            sigm: 0.0,
        }));
    }
    if !kind.discriminates() || k == 1 {
        let fit = fit_model(draw.model)?;
        if !fit.pass {
            return Ok(None);
        }
        let sigp = u_sigp(&problem.priors[draw.model], &fit, &draw.log_theta)?;
        let value = if kind == UtilityKind::Nsel {
            u_nsel(&fit, &draw.log_theta)
        } else {
            sigp
        };
        return Ok(Some(DrawUtility { value, sigp, sigm: 0.0 }));
    }
    // every candidate is fitted to the same summaries; each reads them
    // through its own summary model, so all must share a summary dimension
    let mut fits = Vec::with_capacity(k);
    for j in 0..k {
        if problem.models[j].summary_dim() != s_obs.len() {
            return Err(Error::DimensionMismatch {
                expected: s_obs.len(),
                got: problem.models[j].summary_dim(),
            });
        }
        let fit = fit_model(j)?;
        if !fit.pass {
            return Ok(None);
        }
        fits.push(fit);
    }
    let evidences: Vec<f64> = fits.iter().map(|f| f.log_evidence).collect();
    let post = posterior_model_probs(&evidences, &problem.model_prior)?;
    let sigm = u_sigm(&problem.model_prior, &post, draw.model);
    let sigp = u_sigp(&problem.priors[draw.model], &fits[draw.model], &draw.log_theta)?;
    let value = if kind == UtilityKind::Sigm {
        sigm
    } else {
        u_sigt(sigp, sigm)
    };
    Ok(Some(DrawUtility { value, sigp, sigm }))
}

/// Expected utility contribution of one generating model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBatch {
    pub mean: f64,
    pub se: f64,
    pub substituted: usize,
    pub sigp: f64,
    pub sigm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtilityEstimate {
    pub kind: UtilityKind,
    /// Model-prior weighted mean over generating models.
    pub mean: f64,
    pub se: f64,
    /// Draws per generating model.
    pub q: usize,
    /// Screened-out evaluations replaced by the batch minimum.
    pub substituted: usize,
    pub method: Method,
    pub blocks: usize,
    /// SIGP and SIGM parts of `mean`; for SIGT they sum to it exactly.
    pub sigp: f64,
    pub sigm: f64,
    pub per_model: Vec<ModelBatch>,
}

/// Combines per-draw outcomes in plan order. Within each generating model,
/// screened-out draws take the utility of the lowest successful draw.
pub fn aggregate(
    kind: UtilityKind,
    model_prior: &[f64],
    opts: &EstimatorOptions,
    draws: &[Draw],
    outcomes: &[Option<DrawUtility>],
) -> Result<UtilityEstimate> {
    if draws.len() != outcomes.len() {
        return Err(Error::DimensionMismatch {
            expected: draws.len(),
            got: outcomes.len(),
        });
    }
    let blocks = opts.blocks();
    let mut per_model = Vec::with_capacity(model_prior.len());
    for m in 0..model_prior.len() {
        let idx: Vec<usize> = (0..draws.len()).filter(|&i| draws[i].model == m).collect();
        if idx.is_empty() {
            return Err(Error::invalid("draws", "a generating model has no draws"));
        }
        let floor = idx
            .iter()
            .filter_map(|&i| outcomes[i])
            .min_by(|a, b| a.value.partial_cmp(&b.value).unwrap_or(core::cmp::Ordering::Equal))
            .ok_or(Error::AllScreenedOut(m))?;
        let mut substituted = 0;
        let vals: Vec<DrawUtility> = idx
            .iter()
            .map(|&i| {
                outcomes[i].unwrap_or_else(|| {
                    substituted += 1;
                    floor
                })
            })
            .collect();
        let n = vals.len() as f64;
        let sigp = vals.iter().map(|v| v.sigp).sum::<f64>() / n;
        let sigm = vals.iter().map(|v| v.sigm).sum::<f64>() / n;
        let mean = if kind == UtilityKind::Sigt {
            sigp + sigm
        } else {
            vals.iter().map(|v| v.value).sum::<f64>() / n
        };
        let se = if blocks > 1 {
            let mut sums = vec![(0.0, 0usize); blocks];
            for (&i, v) in idx.iter().zip(&vals) {
                let b = draws[i].block;
                sums[b].0 += v.value;
                sums[b].1 += 1;
            }
            let means: Vec<f64> = sums.iter().map(|(s, c)| s / *c as f64).collect();
            crate::stats::sd(&means) / (blocks as f64).sqrt()
        } else {
            let values: Vec<f64> = vals.iter().map(|v| v.value).collect();
            crate::stats::sd(&values) / n.sqrt()
        };
        per_model.push(ModelBatch {
            mean,
            se,
            substituted,
            sigp,
            sigm,
        });
    }
    let weighted = |f: &dyn Fn(&ModelBatch) -> f64| per_model.iter().zip(model_prior).map(|(b, p)| p * f(b)).sum::<f64>();
    let sigp = weighted(&|b| b.sigp);
    let sigm = weighted(&|b| b.sigm);
    let mean = if kind == UtilityKind::Sigt {
        sigp + sigm
    } else {
        weighted(&|b| b.mean)
    };
    let se = per_model
        .iter()
        .zip(model_prior)
        .map(|(b, p)| p * p * b.se * b.se)
        .sum::<f64>()
        .sqrt();
    Ok(UtilityEstimate {
        kind,
        mean,
        se,
        q: opts.q,
        substituted: per_model.iter().map(|b| b.substituted).sum(),
        method: opts.method,
        blocks,
        sigp,
        sigm,
        per_model,
    })
}

/// Sequential expected-utility estimate.
pub fn expected_utility<M: SummaryModel>(
    problem: &UtilityProblem<'_, M>,
    opts: &EstimatorOptions,
    seed: u64,
) -> Result<UtilityEstimate> {
    problem.validate()?;
    let draws = plan_draws(problem.priors, opts, seed)?;
    let outcomes = draws
        .iter()
        .map(|d| evaluate_draw(problem, d))
        .collect::<Result<Vec<_>>>()?;
    aggregate(problem.kind, &problem.model_prior, opts, &draws, &outcomes)
}

/// Label for reports.
pub fn describe(est: &UtilityEstimate) -> String {
    alloc::format!(
        "{} = {:.4} (se {:.4}, q {}, substituted {})",
        est.kind.id(),
        est.mean,
        est.se,
        est.q,
        est.substituted
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::surrogate::LinearGaussian;
    use crate::synlik::MomentSource;
    use approx::assert_relative_eq;

    fn fit_1d(mode: f64, var: f64) -> LaplaceFit {
        LaplaceFit {
            mode: vec![mode],
            cov: Matrix::from_element(1, 1, var),
            log_evidence: 0.0,
            loglik_at_mode: 0.0,
            prior_at_mode: 0.0,
            r2: vec![1.0],
            converged: true,
            screened: true,
            positive_definite: true,
            pass: true,
            iterations: 0,
            restarted: false,
        }
    }

    #[test]
    fn sigp_hand_values() {
        let prior = PriorSpec::new(vec![0.0], vec![1.0]).unwrap();
        assert_relative_eq!(u_sigp(&prior, &fit_1d(0.0, 1.0), &[0.7]).unwrap(), 0.0, epsilon = 1e-14);
        assert_relative_eq!(u_sigp(&prior, &fit_1d(0.0, 0.25), &[0.0]).unwrap(), 2f64.ln(), epsilon = 1e-14);
    }

    #[test]
    fn nsel_hand_values() {
        assert_eq!(u_nsel(&fit_1d(0.0, 1.0), &[0.0]), 0.0);
        assert_relative_eq!(u_nsel(&fit_1d(0.0, 1.0), &[0.3]), -0.09, epsilon = 1e-15);
    }

    #[test]
    fn sigm_hand_values() {
        let post = ModelPosterior {
            log_evidences: vec![0.0, 0.0],
            probs: vec![0.5, 0.5],
        };
        assert_eq!(u_sigm(&[0.5, 0.5], &post, 1), 0.0);
        let post = ModelPosterior {
            log_evidences: vec![0.0, 0.0],
            probs: vec![0.75, 0.25],
        };
        assert_relative_eq!(u_sigm(&[0.5, 0.5], &post, 0), 0.5f64.ln() - 0.75f64.ln(), epsilon = 1e-15);
        let post = ModelPosterior {
            log_evidences: vec![0.0, 0.0],
            probs: vec![1.0, 0.0],
        };
        assert!(u_sigm(&[0.5, 0.5], &post, 1).is_finite());
        assert_eq!(u_sigt(0.0, 0.0), 0.0);
        assert_relative_eq!(u_sigt(2.0, -0.4), 1.6);
    }

    #[test]
    fn kind_ids_round_trip() {
        for k in UtilityKind::ALL {
            assert_eq!(UtilityKind::from_id(k.id()), Some(k));
        }
        assert_eq!(UtilityKind::from_id("SIGT"), Some(UtilityKind::Sigt));
    }

    fn outcome(v: f64) -> Option<DrawUtility> {
        Some(DrawUtility {
            value: v,
            sigp: v,
            sigm: 0.0,
        })
    }

    fn draws(models: usize, q: usize) -> Vec<Draw> {
        (0..models * q)
            .map(|i| Draw {
                model: i / q,
                index: i % q,
                block: 0,
                log_theta: vec![0.0],
                seed: i as u64,
            })
            .collect()
    }

    #[test]
    fn substitution_uses_batch_minimum() {
        let opts = EstimatorOptions::new(4, Method::Mc);
        let out = vec![outcome(1.0), None, outcome(3.0), outcome(2.0)];
        let est = aggregate(UtilityKind::Sigp, &[1.0], &opts, &draws(1, 4), &out).unwrap();
        assert_eq!(est.substituted, 1);
        assert_relative_eq!(est.mean, 7.0 / 4.0);
        assert!(est.mean <= 2.0);
    }

    #[test]
    fn batches_are_per_generating_model() {
        let opts = EstimatorOptions::new(2, Method::Mc);
        let out = vec![outcome(1.0), outcome(3.0), outcome(10.0), None];
        let est = aggregate(UtilityKind::Sigp, &[0.5, 0.5], &opts, &draws(2, 2), &out).unwrap();
        assert_relative_eq!(est.per_model[1].mean, 10.0);
        assert_relative_eq!(est.mean, 6.0);
        let out = vec![outcome(1.0), outcome(3.0), None, None];
        assert!(matches!(
            aggregate(UtilityKind::Sigp, &[0.5, 0.5], &opts, &draws(2, 2), &out),
            Err(Error::AllScreenedOut(1))
        ));
    }

    #[test]
    fn sigt_components_add_up() {
        let opts = EstimatorOptions::new(3, Method::Mc);
        let out = vec![
            Some(DrawUtility {
                value: 0.1 + -0.7,
                sigp: 0.1,
                sigm: -0.7,
            }),
            None,
            Some(DrawUtility {
                value: 2.3 + -0.2,
                sigp: 2.3,
                sigm: -0.2,
            }),
        ];
        let est = aggregate(UtilityKind::Sigt, &[1.0], &opts, &draws(1, 3), &out).unwrap();
        assert_eq!(est.mean, est.sigp + est.sigm);
        assert_relative_eq!(est.sigp, (0.1 + 0.1 + 2.3) / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn plan_is_reproducible_and_prefix_free_under_mc() {
        let prior = [PriorSpec::new(vec![0.0, 1.0], vec![1.0, 0.5]).unwrap()];
        let a = plan_draws(&prior, &EstimatorOptions::new(8, Method::Mc), 3).unwrap();
        let b = plan_draws(&prior, &EstimatorOptions::new(8, Method::Mc), 3).unwrap();
        assert_eq!(a, b);
        let c = plan_draws(&prior, &EstimatorOptions::new(4, Method::Mc), 3).unwrap();
        assert_eq!(&a[..4], &c[..]);
        let r = plan_draws(&prior, &EstimatorOptions::new(64, Method::Rqmc), 3).unwrap();
        assert_eq!(r.len(), 64);
        assert_eq!(r.iter().map(|d| d.block).max(), Some(15));
    }

    #[test]
    fn single_model_sigm_is_zero() {
        let m = [LinearGaussian::new(Matrix::from_element(1, 1, 1.0), Matrix::identity(1, 1)).unwrap()];
        let p = [PriorSpec::new(vec![0.0], vec![1.0]).unwrap()];
        let problem = UtilityProblem::new(&m, &p, UtilityKind::Sigm).unwrap();
        let est = expected_utility(&problem, &EstimatorOptions::new(10, Method::Mc), 1).unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.substituted, 0);
    }

    #[test]
    fn surrogate_sigp_is_close_to_closed_form() {
        let m = [LinearGaussian::new(Matrix::from_row_slice(2, 1, &[1.0, 0.5]), Matrix::identity(2, 2) * 0.2).unwrap()];
        let p = [PriorSpec::new(vec![0.0], vec![0.5]).unwrap()];
        let mut problem = UtilityProblem::new(&m, &p, UtilityKind::Sigp).unwrap();
        problem.settings.moments = MomentSource::Analytic;
        let est = expected_utility(&problem, &EstimatorOptions::new(400, Method::Mc), 2).unwrap();
        let truth = m[0].expected_information_gain(&p[0]).unwrap();
        assert!((est.mean - truth).abs() < 3.0 * est.se + 1e-3, "{} vs {truth}", est.mean);
    }
}
