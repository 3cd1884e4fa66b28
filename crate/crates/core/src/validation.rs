//! Validation studies: posterior model probabilities and Laplace importance
//! sampling precision on datasets simulated from each candidate model.

use alloc::vec;
use alloc::vec::Vec;

use crate::laplace::{laplace_fit, lis_posterior, posterior_model_probs, LisOptions};
use crate::rng::{self, derive_path, tag};
use crate::sampling::PointBatch;
use crate::synlik::SummaryModel;
use crate::utility::UtilityProblem;
use crate::{Error, Result};

/// Outcome for one simulated dataset. Failed fits leave fields empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRecord {
    pub model: usize,
    pub replicate: usize,
    pub log_theta: Vec<f64>,
    /// Posterior model probabilities; `None` if any candidate failed
    /// screening.
    pub probs: Option<Vec<f64>>,
    /// `log det` of the inverse importance-weighted posterior covariance
    /// under the generating model.
    pub log_det_precision: Option<f64>,
    pub ess: Option<f64>,
}

impl ValidationRecord {
    /// Posterior probability of the generating model.
    pub fn true_model_prob(&self) -> Option<f64> {
        self.probs.as_ref().map(|p| p[self.model])
    }
}

/// Simulates replicate `r` of generating model `m` and analyses it. The
/// problem's utility kind is ignored.
pub fn validate_replicate<M: SummaryModel>(
    problem: &UtilityProblem<'_, M>,
    lis: &LisOptions,
    m: usize,
    r: usize,
    seed: u64,
) -> Result<ValidationRecord> {
    let gen = problem.models.get(m).ok_or(Error::invalid("model", "index out of range"))?;
    let prior = &problem.priors[m];
    let unit = PointBatch::pseudo_random(prior.dim(), 1, derive_path(seed, &[tag::PARAMS, m as u64, r as u64]));
    let log_theta = prior.sample_log(unit.point(0));
    let data_seed = derive_path(seed, &[tag::DATA, m as u64, r as u64]);
    let mut s_obs = vec![0.0; gen.summary_dim()];
    gen.simulate(&log_theta, &mut rng::stream(data_seed, 0), &mut s_obs);

    let mut evidences = Vec::with_capacity(problem.models.len());
    let mut gen_fit = None;
    for (j, (model, p)) in problem.models.iter().zip(problem.priors).enumerate() {
        let fit = laplace_fit(
            model,
            p,
            &s_obs,
            &problem.settings,
            &problem.laplace,
            derive_path(data_seed, &[tag::FIT, j as u64]),
        )?;
        evidences.push(if fit.pass { Some(fit.log_evidence) } else { None });
        if j == m {
            gen_fit = Some(fit);
        }
    }
    let probs = evidences
        .iter()
        .copied()
        .collect::<Option<Vec<f64>>>()
        .and_then(|e| posterior_model_probs(&e, &problem.model_prior).ok())
        .map(|p| p.probs);
    let lis_result = gen_fit.filter(|f| f.pass).and_then(|fit| {
        lis_posterior(
            &fit,
            gen,
            prior,
            &s_obs,
            &problem.settings,
            lis,
            derive_path(data_seed, &[tag::IMPORTANCE, m as u64]),
        )
        .ok()
    });
    Ok(ValidationRecord {
        model: m,
        replicate: r,
        log_theta,
        probs,
        log_det_precision: lis_result.as_ref().and_then(|l| l.log_det_precision),
        ess: lis_result.map(|l| l.ess),
    })
}

/// `replicates` datasets from every candidate model, model-major.
pub fn validate_design<M: SummaryModel>(
    problem: &UtilityProblem<'_, M>,
    lis: &LisOptions,
    replicates: usize,
    seed: u64,
) -> Result<Vec<ValidationRecord>> {
    problem.validate()?;
    let mut out = Vec::with_capacity(problem.models.len() * replicates);
    for m in 0..problem.models.len() {
        for r in 0..replicates {
            out.push(validate_replicate(problem, lis, m, r, seed)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use crate::sampling::PriorSpec;
    use crate::surrogate::LinearGaussian;
    use crate::synlik::MomentSource;
    use crate::utility::UtilityKind;

    #[test]
    fn surrogate_study_is_reproducible_and_sane() {
        let models = [
            LinearGaussian::new(Matrix::from_row_slice(2, 1, &[1.0, 0.0]), Matrix::identity(2, 2) * 0.05).unwrap(),
            LinearGaussian::new(Matrix::from_row_slice(2, 1, &[0.0, 1.0]), Matrix::identity(2, 2) * 0.05).unwrap(),
        ];
        let priors = [
            PriorSpec::new(vec![0.0], vec![1.0]).unwrap(),
            PriorSpec::new(vec![0.0], vec![1.0]).unwrap(),
        ];
        let mut problem = UtilityProblem::new(&models, &priors, UtilityKind::Sigm).unwrap();
        problem.settings.moments = MomentSource::Analytic;
        let lis = LisOptions {
            n_is: 200,
            inflation: 1.2,
        };
        let a = validate_design(&problem, &lis, 5, 11).unwrap();
        let b = validate_design(&problem, &lis, 5, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        for rec in &a {
            let p = rec.probs.as_ref().unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(rec.log_det_precision.unwrap() > 0.0);
        }
    }
}
