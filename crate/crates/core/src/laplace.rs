//! Posterior mode search, Laplace approximation, model evidence and Laplace
//! importance sampling. Everything works on log-parameters.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::kinetics::{exact_log_likelihood, ModelSpec, Theta, Trajectory};
use crate::linalg::{symmetrize, Matrix, SpdFactor, Vector};
use crate::rng::{self, derive_seed, tag};
use crate::sampling::PriorSpec;
use crate::special::{log_sum_exp, LN_2PI};
use crate::synlik::{curvature, gauss_newton_hessian, moments, screen_fit, synlik_logpdf, SummaryModel, SynLikSettings};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            x_tol: 1e-3,
            f_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Maximises `f` from an initial simplex `x0, x0 + step_j e_j`. Non-finite
/// values count as worse than any finite one.
pub fn nelder_mead_maximize<F>(mut f: F, x0: &[f64], step: &[f64], opts: &NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> f64,
{
    let q = x0.len();
    if q == 0 {
        return Err(Error::invalid("x0", "empty starting point"));
    }
    if step.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: step.len(),
        });
    }
    // minimise g = -f
    let mut evaluations = 0;
    let mut g = |x: &[f64]| {
        evaluations += 1;
        let v = -f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let g0 = g(x0);
    if !g0.is_finite() {
        return Err(Error::Numerical("objective is not finite at the starting point".into()));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(q + 1);
    simplex.push((x0.to_vec(), g0));
    for j in 0..q {
        let mut v = x0.to_vec();
        v[j] += step[j];
        let gv = g(&v);
        simplex.push((v, gv));
    }
    let by_value = |a: &(Vec<f64>, f64), b: &(Vec<f64>, f64)| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal);
    let combine = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a + t * (b - a)).collect() };

    let mut iterations = 0;
    let converged = loop {
        simplex.sort_by(by_value);
        let best = &simplex[0];
        let spread = simplex[q].1 - best.1;
        let diameter = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(&best.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if spread < opts.f_tol || diameter < opts.x_tol {
            break true;
        }
        if iterations >= opts.max_iter {
            break false;
        }
        iterations += 1;

        let mut c = vec![0.0; q];
        for (v, _) in &simplex[..q] {
            for (ci, vi) in c.iter_mut().zip(v) {
                *ci += vi / q as f64;
            }
        }
        let worst = simplex[q].clone();
        let xr = combine(&c, &worst.0, -1.0);
        let gr = g(&xr);
        if gr < simplex[0].1 {
            let xe = combine(&c, &worst.0, -2.0);
            let ge = g(&xe);
            simplex[q] = if ge < gr { (xe, ge) } else { (xr, gr) };
            continue;
        }
        if gr < simplex[q - 1].1 {
            simplex[q] = (xr, gr);
            continue;
        }
        let (xc, gc, ok) = if gr < worst.1 {
            let xc = combine(&c, &xr, 0.5);
            let gc = g(&xc);
            let ok = gc <= gr;
            (xc, gc, ok)
        } else {
            let xc = combine(&c, &worst.0, 0.5);
            let gc = g(&xc);
            let ok = gc < worst.1;
            (xc, gc, ok)
        };
        if ok {
            simplex[q] = (xc, gc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let v = combine(&anchor, &vertex.0, 0.5);
            let gv = g(&v);
            *vertex = (v, gv);
        }
    };
    let (x, gbest) = simplex.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        value: -gbest,
        iterations,
        evaluations,
        converged,
    })
}

/// Laplace evidence `(q/2) log 2π + ½ log det Σ* + log-lik + log-prior`, all
/// at the mode.
pub fn log_evidence(log_det_cov: f64, loglik_at_mode: f64, prior_at_mode: f64, q: usize) -> f64 {
    0.5 * q as f64 * LN_2PI + 0.5 * log_det_cov + loglik_at_mode + prior_at_mode
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceOptions {
    pub nelder_mead: NelderMeadOptions,
    /// Retry once from one prior sd off the prior mean when the first search
    /// fails.
    pub restart: bool,
}

impl Default for LaplaceOptions {
    fn default() -> Self {
        Self {
            nelder_mead: NelderMeadOptions::default(),
            restart: true,
        }
    }
}

/// Gaussian approximation `N(mode, cov)` to a log-parameter posterior.
#[derive(Debug, Clone)]
pub struct LaplaceFit {
    pub mode: Vec<f64>,
    /// `(−H)⁻¹`; the prior covariance when `−H` is not positive definite.
    pub cov: Matrix,
    /// NaN unless `positive_definite`.
    pub log_evidence: f64,
    pub loglik_at_mode: f64,
    pub prior_at_mode: f64,
    pub r2: Vec<f64>,
    pub converged: bool,
    pub screened: bool,
    pub positive_definite: bool,
    /// Converged, screened and positive definite.
    pub pass: bool,
    pub iterations: usize,
    pub restarted: bool,
}

impl LaplaceFit {
    pub fn dim(&self) -> usize {
        self.mode.len()
    }

    /// Log density of the Gaussian approximation at `x`.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        let f = SpdFactor::new(&self.cov, "Laplace covariance")?;
        let r = Vector::from_iterator(x.len(), x.iter().zip(&self.mode).map(|(a, b)| a - b));
        Ok(-0.5 * (f.log_det() + f.inv_quad(&r) + x.len() as f64 * LN_2PI))
    }

    fn failed(start: Vec<f64>, prior: &PriorSpec, restarted: bool) -> Self {
        let q = start.len();
        Self {
            mode: start,
            cov: prior_cov(prior),
            log_evidence: f64::NAN,
            loglik_at_mode: f64::NAN,
            prior_at_mode: f64::NAN,
            r2: vec![0.0; q],
            converged: false,
            screened: false,
            positive_definite: false,
            pass: false,
            iterations: 0,
            restarted,
        }
    }
}

fn prior_cov(prior: &PriorSpec) -> Matrix {
    Matrix::from_diagonal(&Vector::from_iterator(prior.dim(), prior.sds().iter().map(|s| s * s)))
}

/// Curvature at a mode: posterior Hessian, R² values and screening verdict.
struct Curvature {
    hessian: Matrix,
    r2: Vec<f64>,
    screened: bool,
}

fn search<F, C>(prior: &PriorSpec, opts: &LaplaceOptions, mut loglik: F, mut curv: C) -> LaplaceFit
where
    F: FnMut(&[f64]) -> f64,
    C: FnMut(&[f64]) -> Result<Curvature>,
{
    let mu = prior.means();
    let sd = prior.sds();
    let step: Vec<f64> = sd.iter().map(|s| 0.5 * s).collect();
    let mut start = mu.to_vec();
    let mut result = LaplaceFit::failed(start.clone(), prior, false);
    for attempt in 0..2 {
        let restarted = attempt == 1;
        let nm = nelder_mead_maximize(
            |x| loglik(x) + prior.log_density_log(x),
            &start,
            &step,
            &opts.nelder_mead,
        );
        result = match nm {
            Ok(nm) => finish(prior, nm, restarted, &mut loglik, &mut curv),
            Err(_) => LaplaceFit::failed(start.clone(), prior, restarted),
        };
        if result.pass || !opts.restart || restarted {
            break;
        }
        start = mu
            .iter()
            .zip(sd)
            .zip(&result.mode)
            .map(|((m, s), x)| if x < m { m - s } else { m + s })
            .collect();
    }
    result
}

fn finish<F, C>(prior: &PriorSpec, nm: NelderMeadResult, restarted: bool, loglik: &mut F, curv: &mut C) -> LaplaceFit
where
    F: FnMut(&[f64]) -> f64,
    C: FnMut(&[f64]) -> Result<Curvature>,
{
    let q = nm.x.len();
    let loglik_at_mode = loglik(&nm.x);
    let prior_at_mode = prior.log_density_log(&nm.x);
    let mut fit = LaplaceFit {
        mode: nm.x,
        cov: prior_cov(prior),
        log_evidence: f64::NAN,
        loglik_at_mode,
        prior_at_mode,
        r2: vec![0.0; q],
        converged: nm.converged,
        screened: false,
        positive_definite: false,
        pass: false,
        iterations: nm.iterations,
        restarted,
    };
    if !loglik_at_mode.is_finite() {
        return fit;
    }
    let Ok(c) = curv(&fit.mode) else {
        return fit;
    };
    fit.r2 = c.r2;
    fit.screened = c.screened;
    if let Ok(neg_h) = SpdFactor::new(&(-symmetrize(&c.hessian)), "negative Hessian") {
        fit.positive_definite = true;
        fit.cov = symmetrize(&neg_h.inverse());
        fit.log_evidence = log_evidence(-neg_h.log_det(), loglik_at_mode, prior_at_mode, q);
    }
    fit.pass = fit.converged && fit.screened && fit.positive_definite;
    fit
}

fn check_dims<M: SummaryModel + ?Sized>(model: &M, prior: &PriorSpec, s_obs: &[f64]) -> Result<()> {
    if prior.dim() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            got: prior.dim(),
        });
    }
    if s_obs.len() != model.summary_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.summary_dim(),
            got: s_obs.len(),
        });
    }
    Ok(())
}

/// Synthetic-likelihood Laplace approximation. Every likelihood evaluation in
/// one call reuses the same simulation seed. Numerical trouble shows up as
/// `pass == false`, not as an error.
pub fn laplace_fit<M: SummaryModel + ?Sized>(
    model: &M,
    prior: &PriorSpec,
    s_obs: &[f64],
    settings: &SynLikSettings,
    opts: &LaplaceOptions,
    seed: u64,
) -> Result<LaplaceFit> {
    check_dims(model, prior, s_obs)?;
    let fit_seed = derive_seed(seed, tag::FIT);
    let curv_seed = derive_seed(seed, tag::CURVATURE);
    let q = prior.dim();
    let loglik = |x: &[f64]| {
        moments(model, x, settings, fit_seed)
            .and_then(|f| synlik_logpdf(&f, s_obs))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let curv = |x: &[f64]| {
        let fit = moments(model, x, settings, fit_seed)?;
        let c = curvature(model, x, prior, settings, curv_seed)?;
        let h = gauss_newton_hessian(&c, &fit, prior)?;
        Ok(Curvature {
            hessian: h.hessian,
            screened: screen_fit(&c.r2, q, &settings.thresholds),
            r2: c.r2,
        })
    };
    Ok(search(prior, opts, loglik, curv))
}

/// Central-difference Hessian of `f` at `x`.
pub fn finite_difference_hessian<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Matrix {
    let q = x.len();
    let mut out = Matrix::zeros(q, q);
    let mut p = x.to_vec();
    let f0 = f(x);
    for i in 0..q {
        p[i] = x[i] + h;
        let fp = f(&p);
        p[i] = x[i] - h;
        let fm = f(&p);
        p[i] = x[i];
        out[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in 0..i {
            let mut corner = |si: f64, sj: f64| {
                p[i] = x[i] + si * h;
                p[j] = x[j] + sj * h;
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (corner(1.0, 1.0) - corner(1.0, -1.0) - corner(-1.0, 1.0) + corner(-1.0, -1.0)) / (4.0 * h * h);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Step of the finite-difference Hessian in [`laplace_fit_exact`].
pub const EXACT_HESSIAN_STEP: f64 = 1e-3;

/// Laplace approximation built on the exact CTMC likelihood of a full
/// trajectory, with a finite-difference Hessian.
pub fn laplace_fit_exact(model: &ModelSpec, prior: &PriorSpec, traj: &Trajectory, opts: &LaplaceOptions) -> Result<LaplaceFit> {
    if prior.dim() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            got: prior.dim(),
        });
    }
    // surface unsupported models and oversized state spaces up front
    exact_log_likelihood(model, &Theta::new(prior.means().iter().map(|m| m.exp()).collect())?, traj)?;
    let q = prior.dim();
    let loglik = |x: &[f64]| {
        Theta::from_log(x)
            .and_then(|t| exact_log_likelihood(model, &t, traj))
            .unwrap_or(f64::NEG_INFINITY)
    };
    let curv = |x: &[f64]| {
        let hessian = finite_difference_hessian(|y| loglik(y) + prior.log_density_log(y), x, EXACT_HESSIAN_STEP);
        if hessian.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite likelihood near the mode".into()));
        }
        Ok(Curvature {
            hessian,
            r2: vec![1.0; q],
            screened: true,
        })
    };
    Ok(search(prior, opts, loglik, curv))
}

/// Posterior model probabilities from log evidences.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPosterior {
    pub log_evidences: Vec<f64>,
    pub probs: Vec<f64>,
}

/// Softmax of `log evidence + log prior`.
pub fn posterior_model_probs(log_evidences: &[f64], model_prior: &[f64]) -> Result<ModelPosterior> {
    if log_evidences.is_empty() {
        return Err(Error::invalid("log_evidences", "need at least one model"));
    }
    if model_prior.len() != log_evidences.len() {
        return Err(Error::DimensionMismatch {
            expected: log_evidences.len(),
            got: model_prior.len(),
        });
    }
    if log_evidences.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("log_evidences", "must be finite"));
    }
    check_model_prior(model_prior)?;
    let a: Vec<f64> = log_evidences.iter().zip(model_prior).map(|(e, p)| e + p.ln()).collect();
    let z = log_sum_exp(&a);
    let mut probs: Vec<f64> = a.iter().map(|v| (v - z).exp()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    Ok(ModelPosterior {
        log_evidences: log_evidences.to_vec(),
        probs,
    })
}

pub(crate) fn check_model_prior(p: &[f64]) -> Result<()> {
    let total: f64 = p.iter().sum();
    if p.iter().any(|v| !(*v > 0.0) || !v.is_finite()) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("model_prior", "must be positive and sum to one"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LisOptions {
    pub n_is: usize,
    /// Scale applied to the Laplace covariance in the proposal.
    pub inflation: f64,
}

impl Default for LisOptions {
    fn default() -> Self {
        Self {
            n_is: 1000,
            inflation: 1.2,
        }
    }
}

/// Self-normalised importance sample from the synthetic-likelihood posterior.
#[derive(Debug, Clone)]
pub struct LisResult {
    pub samples: Vec<Vec<f64>>,
    /// Normalised to sum to one.
    pub weights: Vec<f64>,
    pub ess: f64,
    pub mean: Vector,
    pub cov: Matrix,
    /// `log det` of the inverse weighted covariance; `None` if that
    /// covariance is singular.
    pub log_det_precision: Option<f64>,
    /// ESS below 5% of the sample size.
    pub low_ess: bool,
}

/// Laplace importance sampling with proposal `N(mode, inflation·Σ*)`.
pub fn lis_posterior<M: SummaryModel + ?Sized>(
    fit: &LaplaceFit,
    model: &M,
    prior: &PriorSpec,
    s_obs: &[f64],
    settings: &SynLikSettings,
    opts: &LisOptions,
    seed: u64,
) -> Result<LisResult> {
    check_dims(model, prior, s_obs)?;
    let fit_seed = derive_seed(seed, tag::FIT);
    importance_sample(fit, opts, seed, |x| {
        let ll = moments(model, x, settings, fit_seed)
            .and_then(|f| synlik_logpdf(&f, s_obs))
            .unwrap_or(f64::NEG_INFINITY);
        ll + prior.log_density_log(x)
    })
}

/// Importance sampling of an arbitrary unnormalised log target with the
/// inflated Laplace proposal.
pub fn importance_sample<F: FnMut(&[f64]) -> f64>(
    fit: &LaplaceFit,
    opts: &LisOptions,
    seed: u64,
    mut log_target: F,
) -> Result<LisResult> {
    if !fit.pass {
        return Err(Error::invalid("fit", "Laplace fit did not pass screening"));
    }
    if opts.n_is < 100 {
        return Err(Error::invalid("n_is", "need at least 100 importance draws"));
    }
    if !(opts.inflation > 0.0) {
        return Err(Error::invalid("inflation", "must be positive"));
    }
    let q = fit.dim();
    let proposal = SpdFactor::new(&(&fit.cov * opts.inflation), "proposal covariance")?;
    let lower = proposal.lower();
    let mut rng = rng::stream(derive_seed(seed, tag::IMPORTANCE), 0);
    let mut samples = Vec::with_capacity(opts.n_is);
    let mut logw = Vec::with_capacity(opts.n_is);
    for _ in 0..opts.n_is {
        let z = Vector::from_iterator(q, (0..q).map(|_| StandardNormal.sample(&mut rng)));
        let x: Vec<f64> = (&lower * &z).iter().zip(&fit.mode).map(|(d, m)| d + m).collect();
        let log_q = -0.5 * (proposal.log_det() + z.norm_squared() + q as f64 * LN_2PI);
        logw.push(log_target(&x) - log_q);
        samples.push(x);
    }
    let z = log_sum_exp(&logw);
    if !z.is_finite() {
        return Err(Error::Numerical("all importance weights vanish".into()));
    }
    let weights: Vec<f64> = logw.iter().map(|l| (l - z).exp()).collect();
    let ess = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
    let mut mean = Vector::zeros(q);
    for (w, x) in weights.iter().zip(&samples) {
        for k in 0..q {
            mean[k] += w * x[k];
        }
    }
    let mut cov = Matrix::zeros(q, q);
    for (w, x) in weights.iter().zip(&samples) {
        let r = Vector::from_iterator(q, x.iter().zip(mean.iter()).map(|(a, b)| a - b));
        cov += &r * r.transpose() * *w;
    }
    let cov = symmetrize(&cov);
    let log_det_precision = SpdFactor::new(&cov, "weighted covariance").ok().map(|f| -f.log_det());
    Ok(LisResult {
        samples,
        weights,
        ess,
        mean,
        cov,
        log_det_precision,
        low_ess: ess < 0.05 * opts.n_is as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surrogate::LinearGaussian;
    use crate::synlik::MomentSource;
    use approx::assert_relative_eq;

    fn tight() -> NelderMeadOptions {
        NelderMeadOptions {
            max_iter: 5000,
            x_tol: 1e-10,
            f_tol: 1e-14,
        }
    }

    #[test]
    fn quadratic_bowl() {
        let r = nelder_mead_maximize(|x| -(x[0] * x[0] + x[1] * x[1]), &[1.0, 1.0], &[0.5, 0.5], &tight()).unwrap();
        assert!(r.converged);
        assert!(r.x[0].abs() < 1e-4 && r.x[1].abs() < 1e-4);
    }

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let r = nelder_mead_maximize(f, &[-1.2, 1.0], &[0.5, 0.5], &tight()).unwrap();
        assert!(r.value.abs() < 1e-6, "f* = {}", r.value);
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn constant_objective_stops_at_once() {
        let r = nelder_mead_maximize(|_| 3.0, &[0.2, -0.4], &[1.0, 1.0], &NelderMeadOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.iterations <= 4);
        assert_eq!(r.x, vec![0.2, -0.4]);
    }

    #[test]
    fn iteration_cap_is_reported() {
        let opts = NelderMeadOptions {
            max_iter: 3,
            x_tol: 0.0,
            f_tol: 0.0,
        };
        let r = nelder_mead_maximize(|x| -(x[0] - 10.0).powi(2), &[0.0], &[0.1], &opts).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn non_finite_start_is_an_error() {
        assert!(nelder_mead_maximize(|_| f64::NAN, &[0.0], &[1.0], &NelderMeadOptions::default()).is_err());
    }

    #[test]
    fn evidence_arithmetic() {
        assert_relative_eq!(log_evidence(0.0, 0.0, 0.0, 1), 0.5 * LN_2PI);
        let a = log_evidence(-0.3, -2.0 + 0.7, -1.0 - 0.7, 2);
        let b = log_evidence(-0.3, -2.0, -1.0, 2);
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn model_probabilities() {
        let p = posterior_model_probs(&[1.3], &[1.0]).unwrap();
        assert_eq!(p.probs, vec![1.0]);
        let p = posterior_model_probs(&[-2.0, -2.0], &[0.5, 0.5]).unwrap();
        assert_relative_eq!(p.probs[0], 0.5, epsilon = 1e-15);
        let p = posterior_model_probs(&[0.0, -(3f64.ln())], &[0.5, 0.5]).unwrap();
        assert_relative_eq!(p.probs[0], 0.75, epsilon = 1e-14);
        assert_relative_eq!(p.probs[1], 0.25, epsilon = 1e-14);
        let p = posterior_model_probs(&[-1e4, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(p.probs[0], 0.0);
        assert!(posterior_model_probs(&[0.0, f64::NEG_INFINITY], &[0.5, 0.5]).is_err());
        assert!(posterior_model_probs(&[0.0, 0.0], &[0.7, 0.7]).is_err());
    }

    fn analytic() -> SynLikSettings {
        SynLikSettings {
            moments: MomentSource::Analytic,
            ..SynLikSettings::default()
        }
    }

    #[test]
    fn flat_likelihood_returns_the_prior() {
        let m = LinearGaussian::new(Matrix::zeros(2, 2), Matrix::identity(2, 2)).unwrap();
        let prior = PriorSpec::new(vec![0.3, -1.0], vec![0.2, 0.5]).unwrap();
        let opts = LaplaceOptions {
            nelder_mead: tight(),
            restart: true,
        };
        let fit = laplace_fit(&m, &prior, &[0.5, 0.5], &analytic(), &opts, 1).unwrap();
        assert!(fit.pass);
        assert!((fit.mode[0] - 0.3).abs() < 1e-5 && (fit.mode[1] + 1.0).abs() < 1e-5);
        assert_relative_eq!(fit.cov[(0, 0)], 0.04, epsilon = 1e-12);
        assert_relative_eq!(fit.cov[(1, 1)], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn common_random_numbers_make_fits_repeatable() {
        let m = LinearGaussian::new(Matrix::from_row_slice(2, 1, &[1.0, 2.0]), Matrix::identity(2, 2) * 0.001).unwrap();
        let prior = PriorSpec::new(vec![0.0], vec![1.0]).unwrap();
        let s = SynLikSettings {
            n: 50,
            n_loc: 40,
            ..SynLikSettings::default()
        };
        let a = laplace_fit(&m, &prior, &[0.4, 0.9], &s, &LaplaceOptions::default(), 5).unwrap();
        let b = laplace_fit(&m, &prior, &[0.4, 0.9], &s, &LaplaceOptions::default(), 5).unwrap();
        assert_eq!(a.mode, b.mode);
        assert_eq!(a.cov, b.cov);
        assert!(a.pass);
    }

    #[test]
    fn proposal_equal_to_target_gives_equal_weights() {
        let prior = PriorSpec::new(vec![0.1, 0.2], vec![0.3, 0.4]).unwrap();
        let fit = LaplaceFit {
            mode: vec![0.1, 0.2],
            cov: prior_cov(&prior),
            log_evidence: 0.0,
            loglik_at_mode: 0.0,
            prior_at_mode: 0.0,
            r2: vec![1.0; 2],
            converged: true,
            screened: true,
            positive_definite: true,
            pass: true,
            iterations: 0,
            restarted: false,
        };
        let opts = LisOptions {
            n_is: 200,
            inflation: 1.0,
        };
        let r = importance_sample(&fit, &opts, 3, |x| prior.log_density_log(x)).unwrap();
        for w in &r.weights {
            assert_relative_eq!(*w, 1.0 / 200.0, epsilon = 1e-12);
        }
        assert_relative_eq!(r.ess, 200.0, epsilon = 1e-8);
        assert!(!r.low_ess);
    }

    #[test]
    fn lis_requires_a_passing_fit() {
        let prior = PriorSpec::new(vec![0.0], vec![1.0]).unwrap();
        let fit = LaplaceFit::failed(vec![0.0], &prior, false);
        assert!(importance_sample(&fit, &LisOptions::default(), 1, |_| 0.0).is_err());
    }

    #[test]
    fn finite_difference_hessian_of_a_quadratic() {
        let h = finite_difference_hessian(|x| -(2.0 * x[0] * x[0] + x[0] * x[1] + 3.0 * x[1] * x[1]), &[0.3, 0.1], 1e-3);
        assert_relative_eq!(h[(0, 0)], -4.0, epsilon = 1e-6);
        assert_relative_eq!(h[(0, 1)], -1.0, epsilon = 1e-6);
        assert_relative_eq!(h[(1, 1)], -6.0, epsilon = 1e-6);
    }
}
