//! Gaussian synthetic likelihood of summary statistics and its local
//! curvature.
//!
//! At log-parameters `x` the summaries are simulated `n` times and treated as
//! `N(μ̂(x), Σ̂(x))`. Curvature comes from regressions rather than
//! differencing the noisy log-likelihood: summaries simulated at Gaussian
//! perturbations of `x` are regressed on the log-parameters, giving a
//! Jacobian `J` of the summary mean, and the Gauss–Newton Hessian is
//! `−Jᵀ Σ̂⁻¹ J` plus the prior term. Each log-parameter is also regressed on
//! all summaries; the R² of those reverse regressions decides whether the
//! curvature is trustworthy.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::kinetics::{simulate_into, Design, ModelSpec, Simulator};
use crate::linalg::{mean_cov, ols, symmetrize, Matrix, SpdFactor, Vector};
use crate::rng::{self, SimRng};
use crate::sampling::PriorSpec;
use crate::special::LN_2PI;
use crate::summaries::{summarize_counts, SummaryScheme};
use crate::{Error, Result};

/// Something that can simulate a summary vector at log-parameters, for a
/// fixed design.
pub trait SummaryModel {
    fn param_dim(&self) -> usize;

    fn summary_dim(&self) -> usize;

    /// Writes one simulated summary vector into `out`.
    fn simulate(&self, log_theta: &[f64], rng: &mut SimRng, out: &mut [f64]);

    /// Closed-form summary mean, covariance and mean Jacobian, for models
    /// that have them.
    fn exact_moments(&self, _log_theta: &[f64]) -> Option<(Vector, Matrix, Matrix)> {
        None
    }
}

/// A CTMC observed at a design and reduced to summaries.
#[derive(Debug, Clone)]
pub struct CtmcSummaries {
    pub model: ModelSpec,
    pub design: Design,
    pub scheme: SummaryScheme,
    pub simulator: Simulator,
}

impl CtmcSummaries {
    pub fn new(model: ModelSpec, design: Design, scheme: SummaryScheme, simulator: Simulator) -> Result<Self> {
        simulator.validate(&design)?;
        if design.len() < scheme.min_len() {
            return Err(Error::invalid(
                "design",
                "variance-type statistics need at least two design points",
            ));
        }
        Ok(Self {
            model,
            design,
            scheme,
            simulator,
        })
    }
}

impl SummaryModel for CtmcSummaries {
    fn param_dim(&self) -> usize {
        self.model.param_dim()
    }

    fn summary_dim(&self) -> usize {
        self.scheme.dim(self.model.observed_count())
    }

    fn simulate(&self, log_theta: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        let mut theta = [0.0; crate::kinetics::MAX_SPECIES];
        for (t, l) in theta.iter_mut().zip(log_theta) {
            *t = l.exp();
        }
        let width = self.model.observed_count();
        let mut counts = vec![0; self.design.len() * width];
        simulate_into(
            &self.model,
            &theta[..log_theta.len()],
            self.design.times(),
            self.simulator,
            rng,
            &mut counts,
        );
        summarize_counts(&counts, width, &self.scheme, out);
    }
}

/// Where the synthetic-likelihood moments come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentSource {
    /// Monte Carlo moments and regression curvature.
    Simulated,
    /// Closed-form moments from [`SummaryModel::exact_moments`].
    Analytic,
}

/// R² thresholds for screening curvature fits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreeningThresholds {
    /// Models with one parameter.
    pub single: f64,
    /// Models with several parameters.
    pub multi: f64,
}

impl Default for ScreeningThresholds {
    fn default() -> Self {
        Self {
            single: 0.7,
            multi: 0.1,
        }
    }
}

impl ScreeningThresholds {
    pub fn for_dim(&self, q: usize) -> f64 {
        if q <= 1 {
            self.single
        } else {
            self.multi
        }
    }
}

/// Spread of the log-parameter perturbations behind the local regressions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Each coordinate uses its prior sd.
    PriorSd,
    /// One sd for every coordinate.
    Fixed(f64),
}

impl Perturbation {
    pub fn sds(&self, prior: &PriorSpec) -> Vec<f64> {
        match *self {
            Self::PriorSd => prior.sds().to_vec(),
            Self::Fixed(sd) => vec![sd; prior.dim()],
        }
    }
}

/// Synthetic-likelihood settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynLikSettings {
    /// Simulations per moment estimate.
    pub n: usize,
    /// Perturbed simulations for the local regressions.
    pub n_loc: usize,
    pub perturb: Perturbation,
    pub moments: MomentSource,
    pub thresholds: ScreeningThresholds,
}

impl Default for SynLikSettings {
    fn default() -> Self {
        Self {
            n: 500,
            n_loc: 200,
            perturb: Perturbation::PriorSd,
            moments: MomentSource::Simulated,
            thresholds: ScreeningThresholds::default(),
        }
    }
}

/// Estimated summary moments at one parameter point.
#[derive(Debug, Clone)]
pub struct SynLikFit {
    pub log_theta: Vec<f64>,
    pub mean: Vector,
    /// Regularised covariance.
    pub cov: Matrix,
    /// Simulations behind the estimate (0 for closed-form moments).
    pub n: usize,
    factor: SpdFactor,
}

impl SynLikFit {
    /// Wraps given moments, applying the ridge regularisation.
    pub fn from_moments(log_theta: Vec<f64>, mean: Vector, cov: Matrix, n: usize) -> Result<Self> {
        let cov = regularize(&symmetrize(&cov));
        let factor = SpdFactor::new(&cov, "synthetic-likelihood covariance")?;
        Ok(Self {
            log_theta,
            mean,
            cov,
            n,
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn factor(&self) -> &SpdFactor {
        &self.factor
    }
}

/// `Σ + ridge·I` with `ridge = max(1e-6·tr(Σ)/dim, 1e-8)`.
pub fn regularize(cov: &Matrix) -> Matrix {
    let d = cov.nrows();
    let ridge = (1e-6 * cov.trace() / d as f64).max(1e-8);
    let mut out = cov.clone();
    for i in 0..d {
        out[(i, i)] += ridge;
    }
    out
}

/// Smallest admissible simulation count for a summary dimension.
pub fn min_simulations(summary_dim: usize) -> usize {
    summary_dim + 2
}

/// Sample moments of `n` simulated summaries at `log_theta`. Replicate `r`
/// uses substream `r` of `seed`, so reusing a seed across parameter values
/// gives common random numbers.
pub fn fit_synlik<M: SummaryModel + ?Sized>(model: &M, log_theta: &[f64], n: usize, seed: u64) -> Result<SynLikFit> {
    let dim = model.summary_dim();
    if log_theta.len() != model.param_dim() {
        return Err(Error::DimensionMismatch {
            expected: model.param_dim(),
            got: log_theta.len(),
        });
    }
    if n < min_simulations(dim) {
        return Err(Error::invalid("n", "need at least summary dimension + 2 simulations"));
    }
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let mut rng = rng::stream(seed, r as u64);
        let mut s = vec![0.0; dim];
        model.simulate(log_theta, &mut rng, &mut s);
        rows.push(s);
    }
    let (mean, cov) = mean_cov(&rows, dim);
    SynLikFit::from_moments(log_theta.to_vec(), mean, cov, n)
}

/// Moments from the configured source.
pub fn moments<M: SummaryModel + ?Sized>(
    model: &M,
    log_theta: &[f64],
    settings: &SynLikSettings,
    seed: u64,
) -> Result<SynLikFit> {
    match settings.moments {
        MomentSource::Simulated => fit_synlik(model, log_theta, settings.n, seed),
        MomentSource::Analytic => {
            let (mean, cov, _) = model
                .exact_moments(log_theta)
                .ok_or(Error::invalid("moments", "model has no closed-form moments"))?;
            SynLikFit::from_moments(log_theta.to_vec(), mean, cov, 0)
        }
    }
}

/// Multivariate normal log density of the observed summaries.
pub fn synlik_logpdf(fit: &SynLikFit, s_obs: &[f64]) -> Result<f64> {
    if s_obs.len() != fit.dim() {
        return Err(Error::DimensionMismatch {
            expected: fit.dim(),
            got: s_obs.len(),
        });
    }
    let r = Vector::from_iterator(fit.dim(), s_obs.iter().zip(fit.mean.iter()).map(|(s, m)| s - m));
    let maha = fit.factor.inv_quad(&r);
    Ok(-0.5 * (fit.factor.log_det() + maha + fit.dim() as f64 * LN_2PI))
}

/// Regression-based local curvature at one parameter point.
#[derive(Debug, Clone)]
pub struct CurvatureFit {
    /// `∂μ/∂ log θ`, `summary_dim × q`.
    pub jacobian: Matrix,
    /// Standard errors of the Jacobian entries.
    pub jacobian_se: Matrix,
    /// R² of each log-parameter regressed on all summaries.
    pub r2: Vec<f64>,
}

/// Smallest perturbation sd accepted by [`local_jacobian`].
pub const MIN_PERTURB_SD: f64 = 1e-6;

/// Regresses summaries simulated at Gaussian perturbations of `log_theta`
/// (sd `perturb_sd[p]` in coordinate `p`) on the perturbed log-parameters.
pub fn local_jacobian<M: SummaryModel + ?Sized>(
    model: &M,
    log_theta: &[f64],
    n_loc: usize,
    perturb_sd: &[f64],
    seed: u64,
) -> Result<CurvatureFit> {
    let q = model.param_dim();
    let dim = model.summary_dim();
    if log_theta.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: log_theta.len(),
        });
    }
    if n_loc < 10 * q {
        return Err(Error::invalid("n_loc", "need at least 10 points per parameter"));
    }
    if perturb_sd.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            got: perturb_sd.len(),
        });
    }
    if perturb_sd.iter().any(|sd| !(*sd >= MIN_PERTURB_SD) || !sd.is_finite()) {
        return Err(Error::invalid("perturb_sd", "must be at least 1e-6"));
    }
    let mut x = Matrix::zeros(n_loc, q);
    let mut s = Matrix::zeros(n_loc, dim);
    let mut point = vec![0.0; q];
    let mut out = vec![0.0; dim];
    for i in 0..n_loc {
        let mut rng = rng::stream(seed, i as u64);
        for (p, (pt, c)) in point.iter_mut().zip(log_theta).enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *pt = c + perturb_sd[p] * z;
            x[(i, p)] = *pt;
        }
        model.simulate(&point, &mut rng, &mut out);
        for (j, v) in out.iter().enumerate() {
            s[(i, j)] = *v;
        }
    }
    let mut jacobian = Matrix::zeros(dim, q);
    let mut jacobian_se = Matrix::zeros(dim, q);
    for j in 0..dim {
        let y: Vec<f64> = s.column(j).iter().copied().collect();
        let fit = ols(&x, &y)?;
        for p in 0..q {
            jacobian[(j, p)] = fit.slopes[p];
            jacobian_se[(j, p)] = fit.slope_se[p];
        }
    }
    // reverse regressions on the summaries that vary
    let varying: Vec<usize> = (0..dim)
        .filter(|&j| {
            let c = s.column(j);
            let first = c[0];
            c.iter().any(|v| *v != first)
        })
        .collect();
    let r2 = if varying.is_empty() || n_loc < varying.len() + 2 {
        vec![0.0; q]
    } else {
        let sv = Matrix::from_fn(n_loc, varying.len(), |i, k| s[(i, varying[k])]);
        let mut r2 = Vec::with_capacity(q);
        for p in 0..q {
            let y: Vec<f64> = x.column(p).iter().copied().collect();
            r2.push(ols(&sv, &y)?.r2);
        }
        r2
    };
    Ok(CurvatureFit {
        jacobian,
        jacobian_se,
        r2,
    })
}

/// Curvature from the configured source; closed-form curvature has R² = 1.
pub fn curvature<M: SummaryModel + ?Sized>(
    model: &M,
    log_theta: &[f64],
    prior: &PriorSpec,
    settings: &SynLikSettings,
    seed: u64,
) -> Result<CurvatureFit> {
    match settings.moments {
        MomentSource::Simulated => {
            local_jacobian(model, log_theta, settings.n_loc, &settings.perturb.sds(prior), seed)
        }
        MomentSource::Analytic => {
            let (_, _, j) = model
                .exact_moments(log_theta)
                .ok_or(Error::invalid("moments", "model has no closed-form moments"))?;
            let (r, c) = j.shape();
            Ok(CurvatureFit {
                jacobian: j,
                jacobian_se: Matrix::zeros(r, c),
                r2: vec![1.0; c],
            })
        }
    }
}

/// Posterior Hessian on the log scale and whether its negative is positive
/// definite.
#[derive(Debug, Clone)]
pub struct PosteriorHessian {
    pub hessian: Matrix,
    pub negative_definite: bool,
}

/// `H = −Jᵀ Σ̂⁻¹ J − diag(1/σ²)`.
pub fn gauss_newton_hessian(curv: &CurvatureFit, fit: &SynLikFit, prior: &PriorSpec) -> Result<PosteriorHessian> {
    let (dim, q) = curv.jacobian.shape();
    if dim != fit.dim() {
        return Err(Error::DimensionMismatch {
            expected: fit.dim(),
            got: dim,
        });
    }
    if q != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            got: q,
        });
    }
    let sinv_j = fit.factor.solve(&curv.jacobian);
    let mut h = -(curv.jacobian.transpose() * sinv_j);
    for (p, sd) in prior.sds().iter().enumerate() {
        h[(p, p)] -= 1.0 / (sd * sd);
    }
    let h = symmetrize(&h);
    let negative_definite = SpdFactor::new(&(-&h), "negative Hessian").is_ok();
    Ok(PosteriorHessian {
        hessian: h,
        negative_definite,
    })
}

/// Passes when every reverse-regression R² reaches the threshold for `q`
/// parameters.
pub fn screen_fit(r2: &[f64], q: usize, thresholds: &ScreeningThresholds) -> bool {
    let t = thresholds.for_dim(q);
    r2.iter().all(|r| *r >= t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinetics::ModelKind;
    use approx::assert_relative_eq;

    /// s = A x + noise, noise ~ N(0, diag(noise_sd²)).
    struct Linear {
        a: Matrix,
        noise_sd: Vec<f64>,
    }

    impl SummaryModel for Linear {
        fn param_dim(&self) -> usize {
            self.a.ncols()
        }
        fn summary_dim(&self) -> usize {
            self.a.nrows()
        }
        fn simulate(&self, x: &[f64], rng: &mut SimRng, out: &mut [f64]) {
            for (j, o) in out.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                *o = (0..x.len()).map(|p| self.a[(j, p)] * x[p]).sum::<f64>() + self.noise_sd[j] * z;
            }
        }
    }

    #[test]
    fn logpdf_at_the_mean() {
        let fit = SynLikFit::from_moments(vec![0.0], Vector::from_vec(vec![1.0, 2.0]), Matrix::identity(2, 2) * 2.0, 0)
            .unwrap();
        let v = synlik_logpdf(&fit, &[1.0, 2.0]).unwrap();
        assert_relative_eq!(v, -0.5 * (fit.factor().log_det() + 2.0 * LN_2PI), epsilon = 1e-14);
    }

    #[test]
    fn scalar_density_by_hand() {
        // the ridge perturbs Σ = 1 by 1e-6
        let fit = SynLikFit::from_moments(vec![0.0], Vector::from_vec(vec![0.0]), Matrix::identity(1, 1), 0).unwrap();
        let v = synlik_logpdf(&fit, &[2.0]).unwrap();
        assert_relative_eq!(v, -0.5 * (4.0 + LN_2PI), epsilon = 1e-5);
    }

    #[test]
    fn deterministic_model_gets_ridge_covariance() {
        let m = CtmcSummaries::new(
            ModelSpec::new(ModelKind::Death, 50, &[50]).unwrap(),
            Design::from_times(vec![1.0, 2.0, 3.0]).unwrap(),
            SummaryScheme::mean_variance(),
            Simulator::Exact,
        )
        .unwrap();
        let fit = fit_synlik(&m, &[0.0], 20, 1).unwrap();
        assert_eq!(fit.mean.as_slice(), &[50.0, 0.0]);
        assert_eq!(fit.cov, Matrix::identity(2, 2) * 1e-8);
    }

    #[test]
    fn simulation_floor() {
        let m = Linear {
            a: Matrix::identity(3, 1).columns(0, 1).into_owned(),
            noise_sd: vec![1.0; 3],
        };
        assert!(fit_synlik(&m, &[0.0], 4, 1).is_err());
        assert!(fit_synlik(&m, &[0.0], 5, 1).is_ok());
    }

    #[test]
    fn jacobian_recovers_linear_coefficients() {
        let a = Matrix::from_row_slice(3, 2, &[1.0, -2.0, 0.5, 0.0, 3.0, 1.0]);
        let m = Linear {
            a: a.clone(),
            noise_sd: vec![0.05, 0.05, 0.05],
        };
        let c = local_jacobian(&m, &[0.2, -0.1], 400, &[0.1, 0.1], 9).unwrap();
        for j in 0..3 {
            for p in 0..2 {
                let err = (c.jacobian[(j, p)] - a[(j, p)]).abs();
                assert!(err < 2.0 * c.jacobian_se[(j, p)] + 1e-12, "entry ({j},{p}) off by {err}");
            }
        }
    }

    #[test]
    fn irrelevant_parameter_has_no_reverse_fit() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        let m = Linear {
            a,
            noise_sd: vec![0.01, 0.01],
        };
        let c = local_jacobian(&m, &[0.0, 0.0], 400, &[0.2, 0.2], 4).unwrap();
        assert!(c.jacobian[(0, 1)].abs() < 3.0 * c.jacobian_se[(0, 1)]);
        assert!(c.r2[0] > 0.99);
        assert!(c.r2[1] < 0.05);
    }

    #[test]
    fn tiny_perturbations_are_rejected() {
        let m = Linear {
            a: Matrix::identity(1, 1),
            noise_sd: vec![1.0],
        };
        assert!(local_jacobian(&m, &[0.0], 50, &[1e-7], 1).is_err());
        assert!(local_jacobian(&m, &[0.0], 5, &[0.1], 1).is_err());
    }

    #[test]
    fn hessian_reduces_to_prior_without_signal() {
        let prior = PriorSpec::new(vec![0.0, 0.0], vec![0.5, 2.0]).unwrap();
        let fit = SynLikFit::from_moments(vec![0.0; 2], Vector::zeros(1), Matrix::identity(1, 1), 0).unwrap();
        let curv = CurvatureFit {
            jacobian: Matrix::zeros(1, 2),
            jacobian_se: Matrix::zeros(1, 2),
            r2: vec![1.0, 1.0],
        };
        let h = gauss_newton_hessian(&curv, &fit, &prior).unwrap();
        assert_eq!(h.hessian, Matrix::from_row_slice(2, 2, &[-4.0, 0.0, 0.0, -0.25]));
        assert!(h.negative_definite);
    }

    #[test]
    fn scalar_hessian_by_hand() {
        let prior = PriorSpec::new(vec![0.0], vec![0.3]).unwrap();
        let fit = SynLikFit::from_moments(vec![0.0], Vector::zeros(1), Matrix::identity(1, 1) * 4.0, 0).unwrap();
        let v = fit.cov[(0, 0)];
        let curv = CurvatureFit {
            jacobian: Matrix::from_element(1, 1, 3.0),
            jacobian_se: Matrix::zeros(1, 1),
            r2: vec![1.0],
        };
        let h = gauss_newton_hessian(&curv, &fit, &prior).unwrap();
        assert_relative_eq!(h.hessian[(0, 0)], -9.0 / v - 1.0 / 0.09, epsilon = 1e-12);
    }

    #[test]
    fn screening_thresholds() {
        let t = ScreeningThresholds::default();
        assert!(screen_fit(&[0.71], 1, &t));
        assert!(!screen_fit(&[0.69], 1, &t));
        assert!(!screen_fit(&[0.5, 0.05], 2, &t));
        assert!(screen_fit(&[0.5, 0.15], 2, &t));
        for q in 1..5 {
            assert!(screen_fit(&vec![1.0; q], q, &t));
        }
    }
}
