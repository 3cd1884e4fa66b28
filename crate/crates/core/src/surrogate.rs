//! Linear-Gaussian surrogate models with closed-form posteriors.
//!
//! Summaries are `s = G x + ε`, `ε ~ N(0, Σ)`, where `x` is the log-parameter
//! vector. Under the log-normal prior the posterior of `x` is Gaussian, so
//! the surrogate is an exact target for the Laplace machinery and has a
//! closed-form expected information gain.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;
use rand_distr::{Distribution, StandardNormal};

use crate::kinetics::Design;
use crate::linalg::{symmetrize, Matrix, SpdFactor, Vector};
use crate::rng::SimRng;
use crate::sampling::PriorSpec;
use crate::special::LN_2PI;
use crate::synlik::SummaryModel;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LinearGaussian {
    g: Matrix,
    noise_cov: Matrix,
    noise_lower: Matrix,
}

impl LinearGaussian {
    pub fn new(g: Matrix, noise_cov: Matrix) -> Result<Self> {
        if noise_cov.nrows() != g.nrows() || noise_cov.ncols() != g.nrows() {
            return Err(Error::DimensionMismatch {
                expected: g.nrows(),
                got: noise_cov.nrows(),
            });
        }
        let noise_cov = symmetrize(&noise_cov);
        let noise_lower = SpdFactor::new(&noise_cov, "surrogate noise covariance")?.lower();
        Ok(Self {
            g,
            noise_cov,
            noise_lower,
        })
    }

    /// One summary per design time, `G_kj = exp(−(t_k − c_j)² / 2w²)`: each
    /// parameter is visible around its own centre time.
    pub fn bumps(design: &Design, centers: &[f64], width: f64, noise_sd: f64) -> Result<Self> {
        if !(width > 0.0) || !(noise_sd > 0.0) {
            return Err(Error::invalid("surrogate", "width and noise sd must be positive"));
        }
        if centers.is_empty() {
            return Err(Error::invalid("centers", "need at least one parameter"));
        }
        let t = design.times();
        let g = Matrix::from_fn(t.len(), centers.len(), |k, j| {
            let z = (t[k] - centers[j]) / width;
            (-0.5 * z * z).exp()
        });
        let l = t.len();
        Self::new(g, Matrix::identity(l, l) * (noise_sd * noise_sd))
    }

    pub fn coefficients(&self) -> &Matrix {
        &self.g
    }

    pub fn noise_cov(&self) -> &Matrix {
        &self.noise_cov
    }

    pub fn mean(&self, x: &[f64]) -> Vector {
        &self.g * Vector::from_column_slice(x)
    }

    fn prior_parts(&self, prior: &PriorSpec) -> Result<(Vector, Matrix)> {
        if prior.dim() != self.g.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.g.ncols(),
                got: prior.dim(),
            });
        }
        let mu = Vector::from_column_slice(prior.means());
        let prec = Matrix::from_diagonal(&Vector::from_iterator(
            prior.dim(),
            prior.sds().iter().map(|s| 1.0 / (s * s)),
        ));
        Ok((mu, prec))
    }

    /// Exact posterior mean and covariance of the log-parameters.
    pub fn posterior(&self, prior: &PriorSpec, s_obs: &[f64]) -> Result<(Vector, Matrix)> {
        let (mu, prior_prec) = self.prior_parts(prior)?;
        let noise = SpdFactor::new(&self.noise_cov, "surrogate noise covariance")?;
        let sinv_g = noise.solve(&self.g);
        let prec = symmetrize(&(self.g.transpose() * &sinv_g + &prior_prec));
        let prec_f = SpdFactor::new(&prec, "posterior precision")?;
        let rhs = sinv_g.transpose() * Vector::from_column_slice(s_obs) + &prior_prec * mu;
        let mean = prec_f.solve(&Matrix::from_column_slice(rhs.len(), 1, rhs.as_slice()));
        Ok((mean.column(0).into_owned(), prec_f.inverse()))
    }

    /// Exact log marginal density of the observed summaries.
    pub fn log_evidence(&self, prior: &PriorSpec, s_obs: &[f64]) -> Result<f64> {
        let (mu, _) = self.prior_parts(prior)?;
        let pcov = Matrix::from_diagonal(&Vector::from_iterator(prior.dim(), prior.sds().iter().map(|s| s * s)));
        let marg = symmetrize(&(&self.noise_cov + &self.g * pcov * self.g.transpose()));
        let f = SpdFactor::new(&marg, "marginal covariance")?;
        let r = Vector::from_column_slice(s_obs) - &self.g * mu;
        Ok(-0.5 * (f.log_det() + f.inv_quad(&r) + r.len() as f64 * LN_2PI))
    }

    /// Expected Shannon information gain about the parameters,
    /// `½ log det(I + Σ_prior Gᵀ Σ⁻¹ G)`.
    pub fn expected_information_gain(&self, prior: &PriorSpec) -> Result<f64> {
        let (_, prior_prec) = self.prior_parts(prior)?;
        let noise = SpdFactor::new(&self.noise_cov, "surrogate noise covariance")?;
        let info = symmetrize(&(self.g.transpose() * noise.solve(&self.g)));
        let post_prec = SpdFactor::new(&(&info + &prior_prec), "posterior precision")?;
        let prior_log_det: f64 = prior_prec.diagonal().iter().map(|p| p.ln()).sum();
        Ok(0.5 * (post_prec.log_det() - prior_log_det))
    }
}

impl SummaryModel for LinearGaussian {
    fn param_dim(&self) -> usize {
        self.g.ncols()
    }

    fn summary_dim(&self) -> usize {
        self.g.nrows()
    }

    fn simulate(&self, log_theta: &[f64], rng: &mut SimRng, out: &mut [f64]) {
        let d = self.g.nrows();
        let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let mean = self.mean(log_theta);
        for i in 0..d {
            let mut v = mean[i];
            for k in 0..=i {
                v += self.noise_lower[(i, k)] * z[k];
            }
            out[i] = v;
        }
    }

    fn exact_moments(&self, log_theta: &[f64]) -> Option<(Vector, Matrix, Matrix)> {
        Some((self.mean(log_theta), self.noise_cov.clone(), self.g.clone()))
    }
}

/// Centres for [`LinearGaussian::bumps`] evenly spaced inside a window.
pub fn default_centers(window: (f64, f64), q: usize) -> Vec<f64> {
    let (lo, hi) = window;
    let mut c = vec![0.0; q];
    for (j, cj) in c.iter_mut().enumerate() {
        *cj = lo + (hi - lo) * (j as f64 + 1.0) / (q as f64 + 1.0);
    }
    c
}
