use alloc::vec::Vec;
use num_traits::Float;

use crate::kinetics::{ModelKind, Theta};
use crate::special::{norm_quantile, normal_log_pdf};
use crate::{Error, Result};

/// Independent normal priors on log-rates.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    means: Vec<f64>,
    sds: Vec<f64>,
}

impl PriorSpec {
    pub fn new(means: Vec<f64>, sds: Vec<f64>) -> Result<Self> {
        if means.len() != sds.len() {
            return Err(Error::DimensionMismatch {
                expected: means.len(),
                got: sds.len(),
            });
        }
        if means.is_empty() {
            return Err(Error::invalid("prior", "needs at least one parameter"));
        }
        if sds.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || means.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("prior", "sds must be positive and means finite"));
        }
        Ok(Self { means, sds })
    }

    /// The published priors for each model.
    pub fn preset(kind: ModelKind) -> Self {
        let (m, s): (&[f64], &[f64]) = match kind {
            ModelKind::Death => (&[-0.48], &[0.3]),
            ModelKind::Si => (&[-1.1, -4.5], &[0.4, 0.63]),
            ModelKind::Sir => (&[-0.09, -1.63], &[0.19, 0.32]),
            ModelKind::Seir => (&[0.44, -0.69, -1.31], &[0.16, 0.2, 0.38]),
            // Theta order (a, b, c, K)
            ModelKind::LotkaVolterra => (&[0.01, -5.03, -0.69, 6.87], &[0.12, 0.12, 0.16, 0.20]),
        };
        Self::new(m.to_vec(), s.to_vec()).expect("valid preset")
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn sds(&self) -> &[f64] {
        &self.sds
    }

    /// Log density on the log-parameter scale.
    pub fn log_density_log(&self, log_theta: &[f64]) -> f64 {
        log_theta
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(x, (m, s))| normal_log_pdf(*x, *m, *s))
            .sum()
    }

    /// Draws `exp(μ + σ Φ⁻¹(u))` on the log scale, returning log-rates.
    /// Coordinates are clamped into the open unit interval.
    pub fn sample_log(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(u, (m, s))| m + s * norm_quantile(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)))
            .collect()
    }
}

/// Log-normal draw from a point in the unit cube.
pub fn prior_sample(prior: &PriorSpec, u: &[f64]) -> Result<Theta> {
    if u.len() != prior.dim() {
        return Err(Error::DimensionMismatch {
            expected: prior.dim(),
            got: u.len(),
        });
    }
    if u.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(Error::invalid("u", "coordinates must lie in (0, 1)"));
    }
    Theta::from_log(&prior.sample_log(u))
}

/// Log-normal log density on the natural scale; `-∞` outside the support.
pub fn prior_log_density(prior: &PriorSpec, theta: &[f64]) -> f64 {
    if theta.len() != prior.dim() || theta.iter().any(|t| !(*t > 0.0)) {
        return f64::NEG_INFINITY;
    }
    let log: Vec<f64> = theta.iter().map(|t| t.ln()).collect();
    prior.log_density_log(&log) - log.iter().sum::<f64>()
}

/// Normal log density of log-rates (the workspace used by mode searches).
pub fn prior_log_density_log(prior: &PriorSpec, log_theta: &[f64]) -> f64 {
    prior.log_density_log(log_theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::LN_2PI;
    use alloc::vec;
    use approx::assert_relative_eq;

    #[test]
    fn median_draw_is_exp_mean() {
        let p = PriorSpec::preset(ModelKind::Death);
        let th = prior_sample(&p, &[0.5]).unwrap();
        assert_eq!(th.values()[0], (-0.48f64).exp());
        assert_relative_eq!(th.values()[0], 0.619, epsilon = 5e-4);
    }

    #[test]
    fn density_at_the_log_mode() {
        let p = PriorSpec::new(vec![0.3], vec![0.7]).unwrap();
        assert_relative_eq!(
            p.log_density_log(&[0.3]),
            -0.5 * (LN_2PI + (0.7f64 * 0.7).ln()),
            epsilon = 1e-14
        );
        assert_eq!(p.log_density_log(&[1.0]), p.log_density_log(&[-0.4]));
    }

    #[test]
    fn natural_scale_density_has_jacobian() {
        let p = PriorSpec::new(vec![0.0], vec![1.0]).unwrap();
        let x: f64 = 2.0;
        assert_relative_eq!(
            prior_log_density(&p, &[x]),
            p.log_density_log(&[x.ln()]) - x.ln(),
            epsilon = 1e-14
        );
        assert_eq!(prior_log_density(&p, &[0.0]), f64::NEG_INFINITY);
        assert_eq!(prior_log_density(&p, &[-1.0]), f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_out_of_cube_inputs() {
        let p = PriorSpec::preset(ModelKind::Si);
        assert!(prior_sample(&p, &[0.5]).is_err());
        assert!(prior_sample(&p, &[0.0, 0.5]).is_err());
        assert!(PriorSpec::new(vec![0.0], vec![0.0]).is_err());
    }
}
