//! Summary statistics of observed trajectories and the diagnostics used to
//! judge how informative they are about each parameter.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::kinetics::{Design, ModelSpec, Simulator, Trajectory};
use crate::sampling::{prior_predictive, Method, PriorSpec};
use crate::stats::{pearson, spearman};
use crate::{Error, Result};

/// Offset inside the log-variance statistic; keeps constant series finite.
pub const LOG_VARIANCE_OFFSET: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    Mean,
    Variance,
    LogVariance,
    Median,
    Max,
}

impl Statistic {
    pub fn id(self) -> &'static str {
        match self {
            Statistic::Mean => "mean",
            Statistic::Variance => "variance",
            Statistic::LogVariance => "log_variance",
            Statistic::Median => "median",
            Statistic::Max => "max",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        [
            Statistic::Mean,
            Statistic::Variance,
            Statistic::LogVariance,
            Statistic::Median,
            Statistic::Max,
        ]
        .into_iter()
        .find(|t| t.id() == s)
    }

    fn needs_spread(self) -> bool {
        matches!(self, Statistic::Variance | Statistic::LogVariance)
    }
}

/// Statistics applied to every observed species, in order. The summary
/// vector is species-major: all statistics of species 0, then species 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryScheme {
    stats: Vec<Statistic>,
}

impl SummaryScheme {
    pub fn new(stats: Vec<Statistic>) -> Result<Self> {
        if stats.is_empty() {
            return Err(Error::invalid("scheme", "needs at least one statistic"));
        }
        Ok(Self { stats })
    }

    /// Mean and variance (death and SI models).
    pub fn mean_variance() -> Self {
        Self::new(vec![Statistic::Mean, Statistic::Variance]).expect("nonempty")
    }

    /// Mean, median and variance (SIR and SEIR models).
    pub fn mean_median_variance() -> Self {
        Self::new(vec![Statistic::Mean, Statistic::Median, Statistic::Variance]).expect("nonempty")
    }

    /// Mean, log-variance and maximum (Lotka–Volterra).
    pub fn mean_logvar_max() -> Self {
        Self::new(vec![Statistic::Mean, Statistic::LogVariance, Statistic::Max]).expect("nonempty")
    }

    pub fn stats(&self) -> &[Statistic] {
        &self.stats
    }

    pub fn dim(&self, observed_species: usize) -> usize {
        self.stats.len() * observed_species
    }

    pub fn min_len(&self) -> usize {
        if self.stats.iter().any(|s| s.needs_spread()) {
            2
        } else {
            1
        }
    }

    /// Column labels such as `I_mean`.
    pub fn labels(&self, species: &[&str]) -> Vec<String> {
        species
            .iter()
            .flat_map(|sp| self.stats.iter().map(move |st| format!("{sp}_{}", st.id())))
            .collect()
    }
}

/// A summary vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryVector(pub Vec<f64>);

impl SummaryVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

fn statistic(stat: Statistic, series: &mut [f64]) -> f64 {
    let n = series.len() as f64;
    match stat {
        Statistic::Mean => series.iter().sum::<f64>() / n,
        Statistic::Variance | Statistic::LogVariance => {
            let m = series.iter().sum::<f64>() / n;
            let v = series.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
            if stat == Statistic::Variance {
                v
            } else {
                (v + LOG_VARIANCE_OFFSET).ln()
            }
        }
        Statistic::Median => {
            series.sort_by(|a, b| a.total_cmp(b));
            let l = series.len();
            if l % 2 == 1 {
                series[l / 2]
            } else {
                0.5 * (series[l / 2 - 1] + series[l / 2])
            }
        }
        Statistic::Max => series.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Summaries of a row-major `len × width` count buffer into `out`.
pub fn summarize_counts(counts: &[i64], width: usize, scheme: &SummaryScheme, out: &mut [f64]) {
    let len = counts.len() / width;
    let mut series = vec![0.0; len];
    let mut k = 0;
    for s in 0..width {
        for st in &scheme.stats {
            for (t, v) in series.iter_mut().enumerate() {
                *v = counts[t * width + s] as f64;
            }
            out[k] = statistic(*st, &mut series);
            k += 1;
        }
    }
}

/// Summary statistics of a trajectory, species-major in scheme order.
pub fn summarize(traj: &Trajectory, scheme: &SummaryScheme) -> Result<SummaryVector> {
    if traj.len() < scheme.min_len() {
        return Err(Error::invalid(
            "trajectory",
            "variance-type statistics need at least two observations",
        ));
    }
    let mut out = vec![0.0; scheme.dim(traj.width())];
    summarize_counts(traj.counts(), traj.width(), scheme, &mut out);
    Ok(SummaryVector(out))
}

/// One row of the informativeness table.
#[derive(Debug, Clone, PartialEq)]
pub struct Informativeness {
    pub parameter: &'static str,
    pub statistic: String,
    pub pearson: f64,
    pub spearman: f64,
}

/// Correlations between each log-parameter and each summary over
/// prior-predictive draws, plus the raw scatter.
#[derive(Debug, Clone, PartialEq)]
pub struct InformativenessReport {
    pub rows: Vec<Informativeness>,
    pub parameter_names: Vec<&'static str>,
    pub statistic_names: Vec<String>,
    /// Log-parameters per draw.
    pub log_params: Vec<Vec<f64>>,
    /// Summaries per draw.
    pub summaries: Vec<Vec<f64>>,
}

pub fn informativeness_report(
    model: &ModelSpec,
    prior: &PriorSpec,
    design: &Design,
    count: usize,
    scheme: &SummaryScheme,
    simulator: Simulator,
    seed: u64,
) -> Result<InformativenessReport> {
    if count < 100 {
        return Err(Error::invalid("count", "needs at least 100 draws"));
    }
    let draws = prior_predictive(model, prior, design, count, Method::Mc, simulator, seed)?;
    let mut log_params = Vec::with_capacity(count);
    let mut summaries = Vec::with_capacity(count);
    for d in &draws {
        log_params.push(d.theta.log());
        summaries.push(summarize(&d.traj, scheme)?.0);
    }
    let parameter_names = model.kind().param_names().to_vec();
    let statistic_names = scheme.labels(&model.observed_names());
    let mut rows = Vec::new();
    for (p, pname) in parameter_names.iter().enumerate() {
        let xs: Vec<f64> = log_params.iter().map(|v| v[p]).collect();
        for (s, sname) in statistic_names.iter().enumerate() {
            let ys: Vec<f64> = summaries.iter().map(|v| v[s]).collect();
            rows.push(Informativeness {
                parameter: pname,
                statistic: sname.clone(),
                pearson: pearson(&xs, &ys),
                spearman: spearman(&xs, &ys),
            });
        }
    }
    Ok(InformativenessReport {
        rows,
        parameter_names,
        statistic_names,
        log_params,
        summaries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(values: &[i64], width: usize) -> Trajectory {
        let l = values.len() / width;
        let d = Design::from_times((1..=l).map(|k| k as f64).collect()).unwrap();
        Trajectory::new(d, width, values.to_vec()).unwrap()
    }

    #[test]
    fn constant_series() {
        let s = summarize(&traj(&[4, 4, 4], 1), &SummaryScheme::mean_variance()).unwrap();
        assert_eq!(s.0, vec![4.0, 0.0]);
        let s = summarize(&traj(&[4, 4, 4], 1), &SummaryScheme::mean_logvar_max()).unwrap();
        assert_eq!(s.0, vec![4.0, 0.5f64.ln(), 4.0]);
    }

    #[test]
    fn hand_computed_mean_median_variance() {
        let s = summarize(&traj(&[0, 10, 20], 1), &SummaryScheme::mean_median_variance()).unwrap();
        assert_eq!(s.0, vec![10.0, 10.0, 100.0]);
    }

    #[test]
    fn even_length_median_is_midpoint() {
        let s = SummaryScheme::new(vec![Statistic::Median]).unwrap();
        assert_eq!(summarize(&traj(&[1, 9, 4, 2], 1), &s).unwrap().0, vec![3.0]);
    }

    #[test]
    fn species_major_ordering() {
        // (prey, predator) rows
        let t = traj(&[90, 35, 100, 30, 80, 40], 2);
        let s = summarize(&t, &SummaryScheme::mean_logvar_max()).unwrap().0;
        assert_eq!(s.len(), 6);
        assert_eq!(s[0], 90.0);
        assert_eq!(s[2], 100.0);
        assert_eq!(s[3], 35.0);
        assert_eq!(s[5], 40.0);
        assert!((s[1] - (100.0f64 + 0.5).ln()).abs() < 1e-12);
    }

    #[test]
    fn variance_needs_two_points() {
        assert!(summarize(&traj(&[3], 1), &SummaryScheme::mean_variance()).is_err());
        let m = SummaryScheme::new(vec![Statistic::Mean]).unwrap();
        assert!(summarize(&traj(&[3], 1), &m).is_ok());
    }

    #[test]
    fn labels_follow_vector_order() {
        let l = SummaryScheme::mean_variance().labels(&["I", "R"]);
        assert_eq!(l, vec!["I_mean", "I_variance", "R_mean", "R_variance"]);
    }
}
