//! Run configuration: a TOML file with one section per pipeline stage.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sldesign::design::{AceOptions, DesignSpace};
use sldesign::kinetics::{Design, ModelKind, ModelSpec, Simulator};
use sldesign::laplace::{LaplaceOptions, LisOptions, NelderMeadOptions};
use sldesign::sampling::{Method, PriorSpec};
use sldesign::summaries::{Statistic, SummaryScheme};
use sldesign::synlik::{MomentSource, Perturbation, ScreeningThresholds, SynLikSettings};
use sldesign::utility::{EstimatorOptions, UtilityKind};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    pub models: Vec<ModelConfig>,
    /// Prior model probabilities; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_prior: Option<Vec<f64>>,
    pub design: DesignConfig,
    #[serde(default)]
    pub summaries: SummariesConfig,
    #[serde(default)]
    pub simulator: SimulatorConfig,
    #[serde(default)]
    pub utility: UtilityConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub laplace: LaplaceConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub diagnose: DiagnoseConfig,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// A CTMC model (`death`, `si`, `sir`, `seir`, `lv`) or a linear-Gaussian
/// surrogate (`linear_gaussian`) whose coefficients are Gaussian bumps in
/// time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_sd: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub window: (f64, f64),
    pub points: usize,
    pub min_gap: f64,
    /// Starting design for the optimizer; equally spaced when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummariesConfig {
    pub statistics: Vec<String>,
}

impl Default for SummariesConfig {
    fn default() -> Self {
        Self {
            statistics: vec!["mean".into(), "variance".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    /// `exact` or `tau_leap`.
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            method: "exact".into(),
            tau: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UtilityConfig {
    pub kind: String,
}

impl Default for UtilityConfig {
    fn default() -> Self {
        Self { kind: "sigp".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub q: usize,
    /// `mc` or `rqmc`.
    pub method: String,
    pub replicates: usize,
    pub n: usize,
    pub n_loc: usize,
    /// `prior_sd` or a fixed log-scale sd such as `"0.1"`.
    pub perturbation: String,
    /// `simulated` or `analytic` (surrogates only).
    pub moments: String,
    pub single_threshold: f64,
    pub multi_threshold: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        let s = SynLikSettings::default();
        Self {
            q: 1000,
            method: "rqmc".into(),
            replicates: 16,
            n: s.n,
            n_loc: s.n_loc,
            perturbation: "prior_sd".into(),
            moments: "simulated".into(),
            single_threshold: s.thresholds.single,
            multi_threshold: s.thresholds.multi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplaceConfig {
    pub max_iter: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub restart: bool,
}

impl Default for LaplaceConfig {
    fn default() -> Self {
        let o = LaplaceOptions::default();
        Self {
            max_iter: o.nelder_mead.max_iter,
            x_tol: o.nelder_mead.x_tol,
            f_tol: o.nelder_mead.f_tol,
            restart: o.restart,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub q_emulator: usize,
    pub q_test: usize,
    pub candidates: usize,
    pub sweeps: usize,
    pub grid: usize,
    /// Optimise `-(|d - target|²)` instead of an expected utility.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadratic_target: Option<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let a = AceOptions::default();
        Self {
            q_emulator: a.q_emulator,
            q_test: a.q_test,
            candidates: a.candidates,
            sweeps: a.sweeps,
            grid: a.grid,
            quadratic_target: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationConfig {
    pub replicates: usize,
    pub n_is: usize,
    pub inflation: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        let l = LisOptions::default();
        Self {
            replicates: 1000,
            n_is: l.n_is,
            inflation: l.inflation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub draws: usize,
    pub quantiles: (f64, f64),
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            draws: 1000,
            quantiles: (0.1, 0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseConfig {
    pub draws: usize,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        Self { draws: 1000 }
    }
}

/// A model resolved against the registry.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelEntry {
    Ctmc(ModelSpec),
    Surrogate {
        centers: Vec<f64>,
        width: f64,
        noise_sd: f64,
    },
}

/// A validated configuration with every setting in engine types.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub seed: u64,
    pub out: PathBuf,
    pub models: Vec<ModelEntry>,
    pub priors: Vec<PriorSpec>,
    pub model_prior: Vec<f64>,
    pub space: DesignSpace,
    pub initial: Option<Design>,
    pub scheme: SummaryScheme,
    pub simulator: Simulator,
    pub kind: UtilityKind,
    pub estimator: EstimatorOptions,
    pub settings: SynLikSettings,
    pub laplace: LaplaceOptions,
    pub ace: AceOptions,
    pub quadratic_target: Option<Vec<f64>>,
    pub lis: LisOptions,
    pub replicates: usize,
    pub simulate: SimulateConfig,
    pub diagnose_draws: usize,
}

fn bad(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {reason}"))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, CliError> {
        if self.models.is_empty() {
            return Err(bad("models", "at least one model is required"));
        }
        let mut models = Vec::new();
        let mut priors = Vec::new();
        for (i, m) in self.models.iter().enumerate() {
            let (entry, prior) = resolve_model(i, m)?;
            models.push(entry);
            priors.push(prior);
        }
        let k = models.len();
        let model_prior = match &self.model_prior {
            Some(p) if p.len() != k => return Err(bad("model_prior", format!("needs {k} entries"))),
            Some(p) if p.iter().any(|v| !(*v > 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9 => {
                return Err(bad("model_prior", "entries must be positive and sum to 1"))
            }
            Some(p) => p.clone(),
            None => vec![1.0 / k as f64; k],
        };

        let d = &self.design;
        let space =
            DesignSpace::new(d.window, d.points, d.min_gap).map_err(|e| bad("design", e))?;
        let initial = match &d.initial {
            Some(t) => {
                let design = Design::new(t.clone(), d.window, d.min_gap).map_err(|e| bad("design.initial", e))?;
                if design.len() != d.points {
                    return Err(bad("design.initial", format!("needs {} times", d.points)));
                }
                Some(design)
            }
            None => None,
        };

        let stats = self
            .summaries
            .statistics
            .iter()
            .map(|s| Statistic::from_id(s).ok_or_else(|| bad("summaries.statistics", format!("unknown statistic `{s}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let scheme = SummaryScheme::new(stats).map_err(|e| bad("summaries.statistics", e))?;
        if scheme.min_len() > d.points {
            return Err(bad("summaries.statistics", "spread statistics need at least two design points"));
        }

        let simulator = match self.simulator.method.as_str() {
            "exact" => Simulator::Exact,
            "tau_leap" => Simulator::TauLeap {
                tau: self.simulator.tau.ok_or_else(|| bad("simulator.tau", "required for tau_leap"))?,
            },
            other => return Err(bad("simulator.method", format!("unknown method `{other}`"))),
        };
        if let Simulator::TauLeap { tau } = simulator {
            if !(tau > 0.0) || (d.min_gap > 0.0 && tau > d.min_gap) {
                return Err(bad("simulator.tau", "must be positive and at most design.min_gap"));
            }
        }

        let kind = UtilityKind::from_id(&self.utility.kind)
            .ok_or_else(|| bad("utility.kind", format!("unknown utility `{}`", self.utility.kind)))?;

        let e = &self.estimator;
        let method = match e.method.as_str() {
            "mc" => Method::Mc,
            "rqmc" => Method::Rqmc,
            other => return Err(bad("estimator.method", format!("unknown method `{other}`"))),
        };
        if e.q == 0 {
            return Err(bad("estimator.q", "must be at least 1"));
        }
        if e.replicates == 0 {
            return Err(bad("estimator.replicates", "must be at least 1"));
        }
        let perturb = match e.perturbation.as_str() {
            "prior_sd" => Perturbation::PriorSd,
            s => match s.parse::<f64>() {
                Ok(v) if v > 0.0 && v.is_finite() => Perturbation::Fixed(v),
                _ => return Err(bad("estimator.perturbation", "must be `prior_sd` or a positive number")),
            },
        };
        let moments = match e.moments.as_str() {
            "simulated" => MomentSource::Simulated,
            "analytic" => MomentSource::Analytic,
            other => return Err(bad("estimator.moments", format!("unknown source `{other}`"))),
        };
        if moments == MomentSource::Analytic && models.iter().any(|m| matches!(m, ModelEntry::Ctmc(_))) {
            return Err(bad("estimator.moments", "analytic moments need surrogate models"));
        }
        for (name, v) in [("estimator.single_threshold", e.single_threshold), ("estimator.multi_threshold", e.multi_threshold)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(bad(name, "must lie in [0, 1]"));
            }
        }
        let settings = SynLikSettings {
            n: e.n,
            n_loc: e.n_loc,
            perturb,
            moments,
            thresholds: ScreeningThresholds {
                single: e.single_threshold,
                multi: e.multi_threshold,
            },
        };

        let l = &self.laplace;
        if l.max_iter == 0 || !(l.x_tol > 0.0) || !(l.f_tol > 0.0) {
            return Err(bad("laplace", "max_iter and tolerances must be positive"));
        }
        let laplace = LaplaceOptions {
            nelder_mead: NelderMeadOptions {
                max_iter: l.max_iter,
                x_tol: l.x_tol,
                f_tol: l.f_tol,
            },
            restart: l.restart,
        };

        let o = &self.optimizer;
        if o.q_emulator == 0 || o.q_test == 0 || o.candidates < 5 || o.grid < 2 {
            return Err(bad("optimizer", "needs q_emulator, q_test >= 1, candidates >= 5 and grid >= 2"));
        }
        if let Some(t) = &o.quadratic_target {
            if t.len() != d.points {
                return Err(bad("optimizer.quadratic_target", format!("needs {} entries", d.points)));
            }
        }

        let v = &self.validation;
        if v.replicates == 0 || v.n_is < 100 || !(v.inflation >= 1.0) {
            return Err(bad("validation", "needs replicates >= 1, n_is >= 100 and inflation >= 1"));
        }
        let s = &self.simulate;
        if s.draws == 0 || !(0.0 <= s.quantiles.0 && s.quantiles.0 < s.quantiles.1 && s.quantiles.1 <= 1.0) {
            return Err(bad("simulate", "needs draws >= 1 and 0 <= lo < hi <= 1"));
        }
        if self.diagnose.draws < 100 {
            return Err(bad("diagnose.draws", "must be at least 100"));
        }

        Ok(Resolved {
            seed: self.seed,
            out: self.out.clone(),
            models,
            priors,
            model_prior,
            space,
            initial,
            scheme,
            simulator,
            kind,
            estimator: EstimatorOptions {
                q: e.q,
                method,
                replicates: e.replicates,
            },
            settings,
            laplace,
            ace: AceOptions {
                q_emulator: o.q_emulator,
                q_test: o.q_test,
                candidates: o.candidates,
                sweeps: o.sweeps,
                grid: o.grid,
            },
            quadratic_target: o.quadratic_target.clone(),
            lis: LisOptions {
                n_is: v.n_is,
                inflation: v.inflation,
            },
            replicates: v.replicates,
            simulate: s.clone(),
            diagnose_draws: self.diagnose.draws,
        })
    }
}

fn resolve_model(i: usize, m: &ModelConfig) -> Result<(ModelEntry, PriorSpec), CliError> {
    let field = |name: &str| format!("models[{i}].{name}");
    let prior = |dim: usize, default: Option<PriorSpec>| -> Result<PriorSpec, CliError> {
        match (&m.prior_mean, &m.prior_sd, default) {
            (Some(mu), Some(sd), _) => {
                if mu.len() != dim {
                    return Err(bad(&field("prior_mean"), format!("needs {dim} entries")));
                }
                PriorSpec::new(mu.clone(), sd.clone()).map_err(|e| bad(&field("prior_sd"), e))
            }
            (None, None, Some(p)) => Ok(p),
            (None, _, _) => Err(bad(&field("prior_mean"), "missing")),
            (_, None, _) => Err(bad(&field("prior_sd"), "missing")),
        }
    };
    if m.kind == "linear_gaussian" {
        let centers = m.centers.clone().ok_or_else(|| bad(&field("centers"), "missing"))?;
        if centers.is_empty() {
            return Err(bad(&field("centers"), "needs at least one entry"));
        }
        let width = m.width.ok_or_else(|| bad(&field("width"), "missing"))?;
        let noise_sd = m.noise_sd.ok_or_else(|| bad(&field("noise_sd"), "missing"))?;
        if !(width > 0.0) || !(noise_sd > 0.0) {
            return Err(bad(&field("width"), "width and noise_sd must be positive"));
        }
        let p = prior(centers.len(), None)?;
        return Ok((ModelEntry::Surrogate { centers, width, noise_sd }, p));
    }
    let kind = ModelKind::from_id(&m.kind).ok_or_else(|| {
        bad(&field("kind"), format!("unknown model `{}` (expected death, si, sir, seir, lv or linear_gaussian)", m.kind))
    })?;
    let preset = ModelSpec::preset(kind);
    let spec = match (m.population, &m.initial) {
        (None, None) => preset,
        (pop, init) => ModelSpec::new(
            kind,
            pop.unwrap_or(preset.population()),
            init.as_deref().unwrap_or(preset.initial()),
        )
        .map_err(|e| bad(&field("initial"), e))?,
    };
    let p = prior(kind.param_dim(), Some(PriorSpec::preset(kind)))?;
    Ok((ModelEntry::Ctmc(spec), p))
}

/// Bundled configurations: `death_si`, `fmd`, `lv`, `conjugate`, `quadratic`.
pub const PRESETS: [(&str, &str); 5] = [
    ("death_si", include_str!("../presets/death_si.toml")),
    ("fmd", include_str!("../presets/fmd.toml")),
    ("lv", include_str!("../presets/lv.toml")),
    ("conjugate", include_str!("../presets/conjugate.toml")),
    ("quadratic", include_str!("../presets/quadratic.toml")),
];

pub fn preset(name: &str) -> Option<RunConfig> {
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| RunConfig::parse(text).expect("bundled preset parses"))
}
