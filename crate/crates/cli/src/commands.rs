//! The five subcommands. Each writes plot-ready CSV or JSON into the output
//! directory and returns the paths it wrote.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sldesign::design::{ace_optimize, equally_spaced, DesignObjective, OptResult, QuadraticObjective};
use sldesign::kinetics::Design;
use sldesign::rng::derive_seed;
use sldesign::sampling::{prior_predictive, quantile_bands, Method};
use sldesign::stats::{median, sd};
use sldesign::summaries::informativeness_report;
use sldesign::utility::{aggregate, evaluate_draw, plan_draws, EstimatorOptions, UtilityEstimate, UtilityProblem};
use sldesign::validation::{validate_replicate, ValidationRecord};

use crate::config::{ModelEntry, Resolved};
use crate::error::CliError;
use crate::model::AnyModel;

type Result<T> = std::result::Result<T, CliError>;

fn model_label(cfg: &Resolved, m: usize) -> String {
    match &cfg.models[m] {
        ModelEntry::Ctmc(spec) => format!("{m}_{}", spec.kind().id()),
        ModelEntry::Surrogate { .. } => format!("{m}_linear_gaussian"),
    }
}

fn ensure_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

/// Reads a design CSV with a `time` column and checks it against the space.
pub fn read_design(path: &Path, cfg: &Resolved) -> Result<Design> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("cannot read design {}: {e}", path.display())))?;
    let headers = reader.headers()?.clone();
    let col = headers
        .iter()
        .position(|h| h.trim() == "time")
        .ok_or_else(|| CliError::Config(format!("{}: missing `time` column", path.display())))?;
    let mut times = Vec::new();
    for row in reader.records() {
        let row = row?;
        let v: f64 = row[col]
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{}: `{}` is not a number", path.display(), &row[col])))?;
        times.push(v);
    }
    let space = &cfg.space;
    if times.len() != space.points {
        return Err(CliError::Config(format!(
            "{}: has {} times, the design space needs {}",
            path.display(),
            times.len(),
            space.points
        )));
    }
    Design::new(times, space.window, space.min_gap)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_design(path: &Path, design: &Design) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time"])?;
    for t in design.times() {
        w.write_record([t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn problem<'a>(cfg: &'a Resolved, models: &'a [AnyModel]) -> UtilityProblem<'a, AnyModel> {
    UtilityProblem {
        models,
        priors: &cfg.priors,
        model_prior: cfg.model_prior.clone(),
        kind: cfg.kind,
        settings: cfg.settings,
        laplace: cfg.laplace,
    }
}

/// Expected utility with draws evaluated in parallel. Matches the serial
/// estimator draw for draw.
pub fn estimate(cfg: &Resolved, design: &Design, q: usize, seed: u64) -> sldesign::Result<UtilityEstimate> {
    let models = AnyModel::build_all(&cfg.models, design, &cfg.scheme, cfg.simulator)?;
    let problem = problem(cfg, &models);
    problem.validate()?;
    let opts = EstimatorOptions { q, ..cfg.estimator };
    let draws = plan_draws(&cfg.priors, &opts, seed)?;
    let outcomes = draws
        .par_iter()
        .map(|d| evaluate_draw(&problem, d))
        .collect::<sldesign::Result<Vec<_>>>()?;
    aggregate(cfg.kind, &cfg.model_prior, &opts, &draws, &outcomes)
}

struct ParallelObjective<'a>(&'a Resolved);

impl DesignObjective for ParallelObjective<'_> {
    fn utility(&self, design: &Design, q: usize, seed: u64) -> sldesign::Result<f64> {
        Ok(estimate(self.0, design, q, seed)?.mean)
    }
}

pub fn cmd_simulate(cfg: &Resolved, design: &Design, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_out(out)?;
    let mut written = Vec::new();
    let count = cfg.simulate.draws;
    for (m, entry) in cfg.models.iter().enumerate() {
        let ModelEntry::Ctmc(spec) = entry else {
            return Err(CliError::Config(format!("models[{m}]: simulate needs a CTMC model")));
        };
        let draws = prior_predictive(
            spec,
            &cfg.priors[m],
            design,
            count,
            Method::Mc,
            cfg.simulator,
            derive_seed(cfg.seed, m as u64),
        )?;
        let species = spec.observed_names();
        let label = model_label(cfg, m);

        let path = out.join(format!("trajectories_{label}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["draw".to_string(), "time".to_string()];
        header.extend(species.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for (j, d) in draws.iter().enumerate() {
            for (k, t) in d.traj.times().iter().enumerate() {
                let mut row = vec![j.to_string(), t.to_string()];
                row.extend(d.traj.row(k).iter().map(|c| c.to_string()));
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        written.push(path);

        if count > 1 {
            let (lo, hi) = cfg.simulate.quantiles;
            let bands = quantile_bands(&draws, lo, hi);
            let path = out.join(format!("bands_{label}.csv"));
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["time", "species", "mean", "lower", "upper"])?;
            for (s, name) in species.iter().enumerate() {
                for (k, t) in bands.times.iter().enumerate() {
                    w.write_record([
                        t.to_string(),
                        name.to_string(),
                        bands.mean[s][k].to_string(),
                        bands.lower[s][k].to_string(),
                        bands.upper[s][k].to_string(),
                    ])?;
                }
            }
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelBatchReport {
    pub mean: f64,
    pub se: f64,
    pub substituted: usize,
    pub sigp: f64,
    pub sigm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport {
    pub kind: String,
    pub mean: f64,
    pub se: f64,
    pub q: usize,
    pub substituted: usize,
    pub method: String,
    pub blocks: usize,
    pub sigp: f64,
    pub sigm: f64,
    pub per_model: Vec<ModelBatchReport>,
}

impl From<&UtilityEstimate> for EstimateReport {
    fn from(e: &UtilityEstimate) -> Self {
        Self {
            kind: e.kind.id().to_string(),
            mean: e.mean,
            se: e.se,
            q: e.q,
            substituted: e.substituted,
            method: match e.method {
                Method::Mc => "mc",
                Method::Rqmc => "rqmc",
            }
            .to_string(),
            blocks: e.blocks,
            sigp: e.sigp,
            sigm: e.sigm,
            per_model: e
                .per_model
                .iter()
                .map(|b| ModelBatchReport {
                    mean: b.mean,
                    se: b.se,
                    substituted: b.substituted,
                    sigp: b.sigp,
                    sigm: b.sigm,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RepeatSummary {
    pub repeats: usize,
    pub mean: f64,
    /// Sample standard deviation of the per-run means.
    pub sd: f64,
    pub runs: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvaluateReport {
    pub design: Vec<f64>,
    pub seed: u64,
    pub n: usize,
    pub n_loc: usize,
    pub estimate: EstimateReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeat: Option<RepeatSummary>,
    /// Exact expected information gain, for a single linear-Gaussian
    /// surrogate under SIGP.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<f64>,
}

fn closed_form(cfg: &Resolved, design: &Design) -> Result<Option<f64>> {
    if cfg.models.len() != 1 || cfg.kind != sldesign::utility::UtilityKind::Sigp {
        return Ok(None);
    }
    match AnyModel::build(&cfg.models[0], design, &cfg.scheme, cfg.simulator)? {
        AnyModel::Surrogate(lg) => Ok(Some(lg.expected_information_gain(&cfg.priors[0])?)),
        AnyModel::Ctmc(_) => Ok(None),
    }
}

/// Runs `repeats` independent estimates. The first run uses the master seed
/// itself, so a single repeat reproduces a plain evaluation.
pub fn cmd_evaluate(cfg: &Resolved, design: &Design, repeats: usize, out: &Path) -> Result<EvaluateReport> {
    ensure_out(out)?;
    if repeats == 0 {
        return Err(CliError::Config("--repeats must be at least 1".into()));
    }
    let seeds: Vec<u64> = (0..repeats)
        .map(|r| if r == 0 { cfg.seed } else { derive_seed(cfg.seed, r as u64) })
        .collect();
    let runs = seeds
        .iter()
        .map(|&s| estimate(cfg, design, cfg.estimator.q, s))
        .collect::<sldesign::Result<Vec<_>>>()?;
    let repeat = if repeats > 1 {
        let path = out.join("repeats.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["repeat", "seed", "mean", "se", "substituted"])?;
        for (r, (e, s)) in runs.iter().zip(&seeds).enumerate() {
            w.write_record([r.to_string(), s.to_string(), e.mean.to_string(), e.se.to_string(), e.substituted.to_string()])?;
        }
        w.flush()?;
        let means: Vec<f64> = runs.iter().map(|e| e.mean).collect();
        Some(RepeatSummary {
            repeats,
            mean: sldesign::stats::mean(&means),
            sd: sd(&means),
            runs: means,
        })
    } else {
        None
    };
    let report = EvaluateReport {
        design: design.times().to_vec(),
        seed: cfg.seed,
        n: cfg.settings.n,
        n_loc: cfg.settings.n_loc,
        estimate: EstimateReport::from(&runs[0]),
        repeat,
        closed_form: closed_form(cfg, design)?,
    };
    fs::write(out.join("estimate.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRow {
    pub sweep: usize,
    pub coordinate: usize,
    pub proposal: f64,
    pub current_value: f64,
    pub proposed_value: f64,
    pub accepted: bool,
    pub design: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizeReport {
    pub initial: Vec<f64>,
    pub design: Vec<f64>,
    pub value: Option<f64>,
    pub evaluations: usize,
    pub draws: usize,
    pub trace: Vec<TraceRow>,
}

pub fn cmd_optimize(cfg: &Resolved, out: &Path) -> Result<OptResult> {
    ensure_out(out)?;
    let d0 = cfg.initial.clone().unwrap_or_else(|| equally_spaced(&cfg.space));
    let result = match &cfg.quadratic_target {
        Some(target) => ace_optimize(
            &QuadraticObjective { target: target.clone() },
            &cfg.space,
            &d0,
            &cfg.ace,
            cfg.seed,
        )?,
        None => ace_optimize(&ParallelObjective(cfg), &cfg.space, &d0, &cfg.ace, cfg.seed)?,
    };
    write_design(&out.join("design.csv"), &result.design)?;
    let report = OptimizeReport {
        initial: d0.times().to_vec(),
        design: result.design.times().to_vec(),
        value: result.value,
        evaluations: result.evaluations,
        draws: result.draws,
        trace: result
            .trace
            .iter()
            .map(|t| TraceRow {
                sweep: t.sweep,
                coordinate: t.coordinate,
                proposal: t.proposal,
                current_value: t.current_value,
                proposed_value: t.proposed_value,
                accepted: t.accepted,
                design: t.design.clone(),
            })
            .collect(),
    };
    fs::write(out.join("trace.json"), serde_json::to_string_pretty(&report)?)?;
    Ok(result)
}

/// One row of a validation report; `error` holds per-dataset failures.
#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub record: Option<ValidationRecord>,
    pub model: usize,
    pub replicate: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub design: usize,
    pub model: usize,
    pub replicates: usize,
    pub median_true_model_prob: f64,
    pub median_log_det_precision: f64,
    pub prob_failures: usize,
    pub precision_failures: usize,
}

/// Validation study for each design. Replicate seeds do not depend on the
/// design, so designs are compared on common simulated parameters.
pub fn cmd_validate(cfg: &Resolved, designs: &[Design], out: &Path) -> Result<Vec<ValidationSummary>> {
    ensure_out(out)?;
    if designs.is_empty() {
        return Err(CliError::Config("validate needs at least one --design".into()));
    }
    let k = cfg.models.len();
    let mut summaries = Vec::new();
    for (i, design) in designs.iter().enumerate() {
        let models = AnyModel::build_all(&cfg.models, design, &cfg.scheme, cfg.simulator)?;
        let problem = problem(cfg, &models);
        problem.validate()?;
        let jobs: Vec<(usize, usize)> = (0..k).flat_map(|m| (0..cfg.replicates).map(move |r| (m, r))).collect();
        let rows: Vec<ValidationRow> = jobs
            .par_iter()
            .map(|&(m, r)| match validate_replicate(&problem, &cfg.lis, m, r, cfg.seed) {
                Ok(rec) => ValidationRow {
                    record: Some(rec),
                    model: m,
                    replicate: r,
                    error: None,
                },
                Err(e) => ValidationRow {
                    record: None,
                    model: m,
                    replicate: r,
                    error: Some(e.to_string()),
                },
            })
            .collect();

        let path = out.join(format!("validation_{i}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header: Vec<String> = ["model", "replicate", "true_model_prob", "log_det_precision", "ess"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..k).map(|j| format!("prob_{}", model_label(cfg, j))));
        header.extend(["log_theta".to_string(), "error".to_string()]);
        w.write_record(&header)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for row in &rows {
            let rec = row.record.as_ref();
            let mut fields = vec![
                row.model.to_string(),
                row.replicate.to_string(),
                opt(rec.and_then(|r| r.true_model_prob())),
                opt(rec.and_then(|r| r.log_det_precision)),
                opt(rec.and_then(|r| r.ess)),
            ];
            let probs = rec.and_then(|r| r.probs.clone());
            fields.extend((0..k).map(|j| opt(probs.as_ref().map(|p| p[j]))));
            fields.push(
                rec.map(|r| r.log_theta.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default(),
            );
            fields.push(row.error.clone().unwrap_or_default());
            w.write_record(&fields)?;
        }
        w.flush()?;

        for m in 0..k {
            let recs: Vec<&ValidationRecord> = rows
                .iter()
                .filter(|r| r.model == m)
                .filter_map(|r| r.record.as_ref())
                .collect();
            let probs: Vec<f64> = recs.iter().filter_map(|r| r.true_model_prob()).collect();
            let prec: Vec<f64> = recs.iter().filter_map(|r| r.log_det_precision).collect();
            summaries.push(ValidationSummary {
                design: i,
                model: m,
                replicates: cfg.replicates,
                median_true_model_prob: if probs.is_empty() { f64::NAN } else { median(&probs) },
                median_log_det_precision: if prec.is_empty() { f64::NAN } else { median(&prec) },
                prob_failures: cfg.replicates - probs.len(),
                precision_failures: cfg.replicates - prec.len(),
            });
        }
    }
    let mut w = csv::Writer::from_path(out.join("validation_summary.csv"))?;
    for s in &summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(summaries)
}

pub fn cmd_diagnose(cfg: &Resolved, design: &Design, out: &Path) -> Result<Vec<PathBuf>> {
    ensure_out(out)?;
    let mut written = Vec::new();
    for (m, entry) in cfg.models.iter().enumerate() {
        let ModelEntry::Ctmc(spec) = entry else {
            return Err(CliError::Config(format!("models[{m}]: diagnose needs a CTMC model")));
        };
        let report = informativeness_report(
            spec,
            &cfg.priors[m],
            design,
            cfg.diagnose_draws,
            &cfg.scheme,
            cfg.simulator,
            derive_seed(cfg.seed, m as u64),
        )?;
        let label = model_label(cfg, m);
        let path = out.join(format!("informativeness_{label}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["parameter", "statistic", "pearson", "spearman"])?;
        for r in &report.rows {
            w.write_record([
                r.parameter.to_string(),
                r.statistic.clone(),
                r.pearson.to_string(),
                r.spearman.to_string(),
            ])?;
        }
        w.flush()?;
        written.push(path);

        let path = out.join(format!("scatter_{label}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let mut header = vec!["draw".to_string()];
        header.extend(report.parameter_names.iter().map(|p| format!("log_{p}")));
        header.extend(report.statistic_names.iter().cloned());
        w.write_record(&header)?;
        for (j, (p, s)) in report.log_params.iter().zip(&report.summaries).enumerate() {
            let mut row = vec![j.to_string()];
            row.extend(p.iter().chain(s).map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
