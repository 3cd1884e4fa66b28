use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use sldesign::design::equally_spaced;
use sldesign::utility::describe;
use sldesign_cli::commands::{self, read_design};
use sldesign_cli::{preset, CliError, Resolved, RunConfig, PRESETS};

#[derive(Parser)]
#[command(name = "sldesign", version, about = "Bayesian optimal observation schedules for CTMC models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prior-predictive trajectories and quantile bands.
    Simulate(Common),
    /// Expected utility of one design.
    Evaluate(Common),
    /// Coordinate-exchange search for an optimal design.
    Optimize(Common),
    /// Posterior model probabilities and precisions on simulated data.
    Validate(Common),
    /// Correlations between parameters and summary statistics.
    Diagnose(Common),
    /// Print a bundled configuration.
    Preset {
        /// One of death_si, fmd, lv, conjugate, quadratic.
        name: String,
    },
}

#[derive(Args)]
struct Common {
    /// Config file, or `preset:NAME` for a bundled one.
    #[arg(long)]
    config: String,
    /// Design CSV with a `time` column; repeat for validate.
    #[arg(long)]
    design: Vec<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Independent re-evaluations for evaluate.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    threads: Option<usize>,
}

fn load(common: &Common) -> Result<Resolved, CliError> {
    let mut raw = match common.config.strip_prefix("preset:") {
        Some(name) => preset(name).ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?,
        None => RunConfig::load(common.config.as_ref())?,
    };
    if let Some(seed) = common.seed {
        raw.seed = seed;
    }
    if let Some(out) = &common.out {
        raw.out = out.clone();
    }
    raw.resolve()
}

fn single_design(common: &Common, cfg: &Resolved) -> Result<sldesign::kinetics::Design, CliError> {
    match common.design.as_slice() {
        [] => Ok(cfg.initial.clone().unwrap_or_else(|| equally_spaced(&cfg.space))),
        [path] => read_design(path, cfg),
        _ => Err(CliError::Config("this command takes one --design".into())),
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::Preset { name } => {
            let text = PRESETS
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, t)| *t)
                .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`")))?;
            print!("{text}");
            return Ok(());
        }
        Command::Simulate(c)
        | Command::Evaluate(c)
        | Command::Optimize(c)
        | Command::Validate(c)
        | Command::Diagnose(c) => c,
    };
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let cfg = load(common)?;
    let out = cfg.out.clone();
    match &cli.command {
        Command::Simulate(_) => {
            let design = single_design(common, &cfg)?;
            for p in commands::cmd_simulate(&cfg, &design, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Evaluate(_) => {
            let design = single_design(common, &cfg)?;
            let report = commands::cmd_evaluate(&cfg, &design, common.repeats, &out)?;
            let e = &report.estimate;
            println!("{} = {:.4} (se {:.4}, q {}, substituted {})", e.kind, e.mean, e.se, e.q, e.substituted);
            if let Some(r) = &report.repeat {
                println!("over {} repeats: mean {:.4}, sd {:.4}", r.repeats, r.mean, r.sd);
            }
            if let Some(c) = report.closed_form {
                println!("closed form {c:.4}");
            }
            println!("wrote {}", out.join("estimate.json").display());
        }
        Command::Optimize(_) => {
            let result = commands::cmd_optimize(&cfg, &out)?;
            let times: Vec<String> = result.design.times().iter().map(|t| format!("{t:.3}")).collect();
            println!("design [{}]", times.join(", "));
            if let Some(v) = result.value {
                println!("test value {v:.4} after {} evaluations", result.evaluations);
            }
            if cfg.quadratic_target.is_none() {
                let e = commands::estimate(&cfg, &result.design, cfg.estimator.q, cfg.seed).map_err(CliError::from)?;
                println!("{}", describe(&e));
            }
            println!("wrote {} and {}", out.join("design.csv").display(), out.join("trace.json").display());
        }
        Command::Validate(_) => {
            let designs = if common.design.is_empty() {
                vec![single_design(common, &cfg)?]
            } else {
                common
                    .design
                    .iter()
                    .map(|p| read_design(p, &cfg))
                    .collect::<Result<Vec<_>, _>>()?
            };
            for s in commands::cmd_validate(&cfg, &designs, &out)? {
                println!(
                    "design {} model {}: median p(true) {:.3}, median logdet precision {:.3}, failures {}/{}",
                    s.design, s.model, s.median_true_model_prob, s.median_log_det_precision, s.prob_failures, s.precision_failures
                );
            }
        }
        Command::Diagnose(_) => {
            let design = single_design(common, &cfg)?;
            for p in commands::cmd_diagnose(&cfg, &design, &out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Preset { .. } => unreachable!(),
    }
    std::fs::write(out.join("config.toml"), raw_config(common, &cfg)?).context("writing config.toml")?;
    Ok(())
}

/// The effective configuration, with command-line overrides applied.
fn raw_config(common: &Common, cfg: &Resolved) -> Result<String, CliError> {
    let mut raw = match common.config.strip_prefix("preset:") {
        Some(name) => preset(name).expect("checked on load"),
        None => RunConfig::load(common.config.as_ref())?,
    };
    raw.seed = cfg.seed;
    raw.out = cfg.out.clone();
    Ok(raw.to_toml())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code)
        }
    }
}
