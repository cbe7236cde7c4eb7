use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lamec::harness::{self, EvaluateConfig, GenerateConfig, SolverKind, SolverParams};
use lamec::instance::{Labeler, Scale};
use lamec::solve::ObjectiveMode;
use lamec::{Config, Error};
use serde_json::Value;

/// Dataset generation and solver benchmarking for low-altitude MEC offloading.
///
/// Log verbosity follows LAMEC_LOG (e.g. `LAMEC_LOG=debug`).
#[derive(Parser)]
#[command(name = "lamec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample, label and write a dataset.
    Generate(GenerateArgs),
    /// Run a solver over a dataset and write a report.
    Evaluate(EvaluateArgs),
    /// Print schema and summary statistics of a dataset.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct SolverArgs {
    /// Cap on the oracle's assignment space.
    #[arg(long, default_value_t = lamec::solve::DEFAULT_ENUMERATION_CAP)]
    cap: f64,
    #[arg(long, default_value_t = lamec::solve::DEFAULT_MAX_ROUNDS)]
    max_rounds: usize,
    /// Random-execution candidates.
    #[arg(long, default_value_t = lamec::solve::DEFAULT_CANDIDATES)]
    candidates: usize,
    #[arg(long, default_value_t = lamec::solve::DEFAULT_Y_QUANTA)]
    y_quanta: usize,
    #[arg(long, default_value_t = lamec::solve::DEFAULT_WEIGHT_GRID)]
    weight_grid: usize,
}

impl SolverArgs {
    fn params(&self) -> SolverParams {
        SolverParams {
            enumeration_cap: self.cap,
            max_rounds: self.max_rounds,
            candidates: self.candidates,
            y_quanta: self.y_quanta,
            weight_grid: self.weight_grid,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Scale tag such as gs2_gu4_au2.
    #[arg(long)]
    scale: Scale,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "oracle")]
    labeler: Labeler,
    #[arg(long)]
    out: PathBuf,
    /// Also store padded fixed-width edge slots.
    #[arg(long)]
    pad: bool,
    /// JSON file overriding the scenario parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    solver: SolverKind,
    /// Machine-readable report; the table goes to `<out>.txt`.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = harness::DEFAULT_THRESHOLD)]
    threshold: f64,
    #[arg(long, default_value = "per_user")]
    objective: ObjectiveMode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver_args: SolverArgs,
}

#[derive(Args)]
struct InspectArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

/// Default scenario with the fields present in the JSON file replaced.
fn scenario_override(path: &Path) -> lamec::Result<Config> {
    let bad = |e: &dyn std::fmt::Display| Error::Config(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| bad(&e))?;
    let patch: Value = serde_json::from_str(&text).map_err(|e| bad(&e))?;
    let mut merged = serde_json::to_value(Config::default()).map_err(|e| bad(&e))?;
    merge(&mut merged, patch, "").map_err(|e| bad(&e))?;
    serde_json::from_value(merged).map_err(|e| bad(&e))
}

/// Overlays `patch` on `base`; keys unknown to `base` are rejected.
fn merge(base: &mut Value, patch: Value, at: &str) -> std::result::Result<(), String> {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                let key = if at.is_empty() { k.clone() } else { format!("{at}.{k}") };
                let slot = b.get_mut(&k).ok_or_else(|| format!("unknown field {key:?}"))?;
                merge(slot, v, &key)?;
            }
            Ok(())
        }
        (b, p) => {
            *b = p;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> lamec::Result<()> {
    match cli.command {
        Command::Generate(a) => {
            let mut cfg = GenerateConfig::new(a.scale, a.count, a.seed, a.labeler);
            cfg.pad = a.pad;
            cfg.solver = a.solver.params();
            if let Some(path) = &a.config {
                cfg.scenario = scenario_override(path)?;
            }
            let meta = harness::run_generate(&cfg, &a.out)?;
            println!(
                "wrote {} {} records to {} ({} degraded labels)",
                meta.count,
                meta.scale,
                a.out.display(),
                meta.degraded_labels
            );
        }
        Command::Evaluate(a) => {
            let mut cfg = EvaluateConfig::new(a.dataset, a.solver, a.out);
            cfg.settings.threshold = a.threshold;
            cfg.settings.objective = a.objective;
            cfg.settings.seed = a.seed;
            cfg.settings.params = a.solver_args.params();
            let report = harness::run_evaluate(&cfg)?;
            print!("{}", report.to_table());
        }
        Command::Inspect(a) => {
            let stats = harness::inspect(&a.dataset)?;
            if a.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&stats).map_err(|e| Error::Config(e.to_string()))?
                );
            } else {
                print!("{stats}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LAMEC_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else if e.is_data_error() {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
