//! Command-line front end: dataset generation, training, evaluation, model
//! export, subroutine emission, and the two-law material-point benchmarks.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use flowlaw::bench::{run_path_benchmark, LoadKind, LoadPath};
use flowlaw::dataset::{test_set, training_grid, Dataset, RateSampling};
use flowlaw::export::{emit_subroutine, load_model, save_model, Provenance};
use flowlaw::johnson_cook::{JohnsonCookParams, ThermalElasticParams};
use flowlaw::metrics::{evaluate, evaluate_law};
use flowlaw::mlp::{Activation, MlpModel, NormalizationRanges};
use flowlaw::plasticity::HardeningLaw;
use flowlaw::train::{history_to_csv, train_adam, LrSchedule, TrainConfig};

#[derive(Parser)]
#[command(
    name = "flowlaw",
    about = "Train, evaluate, and export neural-network flow-law surrogates",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training grid or a random test set as CSV.
    GenData(GenDataArgs),
    /// Train a network on a dataset and save the model archive.
    Train(TrainArgs),
    /// Evaluate a model archive against a test set with oracle derivatives.
    Eval(EvalArgs),
    /// Load a model archive and re-save it (validates and normalizes).
    Export(ExportArgs),
    /// Emit a model as a flat Fortran subroutine.
    Emit(EmitArgs),
    /// Integrate two hardening laws along the same strain path and compare.
    BenchPath(BenchPathArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SetKind {
    /// The deterministic 2520-point training grid.
    Grid,
    /// Random points with oracle derivative columns.
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum RateSamplingArg {
    Log,
    Linear,
}

impl From<RateSamplingArg> for RateSampling {
    fn from(v: RateSamplingArg) -> Self {
        match v {
            RateSamplingArg::Log => RateSampling::LogUniform,
            RateSamplingArg::Linear => RateSampling::LinearUniform,
        }
    }
}

#[derive(Args)]
struct GenDataArgs {
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = SetKind::Grid)]
    set: SetKind,
    /// Number of rows for `--set test`.
    #[arg(long, default_value_t = 5000)]
    count: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Strain-rate sampling for `--set test`.
    #[arg(long, value_enum, default_value_t = RateSamplingArg::Log)]
    rate_sampling: RateSamplingArg,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset CSV (defaults to the built-in grid when omitted).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output model archive path.
    #[arg(long)]
    out: PathBuf,
    /// Hidden-layer widths, e.g. 3-15-7-1.
    #[arg(long, default_value = "3-15-7-1")]
    arch: String,
    #[arg(long, default_value = "sigmoid")]
    activation: String,
    #[arg(long, default_value_t = 10_000)]
    iterations: usize,
    /// Base learning rate (constant schedule).
    #[arg(long, default_value_t = 1e-3)]
    learning_rate: f64,
    /// Use a one-cycle schedule with this peak instead of the constant rate.
    #[arg(long)]
    one_cycle_peak: Option<f64>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    report_stride: usize,
    /// Optional loss-history CSV path.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Model archive, or the literal `jc` for the analytic law.
    #[arg(long)]
    model: String,
    /// Test CSV with derivative columns.
    #[arg(long)]
    test: PathBuf,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EmitArgs {
    #[arg(long)]
    model: PathBuf,
    /// Output Fortran source path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchPathArgs {
    /// uniaxial_tension or uniaxial_compression.
    #[arg(long, default_value = "uniaxial_tension")]
    kind: String,
    /// First law: `jc` or a model archive path.
    #[arg(long, default_value = "jc")]
    law_a: String,
    /// Second law: `jc` or a model archive path.
    #[arg(long, default_value = "jc")]
    law_b: String,
    /// Extended path (extrapolates beyond the training range).
    #[arg(long, default_value_t = false)]
    extended: bool,
    /// Per-step CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Law {
    Analytic(JohnsonCookParams),
    Model(Box<MlpModel>),
}

impl Law {
    fn parse(spec: &str) -> Result<Law, flowlaw::Error> {
        if spec == "jc" {
            Ok(Law::Analytic(JohnsonCookParams::steel_42crmo4()))
        } else {
            Ok(Law::Model(Box::new(load_model(spec)?.model)))
        }
    }

    fn as_hardening(&self) -> &dyn HardeningLaw {
        match self {
            Law::Analytic(p) => p,
            Law::Model(m) => m.as_ref(),
        }
    }
}

fn parse_arch(spec: &str) -> Result<Vec<usize>, String> {
    let widths: Result<Vec<usize>, _> = spec.split('-').map(str::parse::<usize>).collect();
    widths.map_err(|_| format!("bad architecture `{spec}`; expected e.g. 3-15-7-1"))
}

/// FLOWLAW_SEED overrides any configured seed.
fn effective_seed(cli_seed: u64) -> u64 {
    match std::env::var("FLOWLAW_SEED") {
        Ok(v) => v.parse().unwrap_or(cli_seed),
        Err(_) => cli_seed,
    }
}

fn run(cli: Cli) -> Result<(), String> {
    let jc = JohnsonCookParams::steel_42crmo4();
    let mat = ThermalElasticParams::steel_42crmo4();
    match cli.command {
        Command::GenData(args) => {
            let data = match args.set {
                SetKind::Grid => training_grid(&jc),
                SetKind::Test => test_set(
                    &jc,
                    args.count,
                    effective_seed(args.seed),
                    args.rate_sampling.into(),
                ),
            };
            data.write_csv(&args.out).map_err(|e| e.to_string())?;
            println!("wrote {} rows to {}", data.len(), args.out.display());
        }
        Command::Train(args) => {
            let data = match &args.data {
                Some(path) => Dataset::read_csv(path).map_err(|e| e.to_string())?,
                None => training_grid(&jc),
            };
            let widths = parse_arch(&args.arch)?;
            let activation = Activation::parse(&args.activation).map_err(|e| e.to_string())?;
            let ranges = NormalizationRanges::from_dataset(&data, jc.eps_dot_ref)
                .map_err(|e| e.to_string())?;
            let seed = effective_seed(args.seed);
            let model =
                MlpModel::glorot(&widths, activation, ranges, seed).map_err(|e| e.to_string())?;
            let cfg = TrainConfig {
                iterations: args.iterations,
                learning_rate: args.learning_rate,
                schedule: match args.one_cycle_peak {
                    Some(peak) => LrSchedule::one_cycle(peak),
                    None => LrSchedule::Constant,
                },
                seed,
                report_stride: args.report_stride,
                ..TrainConfig::default()
            };
            let (trained, history) = train_adam(&model, &data, &cfg).map_err(|e| e.to_string())?;
            let provenance = Provenance {
                seed,
                iterations: args.iterations as u64,
                dataset_hash: data.content_hash(),
            };
            save_model(&trained, &provenance, &args.out).map_err(|e| e.to_string())?;
            if let Some(path) = &args.history {
                std::fs::write(path, history_to_csv(&history)).map_err(|e| e.to_string())?;
            }
            let last = history.last().expect("at least one record");
            println!(
                "trained {} for {} iterations (final E_RMS {:.3e}); model written to {}",
                trained.name(),
                args.iterations,
                last.erms,
                args.out.display()
            );
        }
        Command::Eval(args) => {
            let test = Dataset::read_csv(&args.test).map_err(|e| e.to_string())?;
            let (label, report) = if args.model == "jc" {
                let ranges = NormalizationRanges::from_dataset(&test, jc.eps_dot_ref)
                    .map_err(|e| e.to_string())?;
                let report = evaluate_law(
                    |e, r, t| {
                        let s = flowlaw::johnson_cook::jc_flow_stress(&jc, e, r, t)?;
                        let (de, dr, dt) = flowlaw::johnson_cook::jc_derivatives(&jc, e, r, t)?;
                        Ok((s, de, dr, dt))
                    },
                    &ranges,
                    0,
                    &test,
                )
                .map_err(|e| e.to_string())?;
                ("jc-analytic".to_string(), report)
            } else {
                let model = load_model(&args.model).map_err(|e| e.to_string())?.model;
                let report = evaluate(&model, &test).map_err(|e| e.to_string())?;
                (model.name(), report)
            };
            println!("{}", report.table_row(&label));
        }
        Command::Export(args) => {
            let archive = load_model(&args.model).map_err(|e| e.to_string())?;
            save_model(&archive.model, &archive.provenance, &args.out)
                .map_err(|e| e.to_string())?;
            println!(
                "re-exported {} ({} parameters) to {}",
                archive.model.name(),
                archive.model.param_count(),
                args.out.display()
            );
        }
        Command::Emit(args) => {
            let archive = load_model(&args.model).map_err(|e| e.to_string())?;
            let source = emit_subroutine(&archive.model).map_err(|e| e.to_string())?;
            std::fs::write(&args.out, &source).map_err(|e| e.to_string())?;
            println!(
                "emitted {} subroutine ({} lines) to {}",
                archive.model.name(),
                source.lines().count(),
                args.out.display()
            );
        }
        Command::BenchPath(args) => {
            let kind = LoadKind::parse(&args.kind)
                .ok_or_else(|| format!("unknown load kind `{}`", args.kind))?;
            let path = if args.extended {
                let mut p = LoadPath::tension_extended();
                p.kind = kind;
                relabel(&mut p, kind);
                p
            } else {
                let mut p = LoadPath::tension_in_range();
                p.kind = kind;
                relabel(&mut p, kind);
                p
            };
            let law_a = Law::parse(&args.law_a).map_err(|e| e.to_string())?;
            let law_b = Law::parse(&args.law_b).map_err(|e| e.to_string())?;
            let result = run_path_benchmark(&path, law_a.as_hardening(), law_b.as_hardening(), &mat)
                .map_err(|e| e.to_string())?;
            if let Some(out) = &args.out {
                std::fs::write(out, result.to_csv()).map_err(|e| e.to_string())?;
            }
            println!(
                "path {} ({} steps, dt {:.3e} s)",
                path.kind.name(),
                path.strain_increments.len(),
                path.dt
            );
            println!("{}", result.summary());
        }
    }
    Ok(())
}

/// Flip the sign of every increment when the requested kind is compression.
fn relabel(path: &mut LoadPath, kind: LoadKind) {
    if kind == LoadKind::UniaxialCompression {
        for inc in &mut path.strain_increments {
            *inc = inc.scale(-1.0);
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
