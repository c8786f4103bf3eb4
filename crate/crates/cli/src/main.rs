//! Command-line front end: experiment configs in, tables and plot data out.
//!
//! Exit codes: 0 success, 1 config error, 2 runtime/convergence error,
//! 3 failed acceptance check in `report --check`.

mod config;
mod report;

use clap::{Args, Parser, Subcommand};
use polymer_core::engine::{self, ExperimentKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "polymer",
    version,
    about = "Directed polymer simulation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Experiment config file (TOML); built-in defaults when absent
    #[arg(long)]
    config: Option<PathBuf>,
    /// Repeatable KEY=VALUE override, applied after the file parse
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory (default: config value, then $POLYMER_OUT_DIR, then ./out)
    #[arg(long)]
    output_dir: Option<String>,
    /// Worker threads
    #[arg(long)]
    workers: Option<usize>,
    /// Master seed
    #[arg(long)]
    master_seed: Option<u64>,
    /// Validate the config and print the resolved parameters without computing
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct ExponentsArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Shorthand for a single-point alpha grid
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
}

#[derive(Args)]
struct TwArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Quadrature order of the shipped table
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    tail_cut: Option<f64>,
    /// Verify that refining 40 -> 80 nodes moves no entry by more than 1e-8
    #[arg(long)]
    refine_check: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Directories containing results.csv (or direct paths to record CSVs);
    /// repeatable
    #[arg(long = "results", required = true)]
    results: Vec<PathBuf>,
    /// Config providing the [[checks]] list for --check
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    output_dir: Option<String>,
    /// Evaluate the config's check-list; nonzero exit if any rule fails
    #[arg(long)]
    check: bool,
    #[arg(long)]
    dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Free-energy ensembles with KS summaries against Tracy-Widom and normal
    Fluctuations(RunArgs),
    /// Weight-swap experiment with matched and control arms
    Lindeberg(RunArgs),
    /// Bridge intersection statistics and the quantitative lemma suite
    Localtime(RunArgs),
    /// Empirical weight-validity report
    Validate(RunArgs),
    /// Exponent arithmetic over parameter grids
    Exponents(ExponentsArgs),
    /// Build or refresh the Tracy-Widom GUE table
    Tw(TwArgs),
    /// Merge result records into summaries, plot data and acceptance checks
    Report(ReportArgs),
}

enum AppError {
    Config(String),
    Runtime(String),
    ChecksFailed,
}

impl From<anyhow::Error> for AppError {
    fn from(e: anyhow::Error) -> AppError {
        AppError::Config(format!("{e:#}"))
    }
}

impl From<engine::EngineError> for AppError {
    fn from(e: engine::EngineError) -> AppError {
        match e {
            engine::EngineError::Config(_) => AppError::Config(e.to_string()),
            _ => AppError::Runtime(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(2)
        }
        Err(AppError::ChecksFailed) => ExitCode::from(3),
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Fluctuations(args) => run_experiment(ExperimentKind::Fluctuations, args),
        Command::Lindeberg(args) => run_experiment(ExperimentKind::Lindeberg, args),
        Command::Localtime(args) => run_experiment(ExperimentKind::Localtime, args),
        Command::Validate(args) => run_experiment(ExperimentKind::Validity, args),
        Command::Exponents(args) => run_exponents(args),
        Command::Tw(args) => run_tw(args),
        Command::Report(args) => report::run_report(args),
    }
}

fn resolve(kind: ExperimentKind, args: &RunArgs) -> Result<engine::ExperimentConfig, AppError> {
    Ok(config::load_config(
        args.config.as_deref(),
        kind,
        &args.overrides,
        args.output_dir.as_deref(),
        args.workers,
        args.master_seed,
    )?)
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<(), AppError> {
    let cfg = resolve(kind, &args)?;
    if args.dry_run {
        println!(
            "{}",
            serde_json::to_string_pretty(&cfg).expect("config serializes")
        );
        return Ok(());
    }
    let out = engine::run(&cfg)?;
    println!(
        "wrote {} records under {}",
        out.records.len(),
        cfg.output_dir
    );
    Ok(())
}

fn run_exponents(args: ExponentsArgs) -> Result<(), AppError> {
    let mut overrides = args.run.overrides.clone();
    if let Some(alpha) = args.alpha {
        overrides.push(format!("exponents.alpha_list=[{alpha}]"));
    }
    if let Some(delta) = args.delta {
        overrides.push(format!("exponents.delta_list=[{delta}]"));
    }
    if let Some(s) = args.s {
        overrides.push(format!("exponents.s_list=[{s}]"));
    }
    if let Some(k) = args.k {
        overrides.push(format!("exponents.k_list=[{k}]"));
    }
    let run = RunArgs {
        overrides,
        ..args.run
    };
    let cfg = resolve(ExperimentKind::Exponents, &run)?;
    if run.dry_run {
        println!(
            "{}",
            serde_json::to_string_pretty(&cfg).expect("config serializes")
        );
        return Ok(());
    }
    let out = engine::run(&cfg)?;
    for r in out.records.iter().filter(|r| r.statistic == "lambda") {
        println!("lambda({}) = {:.6}", r.params, r.estimate);
    }
    for r in out
        .records
        .iter()
        .filter(|r| r.statistic == "strip_feasible")
    {
        println!("strip_feasible({}) = {}", r.params, r.estimate == 1.0);
    }
    Ok(())
}

fn run_tw(args: TwArgs) -> Result<(), AppError> {
    let mut overrides = args.run.overrides.clone();
    if let Some(order) = args.order {
        overrides.push(format!("tw.order={order}"));
    }
    if let Some(tail) = args.tail_cut {
        overrides.push(format!("tw.tail_cut={tail}"));
    }
    if args.refine_check {
        overrides.push("tw.refine_check=true".into());
    }
    let run = RunArgs {
        overrides,
        ..args.run
    };
    let cfg = resolve(ExperimentKind::TwBuild, &run)?;
    if run.dry_run {
        println!(
            "{}",
            serde_json::to_string_pretty(&cfg).expect("config serializes")
        );
        return Ok(());
    }
    let out = engine::run(&cfg)?;
    for r in &out.records {
        println!("{} = {:.6}", r.statistic, r.estimate);
    }
    println!("table written to {}/tw_gue_cdf.csv", cfg.output_dir);
    Ok(())
}
