//! Command-line driver: experiment subcommands mirror the configuration
//! kinds; `merge` and `report` operate on record files.
//!
//! Exit codes: 0 success, 1 operational error, 2 hypothesis check rejected.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use anderson::harness::config::{ExperimentConfig, ExperimentKind};
use anderson::harness::records::{merge_files, read_records, repair};
use anderson::harness::run::run;

#[derive(Parser)]
#[command(name = "anderson", version, about = "Disordered lattice spectra and their rescaled point-process statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared flags of every experiment subcommand; each overrides the matching
/// config field.
#[derive(Args)]
struct RunArgs {
    /// TOML experiment recipe.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    side: Option<i64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    e0: Option<f64>,
    /// Worker threads (ANDERSON_WORKERS overrides both).
    #[arg(long)]
    workers: Option<usize>,
    /// Record output path (JSON lines).
    #[arg(long)]
    output: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Full eigensolves; records carry eigenvalues, centers, and atoms.
    Spectrum(RunArgs),
    /// Density-of-states estimation by histogram and Cauchy kernel.
    Dos(RunArgs),
    /// First-moment window scan of eigenvalue counts.
    Wegner(RunArgs),
    /// Second factorial moment window scan.
    Minami(RunArgs),
    /// Rescaled point process goodness-of-fit suite.
    Poisson(RunArgs),
    /// Two-scale eigenvalue matching experiment.
    Decompose(RunArgs),
    /// Green-function regularity probability.
    Regularity(RunArgs),
    /// Eigenfunction decay and quasimode verification.
    Decay(RunArgs),
    /// A-priori tail bound verification.
    Tail(RunArgs),
    /// Merge sharded record files of one config.
    Merge {
        /// Input record files.
        inputs: Vec<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Summarize a record file; --repair truncates a partial final record.
    Report {
        records: PathBuf,
        #[arg(long)]
        repair: bool,
    },
}

fn run_experiment(kind: ExperimentKind, args: &RunArgs) -> Result<i32, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("cannot read {}: {e}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(|e| e.to_string())?;
    if cfg.kind != kind {
        return Err(format!(
            "config kind `{}` does not match subcommand `{}`",
            cfg.kind.name(),
            kind.name()
        ));
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.n_samples {
        cfg.n_samples = v;
    }
    if let Some(v) = args.side {
        cfg.model.side = v;
    }
    if let Some(v) = args.lambda {
        cfg.model.lambda = v;
    }
    if let Some(v) = args.e0 {
        cfg.e0 = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = Some(v);
    }
    if let Some(v) = &args.output {
        cfg.output = Some(v.clone());
    }
    cfg.validate().map_err(|e| e.to_string())?;
    let result = run(&cfg).map_err(|e| e.to_string())?;
    println!("{}", serde_json::to_string_pretty(&result.report).unwrap());
    print!("{}", result.csv);
    if result.skipped > 0 {
        eprintln!("warning: {} realizations skipped", result.skipped);
    }
    Ok(result.exit_code())
}

fn dispatch(cli: Cli) -> Result<i32, String> {
    match cli.command {
        Command::Spectrum(a) => run_experiment(ExperimentKind::Spectrum, &a),
        Command::Dos(a) => run_experiment(ExperimentKind::Dos, &a),
        Command::Wegner(a) => run_experiment(ExperimentKind::Wegner, &a),
        Command::Minami(a) => run_experiment(ExperimentKind::Minami, &a),
        Command::Poisson(a) => run_experiment(ExperimentKind::Poisson, &a),
        Command::Decompose(a) => run_experiment(ExperimentKind::Decompose, &a),
        Command::Regularity(a) => run_experiment(ExperimentKind::Regularity, &a),
        Command::Decay(a) => run_experiment(ExperimentKind::Decay, &a),
        Command::Tail(a) => run_experiment(ExperimentKind::Tail, &a),
        Command::Merge { inputs, output } => {
            if inputs.is_empty() {
                return Err("merge needs at least one input file".into());
            }
            let n = merge_files(&inputs, &output).map_err(|e| e.to_string())?;
            println!("merged {n} records into {}", output.display());
            Ok(0)
        }
        Command::Report { records, repair: do_repair } => {
            if do_repair {
                let kept = repair(&records).map_err(|e| e.to_string())?;
                println!("repaired: {kept} records kept");
            }
            let (recs, dropped) = read_records(&records).map_err(|e| e.to_string())?;
            let hashes: std::collections::BTreeSet<&str> =
                recs.iter().map(|r| r.config.as_str()).collect();
            let total_ms: u64 = recs.iter().map(|r| r.elapsed_ms).sum();
            println!("records,{}", recs.len());
            println!("dropped_partial,{dropped}");
            println!("config_hashes,{}", hashes.into_iter().collect::<Vec<_>>().join(";"));
            println!("total_elapsed_ms,{total_ms}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
