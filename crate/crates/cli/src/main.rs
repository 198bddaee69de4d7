//! `trapmass` command-line front end.
//!
//! Exit codes: 0 success, 2 config error, 3 numeric or output failure.
//! `verify --all` exits 1 when any oracle fails.

mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::Meta;

#[derive(Parser)]
#[command(name = "trapmass", version, about = "Trapped-particle mass-energy experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ramsey trace: probability, visibility and phase over time.
    Ramsey(RunArgs),
    /// Clock shift table over trap frequency.
    Shift(RunArgs),
    /// Overlap series of the repeated two-frequency drive.
    Drive(RunArgs),
    /// Husimi Q function on a square grid.
    Qfunc(RunArgs),
    /// Scalar quantity over the Cartesian product of parameter axes.
    Sweep(RunArgs),
    /// Run the oracle suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: $TRAPMASS_OUT_DIR, then the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Omit the timestamp header line so identical configs give identical files.
    #[arg(long)]
    no_timestamp: bool,
    /// Re-read the written table and check its invariants.
    #[arg(long)]
    verify: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, required = true)]
    all: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    no_timestamp: bool,
}

const VERIFY_REPORT: &str = "verify_report.json";

fn run_experiment(expected: &str, args: RunArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("{}: {e}", args.config.display())))?;
    let cfg = ExperimentConfig::parse(&text)?;
    if cfg.name() != expected {
        return Err(CliError::Config(format!(
            "config describes a `{}` experiment, not `{expected}`",
            cfg.name()
        )));
    }
    let art = experiments::run(&cfg)?;
    let meta = Meta::new(expected, Some(trapmass::verify::digest(&text)), !args.no_timestamp);
    let out = cfg.output();
    let dir = output::resolve_out_dir(args.out);
    let data = dir.join(&out.path);
    let summary = output::summary_path(&data);
    output::write_table(&data, out.format, &meta, &art.table)?;
    output::write_json(&summary, &meta, &art.summary)?;
    println!("{}", data.display());
    println!("{}", summary.display());
    if args.verify {
        output::verify_written(&data, out.format, &art.table, &art.invariants)?;
        println!("verified {} rows", art.table.rows.len());
    }
    Ok(())
}

fn run_verify(args: VerifyArgs) -> Result<bool, CliError> {
    let summary = trapmass::verify::run_all();
    for r in &summary.reports {
        println!(
            "{} {}: deviation {:e} (tolerance {:e}) {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.max_deviation,
            r.tolerance,
            r.note
        );
    }
    for m in &summary.missing {
        println!("MISSING {m}");
    }
    let path = output::resolve_out_dir(args.out).join(VERIFY_REPORT);
    output::write_json(&path, &Meta::new("verify", None, !args.no_timestamp), &summary)?;
    println!("{}", path.display());
    Ok(summary.all_pass)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Ramsey(a) => run_experiment("ramsey", a),
        Command::Shift(a) => run_experiment("shift", a),
        Command::Drive(a) => run_experiment("drive", a),
        Command::Qfunc(a) => run_experiment("qfunc", a),
        Command::Sweep(a) => run_experiment("sweep", a),
        Command::Verify(a) => match run_verify(a) {
            Ok(true) => return ExitCode::SUCCESS,
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
