//! `cftomo`: batch front-end writing plot-ready CSV files.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 a numerical
//! check failed.

mod commands;
mod config;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Status;
use config::{RunConfig, ScanKind};

#[derive(Parser, Debug)]
#[command(name = "cftomo", version, about = "Characteristic-function tomography through Ramsey interferometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration; flags below override its fields.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Input chi-grid file for `wigner` and `moments`.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Base seed; each grid point draws from its own stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Shots per basis (0 for exact expectation values).
    #[arg(long, global = true)]
    shots: Option<u64>,
    /// Qubit preparation angle θ.
    #[arg(long, global = true)]
    theta: Option<f64>,
    /// Mode index analysed by `moments`.
    #[arg(long, global = true)]
    mode: Option<usize>,
    /// Coupling strength λ.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    /// Free-evolution time τ of each segment.
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Segment count `N` of the configured schedule.
    #[arg(long, global = true)]
    segments: Option<u32>,
    /// Scan a rectangular ξ grid instead of the reachable manifold.
    #[arg(long, global = true)]
    grid: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Add a generation timestamp to the header.
    #[arg(long, global = true)]
    timestamp: bool,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    print_config: bool,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Reachable displacement curves ξ(τ) for each segment count.
    Manifold,
    /// χ along the manifold or on a rectangular grid, exact or sampled.
    ChiScan,
    /// Readout log of the full Ramsey pipeline.
    Simulate,
    /// Wigner function from a χ grid.
    Wigner,
    /// Symmetric-ordered moments by finite differences.
    Moments,
    /// Brute-force Fock-space checks of the closed forms.
    OracleCheck,
    /// Map condensate-impurity parameters onto the field protocol.
    BecMap,
}

enum Failure {
    Validation(String),
    Numerical(String),
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(v) = &cli.output {
        cfg.output = Some(v.clone());
    }
    if let Some(v) = &cli.input {
        cfg.input = Some(v.clone());
    }
    if let Some(v) = cli.seed {
        cfg.seed = v;
    }
    if let Some(v) = cli.shots {
        cfg.shots = v;
    }
    if let Some(v) = cli.theta {
        cfg.theta = v;
    }
    if let Some(v) = cli.mode {
        cfg.mode = v;
    }
    if let Some(v) = cli.lambda {
        cfg.schedule.lambda = v;
    }
    if let Some(v) = cli.tau {
        cfg.schedule.tau = v;
    }
    if let Some(v) = cli.segments {
        cfg.schedule.segments = v;
    }
    if cli.grid {
        cfg.scan = ScanKind::Grid;
    }
    if let Some(input) = &cfg.input {
        if !input.is_file() {
            return Err(Failure::Validation(format!("input file {} does not exist", input.display())));
        }
    }
    cfg.schedule.validate().map_err(|e| Failure::Validation(e.to_string()))?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = resolve(cli)?;
    if cli.print_config {
        let text = serde_json::to_string_pretty(&cfg).expect("config serializes");
        return writeln!(std::io::stdout(), "{text}").or_else(ignore_broken_pipe);
    }
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Validation(format!("thread pool: {e}")))?;
    }

    let mut out: Box<dyn Write> = match &cfg.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    };
    if cli.timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(out, "# generated_unix: {secs}").map_err(|e| Failure::Validation(e.to_string()))?;
    }

    let result = match cli.command {
        Command::Manifold => commands::manifold(&cfg, &mut out),
        Command::ChiScan => commands::chi_scan(&cfg, &mut out),
        Command::Simulate => commands::simulate(&cfg, &mut out),
        Command::Wigner => commands::wigner(&cfg, &mut out),
        Command::Moments => commands::moments(&cfg, &mut out),
        Command::OracleCheck => commands::oracle_check(&cfg, &mut out),
        Command::BecMap => commands::bec_map(&cfg, &mut out),
    };
    out.flush().or_else(ignore_broken_pipe)?;
    match result {
        Ok(Status::Ok) => Ok(()),
        Ok(Status::ChecksFailed(msg)) => Err(Failure::Numerical(msg)),
        Err(cftomo::Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) if commands::exit_code(&e) == 2 => Err(Failure::Numerical(e.to_string())),
        Err(e) => Err(Failure::Validation(e.to_string())),
    }
}

/// A closed downstream pipe (`cftomo manifold | head`) is not an error.
fn ignore_broken_pipe(e: std::io::Error) -> Result<(), Failure> {
    match e.kind() {
        std::io::ErrorKind::BrokenPipe => Ok(()),
        _ => Err(Failure::Validation(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical check failed: {msg}");
            ExitCode::from(2)
        }
    }
}
