//! `kdvlab`: runs the solvers and audits from a session configuration and writes
//! CSV and JSON reports.
//!
//! Exit codes: 0 success, 2 a tolerance or numerical check failed, 3 configuration error.

mod artifacts;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Failure, Outcome};
use config::{ConfigError, SessionConfig};

const EXIT_TOLERANCE: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "kdvlab", version, about = "Normal-form KdV laboratory: solvers, audits and reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Session file in `key = value` format with `[section]` headers.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Spatial truncation.
    #[arg(long = "N", global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Restrict `audit-symbols` to one case id.
    #[arg(long = "case", global = true)]
    case: Option<String>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Reference trajectory of the truncated equation.
    Simulate,
    /// Picard iteration of the cutoff system.
    Fixpoint,
    /// Symbol suprema of every estimate case and the quadrilinear cancellation.
    AuditSymbols,
    /// Cancellation, normal-form identity, Duhamel and v K bounds, smoothing.
    Verify,
    /// L6 ratios over dyadic blocks.
    Strichartz,
    /// Space-time norms of the free evolution of the data.
    Norms,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fixpoint => "fixpoint",
            Command::AuditSymbols => "audit-symbols",
            Command::Verify => "verify",
            Command::Strichartz => "strichartz",
            Command::Norms => "norms",
        }
    }

    fn run(self, c: &SessionConfig) -> Result<Outcome, Failure> {
        match self {
            Command::Simulate => commands::simulate(c),
            Command::Fixpoint => commands::fixpoint(c),
            Command::AuditSymbols => commands::audit_symbols(c),
            Command::Verify => commands::verify(c),
            Command::Strichartz => commands::strichartz(c),
            Command::Norms => commands::norms(c),
        }
    }
}

fn resolve(cli: &Cli) -> Result<SessionConfig, ConfigError> {
    let mut c = match &cli.config {
        Some(p) => SessionConfig::from_file(p)?,
        None => SessionConfig::default(),
    };
    if let Some(s) = cli.s {
        c.s = s;
    }
    if let Some(e) = cli.eps {
        c.eps = e;
    }
    if let Some(n) = cli.n {
        c.n = n;
    }
    if let Some(seed) = cli.seed {
        c.seed = seed;
    }
    if let Some(o) = &cli.out {
        c.output_dir = o.clone();
    }
    if let Some(id) = &cli.case {
        id.parse::<kdvnf::audit::SymbolCase>().map_err(|e| ConfigError::invariant(format!("--case: {e}")))?;
        c.audit_case = Some(id.clone());
    }
    c.validate()?;
    Ok(c)
}

fn execute(cli: &Cli) -> u8 {
    let config = match resolve(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return EXIT_CONFIG;
        }
    };
    let name = cli.command.name();
    let outcome = match cli.command.run(&config) {
        Ok(o) => o,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            return EXIT_CONFIG;
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("{name} failed: {m}");
            return EXIT_TOLERANCE;
        }
    };
    let stamp = artifacts::stamp(name, &config, "");
    for (ext, bytes) in [("csv", &outcome.csv), ("json", &outcome.json)] {
        match artifacts::write_atomic(&config.output_dir, &format!("{name}-{stamp}.{ext}"), bytes) {
            Ok(p) => println!("wrote {}", p.display()),
            Err(e) => {
                eprintln!("cannot write into {}: {e}", config.output_dir.display());
                return EXIT_CONFIG;
            }
        }
    }
    for line in &outcome.summary {
        println!("{line}");
    }
    if outcome.failures.is_empty() {
        0
    } else {
        for f in &outcome.failures {
            eprintln!("FAIL {f}");
        }
        EXIT_TOLERANCE
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let code = match cli.workers {
        Some(w) => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => {
                eprintln!("config error: cannot start {w} workers: {e}");
                EXIT_CONFIG
            }
        },
        None => execute(&cli),
    };
    ExitCode::from(code)
}
