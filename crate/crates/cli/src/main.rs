//! `gausslayer`: numerical checks of the Gaussian layer inequality and its
//! supporting bounds.
//!
//! Exit status: 0 all checks passed, 1 a check failed, 2 bad usage or input,
//! 3 internal or I/O error.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::commands::Failure;
use crate::config::{read_config_file, Command, RunConfig};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "gausslayer",
    version,
    about = "Numerical verification of Gaussian layer inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Tail bound error table
    BoundsTable,
    /// Inequalities for the Mills ratio and the hazard function on dense grids
    CheckProps,
    /// Mass- and moment-matching linearization of concave profiles
    Linearize,
    /// Monotonicity scans over the extremal configurations
    ScanExtremal,
    /// Half-plane case over its parameter grid
    FinalCase,
    /// Layer inequality for random or given profiles and polygons
    VerifyTheorem1,
    /// Conditional form for Gaussian vectors (Monte Carlo)
    VerifyTheorem1a,
    /// Symmetric slab correlation (Monte Carlo)
    VerifySidak,
    /// Random search over pairs of symmetric bodies
    SearchProblem2,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::BoundsTable => Command::BoundsTable,
            Sub::CheckProps => Command::CheckProps,
            Sub::Linearize => Command::Linearize,
            Sub::ScanExtremal => Command::ScanExtremal,
            Sub::FinalCase => Command::FinalCase,
            Sub::VerifyTheorem1 => Command::VerifyTheorem1,
            Sub::VerifyTheorem1a => Command::VerifyTheorem1a,
            Sub::VerifySidak => Command::VerifySidak,
            Sub::SearchProblem2 => Command::SearchProblem2,
        }
    }
}

/// Flags shared by every subcommand. They override `--config` entries.
#[derive(Args)]
struct Flags {
    /// `key = value` file with defaults for any of the flags below
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Numerical tolerance
    #[arg(long, global = true, allow_hyphen_values = true)]
    tol: Option<String>,
    /// Master seed
    #[arg(long, global = true, allow_hyphen_values = true)]
    seed: Option<String>,
    /// Number of random instances
    #[arg(long, global = true, allow_hyphen_values = true)]
    trials: Option<String>,
    /// Monte Carlo sample count
    #[arg(long, global = true, allow_hyphen_values = true)]
    samples: Option<String>,
    /// Output file (default: $GAUSSLAYER_OUT_DIR/<subcommand>.<ext>, else stdout)
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<String>,
    /// csv, json or jsonl
    #[arg(long, global = true, allow_hyphen_values = true)]
    format: Option<String>,
    /// Concave profile JSON file
    #[arg(long, global = true, value_name = "FILE")]
    profile: Option<String>,
    /// Convex polygon JSON file
    #[arg(long, global = true, value_name = "FILE")]
    polygon: Option<String>,
    /// Instance JSON file (verify-theorem1a, verify-sidak)
    #[arg(long, global = true, value_name = "FILE")]
    instance: Option<String>,
    /// Comma-separated layer weights in (0, 1)
    #[arg(long, global = true, allow_hyphen_values = true)]
    w: Option<String>,
    /// Grid, e.g. `m=0,1;c=-0.5,0.5;h=9` or `x=0,1,2`
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid_spec: Option<String>,
    /// Interval `a,b` for linearize
    #[arg(long, global = true, allow_hyphen_values = true)]
    interval: Option<String>,
    /// Slicing direction `x,y` for polygons
    #[arg(long, global = true, allow_hyphen_values = true)]
    direction: Option<String>,
    /// Dimension of random Sidak instances
    #[arg(long, global = true, allow_hyphen_values = true)]
    dim: Option<String>,
    /// Number of slabs in random Sidak instances
    #[arg(long, global = true, allow_hyphen_values = true)]
    count: Option<String>,
    /// Candidates kept by search-problem2
    #[arg(long, global = true, allow_hyphen_values = true)]
    keep: Option<String>,
    /// parallel or sequential
    #[arg(long, global = true, allow_hyphen_values = true)]
    exec: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("trials", &self.trials),
            ("samples", &self.samples),
            ("out", &self.out),
            ("format", &self.format),
            ("profile", &self.profile),
            ("polygon", &self.polygon),
            ("instance", &self.instance),
            ("w", &self.w),
            ("grid-spec", &self.grid_spec),
            ("interval", &self.interval),
            ("direction", &self.direction),
            ("dim", &self.dim),
            ("count", &self.count),
            ("keep", &self.keep),
            ("exec", &self.exec),
        ]
    }
}

fn usage_exit(msg: &str) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn internal_exit(msg: &str) -> ExitCode {
    eprintln!("{}", json!({ "status": "error", "error": msg }));
    ExitCode::from(EXIT_INTERNAL)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut values = BTreeMap::new();
    if let Some(path) = &cli.flags.config {
        match read_config_file(path) {
            Ok(v) => values = v,
            Err(e) => return usage_exit(&e.0),
        }
    }
    for (k, v) in cli.flags.pairs() {
        if let Some(v) = v {
            values.insert(k.to_string(), v.clone());
        }
    }
    let cfg = match RunConfig::resolve(cli.command.into(), &values) {
        Ok(c) => c,
        Err(e) => return usage_exit(&e.0),
    };
    let produced = match commands::run(&cfg) {
        Ok(p) => p,
        Err(Failure::Usage(m)) => return usage_exit(&m),
        Err(Failure::Internal(m)) => return internal_exit(&m),
    };
    let text = output::render(&cfg, &produced);
    let out_dir = std::env::var_os("GAUSSLAYER_OUT_DIR").map(PathBuf::from);
    let written = match cfg.destination(out_dir.as_deref()) {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                if let Err(e) = std::fs::create_dir_all(parent) {
                    return internal_exit(&format!("cannot create {}: {e}", parent.display()));
                }
            }
            std::fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| format!("cannot write output: {e}")),
    };
    if let Err(e) = written {
        return internal_exit(&e);
    }
    if produced.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{}", output::failure_summary(&cfg, &produced.failures));
        ExitCode::from(EXIT_FAIL)
    }
}
