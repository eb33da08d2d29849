//! Command-line front end for `pinch-core`: one JSON config in, a JSON report,
//! CSV tables and (for `pinch`) a certificate out.

pub mod commands;
pub mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;

use commands::{ConfigError, Options};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "pinch", version, about = "Curvature sweeps, comparisons and pinching certificates for Kähler metrics")]
pub struct Args {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for every sample set and optimizer (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Add brute-force oracle columns where available.
    #[arg(long)]
    pub audit: bool,
    /// Verification suite for `verify`: wu-hsc, chern-lu, ineq4, schwarz-yau or all.
    #[arg(long)]
    pub suite: Option<String>,
}

pub const EXIT_CONFIG: i32 = 2;

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("malformed config {}: {e}", path.display())))
}

fn pretty(v: &impl serde::Serialize) -> Result<Vec<u8>, ConfigError> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

/// Runs the CLI and returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    match execute(&args) {
        Ok(code) => code,
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
    }
}

fn execute(args: &Args) -> Result<i32, ConfigError> {
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.override_seed(seed);
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let opts = Options { audit: args.audit, suite: args.suite.clone() };
    let started = Instant::now();
    let run = commands::run(&config, &opts)?;
    let wall = started.elapsed().as_secs_f64();

    // everything is computed before the first file is written
    let io = |e: std::io::Error| ConfigError(format!("cannot write to {}: {e}", out.display()));
    fs::create_dir_all(&out).map_err(io)?;
    fs::write(out.join("report.json"), pretty(&run.report)?).map_err(io)?;
    for (name, bytes) in &run.files {
        fs::write(out.join(name), bytes).map_err(io)?;
    }
    // timing lives in a sidecar so that report.json is reproducible byte for byte
    let timing = serde_json::json!({ "command": run.report.command, "wall_time_seconds": wall });
    fs::write(out.join("timing.json"), pretty(&timing)?).map_err(io)?;
    for w in &run.report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}", run.summary);
    Ok(run.report.outcome.exit_code())
}
