//! `wavemotil` command-line driver.

mod commands;
mod config;
mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use commands::{exit_code_for, Failure, Outcome};
use config::{resolve, Command};
use manifest::{sha256_hex, OutputDir, RunManifest};

pub const EXIT_USAGE: i32 = 64;

/// A problem with the command line or configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

#[derive(Parser)]
#[command(name = "wavemotil", version, about = "Traveling waves in a density-suppressed motility model")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Thresholds, decay rates and linearizations.
    Analyze(Common),
    /// Verify the super/sub-solution pair at one speed.
    Certify(Common),
    /// Build and verify the traveling-wave profile.
    Wave(Common),
    /// Run the reaction-diffusion simulation.
    Simulate(Common),
    /// Front speed against initial decay rate.
    Speedscan(Common),
}

#[derive(Args)]
struct Common {
    /// TOML file with flat `key = value` entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in configuration applied before the file: fig2, fig3 or fig4.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "wavemotil-out")]
    out: PathBuf,
}

fn threads_from_env() -> Result<usize, UsageError> {
    match std::env::var("WAVEMOTIL_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(UsageError(format!("WAVEMOTIL_THREADS=`{s}` is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let (command, name, common) = match &cli.command {
        Cmd::Analyze(c) => (Command::Analyze, "analyze", c),
        Cmd::Certify(c) => (Command::Certify, "certify", c),
        Cmd::Wave(c) => (Command::Wave, "wave", c),
        Cmd::Simulate(c) => (Command::Simulate, "simulate", c),
        Cmd::Speedscan(c) => (Command::Speedscan, "speedscan", c),
    };
    ExitCode::from(run(command, name, common) as u8)
}

fn run(command: Command, name: &str, common: &Common) -> i32 {
    let started = chrono::Utc::now();
    let mut out = match OutputDir::create(&common.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: cannot create {}: {e}", common.out.display());
            return 1;
        }
    };
    let threads = match threads_from_env() {
        Ok(n) => n,
        Err(e) => return finish_usage(&mut out, name, common, started, 1, e.0),
    };
    // A second initialization only happens in tests; the first pool stands.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();

    if common.config.is_none() && common.preset.is_none() {
        return finish_usage(&mut out, name, common, started, threads, "need --config FILE or --preset NAME".into());
    }
    let resolved = match resolve(command, common.preset.as_deref(), common.config.as_deref()) {
        Ok(r) => r,
        Err(e) => return finish_usage(&mut out, name, common, started, threads, e.0),
    };
    let echo = resolved.echo();
    let config_json = serde_json::to_value(&resolved.table).unwrap_or(Value::Null);
    if let Err(e) = out.write("resolved.toml", echo.as_bytes()) {
        eprintln!("error: {e}");
        return 1;
    }

    let result = match command {
        Command::Analyze => commands::analyze(&resolved, &mut out),
        Command::Certify => commands::certify(&resolved, &mut out),
        Command::Wave => commands::wave(&resolved, &mut out),
        Command::Simulate => commands::simulate(&resolved, &mut out),
        Command::Speedscan => commands::speedscan(&resolved, &mut out),
    };
    let (status, code, error, metrics) = match result {
        Ok(Outcome {
            passed,
            fail_code,
            metrics,
        }) => {
            if passed {
                ("pass", 0, None, metrics)
            } else {
                ("fail", fail_code, None, metrics)
            }
        }
        Err(Failure::Usage(msg)) => ("error", EXIT_USAGE, Some(msg), Value::Null),
        Err(Failure::Core(e)) => ("error", exit_code_for(&e), Some(e.to_string()), Value::Null),
        Err(Failure::Io(e)) => ("error", 1, Some(e.to_string()), Value::Null),
    };
    let manifest = RunManifest {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        preset: common.preset.clone(),
        config_file: common.config.as_ref().map(|p| p.display().to_string()),
        config: config_json,
        config_sha256: sha256_hex(echo.as_bytes()),
        threads,
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        outputs: out.records.clone(),
        metrics,
        status: status.into(),
        exit_code: code,
        error: error.clone(),
    };
    report(&mut out, &manifest);
    code
}

fn finish_usage(
    out: &mut OutputDir,
    name: &str,
    common: &Common,
    started: chrono::DateTime<chrono::Utc>,
    threads: usize,
    msg: String,
) -> i32 {
    let manifest = RunManifest {
        command: name.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        preset: common.preset.clone(),
        config_file: common.config.as_ref().map(|p| p.display().to_string()),
        config: Value::Null,
        config_sha256: String::new(),
        threads,
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        outputs: Vec::new(),
        metrics: Value::Null,
        status: "error".into(),
        exit_code: EXIT_USAGE,
        error: Some(msg),
    };
    report(out, &manifest);
    EXIT_USAGE
}

fn report(out: &mut OutputDir, manifest: &RunManifest) {
    if let Err(e) = out.write_json("run.json", manifest) {
        eprintln!("error: cannot write run.json: {e}");
    }
    if let Some(msg) = &manifest.error {
        eprintln!("error: {msg}");
    }
    println!(
        "{}: {} (exit {}), outputs in {}",
        manifest.command,
        manifest.status,
        manifest.exit_code,
        display(out.root())
    );
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
