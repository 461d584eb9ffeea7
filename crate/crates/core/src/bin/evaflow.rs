use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser};
use evaflow::cli::{execute, RunConfig, Subcommand};

#[derive(Parser)]
#[command(name = "evaflow", version, about = "Verification suites and 1D simulator for two-phase flow with phase transition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Run a scenario and write snapshots, ledger, summary and report.
    Simulate(Common),
    /// Surface divergence theorem, curvature and area checks.
    VerifySurface(Common),
    /// Bulk and surface transport theorems and the mass identity.
    VerifyTransport(Common),
    /// Variational force identity and Helmholtz pressure recovery.
    VerifyVariational(Common),
    /// Pointwise system versus conservative form on manufactured states.
    Mms(Common),
    /// Every suite plus the simulator presets, aggregated into one report.
    Report(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; unknown keys are rejected.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in preset, used when no config is given.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, value_name = "N", default_value_t = 0)]
    seed: u64,
    /// Byte-identical outputs for a fixed seed (wall_time reported as 0).
    #[arg(long)]
    deterministic: bool,
    /// Multiplies every tolerance.
    #[arg(long, value_name = "F", default_value_t = 1.0)]
    tol_scale: f64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", serde_json::json!({"status": 2, "kind": "config", "message": first}));
            return ExitCode::from(2);
        }
    };
    let (subcommand, c) = match cli.command {
        Command::Simulate(c) => (Subcommand::Simulate, c),
        Command::VerifySurface(c) => (Subcommand::VerifySurface, c),
        Command::VerifyTransport(c) => (Subcommand::VerifyTransport, c),
        Command::VerifyVariational(c) => (Subcommand::VerifyVariational, c),
        Command::Mms(c) => (Subcommand::Mms, c),
        Command::Report(c) => (Subcommand::Report, c),
    };
    let config = RunConfig {
        subcommand,
        config_path: c.config,
        preset: c.preset,
        output_dir: c.out,
        seed: c.seed,
        deterministic: c.deterministic,
        tol_scale: c.tol_scale,
    };
    ExitCode::from(execute(&config) as u8)
}
