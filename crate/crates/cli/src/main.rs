use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use pshlab_cli::{parse_config, run, CliError, Command};

#[derive(Parser)]
#[command(name = "pshlab", version, about = "Envelopes, geodesic rays and leaves from a config file")]
struct Args {
    /// envelope, flow, geodesic, foliate or verify
    command: Command,
    #[arg(long)]
    config: PathBuf,
    /// Overrides `out` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `threads` from the config.
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pshlab {}: {e}", args.command.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(args: &Args) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)?;
    let mut cfg = parse_config(&text)?;
    cfg.command = Some(args.command);
    let out = args
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("pshlab-out"));
    let threads = args.threads.or(cfg.threads);
    let report = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(|| run(&cfg, &out))?,
        None => run(&cfg, &out)?,
    };
    for c in &report.checks {
        println!("{:<28} {:>12.4e} <= {:<10.3e} {}", c.name, c.value, c.threshold, if c.pass { "pass" } else { "FAIL" });
    }
    println!("{} written to {}", report.command.name(), report.out.display());
    Ok(())
}
