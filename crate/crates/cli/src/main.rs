use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use crystal_relax::{run, CliError, Mode, RunConfig};

/// Single-crystal plasticity batch runner.
#[derive(Parser)]
#[command(name = "crystal-relax", version)]
struct Args {
    /// point, drift, error-surface, fem or pole
    mode: String,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mode: Mode = args.mode.parse()?;
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    Ok(RunConfig::parse(mode, &text, &base)?)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match load(&args).and_then(|cfg| run(&cfg, &args.out)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("crystal-relax: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
