use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lbfilm::{parse_config_with, CliError, Command, RunConfig};

/// Steady states, branches, spectra and time integration for the 1D
/// advective Cahn-Hilliard model of Langmuir-Blodgett transfer.
#[derive(Debug, Parser)]
#[command(name = "lbfilm", version)]
struct Args {
    /// steady, branches, branch-points, spectrum, evolve, sweep or verify
    command: Command,
    /// Configuration file (`key = value` lines, `[section]` headers)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    jobs: Option<usize>,
    /// Treat warnings and failed sweep cells as errors; require c0 in (-1, 0)
    #[arg(long)]
    strict: bool,
    /// Output directory (overrides `output_dir`)
    #[arg(long)]
    output: Option<PathBuf>,
}

fn load(args: &Args) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            parse_config_with(&text, Some(args.command), args.strict)?
        }
        None if args.command == Command::Verify => RunConfig::defaults(Command::Verify),
        None => {
            return Err(lbfilm::ConfigError::Invalid(format!("`{}` needs --config <file>", args.command)).into());
        }
    };
    if let Some(out) = &args.output {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        // only fails if the pool was already built
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let result = load(&args).and_then(|cfg| lbfilm::run(&cfg, args.strict));
    match result {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", outcome.summary);
            if args.strict && !outcome.warnings.is_empty() {
                eprintln!("error: --strict and {} warning(s)", outcome.warnings.len());
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
