use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use sfwm_cli::run::SUBCOMMANDS;
use sfwm_cli::{parse_config_with, run_subcommand, write_outputs, RunError};

/// Joint spectra, temporal modes and pair flux of cavity SFWM sources.
#[derive(Parser, Debug)]
#[command(name = "sfwm", version)]
struct Args {
    /// One of: jsi, jta, jti, jti-closed, marginal, modes, flux, cw-flux,
    /// flux-sweep, geom, design.
    #[arg(value_parser = clap::builder::PossibleValuesParser::new(SUBCOMMANDS))]
    subcommand: String,

    #[arg(long)]
    config: PathBuf,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// `section.key=value`, applied after the file is read.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Worker threads; 0 lets the runtime decide.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn execute(args: &Args) -> Result<Vec<PathBuf>, RunError> {
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build_global()
            .map_err(|e| RunError::Usage(format!("--threads {}: {e}", args.threads)))?;
    }
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Io(format!("{}: {e}", args.config.display())))?;
    let parsed = parse_config_with(&text, &args.overrides)?;
    let outcome = run_subcommand(&args.subcommand, &parsed.config)?;
    write_outputs(&args.out, &args.subcommand, &parsed.config, &parsed.defaults, &outcome)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.error_line(&args.subcommand));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
