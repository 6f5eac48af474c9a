use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use dirac_loc_cli::{config::Command, run, ExperimentConfig};

/// Transfer-matrix laboratory for quasi-one-dimensional random Dirac
/// operators: spectra, Lyapunov exponents, group classification, density of
/// states and Green-kernel decay.
#[derive(Parser)]
#[command(name = "dirac-loc", version)]
struct Args {
    /// Experiment to run
    #[arg(value_enum)]
    command: Command,

    /// Path to the key = value (or JSON) configuration file
    #[arg(long)]
    config: PathBuf,

    /// Master seed override
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory override
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let out = args.out.map(|p| p.display().to_string());
    let config = match ExperimentConfig::load(&args.config, args.command, args.seed, out) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("dirac-loc: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(&config) {
        Ok(output) => {
            println!("wrote {}", output.data_path.display());
            if let Some(p) = output.plot_path {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", output.manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("dirac-loc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
