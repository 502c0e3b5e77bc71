use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use grownplate::cli::{exit_code, run, Mode, RunConfig};

/// Grown-plate solver: runs the mode named in the config file.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// TOML run configuration.
    config: PathBuf,
    /// One of check, solve2d, airy, verify3d, sweep3d, scaling.
    #[arg(long)]
    mode: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the random starts.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let loaded = RunConfig::load(&args.config).and_then(|mut cfg| {
        if let Some(m) = &args.mode {
            cfg.mode = m.parse::<Mode>()?;
        }
        if let Some(o) = args.out {
            cfg.output = o;
        }
        if let Some(s) = args.seed {
            cfg.set_seed(s);
        }
        Ok(cfg)
    });
    let result = match loaded {
        Ok(cfg) => run(&cfg),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match &result {
        Ok(o) => print!("{}", o.report),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
