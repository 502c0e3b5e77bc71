//! Running a TOML configuration through the library, as the binary does.
//!
//! `cargo run --example run_config -- configs/round_plate.toml`

use grownplate::cli::{exit_code, run, RunConfig};

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/configs/flat_check.toml").into());
    let result = RunConfig::load(&path).and_then(|mut cfg| {
        cfg.output = std::env::temp_dir().join("grownplate_run_config");
        run(&cfg)
    });
    match &result {
        Ok(o) => print!("{}", o.report),
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}
