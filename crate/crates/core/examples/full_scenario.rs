//! Runs the bundled demo scenario and writes every artifact.
//!
//! `cargo run --example full_scenario -- [config.toml] [out_dir]`

use geoloc::scenario::{run_scenario, write_outputs, ScenarioConfig};
use std::path::PathBuf;

fn main() {
    let mut args = std::env::args().skip(1);
    let config = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios/demo.toml"));
    let out_dir = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("geoloc_demo"));
    let cfg = match ScenarioConfig::load(&config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
    };
    let out = run_scenario(&cfg).unwrap_or_else(|e| {
        eprintln!("{e}");
        std::process::exit(3);
    });
    print!("{}", out.metrics.to_csv());
    for p in write_outputs(&out_dir, &out).expect("output directory is writable") {
        println!("wrote {}", p.display());
    }
}
