//! Run a bundled preset (default `flat_loop`) and write its outputs.
//!
//! `cargo run --release --example run_preset -- nonabelian_loop /tmp/out`

use std::path::PathBuf;

use leafquant::scenario::{preset, preset_names, run, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "flat_loop".into());
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join(&name));
    let config = match preset(&name) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            eprintln!("presets: {}", preset_names().collect::<Vec<_>>().join(", "));
            std::process::exit(1);
        }
    };
    let report = run(&config, Some(&out), &RunOptions::default()).unwrap();
    for c in &report.checks {
        println!("{}", c.line());
    }
    println!(
        "phases: total {:.6}, geometric {:.6}, dynamic {:.6}",
        report.phases.total, report.phases.geometric, report.phases.dynamic
    );
    println!("wrote {} in {:.1} s", out.display(), report.wall_clock_seconds);
}
