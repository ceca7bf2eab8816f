use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use leafquant::scenario::{load_scenario, run, verify, write_preset, RunOptions};

#[derive(Parser)]
#[command(name = "leafquant", version, about = "Run, verify and materialize quantization scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write its report, time series and dumps.
    Run {
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the integrator step count.
        #[arg(long)]
        steps: Option<usize>,
        /// Write the evolution and geometric unitaries as FQU1 files.
        #[arg(long)]
        dump_unitary: bool,
    },
    /// Run a verification suite: dirac, hermiticity, holonomy, ehrenfest, decomposition or all.
    Verify { suite: String },
    /// Write a bundled preset config to a directory.
    Preset {
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            steps,
            dump_unitary,
        } => {
            let cfg = match load_scenario(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return code(1);
                }
            };
            match run(&cfg, Some(&out), &RunOptions { steps, dump_unitary }) {
                Ok(report) => {
                    for c in &report.checks {
                        println!("{}", c.line());
                    }
                    if !report.confined {
                        println!("NOTE final state leaves [-0.9 L, 0.9 L]: escaped mass {:.3e}", report.escaped_mass);
                    }
                    println!("wrote {}", out.display());
                    code(if report.passed() { 0 } else { 3 })
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    code(e.exit_code())
                }
            }
        }
        Command::Verify { suite } => match verify(&suite) {
            Ok(report) => {
                for c in &report.checks {
                    println!("{}", c.line());
                }
                code(if report.passed() { 0 } else { 3 })
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(e.exit_code())
            }
        },
        Command::Preset { name, out } => match write_preset(&name, &out) {
            Ok(path) => {
                println!("{}", path.display());
                code(0)
            }
            Err(e) => {
                eprintln!("error: {e}");
                code(e.exit_code())
            }
        },
    }
}
