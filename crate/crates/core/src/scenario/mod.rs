//! Scenario files, bundled presets, runs and verification suites.
//!
//! A scenario is a JSON document describing the bundle dimensions, the
//! connection, the parameter path, the dynamic Hamiltonian, the fiber grid,
//! the integrator, the initial Gaussian and the diagnostics to produce.
//! [`run`] turns it into a [`RunReport`] and, given a directory, writes
//! `report.json`, `timeseries.csv` and `FQU1` matrix dumps.

mod config;
mod output;
mod run;
mod verify;

use std::path::{Path, PathBuf};

pub use config::{
    load_scenario, parse_scenario, ConfigError, ConnectionSpec, CoverSpec, DimsSpec, GridSpec, InitialSpec,
    IntegratorSpec, MonomialSpec, OutputKind, PathKind, PathSpec, Scenario, ScenarioConfig, Tolerances,
};
pub use output::{csv_header, read_fqu, timeseries_csv, write_fqu};
pub use run::{
    run, CheckResult, ConvergenceReport, ConvergenceRow, DecompositionReport, EhrenfestReport, HolonomyReport,
    Relation, ReparamRow, RunError, RunOptions, RunReport,
};
pub use verify::{verify, VerifyError, VerifyReport, SUITES};

const PRESETS: [(&str, &str); 5] = [
    ("flat_loop", include_str!("../../presets/flat_loop.json")),
    ("nonabelian_loop", include_str!("../../presets/nonabelian_loop.json")),
    ("driven_oscillator", include_str!("../../presets/driven_oscillator.json")),
    ("reparam_pair", include_str!("../../presets/reparam_pair.json")),
    ("quartic_decomposition", include_str!("../../presets/quartic_decomposition.json")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

/// The JSON text of a bundled preset.
pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

pub fn preset(name: &str) -> Result<ScenarioConfig, ConfigError> {
    let src = preset_source(name).ok_or_else(|| ConfigError::UnknownPreset {
        name: name.to_string(),
        known: preset_names().collect::<Vec<_>>().join(", "),
    })?;
    parse_scenario(src)
}

/// Write `<dir>/<name>.json` and return its path.
pub fn write_preset(name: &str, dir: &Path) -> Result<PathBuf, RunError> {
    preset(name)?;
    let src = preset_source(name).expect("checked above");
    let io = |path: &Path, e: std::io::Error| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let path = dir.join(format!("{name}.json"));
    std::fs::write(&path, src).map_err(|e| io(&path, e))?;
    Ok(path)
}
