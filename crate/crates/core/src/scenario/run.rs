//! Running a scenario end to end.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::connection_curvature;
use crate::evolve::{
    classical_hamilton_flow, evolve, geometric_factor, split_evolution, split_evolution_state, ClassicalState,
    DrivenHamiltonian, EvolutionMode, EvolveError, EvolveOptions, Observation, Phases, SplitReport,
};
use crate::linalg::{unitarity_defect, DenseMatrix};

use super::config::{ConfigError, GridSpec, OutputKind, Scenario, ScenarioConfig};
use super::output::{timeseries_csv, write_fqu};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{stage}: {source}")]
    Numerical { stage: &'static str, source: EvolveError },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

impl RunError {
    /// 1 for invalid input, 2 for failures while computing or writing.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Numerical { .. } | RunError::Io { .. } => 2,
        }
    }
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, RunError>;
}

impl<T> Stage<T> for Result<T, EvolveError> {
    fn stage(self, stage: &'static str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Numerical { stage, source })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    AtMost,
    AtLeast,
}

/// A measured quantity compared with its tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub relation: Relation,
    pub passed: bool,
}

impl CheckResult {
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            measured,
            bound,
            relation: Relation::AtMost,
            passed: measured.is_finite() && measured <= bound,
        }
    }

    pub fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        CheckResult {
            name: name.to_string(),
            measured,
            bound,
            relation: Relation::AtLeast,
            passed: measured.is_finite() && measured >= bound,
        }
    }

    /// `PASS name measured <= bound`.
    pub fn line(&self) -> String {
        let op = match self.relation {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        };
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!("{verdict} {} {:.3e} {op} {:.3e}", self.name, self.measured, self.bound)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolonomyReport {
    pub segments: usize,
    /// `||U_geo - I||_F`.
    pub distance_from_identity: f64,
    pub unitarity_defect: f64,
    /// Closed path and identically vanishing curvature.
    pub flat: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub segments: usize,
    /// `||U_geo(segments) - U_geo(segments / 2)||_F`.
    pub difference: f64,
    pub unitarity_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Ratio of successive differences under step doubling.
    pub ratio: f64,
    /// `||R(2s) - R(s)||_F` with `R(s) = (4 U(s) - U(s/2)) / 3`.
    pub richardson_stability: f64,
    /// `||R - I||_F` for the finest extrapolation.
    pub pinned_distance_from_identity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReparamRow {
    pub warp: String,
    /// `||U_geo(warped) - U_geo(first warp)||_F`.
    pub defect: f64,
    pub unitarity_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EhrenfestReport {
    pub max_q_residual: f64,
    pub max_p_residual: f64,
    pub compared_times: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub charts: usize,
    pub degree: usize,
    pub samples: usize,
    /// `max |sum_xi l_xi^d - 1|` over sample points and degrees.
    pub partition_defect: f64,
    /// `max |H - sum of products|` relative to `max(1, |H|)`.
    pub reconstruction_defect: f64,
}

/// Everything a run measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub name: String,
    pub version: String,
    pub mode: EvolutionMode,
    pub steps: usize,
    pub grid: GridSpec,
    pub phases: Phases,
    /// `||U^dagger U - I||_F` of the evolution operator, or the largest norm drift in state mode.
    pub unitarity_defect: f64,
    pub max_hermiticity_defect: f64,
    /// Share of the final probability outside `[-0.9 L, 0.9 L]^n`.
    pub escaped_mass: f64,
    /// `escaped_mass <= tolerances.confinement`.
    pub confined: bool,
    pub holonomy: Option<HolonomyReport>,
    pub commutator: Option<SplitReport>,
    pub convergence: Option<ConvergenceReport>,
    pub reparametrization: Option<Vec<ReparamRow>>,
    pub ehrenfest: Option<EhrenfestReport>,
    pub decomposition: Option<DecompositionReport>,
    pub rows: Vec<Observation>,
    pub checks: Vec<CheckResult>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    /// Replaces `integrator.steps`.
    pub steps: Option<usize>,
    pub dump_unitary: bool,
}

fn is_flat(dh: &DrivenHamiltonian) -> bool {
    dh.path().is_closed()
        && connection_curvature(dh.bundle())
            .iter()
            .flatten()
            .flatten()
            .all(|e| e.is_zero())
}

fn decomposition_report(dh: &DrivenHamiltonian, charts: usize) -> Result<DecompositionReport, EvolveError> {
    let dims = dh.dims();
    let cover = dh.cover();
    let per_axis = if dims.n == 1 { 200 } else { 15 };
    let points = cover.samples(per_axis);
    let degree = dh.dynamic().degree();
    let (t0, t1) = dh.span();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut partition: f64 = 0.0;
    let mut recon: f64 = 0.0;
    for (i, q) in points.iter().enumerate() {
        for d in 2..=degree.max(2) as u32 {
            partition = partition.max((cover.partition_sum(d, q)? - 1.0).abs());
        }
        let t = t0 + (t1 - t0) * (i as f64 + 0.5) / points.len() as f64;
        let b = dh.binding(t, q)?;
        let p: Vec<f64> = (0..dims.n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let want = dh.dynamic().eval(&b, &p)?;
        let got = dh.factorization().eval(&b, &p)?;
        recon = recon.max((want - got).abs() / want.abs().max(1.0));
    }
    Ok(DecompositionReport {
        charts,
        degree,
        samples: points.len(),
        partition_defect: partition,
        reconstruction_defect: recon,
    })
}

fn ehrenfest_report(
    dh: &DrivenHamiltonian,
    observations: &[Observation],
    steps: usize,
) -> Result<EhrenfestReport, EvolveError> {
    let first = &observations[0];
    let (t0, t1) = dh.span();
    let start = ClassicalState {
        t: t0,
        q: first.exp_q.clone(),
        p: first.exp_p.clone(),
    };
    let traj = classical_hamilton_flow(dh, &start, t1, steps)?;
    let dt = (t1 - t0) / steps as f64;
    let (mut dq, mut dp): (f64, f64) = (0.0, 0.0);
    for o in observations {
        let c = &traj[((o.t - t0) / dt).round() as usize];
        for k in 0..o.exp_q.len() {
            dq = dq.max((o.exp_q[k] - c.q[k]).abs());
            dp = dp.max((o.exp_p[k] - c.p[k]).abs());
        }
    }
    Ok(EhrenfestReport {
        max_q_residual: dq,
        max_p_residual: dp,
        compared_times: observations.len(),
    })
}

fn richardson(fine: &DenseMatrix, coarse: &DenseMatrix) -> DenseMatrix {
    (fine * crate::linalg::C64::new(4.0, 0.0) - coarse) / crate::linalg::C64::new(3.0, 0.0)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn write_matrix(path: PathBuf, m: &DenseMatrix) -> Result<(), RunError> {
    let mut buf = Vec::new();
    write_fqu(&mut buf, m).map_err(|e| RunError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    write_file(&path, &buf)
}

/// Run a scenario, writing `report.json`, `timeseries.csv` and any matrix
/// dumps into `out_dir` when one is given.
pub fn run(config: &ScenarioConfig, out_dir: Option<&Path>, options: &RunOptions) -> Result<RunReport, RunError> {
    let started = Instant::now();
    let mut config = config.clone();
    if let Some(steps) = options.steps {
        config.integrator.steps = steps;
    }
    if options.dump_unitary && !config.wants(OutputKind::Unitary) {
        config.outputs.push(OutputKind::Unitary);
    }
    let Scenario {
        config,
        system: dh,
        warps,
        initial,
    } = config.build()?;
    let tol = config.tolerances.clone();
    let steps = config.integrator.steps;
    let stride = config.integrator.row_stride();
    let t1 = dh.span().1;
    let mut checks = Vec::new();

    let ehrenfest_wanted = config.wants(OutputKind::Ehrenfest);
    let evo_options = EvolveOptions {
        mode: config.integrator.mode,
        emit_trajectory: false,
        sample_every: if ehrenfest_wanted { 1 } else { stride },
    };
    let result = evolve(&dh, t1, steps, &evo_options, Some(&initial)).stage("evolve")?;
    let observations = result.observations;
    let last_index = observations.len() - 1;
    let rows: Vec<Observation> = if ehrenfest_wanted {
        observations
            .iter()
            .enumerate()
            .filter(|(i, _)| i % stride == 0 || *i == last_index)
            .map(|(_, o)| o.clone())
            .collect()
    } else {
        observations.clone()
    };
    let unitarity = observations
        .iter()
        .map(|o| o.unitarity_defect)
        .fold(result.unitarity_defect, f64::max);
    checks.push(CheckResult::at_most("unitarity", unitarity, tol.unitarity));
    checks.push(CheckResult::at_most("hermiticity", result.max_hermiticity_defect, tol.hermiticity));
    let final_state = result.final_state.expect("initial state was given");
    let escaped = 1.0 - final_state.mass_fraction_within(0.9);
    let phases = result.phases.expect("observations were recorded");

    let mut geo_cache: Option<DenseMatrix> = None;
    let mut holonomy = None;
    if config.wants(OutputKind::Holonomy) || config.wants(OutputKind::Convergence) || config.wants(OutputKind::Unitary) {
        let segments = config.integrator.steps;
        let u = geometric_factor(&dh, t1, segments).stage("geometric factor")?;
        let defect = unitarity_defect(&u);
        let distance = (&u - DenseMatrix::identity(u.nrows(), u.ncols())).norm();
        let flat = is_flat(&dh);
        checks.push(CheckResult::at_most("geometric_unitarity", defect, tol.unitarity));
        if flat {
            checks.push(CheckResult::at_most("flat_holonomy", distance, tol.flat_holonomy));
        }
        holonomy = Some(HolonomyReport {
            segments,
            distance_from_identity: distance,
            unitarity_defect: defect,
            flat,
        });
        geo_cache = Some(u);
    }

    let mut convergence = None;
    if config.wants(OutputKind::Convergence) {
        let s = steps;
        let mid = geo_cache.clone().expect("computed above");
        let coarse = geometric_factor(&dh, t1, s / 2).stage("convergence")?;
        let fine = geometric_factor(&dh, t1, 2 * s).stage("convergence")?;
        let d1 = (&mid - &coarse).norm();
        let d2 = (&fine - &mid).norm();
        let r1 = richardson(&mid, &coarse);
        let r2 = richardson(&fine, &mid);
        let stability = (&r2 - &r1).norm();
        let pinned = (&r2 - DenseMatrix::identity(r2.nrows(), r2.ncols())).norm();
        let rows = vec![
            ConvergenceRow {
                segments: s,
                difference: d1,
                unitarity_defect: unitarity_defect(&mid),
            },
            ConvergenceRow {
                segments: 2 * s,
                difference: d2,
                unitarity_defect: unitarity_defect(&fine),
            },
        ];
        let worst = unitarity_defect(&coarse).max(unitarity_defect(&fine));
        checks.push(CheckResult::at_most("convergence_unitarity", worst, tol.unitarity));
        checks.push(CheckResult::at_least("convergence_ratio", d1 / d2, tol.convergence_ratio));
        checks.push(CheckResult::at_most("self_convergence", d2, tol.self_convergence));
        checks.push(CheckResult::at_most("richardson", stability, tol.richardson));
        if dh.path().is_closed() && !is_flat(&dh) {
            checks.push(CheckResult::at_least("nontrivial_holonomy", pinned, tol.nontrivial_holonomy));
        }
        convergence = Some(ConvergenceReport {
            rows,
            ratio: d1 / d2,
            richardson_stability: stability,
            pinned_distance_from_identity: pinned,
        });
    }

    let mut reparametrization = None;
    if config.wants(OutputKind::Reparametrization) {
        let segments = config.integrator.steps;
        let mut base: Option<DenseMatrix> = None;
        let mut out = Vec::new();
        for (src, w) in config.path.warps.iter().zip(&warps) {
            let warped = dh.with_path(dh.path().reparametrize(w).map_err(EvolveError::from).stage("reparametrization")?)
                .stage("reparametrization")?;
            let u = geometric_factor(&warped, t1, segments).stage("reparametrization")?;
            let defect_u = unitarity_defect(&u);
            checks.push(CheckResult::at_most(&format!("warp_unitarity[{src}]"), defect_u, tol.unitarity));
            match &base {
                None => base = Some(u),
                Some(b) => {
                    let defect = (&u - b).norm();
                    checks.push(CheckResult::at_most(&format!("reparametrization[{src}]"), defect, tol.reparametrization));
                    out.push(ReparamRow {
                        warp: src.clone(),
                        defect,
                        unitarity_defect: defect_u,
                    });
                }
            }
        }
        reparametrization = Some(out);
    }

    let ehrenfest = if ehrenfest_wanted {
        let e = ehrenfest_report(&dh, &observations, steps).stage("classical oracle")?;
        checks.push(CheckResult::at_most("ehrenfest_q", e.max_q_residual, tol.ehrenfest));
        checks.push(CheckResult::at_most("ehrenfest_p", e.max_p_residual, tol.ehrenfest));
        Some(e)
    } else {
        None
    };

    let commutator = if config.wants(OutputKind::Split) {
        let report = match config.integrator.mode {
            EvolutionMode::Unitary => split_evolution(&dh, steps, tol.factorization).map(|s| s.report),
            EvolutionMode::State => split_evolution_state(&dh, steps, &initial, tol.factorization),
        }
        .stage("split evolution")?;
        if report.asserted {
            checks.push(CheckResult::at_most("factorization", report.factorization_defect, tol.factorization));
        }
        Some(report)
    } else {
        None
    };

    let decomposition = if config.wants(OutputKind::Decomposition) {
        let d = decomposition_report(&dh, config.cover.charts).stage("decomposition")?;
        checks.push(CheckResult::at_most("partition_of_unity", d.partition_defect, tol.decomposition));
        checks.push(CheckResult::at_most("reconstruction", d.reconstruction_defect, tol.decomposition));
        Some(d)
    } else {
        None
    };

    let report = RunReport {
        name: config.name.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: config.integrator.mode,
        steps,
        grid: config.grid,
        phases,
        unitarity_defect: unitarity,
        max_hermiticity_defect: result.max_hermiticity_defect,
        escaped_mass: escaped,
        confined: escaped <= tol.confinement,
        holonomy,
        commutator,
        convergence,
        reparametrization,
        ehrenfest,
        decomposition,
        rows,
        checks,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Io {
            path: dir.display().to_string(),
            message: e.to_string(),
        })?;
        write_file(&dir.join("report.json"), report.to_json().as_bytes())?;
        if config.wants(OutputKind::Timeseries) {
            let csv = timeseries_csv(&report.rows, config.dims.m, config.dims.n);
            write_file(&dir.join("timeseries.csv"), csv.as_bytes())?;
        }
        if config.wants(OutputKind::Unitary) {
            if let Some(u) = &result.unitary {
                write_matrix(dir.join("unitary.fqu"), u)?;
            }
            if let Some(u) = &geo_cache {
                write_matrix(dir.join("geometric.fqu"), u)?;
            }
        }
    }
    Ok(report)
}
