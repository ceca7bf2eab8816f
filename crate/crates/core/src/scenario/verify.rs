//! Property suites runnable from the command line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{decompose_polynomial, poisson_bracket, AlgebraError, BumpCover, PolynomialObservable};
use crate::bundle::prequant_curvature_check;
use crate::coords::Dims;
use crate::expr::{Expr, VariableBinding};
use crate::linalg::C64;
use crate::quantize::{
    dirac_symbol_defect, inner_product, quantize_affine, quantize_polynomial, FiberGrid, Ordering, QuantizeError,
    WaveSection,
};

use super::config::{OutputKind, Tolerances};
use super::run::{run, CheckResult, RunError, RunOptions};
use super::preset;

pub const SUITES: [&str; 6] = ["dirac", "hermiticity", "holonomy", "ehrenfest", "decomposition", "all"];

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("unknown suite `{0}` (valid suites: dirac, hermiticity, holonomy, ehrenfest, decomposition, all)")]
    UnknownSuite(String),
    #[error("preset {preset}: {source}")]
    Preset { preset: String, source: RunError },
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl VerifyError {
    pub fn exit_code(&self) -> i32 {
        match self {
            VerifyError::UnknownSuite(_) => 1,
            VerifyError::Preset { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub suite: String,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Run one suite, or all of them.
pub fn verify(suite: &str) -> Result<VerifyReport, VerifyError> {
    let tol = Tolerances::default();
    let checks = match suite {
        "dirac" => dirac(&tol)?,
        "hermiticity" => hermiticity(&tol)?,
        "holonomy" => holonomy()?,
        "ehrenfest" => ehrenfest(&tol)?,
        "decomposition" => decomposition(&tol)?,
        "all" => {
            let mut all = dirac(&tol)?;
            all.extend(hermiticity(&tol)?);
            all.extend(holonomy()?);
            all.extend(ehrenfest(&tol)?);
            all.extend(decomposition(&tol)?);
            all
        }
        other => return Err(VerifyError::UnknownSuite(other.to_string())),
    };
    Ok(VerifyReport {
        suite: suite.to_string(),
        checks,
    })
}

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Expr {
    Expr::constant(rng.gen_range(lo..hi))
}

/// A bounded smooth field in `(t, s1.., q1..)`.
pub(crate) fn random_field(rng: &mut ChaCha8Rng, dims: Dims) -> Expr {
    let q = Expr::var(&Dims::q(rng.gen_range(0..dims.n)));
    let q2 = Expr::var(&Dims::q(rng.gen_range(0..dims.n)));
    let s = Expr::var(&Dims::sigma(rng.gen_range(0..dims.m)));
    let t = Expr::var("t");
    let wave = uniform(rng, 0.2, 1.5)
        .mul(&q)
        .add(&uniform(rng, -1.0, 1.0).mul(&s))
        .add(&uniform(rng, -0.5, 0.5).mul(&t))
        .sin();
    let bump = uniform(rng, 0.1, 1.0).mul(&q2.powi(2)).neg().exp();
    uniform(rng, -1.0, 1.0)
        .add(&uniform(rng, -0.5, 0.5).mul(&q))
        .add(&uniform(rng, -1.0, 1.0).mul(&wave))
        .add(&uniform(rng, -1.0, 1.0).mul(&s).mul(&bump))
}

/// `a^k(t, s, q) p_k + b(t, s, q)` with random smooth coefficients.
pub(crate) fn random_affine(rng: &mut ChaCha8Rng, dims: Dims) -> PolynomialObservable {
    let a: Vec<Expr> = (0..dims.n).map(|_| random_field(rng, dims)).collect();
    PolynomialObservable::affine(&a, random_field(rng, dims))
}

/// A polynomial of the given degree in the momenta with random smooth coefficients.
pub(crate) fn random_polynomial(rng: &mut ChaCha8Rng, dims: Dims, degree: usize) -> PolynomialObservable {
    let mut f = random_affine(rng, dims);
    for d in 2..=degree {
        let index: Vec<usize> = (0..d).map(|_| rng.gen_range(0..dims.n)).collect();
        let term = PolynomialObservable::monomial(dims.n, &index, random_field(rng, dims)).expect("index in range");
        f = f.add(&term).expect("same fiber dimension");
    }
    f
}

pub(crate) fn random_binding(rng: &mut ChaCha8Rng, dims: Dims) -> VariableBinding {
    let mut draw = |k: usize| (0..k).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
    let t = draw(1)[0];
    let sigma = draw(dims.m);
    let q = draw(dims.n);
    dims.binding(t, &sigma, &q)
}

fn l2(grid: &FiberGrid, v: &[C64]) -> f64 {
    (grid.cell_volume() * v.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt()
}

/// `||([f^, g^] + i {f,g}^) psi||` for a Gaussian on a `points`-point grid.
fn grid_dirac_defect(f: &PolynomialObservable, g: &PolynomialObservable, points: usize) -> Result<f64, VerifyError> {
    let grid = FiberGrid::new(1, points, 10.0)?;
    let (t, sigma) = (0.3, [0.4]);
    let fh = quantize_affine(f, &grid, t, &sigma)?;
    let gh = quantize_affine(g, &grid, t, &sigma)?;
    let bh = quantize_affine(&poisson_bracket(f, g)?, &grid, t, &sigma)?;
    let residual = fh.commutator(&gh).add_scaled(&bh, C64::new(0.0, 1.0));
    let psi = WaveSection::gaussian(&grid, &[0.3], 1.0, &[0.5]);
    Ok(l2(&grid, &residual.apply(&psi.amplitudes)))
}

fn dirac(tol: &Tolerances) -> Result<Vec<CheckResult>, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let dims = Dims::new(1 + i % 2, 1 + (i / 2) % 2);
        let f = random_affine(&mut rng, dims);
        let g = random_affine(&mut rng, dims);
        let points: Vec<VariableBinding> = (0..100).map(|_| random_binding(&mut rng, dims)).collect();
        worst = worst.max(dirac_symbol_defect(&f, &g, &points)?);
    }
    let mut min_ratio = f64::INFINITY;
    for _ in 0..5 {
        let dims = Dims::new(1, 1);
        let f = random_affine(&mut rng, dims);
        let g = random_affine(&mut rng, dims);
        let coarse = grid_dirac_defect(&f, &g, 256)?;
        let fine = grid_dirac_defect(&f, &g, 512)?;
        min_ratio = min_ratio.min(coarse / fine);
    }
    Ok(vec![
        CheckResult::at_most("dirac_symbol", worst, tol.dirac_symbol),
        CheckResult::at_least("dirac_grid_ratio", min_ratio, tol.convergence_ratio),
    ])
}

fn hermiticity(tol: &Tolerances) -> Result<Vec<CheckResult>, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut affine: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for i in 0..100 {
        let dims = Dims::new(1, 1 + i % 2);
        let grid = FiberGrid::new(dims.n, if dims.n == 1 { 64 } else { 12 }, 6.0)?;
        let f = random_affine(&mut rng, dims);
        let (t, sigma) = (rng.gen_range(-1.0..1.0), [rng.gen_range(-1.0..1.0)]);
        let op = quantize_affine(&f, &grid, t, &sigma)?;
        affine = affine.max(op.hermiticity_defect());
        let mut noise = || {
            let amps = (0..grid.size()).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            WaveSection::new(&grid, amps)
        };
        let (rho, rho2) = (noise(), noise());
        let lhs = inner_product(&rho.apply(&op), &rho2)?;
        let rhs = inner_product(&rho, &rho2.apply(&op))?;
        symmetry = symmetry.max((lhs - rhs).norm() / lhs.norm().max(1.0));
    }
    let mut poly: f64 = 0.0;
    for i in 0..20 {
        let dims = Dims::new(1, 1);
        let grid = FiberGrid::new(1, 48, 6.0)?;
        let f = random_polynomial(&mut rng, dims, 2 + i % 2);
        let cover = BumpCover::uniform_1d(6.0, 1 + i % 3);
        let op = quantize_polynomial(&f, &cover, &grid, 0.2, &[0.1], Ordering::Symmetric)?;
        poly = poly.max(op.hermiticity_defect());
    }
    Ok(vec![
        CheckResult::at_most("hermiticity_affine", affine, tol.hermiticity),
        CheckResult::at_most("hermiticity_polynomial", poly, tol.hermiticity),
        CheckResult::at_most("inner_product_symmetry", symmetry, 1e-10),
    ])
}

fn preset_checks(name: &str, outputs: Option<&[OutputKind]>) -> Result<Vec<CheckResult>, VerifyError> {
    let wrap = |source: RunError| VerifyError::Preset {
        preset: name.to_string(),
        source,
    };
    let mut config = preset(name).map_err(|e| wrap(e.into()))?;
    if let Some(o) = outputs {
        config.outputs = o.to_vec();
    }
    let report = run(&config, None, &RunOptions::default()).map_err(wrap)?;
    Ok(report
        .checks
        .into_iter()
        .map(|mut c| {
            c.name = format!("{name}/{}", c.name);
            c
        })
        .collect())
}

fn holonomy() -> Result<Vec<CheckResult>, VerifyError> {
    let mut checks = Vec::new();
    for n in [1, 2] {
        let r = prequant_curvature_check(n);
        let bad = r.components.iter().filter(|c| c.imag.as_const() != Some(c.expected_imag)).count();
        checks.push(CheckResult::at_most(&format!("prequantization_curvature_n{n}"), bad as f64, 0.0));
    }
    checks.extend(preset_checks("flat_loop", None)?);
    checks.extend(preset_checks("nonabelian_loop", None)?);
    checks.extend(preset_checks("reparam_pair", None)?);
    Ok(checks)
}

fn ehrenfest(tol: &Tolerances) -> Result<Vec<CheckResult>, VerifyError> {
    // i[H, q] = p for H = p^2/2 + q^2/2, tested on a smooth state
    let grid = FiberGrid::new(1, 512, 8.0)?;
    let h = PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5))?
        .add(&PolynomialObservable::scalar(1, Expr::var("q1").powi(2).mul(&Expr::constant(0.5))))?;
    let cover = BumpCover::single(1, 8.0);
    let hh = quantize_polynomial(&h, &cover, &grid, 0.0, &[], Ordering::Symmetric)?;
    let qh = quantize_affine(&PolynomialObservable::position(1, 0), &grid, 0.0, &[])?;
    let ph = quantize_affine(&PolynomialObservable::momentum(1, 0), &grid, 0.0, &[])?;
    let psi = WaveSection::gaussian(&grid, &[0.5], 1.0, &[0.0]);
    let diff = hh.commutator(&qh).scale(C64::new(0.0, 1.0)).sub(&ph);
    let canonical = l2(&grid, &diff.apply(&psi.amplitudes));

    let mut checks = vec![CheckResult::at_most("heisenberg_canonical", canonical, tol.ehrenfest)];
    checks.extend(preset_checks("driven_oscillator", Some(&[OutputKind::Ehrenfest]))?);
    Ok(checks)
}

fn decomposition(tol: &Tolerances) -> Result<Vec<CheckResult>, VerifyError> {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let dims = Dims::new(1, 1);
    let mut partition: f64 = 0.0;
    let mut recon: f64 = 0.0;
    for charts in 1..=3 {
        let cover = BumpCover::uniform_1d(5.0, charts);
        for degree in 2..=4 {
            let f = random_polynomial(&mut rng, dims, degree);
            let fac = decompose_polynomial(&f, &cover)?;
            for q in cover.samples(200) {
                for d in 2..=degree as u32 {
                    partition = partition.max((cover.partition_sum(d, &q).map_err(AlgebraError::from)? - 1.0).abs());
                }
                let b = dims.binding(rng.gen_range(-1.0..1.0), &[rng.gen_range(-1.0..1.0)], &q);
                let p = [rng.gen_range(-2.0..2.0)];
                let want = f.eval(&b, &p).map_err(AlgebraError::from)?;
                let got = fac.eval(&b, &p).map_err(AlgebraError::from)?;
                recon = recon.max((want - got).abs() / want.abs().max(1.0));
            }
        }
    }
    let mut checks = vec![
        CheckResult::at_most("partition_of_unity", partition, tol.decomposition),
        CheckResult::at_most("reconstruction", recon, tol.decomposition),
    ];
    checks.extend(preset_checks("quartic_decomposition", None)?);
    Ok(checks)
}
