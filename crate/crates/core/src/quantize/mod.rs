//! Schrödinger operators on a periodic fiber grid.
//!
//! An affine observable `f = a^k p_k + b` is realised as
//! `f^ = -i a^k d_k - (i/2) d_k a^k + b`. On the grid the first-order part
//! is assembled in the symmetric form `-(i/2)(A_k D_k + D_k A_k)`, which is
//! exactly Hermitian because the periodic central difference `D_k` is real
//! and antisymmetric.

mod symbol;

pub use symbol::{dirac_symbol_defect, ComplexExpr, FirstOrderSymbol};

use itertools::Itertools;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algebra::{decompose_polynomial, AffineFactorization, AlgebraError, BumpCover, PolynomialObservable};
use crate::coords::{as_strs, Dims};
use crate::expr::{CompiledExpr, EvalError, Expr};
use crate::linalg::{SparseMatrix, C64};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum QuantizeError {
    #[error("grid needs at least 8 points per axis, got {0}")]
    TooFewPoints(usize),
    #[error("operator assembly supports fiber dimension 1 or 2, got {0}")]
    FiberDim(usize),
    #[error("grid half-width must be positive and finite, got {0}")]
    HalfWidth(f64),
    #[error("axis {axis} out of range for fiber dimension {n}")]
    Axis { axis: usize, n: usize },
    #[error("observable of degree {0} is not affine in the momenta")]
    NotAffine(usize),
    #[error("fiber dimension {observable} of the observable differs from the grid ({grid})")]
    DimensionMismatch { observable: usize, grid: usize },
    #[error("wave sections live on different grids")]
    GridMismatch,
    #[error("coefficient evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Periodic grid on `[-L, L)^n` with `N` points per axis.
///
/// Flat indices run with axis 0 fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberGrid {
    n: usize,
    points: usize,
    half_width: f64,
}

impl FiberGrid {
    pub fn new(n: usize, points: usize, half_width: f64) -> Result<Self, QuantizeError> {
        if !(1..=2).contains(&n) {
            return Err(QuantizeError::FiberDim(n));
        }
        if points < 8 {
            return Err(QuantizeError::TooFewPoints(points));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(QuantizeError::HalfWidth(half_width));
        }
        Ok(FiberGrid {
            n,
            points,
            half_width,
        })
    }

    pub fn fiber_dim(&self) -> usize {
        self.n
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// `h = 2L / N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    /// Total number of grid points.
    pub fn size(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn axis_values(&self) -> Vec<f64> {
        (0..self.points).map(|i| -self.half_width + i as f64 * self.spacing()).collect()
    }

    /// Coordinates of the flat index `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|k| -self.half_width + ((idx / self.stride(k)) % self.points) as f64 * h)
            .collect()
    }

    fn stride(&self, axis: usize) -> usize {
        self.points.pow(axis as u32)
    }

    /// Flat index of the neighbour `shift` steps along `axis`, periodic.
    fn neighbour(&self, idx: usize, axis: usize, shift: isize) -> usize {
        let s = self.stride(axis);
        let i = (idx / s) % self.points;
        let j = (i as isize + shift).rem_euclid(self.points as isize) as usize;
        idx - i * s + j * s
    }
}

/// Complex amplitudes on a grid, stamped with the time and parameter values
/// they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveSection {
    pub grid: FiberGrid,
    pub amplitudes: Vec<C64>,
    pub time: f64,
    pub sigma: Vec<f64>,
}

impl WaveSection {
    pub fn new(grid: &FiberGrid, amplitudes: Vec<C64>) -> Self {
        assert_eq!(amplitudes.len(), grid.size(), "amplitude count must match the grid");
        WaveSection {
            grid: grid.clone(),
            amplitudes,
            time: 0.0,
            sigma: Vec::new(),
        }
    }

    pub fn from_fn(grid: &FiberGrid, f: impl Fn(&[f64]) -> C64) -> Self {
        let amplitudes = (0..grid.size()).map(|i| f(&grid.point(i))).collect();
        Self::new(grid, amplitudes)
    }

    /// `(pi w^2)^(-n/4) exp(-|q - c|^2 / 2w^2) exp(i k.q)`, unit norm in the continuum.
    pub fn gaussian(grid: &FiberGrid, center: &[f64], width: f64, kick: &[f64]) -> Self {
        let n = grid.fiber_dim();
        let norm = (std::f64::consts::PI * width * width).powf(-(n as f64) / 4.0);
        Self::from_fn(grid, |q| {
            let r2: f64 = q.iter().zip(center).map(|(x, c)| (x - c) * (x - c)).sum();
            let phase: f64 = q.iter().zip(kick).map(|(x, k)| x * k).sum();
            Complex64::from_polar(norm * (-r2 / (2.0 * width * width)).exp(), phase)
        })
    }

    pub fn at(mut self, time: f64, sigma: &[f64]) -> Self {
        self.time = time;
        self.sigma = sigma.to_vec();
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        self.grid.cell_volume() * self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>()
    }

    pub fn normalized(mut self) -> Self {
        let s = self.norm_sqr().sqrt();
        self.amplitudes.iter_mut().for_each(|z| *z /= s);
        self
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Share of the mass inside `[-fraction L, fraction L]^n`.
    pub fn mass_fraction_within(&self, fraction: f64) -> f64 {
        let limit = fraction * self.grid.half_width();
        let inside: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.point(*i).iter().all(|x| x.abs() <= limit))
            .map(|(_, z)| z.norm_sqr())
            .sum();
        let total: f64 = self.amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if total == 0.0 {
            1.0
        } else {
            inside / total
        }
    }

    pub fn apply(&self, op: &SparseMatrix) -> Self {
        WaveSection {
            amplitudes: op.apply(&self.amplitudes),
            ..self.clone()
        }
    }

    /// `<self| op |self>` with the physics convention (antilinear in the bra).
    pub fn expectation(&self, op: &SparseMatrix) -> C64 {
        overlap(self, &self.apply(op)).expect("same grid")
    }
}

/// `<rho | rho'> = h^n sum_j rho_j conj(rho'_j)`, linear in the first slot.
pub fn inner_product(rho: &WaveSection, rho_prime: &WaveSection) -> Result<C64, QuantizeError> {
    if rho.grid != rho_prime.grid {
        return Err(QuantizeError::GridMismatch);
    }
    let s: C64 = rho
        .amplitudes
        .iter()
        .zip(&rho_prime.amplitudes)
        .map(|(a, b)| a * b.conj())
        .sum();
    Ok(s * rho.grid.cell_volume())
}

/// `h^n sum_j conj(bra_j) ket_j`, the bra-ket overlap used for phases.
pub fn overlap(bra: &WaveSection, ket: &WaveSection) -> Result<C64, QuantizeError> {
    inner_product(ket, bra)
}

/// `||A - A^dagger||_F / max(1, ||A||_F)`.
pub fn hermiticity_defect(op: &SparseMatrix) -> f64 {
    op.hermiticity_defect()
}

/// Periodic central difference along `axis`: `+-1/(2h)` at the two neighbours.
pub fn derivative_matrix(grid: &FiberGrid, axis: usize) -> Result<SparseMatrix, QuantizeError> {
    if axis >= grid.fiber_dim() {
        return Err(QuantizeError::Axis {
            axis,
            n: grid.fiber_dim(),
        });
    }
    let c = 1.0 / (2.0 * grid.spacing());
    let trip = (0..grid.size()).flat_map(|j| {
        [
            (j, grid.neighbour(j, axis, 1), C64::new(c, 0.0)),
            (j, grid.neighbour(j, axis, -1), C64::new(-c, 0.0)),
        ]
    });
    Ok(SparseMatrix::from_triplets(grid.size(), trip))
}

/// Multiplication by the `axis` coordinate.
pub fn position_operator(grid: &FiberGrid, axis: usize) -> SparseMatrix {
    let values: Vec<C64> = (0..grid.size()).map(|i| C64::new(grid.point(i)[axis], 0.0)).collect();
    SparseMatrix::diagonal(&values)
}

/// Samples of a field in `(t, sigma, q)` at every grid point.
pub fn sample_field(expr: &Expr, grid: &FiberGrid, t: f64, sigma: &[f64]) -> Result<Vec<f64>, QuantizeError> {
    if let Some(c) = expr.as_const() {
        return Ok(vec![c; grid.size()]);
    }
    let slots = Dims::new(sigma.len(), grid.fiber_dim()).slots();
    let compiled = CompiledExpr::new(expr, &as_strs(&slots))?;
    let mut values = vec![t];
    values.extend_from_slice(sigma);
    let base = values.len();
    values.resize(base + grid.fiber_dim(), 0.0);
    (0..grid.size())
        .map(|i| {
            for (k, x) in grid.point(i).into_iter().enumerate() {
                values[base + k] = x;
            }
            compiled.eval(&values).map_err(QuantizeError::from)
        })
        .collect()
}

fn check_observable(f: &PolynomialObservable, grid: &FiberGrid) -> Result<(), QuantizeError> {
    if f.fiber_dim() != grid.fiber_dim() {
        return Err(QuantizeError::DimensionMismatch {
            observable: f.fiber_dim(),
            grid: grid.fiber_dim(),
        });
    }
    Ok(())
}

/// `f^ = -(i/2) sum_k (A_k D_k + D_k A_k) + B` for `f = a^k p_k + b`.
pub fn quantize_affine(
    f: &PolynomialObservable,
    grid: &FiberGrid,
    t: f64,
    sigma: &[f64],
) -> Result<SparseMatrix, QuantizeError> {
    check_observable(f, grid)?;
    if !f.is_affine() {
        return Err(QuantizeError::NotAffine(f.degree()));
    }
    let size = grid.size();
    let c = 1.0 / (2.0 * grid.spacing());
    let mut trip: Vec<(usize, usize, C64)> = Vec::with_capacity(5 * size);
    for (k, a) in f.linear_coefficients().iter().enumerate() {
        if a.is_zero() {
            continue;
        }
        let av = sample_field(a, grid, t, sigma)?;
        for j in 0..size {
            for (shift, sign) in [(1, 1.0), (-1, -1.0)] {
                let l = grid.neighbour(j, k, shift);
                // -(i/2) D_jl (a_j + a_l)
                trip.push((j, l, C64::new(0.0, -0.5 * sign * c * (av[j] + av[l]))));
            }
        }
    }
    let b = f.scalar_part();
    if !b.is_zero() {
        let bv = sample_field(&b, grid, t, sigma)?;
        trip.extend(bv.iter().enumerate().map(|(j, v)| (j, j, C64::new(*v, 0.0))));
    }
    Ok(SparseMatrix::from_triplets(size, trip))
}

/// The unsymmetrised form `-i A_k D_k - (i/2) diag(d_k a^k) + B`.
///
/// Agrees with [`quantize_affine`] to `O(h^2)` on smooth states but is not
/// exactly Hermitian.
pub fn quantize_affine_literal(
    f: &PolynomialObservable,
    grid: &FiberGrid,
    t: f64,
    sigma: &[f64],
) -> Result<SparseMatrix, QuantizeError> {
    check_observable(f, grid)?;
    if !f.is_affine() {
        return Err(QuantizeError::NotAffine(f.degree()));
    }
    let size = grid.size();
    let minus_i = C64::new(0.0, -1.0);
    let mut op = SparseMatrix::zeros(size);
    let mut divergence = Expr::zero();
    for (k, a) in f.linear_coefficients().iter().enumerate() {
        let av: Vec<C64> = sample_field(a, grid, t, sigma)?.into_iter().map(|x| C64::new(x, 0.0)).collect();
        let ad = SparseMatrix::diagonal(&av).matmul(&derivative_matrix(grid, k)?);
        op = op.add_scaled(&ad, minus_i);
        divergence = divergence.add(&a.diff(&Dims::q(k)));
    }
    let diag: Vec<C64> = sample_field(&divergence, grid, t, sigma)?
        .into_iter()
        .zip(sample_field(&f.scalar_part(), grid, t, sigma)?)
        .map(|(d, b)| C64::new(b, -0.5 * d))
        .collect();
    Ok(op.add(&SparseMatrix::diagonal(&diag)))
}

/// How products of non-commuting affine factors are ordered.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    /// Average over all orderings of the factors.
    #[default]
    Symmetric,
    /// `g_1 g_2 .. g_d` in the order produced by the decomposition.
    Left,
    /// `g_d .. g_2 g_1`.
    Right,
}

impl std::str::FromStr for Ordering {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "symmetric" => Ok(Ordering::Symmetric),
            "left" => Ok(Ordering::Left),
            "right" => Ok(Ordering::Right),
            other => Err(format!("unknown ordering `{other}` (expected symmetric, left or right)")),
        }
    }
}

fn product(ops: &[&SparseMatrix]) -> SparseMatrix {
    let mut it = ops.iter();
    let first = (*it.next().expect("at least one factor")).clone();
    it.fold(first, |acc, op| acc.matmul(op))
}

/// Quantize a polynomial observable through its decomposition into products
/// of affine factors over `cover`.
pub fn quantize_polynomial(
    f: &PolynomialObservable,
    cover: &BumpCover,
    grid: &FiberGrid,
    t: f64,
    sigma: &[f64],
    ordering: Ordering,
) -> Result<SparseMatrix, QuantizeError> {
    check_observable(f, grid)?;
    quantize_factorization(&decompose_polynomial(f, cover)?, grid, t, sigma, ordering)
}

/// Sum over terms of the ordered products of the quantized factors.
pub fn quantize_factorization(
    factorization: &AffineFactorization,
    grid: &FiberGrid,
    t: f64,
    sigma: &[f64],
    ordering: Ordering,
) -> Result<SparseMatrix, QuantizeError> {
    let mut total = SparseMatrix::zeros(grid.size());
    for term in &factorization.terms {
        let ops: Vec<SparseMatrix> = term
            .factors
            .iter()
            .map(|g| quantize_affine(g, grid, t, sigma))
            .collect::<Result<_, _>>()?;
        let refs: Vec<&SparseMatrix> = ops.iter().collect();
        let op = match ordering {
            Ordering::Left => product(&refs),
            Ordering::Right => product(&refs.iter().rev().copied().collect::<Vec<_>>()),
            Ordering::Symmetric => {
                let d = refs.len();
                let mut sum = SparseMatrix::zeros(grid.size());
                let mut count = 0usize;
                for perm in refs.iter().copied().permutations(d) {
                    sum = sum.add(&product(&perm));
                    count += 1;
                }
                sum.scale(C64::new(1.0 / count as f64, 0.0))
            }
        };
        total = total.add(&op);
    }
    Ok(total)
}
