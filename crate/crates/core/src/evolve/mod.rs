//! Driven Hamiltonians, time-ordered evolution and the geometric factor.
//!
//! Along a parameter path `chi` the Hamiltonian is
//!
//! ```text
//! H_chi = p_k (Lambda^k + Lambda^k_lambda d_t chi^lambda) + H_Lambda,
//! ```
//!
//! everything evaluated at `sigma = chi(t)`. Its quantization splits into the
//! geometric generator `G(t)`, built from `Lambda^k_lambda d_t chi^lambda p_k`,
//! and the dynamic part `H'(t)`, built from `Lambda^k p_k + H_Lambda`.

mod classical;
mod propagate;

pub use classical::{classical_hamilton_flow, ClassicalState};
pub use propagate::{
    evolve, evolve_time_ordered, geometric_factor, propagate_state, split_evolution, split_evolution_state,
    unwrap_phases, EvolutionMode, EvolutionResult, EvolveOptions, Observation, Phases, SplitEvolution, SplitReport,
};

use thiserror::Error;

use crate::algebra::{decompose_polynomial, AffineFactorization, AlgebraError, BumpCover, PolynomialObservable};
use crate::bundle::{BundleError, BundleModel, ParameterPath};
use crate::coords::Dims;
use crate::expr::{Expr, VariableBinding};
use crate::linalg::{SparseMatrix, C64};
use crate::quantize::{quantize_affine, quantize_factorization, FiberGrid, Ordering, QuantizeError};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvolveError {
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("at least one step is required")]
    NoSteps,
    #[error("time {t} lies outside the path span [{t0}, {t1}]")]
    OutsideSpan { t: f64, t0: f64, t1: f64 },
    #[error("step Hamiltonian at t = {t} is not Hermitian (defect {defect:e})")]
    NonHermitian { t: f64, defect: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("the initial state lives on a different grid")]
    GridMismatch,
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Quantize(#[from] QuantizeError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl From<crate::expr::EvalError> for EvolveError {
    fn from(e: crate::expr::EvalError) -> Self {
        EvolveError::Quantize(QuantizeError::Eval(e))
    }
}

/// A mechanical system driven along a parameter path, ready for quantization.
#[derive(Clone, Debug)]
pub struct DrivenHamiltonian {
    bundle: BundleModel,
    path: ParameterPath,
    dynamic: PolynomialObservable,
    cover: BumpCover,
    grid: FiberGrid,
    ordering: Ordering,
    factorization: AffineFactorization,
    drift: PolynomialObservable,
    frozen_dynamic: Option<SparseMatrix>,
}

impl DrivenHamiltonian {
    pub fn new(
        bundle: BundleModel,
        path: ParameterPath,
        dynamic: PolynomialObservable,
        cover: BumpCover,
        grid: FiberGrid,
        ordering: Ordering,
    ) -> Result<Self, EvolveError> {
        let dims = bundle.dims();
        if path.dim() != dims.m {
            return Err(EvolveError::Dimension(format!(
                "path has {} components, the parameter space {}",
                path.dim(),
                dims.m
            )));
        }
        for (what, n) in [
            ("dynamic Hamiltonian", dynamic.fiber_dim()),
            ("grid", grid.fiber_dim()),
            ("cover", cover.fiber_dim()),
        ] {
            if n != dims.n {
                return Err(EvolveError::Dimension(format!(
                    "{what} has fiber dimension {n}, the bundle {}",
                    dims.n
                )));
            }
        }
        let allowed = dims.field_vars();
        if let Some(v) = dynamic.free_vars().into_iter().find(|v| !allowed.contains(v)) {
            return Err(EvolveError::Bundle(BundleError::UndeclaredVariable {
                component: "hamiltonian".into(),
                var: v,
            }));
        }
        let factorization = decompose_polynomial(&dynamic, &cover)?;
        let drift_coeffs: Vec<Expr> = (0..dims.n).map(|k| bundle.drift(k).clone()).collect();
        let drift = PolynomialObservable::affine(&drift_coeffs, Expr::zero());
        let mut dh = DrivenHamiltonian {
            bundle,
            path,
            dynamic,
            cover,
            grid,
            ordering,
            factorization,
            drift,
            frozen_dynamic: None,
        };
        let moving = std::iter::once("t".to_string()).chain((0..dims.m).map(Dims::sigma));
        let frozen = moving
            .into_iter()
            .all(|v| !dh.dynamic.free_vars().contains(&v) && !dh.drift.free_vars().contains(&v));
        if frozen {
            let t0 = dh.path.span().0;
            let op = dh.assemble_dynamic(t0, &vec![0.0; dims.m])?;
            dh.frozen_dynamic = Some(op);
        }
        Ok(dh)
    }

    /// Same system driven along another path.
    pub fn with_path(&self, path: ParameterPath) -> Result<Self, EvolveError> {
        Self::new(
            self.bundle.clone(),
            path,
            self.dynamic.clone(),
            self.cover.clone(),
            self.grid.clone(),
            self.ordering,
        )
    }

    pub fn bundle(&self) -> &BundleModel {
        &self.bundle
    }

    pub fn path(&self) -> &ParameterPath {
        &self.path
    }

    pub fn dynamic(&self) -> &PolynomialObservable {
        &self.dynamic
    }

    pub fn cover(&self) -> &BumpCover {
        &self.cover
    }

    pub fn grid(&self) -> &FiberGrid {
        &self.grid
    }

    /// Affine decomposition of the dynamic Hamiltonian over the cover.
    pub fn factorization(&self) -> &AffineFactorization {
        &self.factorization
    }

    pub fn ordering(&self) -> Ordering {
        self.ordering
    }

    pub fn dims(&self) -> Dims {
        self.bundle.dims()
    }

    pub fn span(&self) -> (f64, f64) {
        self.path.span()
    }

    fn check_time(&self, t: f64) -> Result<(), EvolveError> {
        let (t0, t1) = self.span();
        let slack = 1e-12 * (t1 - t0).abs().max(1.0);
        if t < t0 - slack || t > t1 + slack {
            return Err(EvolveError::OutsideSpan { t, t0, t1 });
        }
        Ok(())
    }

    /// `sum_k (sum_lambda Lambda^k_lambda w^lambda) p_k`.
    pub fn connection_observable(&self, w: &[f64]) -> PolynomialObservable {
        let dims = self.dims();
        let coeffs: Vec<Expr> = (0..dims.n)
            .map(|k| {
                (0..dims.m).fold(Expr::zero(), |acc, l| {
                    acc.add(&self.bundle.lambda(k, l).mul(&Expr::constant(w[l])))
                })
            })
            .collect();
        PolynomialObservable::affine(&coeffs, Expr::zero())
    }

    /// `G(t)`: the quantized `Lambda^k_lambda d_t chi^lambda p_k` at `sigma = chi(t)`.
    pub fn geometric_generator(&self, t: f64) -> Result<SparseMatrix, EvolveError> {
        self.check_time(t)?;
        let sigma = self.path.position(t)?;
        let v = self.path.velocity(t)?;
        Ok(quantize_affine(&self.connection_observable(&v), &self.grid, t, &sigma)?)
    }

    /// Generator of one path segment: the quantized `Lambda^k_lambda dsigma^lambda p_k`
    /// with `dsigma = chi(tb) - chi(ta)`, evaluated at the midpoint.
    pub fn segment_generator(&self, ta: f64, tb: f64) -> Result<SparseMatrix, EvolveError> {
        self.check_time(ta)?;
        self.check_time(tb)?;
        let a = self.path.position(ta)?;
        let b = self.path.position(tb)?;
        let tm = 0.5 * (ta + tb);
        let mid = self.path.position(tm)?;
        let dsigma: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
        Ok(quantize_affine(&self.connection_observable(&dsigma), &self.grid, tm, &mid)?)
    }

    fn assemble_dynamic(&self, t: f64, sigma: &[f64]) -> Result<SparseMatrix, EvolveError> {
        let drift = quantize_affine(&self.drift, &self.grid, t, sigma)?;
        let h = quantize_factorization(&self.factorization, &self.grid, t, sigma, self.ordering)?;
        Ok(drift.add(&h))
    }

    /// `H'(t)`: quantized `Lambda^k p_k + H_Lambda` at `sigma = chi(t)`.
    pub fn dynamic_operator(&self, t: f64) -> Result<SparseMatrix, EvolveError> {
        self.check_time(t)?;
        if let Some(op) = &self.frozen_dynamic {
            return Ok(op.clone());
        }
        let sigma = self.path.position(t)?;
        self.assemble_dynamic(t, &sigma)
    }

    /// `H_chi(t) = G(t) + H'(t)`.
    pub fn hamiltonian(&self, t: f64) -> Result<SparseMatrix, EvolveError> {
        Ok(self.geometric_generator(t)?.add(&self.dynamic_operator(t)?))
    }

    /// The classical `H_chi` at time `t`, parameters still symbolic.
    pub fn classical_hamiltonian(&self, t: f64) -> Result<PolynomialObservable, EvolveError> {
        let v = self.path.velocity(t)?;
        Ok(self.connection_observable(&v).add(&self.drift)?.add(&self.dynamic)?)
    }

    /// Quantize an observable with this system's grid, cover and ordering.
    pub fn quantize(&self, f: &PolynomialObservable, t: f64) -> Result<SparseMatrix, EvolveError> {
        let sigma = self.path.position(t)?;
        if f.is_affine() {
            Ok(quantize_affine(f, &self.grid, t, &sigma)?)
        } else {
            let fac = decompose_polynomial(f, &self.cover)?;
            Ok(quantize_factorization(&fac, &self.grid, t, &sigma, self.ordering)?)
        }
    }

    /// Binding of `(t, chi(t), q)`.
    pub fn binding(&self, t: f64, q: &[f64]) -> Result<VariableBinding, EvolveError> {
        let sigma = self.path.position(t)?;
        Ok(self.dims().binding(t, &sigma, q))
    }
}

/// `i [H_chi(t), f^]`.
pub fn heisenberg_derivative(
    fhat: &SparseMatrix,
    dh: &DrivenHamiltonian,
    t: f64,
) -> Result<SparseMatrix, EvolveError> {
    let h = dh.hamiltonian(t)?;
    if h.dim() != fhat.dim() {
        return Err(EvolveError::Dimension(format!(
            "operator is {0}x{0}, the grid has {1} points",
            fhat.dim(),
            h.dim()
        )));
    }
    Ok(h.commutator(fhat).scale(C64::new(0.0, 1.0)))
}

/// Quantization of the explicit time derivative `d_t f + d_t chi^lambda d_lambda f`
/// of an observable along the path.
pub fn explicit_time_derivative(
    f: &PolynomialObservable,
    dh: &DrivenHamiltonian,
    t: f64,
) -> Result<SparseMatrix, EvolveError> {
    let v = dh.path().velocity(t)?;
    let mut df = f.diff_coefficients("t");
    for (l, vl) in v.iter().enumerate() {
        df = df.add(&f.diff_coefficients(&Dims::sigma(l)).scale(&Expr::constant(*vl)))?;
    }
    if df.is_zero() {
        return Ok(SparseMatrix::zeros(dh.grid().size()));
    }
    dh.quantize(&df, t)
}

/// The path traced with a new time parametrization.
pub fn reparametrize_path(path: &ParameterPath, warp: &Expr) -> Result<ParameterPath, EvolveError> {
    Ok(path.reparametrize(warp)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::linalg::HermitianEigen;
    use crate::quantize::{derivative_matrix, position_operator};

    fn circle_system(lambda2: &str, n_points: usize) -> DrivenHamiltonian {
        let dims = Dims::new(2, 1);
        let vars = ["t", "s1", "s2", "q1"];
        let bundle = BundleModel::new(
            dims,
            vec![vec![Expr::one(), parse_expr(lambda2, &vars).unwrap()]],
            vec![Expr::zero()],
            None,
        )
        .unwrap();
        let path = ParameterPath::closed_form(
            vec![parse_expr("cos(t)", &["t"]).unwrap(), parse_expr("sin(t)", &["t"]).unwrap()],
            (0.0, 2.0 * std::f64::consts::PI),
            true,
        )
        .unwrap();
        DrivenHamiltonian::new(
            bundle,
            path,
            PolynomialObservable::zero(1),
            BumpCover::single(1, 8.0),
            FiberGrid::new(1, n_points, 8.0).unwrap(),
            Ordering::Symmetric,
        )
        .unwrap()
    }

    #[test]
    fn geometric_generator_on_circle() {
        let dh = circle_system("q1", 32);
        let t = std::f64::consts::FRAC_PI_4;
        let g = dh.geometric_generator(t).unwrap();
        let d = derivative_matrix(dh.grid(), 0).unwrap();
        let q = position_operator(dh.grid(), 0);
        let want = d
            .add(&d)
            .scale(C64::new(-t.sin(), 0.0))
            .add(&q.matmul(&d).add(&d.matmul(&q)).scale(C64::new(t.cos(), 0.0)))
            .scale(C64::new(0.0, -0.5));
        assert!(g.sub(&want).max_abs() <= 1e-12);
    }

    #[test]
    fn constant_path_has_no_geometric_part() {
        let dh = circle_system("q1", 16);
        let still = ParameterPath::closed_form(
            vec![Expr::constant(0.3), Expr::constant(-0.2)],
            (0.0, 1.0),
            true,
        )
        .unwrap();
        let dh = dh.with_path(still).unwrap();
        assert!(dh.geometric_generator(0.5).unwrap().is_zero());
    }

    #[test]
    fn out_of_span_is_rejected() {
        let dh = circle_system("q1", 16);
        assert!(matches!(dh.geometric_generator(7.0), Err(EvolveError::OutsideSpan { .. })));
    }

    #[test]
    fn recentred_oscillator_ground_energy() {
        let dims = Dims::new(1, 1);
        let vars = ["t", "s1", "q1"];
        let bundle = BundleModel::new(dims, vec![vec![Expr::one()]], vec![Expr::zero()], None).unwrap();
        let path = ParameterPath::closed_form(vec![parse_expr("sin(t)", &["t"]).unwrap()], (0.0, 3.0), false).unwrap();
        let h = PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5))
            .unwrap()
            .add(&PolynomialObservable::scalar(1, parse_expr("0.5*(q1 - s1)^2", &vars).unwrap()))
            .unwrap();
        let dh = DrivenHamiltonian::new(
            bundle,
            path,
            h,
            BumpCover::single(1, 8.0),
            FiberGrid::new(1, 128, 8.0).unwrap(),
            Ordering::Symmetric,
        )
        .unwrap();
        for t in [0.0, 1.0, 2.5] {
            let e = HermitianEigen::new(&dh.dynamic_operator(t).unwrap().to_dense()).min_value();
            assert!((e - 0.5).abs() < 1e-2, "{t}: {e}");
        }
    }
}
