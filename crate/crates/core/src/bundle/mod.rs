//! The composite bundle `Q -> Sigma -> R` in global adapted coordinates.
//!
//! A [`BundleModel`] stores the connection on `Q -> Sigma`,
//!
//! ```text
//! Lambda = dt (d_t + Lambda^k d_k) + dsigma^lambda (d_lambda + Lambda^k_lambda d_k),
//! ```
//!
//! and optionally an explicit connection `Gamma = dt (d_t + Gamma^lambda d_lambda)`
//! on the parameter bundle. Given a parameter path, [`gamma_from_path`] builds
//! the `Gamma` that transports the path into itself.

mod path;

pub use path::{CubicSpline, ParameterPath};

use thiserror::Error;

use crate::algebra::PolynomialObservable;
use crate::coords::Dims;
use crate::expr::{EvalError, Expr};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum BundleError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("component {component} uses undeclared variable `{var}`")]
    UndeclaredVariable { component: String, var: String },
    #[error("sampled path needs at least 4 knots, got {0}")]
    TooFewKnots(usize),
    #[error("path knots must increase strictly")]
    KnotsNotIncreasing,
    #[error("path is flagged closed but its ends differ by {0:e}")]
    NotClosed(f64),
    #[error("empty time span")]
    EmptySpan,
    #[error("path expressions may only use `t`: {0}")]
    PathVariable(String),
    #[error("path evaluation failed at t = {t}: {source}")]
    PathEval { t: f64, source: EvalError },
    #[error("warp must fix both ends of the span")]
    WarpEndpoints,
    #[error("warp is not strictly increasing near t = {0}")]
    NonMonotoneWarp(f64),
}

/// Dimensions plus the connection components of the configuration bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct BundleModel {
    dims: Dims,
    /// `Lambda^k_lambda`, indexed `[k][lambda]`.
    lambda: Vec<Vec<Expr>>,
    /// `Lambda^k`.
    drift: Vec<Expr>,
    gamma: Option<Vec<Expr>>,
}

impl BundleModel {
    pub fn new(
        dims: Dims,
        lambda: Vec<Vec<Expr>>,
        drift: Vec<Expr>,
        gamma: Option<Vec<Expr>>,
    ) -> Result<Self, BundleError> {
        if dims.m == 0 || dims.n == 0 {
            return Err(BundleError::DimensionMismatch("m and n must be at least 1".into()));
        }
        if lambda.len() != dims.n || lambda.iter().any(|row| row.len() != dims.m) {
            return Err(BundleError::DimensionMismatch(format!(
                "connection must be {} x {}",
                dims.n, dims.m
            )));
        }
        if drift.len() != dims.n {
            return Err(BundleError::DimensionMismatch(format!("drift must have {} entries", dims.n)));
        }
        let field_vars = dims.field_vars();
        for (k, row) in lambda.iter().enumerate() {
            for (l, e) in row.iter().enumerate() {
                check_vars(e, &field_vars, format!("lambda[{k}][{l}]"))?;
            }
        }
        for (k, e) in drift.iter().enumerate() {
            check_vars(e, &field_vars, format!("drift[{k}]"))?;
        }
        if let Some(g) = &gamma {
            if g.len() != dims.m {
                return Err(BundleError::DimensionMismatch(format!("gamma must have {} entries", dims.m)));
            }
            let pv = dims.parameter_vars();
            for (l, e) in g.iter().enumerate() {
                check_vars(e, &pv, format!("gamma[{l}]"))?;
            }
        }
        Ok(BundleModel {
            dims,
            lambda,
            drift,
            gamma,
        })
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn lambda(&self, k: usize, l: usize) -> &Expr {
        &self.lambda[k][l]
    }

    pub fn drift(&self, k: usize) -> &Expr {
        &self.drift[k]
    }

    pub fn gamma(&self) -> Option<&[Expr]> {
        self.gamma.as_deref()
    }

    /// True when no `Lambda^k_lambda` depends on time.
    pub fn lambda_time_independent(&self) -> bool {
        self.lambda.iter().flatten().all(|e| !e.depends_on("t"))
    }
}

fn check_vars(e: &Expr, allowed: &[String], component: String) -> Result<(), BundleError> {
    match e.free_vars().into_iter().find(|v| !allowed.contains(v)) {
        Some(var) => Err(BundleError::UndeclaredVariable { component, var }),
        None => Ok(()),
    }
}

/// `Gamma^lambda(t, sigma)` realised as the sigma-independent extension of the
/// path velocity, so that `Gamma(t, chi(t)) = d_t chi(t)` holds identically.
#[derive(Clone, Debug)]
pub enum GammaField {
    Symbolic(Vec<Expr>),
    Path(ParameterPath),
}

impl GammaField {
    pub fn eval(&self, t: f64, _sigma: &[f64]) -> Result<Vec<f64>, BundleError> {
        match self {
            GammaField::Symbolic(c) => c
                .iter()
                .map(|e| {
                    e.eval(&crate::expr::VariableBinding::new().with("t", t))
                        .map_err(|source| BundleError::PathEval { t, source })
                })
                .collect(),
            GammaField::Path(p) => p.velocity(t),
        }
    }

    pub fn as_exprs(&self) -> Option<&[Expr]> {
        match self {
            GammaField::Symbolic(c) => Some(c),
            GammaField::Path(_) => None,
        }
    }
}

pub fn gamma_from_path(path: &ParameterPath) -> GammaField {
    match path.components() {
        Some(c) => GammaField::Symbolic(c.iter().map(|e| e.diff("t")).collect()),
        None => GammaField::Path(path.clone()),
    }
}

/// dt-components of `Lambda o Gamma = dt (d_t + Gamma^l d_l + (Lambda^k + Gamma^l Lambda^k_l) d_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompositeConnection {
    pub parameter: Vec<Expr>,
    pub fiber: Vec<Expr>,
}

pub fn composite_connection(gamma: &[Expr], bundle: &BundleModel) -> Result<CompositeConnection, BundleError> {
    let Dims { m, n } = bundle.dims();
    if gamma.len() != m {
        return Err(BundleError::DimensionMismatch(format!(
            "gamma has {} components, bundle has m = {m}",
            gamma.len()
        )));
    }
    let fiber = (0..n)
        .map(|k| {
            (0..m).fold(bundle.drift(k).clone(), |acc, l| {
                acc.add(&gamma[l].mul(bundle.lambda(k, l)))
            })
        })
        .collect();
    Ok(CompositeConnection {
        parameter: gamma.to_vec(),
        fiber,
    })
}

/// Curvature of the connection on `Q -> Sigma`, indexed `[k][lambda][mu]`:
///
/// `F^k_{lm} = d_l L^k_m - d_m L^k_l + L^j_l d_j L^k_m - L^j_m d_j L^k_l`.
pub fn connection_curvature(bundle: &BundleModel) -> Vec<Vec<Vec<Expr>>> {
    let Dims { m, n } = bundle.dims();
    let lam = |k: usize, l: usize| bundle.lambda(k, l);
    (0..n)
        .map(|k| {
            (0..m)
                .map(|l| {
                    (0..m)
                        .map(|mu| {
                            let mut f = lam(k, mu).diff(&Dims::sigma(l)).sub(&lam(k, l).diff(&Dims::sigma(mu)));
                            for j in 0..n {
                                let qj = Dims::q(j);
                                f = f
                                    .add(&lam(j, l).mul(&lam(k, mu).diff(&qj)))
                                    .sub(&lam(j, mu).mul(&lam(k, l).diff(&qj)));
                            }
                            f
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Leafwise one-form with components along `d~q^k` and `d~p_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafwiseOneForm {
    pub dq: Vec<PolynomialObservable>,
    pub dp: Vec<PolynomialObservable>,
}

/// `d~f = d_k f d~q^k + d^k f d~p_k`.
pub fn leafwise_differential(f: &PolynomialObservable) -> LeafwiseOneForm {
    let n = f.fiber_dim();
    LeafwiseOneForm {
        dq: (0..n).map(|k| f.d_q(k)).collect(),
        dp: (0..n).map(|k| f.d_p(k)).collect(),
    }
}

/// One component `R_{ij}` of the prequantization curvature; the value is
/// purely imaginary, stored as its imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureComponent {
    pub row: String,
    pub col: String,
    pub imag: Expr,
    pub expected_imag: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrequantizationReport {
    pub n: usize,
    pub components: Vec<CurvatureComponent>,
    pub holds: bool,
}

/// Curvature of the canonical leafwise connection `A_{q^k} = i p_k`,
/// `A_{p_k} = 0`, compared with `i Omega` for `Omega = d~p_k ^ d~q^k`.
pub fn prequant_curvature_check(n: usize) -> PrequantizationReport {
    // coordinates x = (q1..qn, p1..pn)
    let names: Vec<String> = (0..n).map(Dims::q).chain((0..n).map(|k| format!("p{}", k + 1))).collect();
    let potential: Vec<Expr> = (0..2 * n)
        .map(|i| if i < n { Expr::var(&names[n + i]) } else { Expr::zero() })
        .collect();
    let omega = |i: usize, j: usize| -> f64 {
        match (i < n, j < n) {
            (false, true) if i - n == j => 1.0,
            (true, false) if j - n == i => -1.0,
            _ => 0.0,
        }
    };
    let mut components = Vec::new();
    let mut holds = true;
    for i in 0..2 * n {
        for j in 0..2 * n {
            let r = potential[j].diff(&names[i]).sub(&potential[i].diff(&names[j]));
            let expected = omega(i, j);
            holds &= r.as_const() == Some(expected);
            components.push(CurvatureComponent {
                row: names[i].clone(),
                col: names[j].clone(),
                imag: r,
                expected_imag: expected,
            });
        }
    }
    PrequantizationReport { n, components, holds }
}
