//! Splitting polynomial observables into sums of products of affine ones.
//!
//! With a partition of unity `phi_xi` on the fiber domain, the weights
//! `l_xi = phi_xi (phi_1^d + ... + phi_r^d)^(-1/d)` satisfy `sum l_xi^d = 1`,
//! so a homogeneous degree-`d` part `a^{k1..kd} p_k1 .. p_kd` equals
//! `sum_xi [l_xi a p_k1][l_xi p_k2] .. [l_xi p_kd]`.

use crate::coords::{as_strs, Dims};
use crate::expr::{CompiledExpr, EvalError, Expr, VariableBinding};

use super::{AlgebraError, PolynomialObservable};

/// A chart window of the cover.
#[derive(Clone, Debug, PartialEq)]
pub enum Chart {
    /// The whole domain, `phi = 1`.
    Whole,
    /// Axis-aligned box with a product bump `prod_k bump(q^k; center_k, radius_k)`.
    Window { center: Vec<f64>, radius: Vec<f64> },
}

/// A finite cover of the fiber box `[-L, L)^n` with bump functions.
#[derive(Clone, Debug, PartialEq)]
pub struct BumpCover {
    n: usize,
    half_width: f64,
    charts: Vec<Chart>,
}

impl BumpCover {
    pub fn new(n: usize, half_width: f64, charts: Vec<Chart>) -> Result<Self, AlgebraError> {
        for c in &charts {
            if let Chart::Window { center, radius } = c {
                if center.len() != n || radius.len() != n || radius.iter().any(|r| *r <= 0.0) {
                    return Err(AlgebraError::ChartShape { n });
                }
            }
        }
        if charts.is_empty() {
            return Err(AlgebraError::ChartShape { n });
        }
        Ok(BumpCover {
            n,
            half_width,
            charts,
        })
    }

    /// One chart equal to the whole domain.
    pub fn single(n: usize, half_width: f64) -> Self {
        BumpCover {
            n,
            half_width,
            charts: vec![Chart::Whole],
        }
    }

    /// `r` windows evenly spaced along every axis (n = 1) with overlap.
    pub fn uniform_1d(half_width: f64, r: usize) -> Self {
        let spacing = 2.0 * half_width / r as f64;
        let charts = (0..r)
            .map(|i| Chart::Window {
                center: vec![-half_width + spacing * (i as f64 + 0.5)],
                radius: vec![spacing],
            })
            .collect();
        BumpCover {
            n: 1,
            half_width,
            charts,
        }
    }

    pub fn charts(&self) -> &[Chart] {
        &self.charts
    }

    pub fn len(&self) -> usize {
        self.charts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charts.is_empty()
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn fiber_dim(&self) -> usize {
        self.n
    }

    /// The bump `phi_xi` as a field in `q`.
    pub fn phi(&self, xi: usize) -> Expr {
        match &self.charts[xi] {
            Chart::Whole => Expr::one(),
            Chart::Window { center, radius } => (0..self.n).fold(Expr::one(), |acc, k| {
                acc.mul(&Expr::bump(
                    &Expr::var(&Dims::q(k)),
                    &Expr::constant(center[k]),
                    &Expr::constant(radius[k]),
                ))
            }),
        }
    }

    /// `l_xi = phi_xi / (sum_j phi_j^d)^(1/d)`.
    pub fn weight(&self, xi: usize, d: u32) -> Expr {
        let total = (0..self.charts.len()).fold(Expr::zero(), |acc, j| acc.add(&self.phi(j).powi(d as i32)));
        self.phi(xi).div(&total.root(d))
    }

    /// Sample points of the domain box: `per_axis` points per axis, endpoints included.
    pub fn samples(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axis: Vec<f64> = (0..per_axis)
            .map(|i| -self.half_width + 2.0 * self.half_width * i as f64 / (per_axis - 1) as f64)
            .collect();
        let mut pts = vec![Vec::new()];
        for _ in 0..self.n {
            pts = pts
                .into_iter()
                .flat_map(|p| {
                    axis.iter().map(move |x| {
                        let mut v = p.clone();
                        v.push(*x);
                        v
                    })
                })
                .collect();
        }
        pts
    }

    /// `sum_xi l_xi^d` at a point.
    pub fn partition_sum(&self, d: u32, q: &[f64]) -> Result<f64, EvalError> {
        let names: Vec<String> = (0..self.n).map(Dims::q).collect();
        let b: VariableBinding = names.iter().map(String::as_str).zip(q.iter().copied()).collect();
        let mut s = 0.0;
        for xi in 0..self.charts.len() {
            s += self.weight(xi, d).eval(&b)?.powi(d as i32);
        }
        Ok(s)
    }

    /// Fails when some sample of the domain is not covered.
    pub fn check(&self, d: u32) -> Result<(), AlgebraError> {
        let names: Vec<String> = (0..self.n).map(Dims::q).collect();
        let slots = as_strs(&names);
        let phis: Vec<CompiledExpr> = (0..self.charts.len())
            .map(|xi| CompiledExpr::new(&self.phi(xi), &slots))
            .collect::<Result<_, _>>()?;
        let per_axis = if self.n == 1 { 2001 } else { 101 };
        for q in self.samples(per_axis) {
            let values: Vec<f64> = phis.iter().map(|c| c.eval(&q)).collect::<Result<_, _>>()?;
            let total: f64 = values.iter().map(|v| v.powi(d as i32)).sum();
            let sum = if total > 0.0 {
                let norm = total.powf(1.0 / d as f64);
                values.iter().map(|v| (v / norm).powi(d as i32)).sum()
            } else {
                0.0
            };
            if sum < 1.0 - 1e-9 {
                return Err(AlgebraError::CoverGap { sum, point: q });
            }
        }
        Ok(())
    }
}

/// A product of affine observables.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineTerm {
    pub factors: Vec<PolynomialObservable>,
}

impl AffineTerm {
    pub fn expand(&self) -> Result<PolynomialObservable, AlgebraError> {
        let n = self.factors[0].fiber_dim();
        self.factors
            .iter()
            .try_fold(PolynomialObservable::scalar(n, Expr::one()), |acc, f| acc.mul(f))
    }

    pub fn eval(&self, binding: &VariableBinding, p: &[f64]) -> Result<f64, EvalError> {
        let mut v = 1.0;
        for f in &self.factors {
            v *= f.eval(binding, p)?;
        }
        Ok(v)
    }
}

/// A sum of products of affine observables.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineFactorization {
    pub terms: Vec<AffineTerm>,
}

impl AffineFactorization {
    pub fn eval(&self, binding: &VariableBinding, p: &[f64]) -> Result<f64, EvalError> {
        let mut v = 0.0;
        for t in &self.terms {
            v += t.eval(binding, p)?;
        }
        Ok(v)
    }
}

/// Decompose `f` over `cover`.
///
/// The degree <= 1 part is emitted as a single one-factor term; each
/// homogeneous part of degree `d >= 2` contributes one product per chart and
/// multi-index, the coefficient riding on the first factor.
pub fn decompose_polynomial(
    f: &PolynomialObservable,
    cover: &BumpCover,
) -> Result<AffineFactorization, AlgebraError> {
    if cover.fiber_dim() != f.fiber_dim() {
        return Err(AlgebraError::DimensionMismatch(cover.fiber_dim(), f.fiber_dim()));
    }
    let n = f.fiber_dim();
    let mut terms = Vec::new();
    let low = f.homogeneous(0).add(&f.homogeneous(1))?;
    if !low.is_zero() {
        terms.push(AffineTerm { factors: vec![low] });
    }
    for d in 2..=f.degree() {
        let part = f.homogeneous(d);
        if part.is_zero() {
            continue;
        }
        cover.check(d as u32)?;
        for xi in 0..cover.len() {
            let l = cover.weight(xi, d as u32);
            for (idx, a) in part.terms() {
                let mut factors = Vec::with_capacity(d);
                factors.push(PolynomialObservable::monomial(n, &idx[..1], l.mul(a))?);
                for &k in &idx[1..] {
                    factors.push(PolynomialObservable::monomial(n, &[k], l.clone())?);
                }
                terms.push(AffineTerm { factors });
            }
        }
    }
    Ok(AffineFactorization { terms })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn q1() -> Expr {
        Expr::var("q1")
    }

    #[test]
    fn single_chart_square() {
        let f = PolynomialObservable::monomial(1, &[0, 0], Expr::one()).unwrap();
        let fac = decompose_polynomial(&f, &BumpCover::single(1, 5.0)).unwrap();
        assert_eq!(fac.terms.len(), 1);
        let p1 = PolynomialObservable::momentum(1, 0);
        assert_eq!(fac.terms[0].factors, vec![p1.clone(), p1]);
    }

    #[test]
    fn two_chart_reconstruction() {
        let c = parse_expr("1 + 0.5*sin(q1)", &["q1"]).unwrap();
        let f = PolynomialObservable::monomial(1, &[0, 0], c).unwrap();
        let cover = BumpCover::uniform_1d(4.0, 2);
        let fac = decompose_polynomial(&f, &cover).unwrap();
        assert_eq!(fac.terms.len(), 2);
        for x in cover.samples(200) {
            let b = Dims::new(0, 1).binding(0.0, &[], &x);
            for p in [-1.7, 0.3, 2.0] {
                let want = f.eval(&b, &[p]).unwrap();
                let got = fac.eval(&b, &[p]).unwrap();
                assert!((want - got).abs() <= 1e-12, "{x:?} {want} {got}");
            }
        }
    }

    #[test]
    fn low_degree_is_identity() {
        let f = PolynomialObservable::affine(&[q1()], parse_expr("q1^2", &["q1"]).unwrap());
        let fac = decompose_polynomial(&f, &BumpCover::uniform_1d(3.0, 3)).unwrap();
        assert_eq!(fac.terms.len(), 1);
        assert_eq!(fac.terms[0].factors, vec![f]);
    }

    #[test]
    fn gap_in_cover_is_rejected() {
        let cover = BumpCover::new(
            1,
            4.0,
            vec![
                Chart::Window { center: vec![-2.0], radius: vec![1.0] },
                Chart::Window { center: vec![2.0], radius: vec![1.0] },
            ],
        )
        .unwrap();
        let f = PolynomialObservable::monomial(1, &[0, 0], Expr::one()).unwrap();
        assert!(matches!(
            decompose_polynomial(&f, &cover),
            Err(AlgebraError::CoverGap { .. })
        ));
    }

    #[test]
    fn partition_of_unity() {
        let cover = BumpCover::uniform_1d(5.0, 3);
        for d in 2..=4 {
            for x in cover.samples(200) {
                let s = cover.partition_sum(d, &x).unwrap();
                assert!((s - 1.0).abs() <= 1e-12);
            }
        }
    }
}
