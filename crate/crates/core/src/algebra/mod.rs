//! Classical observables on the momentum phase space.
//!
//! Observables are polynomials in the momenta `p_k` whose coefficients are
//! fields in `(t, sigma, q)`. The Poisson bracket acts leafwise: parameters
//! and time are spectators.

mod decompose;

pub use decompose::{decompose_polynomial, AffineFactorization, AffineTerm, BumpCover, Chart};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::coords::Dims;
use crate::expr::{EvalError, Expr, VariableBinding};

/// Sorted momentum multi-index, 0-based.
pub type MultiIndex = Vec<usize>;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("momentum index {index} out of range for fiber dimension {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("fiber dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("the cover does not cover the domain: partition sum {sum} at {point:?}")]
    CoverGap { sum: f64, point: Vec<f64> },
    #[error("cover charts must have {n} axes")]
    ChartShape { n: usize },
    #[error("`{slot}` may depend only on time and parameters, found `{var}`")]
    FiberDependence { slot: String, var: String },
    #[error("observable of degree {0} is not affine in the momenta")]
    NotAffine(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// `sum_I a^I(t, sigma, q) p_I` over sorted multi-indices `I`.
#[derive(Clone, Debug, PartialEq)]
pub struct PolynomialObservable {
    n: usize,
    terms: BTreeMap<MultiIndex, Expr>,
}

impl PolynomialObservable {
    pub fn zero(n: usize) -> Self {
        PolynomialObservable {
            n,
            terms: BTreeMap::new(),
        }
    }

    /// Degree-zero observable `b(t, sigma, q)`.
    pub fn scalar(n: usize, coeff: Expr) -> Self {
        let mut out = Self::zero(n);
        out.insert(Vec::new(), coeff);
        out
    }

    /// The momentum coordinate `p_k`.
    pub fn momentum(n: usize, k: usize) -> Self {
        Self::monomial(n, &[k], Expr::one()).expect("momentum index in range")
    }

    /// The fiber coordinate `q^k` as a degree-zero observable.
    pub fn position(n: usize, k: usize) -> Self {
        Self::scalar(n, Expr::var(&Dims::q(k)))
    }

    /// `coeff * p_{k_1} ... p_{k_d}`; the indices need not be sorted.
    pub fn monomial(n: usize, index: &[usize], coeff: Expr) -> Result<Self, AlgebraError> {
        if let Some(&bad) = index.iter().find(|&&k| k >= n) {
            return Err(AlgebraError::IndexOutOfRange { index: bad, n });
        }
        let mut idx = index.to_vec();
        idx.sort_unstable();
        let mut out = Self::zero(n);
        out.insert(idx, coeff);
        Ok(out)
    }

    /// Affine observable `a^k p_k + b`.
    pub fn affine(a: &[Expr], b: Expr) -> Self {
        let n = a.len();
        let mut out = Self::scalar(n, b);
        for (k, ak) in a.iter().enumerate() {
            out.insert(vec![k], ak.clone());
        }
        out
    }

    fn insert(&mut self, idx: MultiIndex, coeff: Expr) {
        let sum = match self.terms.remove(&idx) {
            Some(prev) => prev.add(&coeff),
            None => coeff,
        };
        if !sum.is_zero() {
            self.terms.insert(idx, sum);
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Expr)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, index: &[usize]) -> Expr {
        let mut idx = index.to_vec();
        idx.sort_unstable();
        self.terms.get(&idx).cloned().unwrap_or_else(Expr::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Highest momentum degree; zero for the zero observable.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    /// Membership in the quantum algebra: affine in the momenta.
    pub fn is_affine(&self) -> bool {
        self.degree() <= 1
    }

    /// The part of exact degree `d`.
    pub fn homogeneous(&self, d: usize) -> Self {
        PolynomialObservable {
            n: self.n,
            terms: self
                .terms
                .iter()
                .filter(|(k, _)| k.len() == d)
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    /// Coefficients `a^k` of an affine observable.
    pub fn linear_coefficients(&self) -> Vec<Expr> {
        (0..self.n).map(|k| self.coefficient(&[k])).collect()
    }

    /// Degree-zero coefficient `b`.
    pub fn scalar_part(&self) -> Expr {
        self.coefficient(&[])
    }

    fn check_dims(&self, other: &Self) -> Result<(), AlgebraError> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(AlgebraError::DimensionMismatch(self.n, other.n))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dims(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.insert(k.clone(), v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coefficients(|c| c.neg())
    }

    /// Multiply every coefficient by a field.
    pub fn scale(&self, factor: &Expr) -> Self {
        self.map_coefficients(|c| factor.mul(c))
    }

    pub fn mul(&self, other: &Self) -> Result<Self, AlgebraError> {
        self.check_dims(other)?;
        let mut out = Self::zero(self.n);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let mut idx: MultiIndex = ka.iter().chain(kb).copied().collect();
                idx.sort_unstable();
                out.insert(idx, va.mul(vb));
            }
        }
        Ok(out)
    }

    pub fn map_coefficients(&self, f: impl Fn(&Expr) -> Expr) -> Self {
        let mut out = Self::zero(self.n);
        for (k, v) in &self.terms {
            out.insert(k.clone(), f(v));
        }
        out
    }

    /// Partial derivative of the coefficients with respect to `var`.
    pub fn diff_coefficients(&self, var: &str) -> Self {
        self.map_coefficients(|c| c.diff(var))
    }

    /// `partial_k f`: derivative in the fiber coordinate `q^k`.
    pub fn d_q(&self, k: usize) -> Self {
        self.diff_coefficients(&Dims::q(k))
    }

    /// `partial^k f`: derivative in the momentum `p_k`.
    pub fn d_p(&self, k: usize) -> Self {
        let mut out = Self::zero(self.n);
        for (idx, c) in &self.terms {
            let mult = idx.iter().filter(|&&j| j == k).count();
            if mult == 0 {
                continue;
            }
            let mut rest = idx.clone();
            let pos = rest.iter().position(|&j| j == k).expect("index present");
            rest.remove(pos);
            out.insert(rest, Expr::constant(mult as f64).mul(c));
        }
        out
    }

    pub fn substitute(&self, var: &str, with: &Expr) -> Self {
        self.map_coefficients(|c| c.substitute(var, with))
    }

    /// Evaluate at a point `(binding, p)` of the momentum phase space.
    pub fn eval(&self, binding: &VariableBinding, p: &[f64]) -> Result<f64, EvalError> {
        let mut acc = 0.0;
        for (idx, c) in &self.terms {
            let mono: f64 = idx.iter().map(|&k| p[k]).product();
            acc += c.eval(binding)? * mono;
        }
        Ok(acc)
    }

    /// Variables appearing in any coefficient.
    pub fn free_vars(&self) -> std::collections::BTreeSet<String> {
        self.terms.values().flat_map(|c| c.free_vars()).collect()
    }
}

impl fmt::Display for PolynomialObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (idx, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{c}")?;
            for k in idx {
                write!(f, "*p{}", k + 1)?;
            }
        }
        Ok(())
    }
}

/// Leafwise Poisson bracket `{f, g} = d^k f d_k g - d_k f d^k g`.
pub fn poisson_bracket(
    f: &PolynomialObservable,
    g: &PolynomialObservable,
) -> Result<PolynomialObservable, AlgebraError> {
    f.check_dims(g)?;
    let mut out = PolynomialObservable::zero(f.n);
    for k in 0..f.n {
        out = out.add(&f.d_p(k).mul(&g.d_q(k))?)?;
        out = out.sub(&f.d_q(k).mul(&g.d_p(k))?)?;
    }
    Ok(out)
}

/// `theta_f = d^k f d_k - d_k f d^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianVectorField {
    /// Components along `d_k`.
    pub q_components: Vec<PolynomialObservable>,
    /// Components along `d^k`.
    pub p_components: Vec<PolynomialObservable>,
}

impl HamiltonianVectorField {
    /// Contraction with the leafwise differential of `g`.
    pub fn contract(&self, g: &PolynomialObservable) -> Result<PolynomialObservable, AlgebraError> {
        let n = g.fiber_dim();
        let mut out = PolynomialObservable::zero(n);
        for k in 0..n {
            out = out.add(&self.q_components[k].mul(&g.d_q(k))?)?;
            out = out.add(&self.p_components[k].mul(&g.d_p(k))?)?;
        }
        Ok(out)
    }
}

pub fn hamiltonian_vector_field(f: &PolynomialObservable) -> HamiltonianVectorField {
    HamiltonianVectorField {
        q_components: (0..f.n).map(|k| f.d_p(k)).collect(),
        p_components: (0..f.n).map(|k| f.d_q(k).neg()).collect(),
    }
}

/// Observable on the full cotangent bundle with time and parameter momenta:
/// `a p + a^lambda p_lambda + f`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedObservable {
    pub time_coefficient: Expr,
    pub parameter_coefficients: Vec<Expr>,
    pub fiber_part: PolynomialObservable,
}

impl ExtendedObservable {
    pub fn eval(
        &self,
        binding: &VariableBinding,
        p_time: f64,
        p_sigma: &[f64],
        p: &[f64],
    ) -> Result<f64, EvalError> {
        let mut v = self.time_coefficient.eval(binding)? * p_time;
        for (a, ps) in self.parameter_coefficients.iter().zip(p_sigma) {
            v += a.eval(binding)? * ps;
        }
        Ok(v + self.fiber_part.eval(binding, p)?)
    }
}

/// Lift `f` to `a p + a^lambda p_lambda + f`; `a` and `a^lambda` must be
/// functions of `(t, sigma)` only.
pub fn lift_to_cotangent(
    f: &PolynomialObservable,
    time_coefficient: Expr,
    parameter_coefficients: Vec<Expr>,
) -> Result<ExtendedObservable, AlgebraError> {
    let check = |slot: String, e: &Expr| -> Result<(), AlgebraError> {
        match e.free_vars().into_iter().find(|v| v.starts_with('q')) {
            Some(var) => Err(AlgebraError::FiberDependence { slot, var }),
            None => Ok(()),
        }
    };
    check("a".into(), &time_coefficient)?;
    for (l, a) in parameter_coefficients.iter().enumerate() {
        check(format!("a^{}", l + 1), a)?;
    }
    Ok(ExtendedObservable {
        time_coefficient,
        parameter_coefficients,
        fiber_part: f.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn field(src: &str) -> Expr {
        parse_expr(src, &["t", "s1", "s2", "q1", "q2"]).unwrap()
    }

    fn at(q: &[f64]) -> VariableBinding {
        Dims::new(2, q.len()).binding(0.3, &[0.2, -0.4], q)
    }

    #[test]
    fn canonical_bracket() {
        let p = PolynomialObservable::momentum(1, 0);
        let q = PolynomialObservable::position(1, 0);
        assert_eq!(poisson_bracket(&p, &q).unwrap(), PolynomialObservable::scalar(1, Expr::one()));
        assert_eq!(
            poisson_bracket(&q, &p).unwrap(),
            PolynomialObservable::scalar(1, Expr::constant(-1.0))
        );
    }

    #[test]
    fn bracket_degree_bound_and_self_bracket() {
        let f = PolynomialObservable::monomial(2, &[0, 1], field("sin(q1)*q2"))
            .unwrap()
            .add(&PolynomialObservable::scalar(2, field("q1^2")))
            .unwrap();
        let g = PolynomialObservable::monomial(2, &[1, 1, 0], field("cos(q2)")).unwrap();
        let b = poisson_bracket(&f, &g).unwrap();
        assert!(b.degree() <= f.degree() + g.degree() - 1);
        let ff = poisson_bracket(&f, &f).unwrap();
        for x in [[0.1, 0.2], [1.0, -2.0]] {
            assert!(ff.eval(&at(&x), &[0.7, -1.1]).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn vector_field_examples() {
        let p = PolynomialObservable::momentum(1, 0);
        let v = hamiltonian_vector_field(&p);
        assert_eq!(v.q_components[0], PolynomialObservable::scalar(1, Expr::one()));
        assert!(v.p_components[0].is_zero());

        let q = PolynomialObservable::position(1, 0);
        let v = hamiltonian_vector_field(&q);
        assert!(v.q_components[0].is_zero());
        assert_eq!(v.p_components[0], PolynomialObservable::scalar(1, Expr::constant(-1.0)));

        // Oscillator: (p, -q).
        let h = PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5))
            .unwrap()
            .add(&PolynomialObservable::scalar(1, field("0.5*q1^2")))
            .unwrap();
        let v = hamiltonian_vector_field(&h);
        let b = Dims::new(0, 1).binding(0.0, &[], &[1.3]);
        assert!((v.q_components[0].eval(&b, &[0.4]).unwrap() - 0.4).abs() < 1e-15);
        assert!((v.p_components[0].eval(&b, &[0.4]).unwrap() + 1.3).abs() < 1e-15);
    }

    #[test]
    fn affine_membership() {
        let p = PolynomialObservable::momentum(1, 0);
        let q = PolynomialObservable::position(1, 0);
        assert!(p.add(&q).unwrap().is_affine());
        assert!(!p.mul(&p).unwrap().is_affine());
        assert!(PolynomialObservable::monomial(1, &[0], field("sin(q1)")).unwrap().is_affine());
    }

    #[test]
    fn momentum_derivative_counts_multiplicity() {
        let f = PolynomialObservable::monomial(2, &[0, 0, 1], field("q2")).unwrap();
        let d = f.d_p(0);
        assert_eq!(d.coefficient(&[0, 1]).eval(&at(&[0.0, 3.0])).unwrap(), 6.0);
        assert!(f.d_p(1).coefficient(&[0, 0]).eval(&at(&[0.0, 3.0])).unwrap() == 3.0);
    }

    #[test]
    fn index_checks() {
        assert_eq!(
            PolynomialObservable::monomial(1, &[1], Expr::one()),
            Err(AlgebraError::IndexOutOfRange { index: 1, n: 1 })
        );
        let a = PolynomialObservable::momentum(1, 0);
        let b = PolynomialObservable::momentum(2, 0);
        assert!(matches!(a.add(&b), Err(AlgebraError::DimensionMismatch(1, 2))));
    }

    #[test]
    fn lift_adds_time_momentum() {
        let h = PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5)).unwrap();
        let lifted = lift_to_cotangent(&h, Expr::one(), vec![]).unwrap();
        let b = Dims::new(0, 1).binding(0.0, &[], &[0.0]);
        assert_eq!(lifted.eval(&b, 2.0, &[], &[1.0]).unwrap(), 2.5);

        let zero = PolynomialObservable::zero(1);
        let pure_p = lift_to_cotangent(&zero, Expr::one(), vec![]).unwrap();
        assert_eq!(pure_p.eval(&b, -1.5, &[], &[4.0]).unwrap(), -1.5);

        let err = lift_to_cotangent(&h, field("q1"), vec![]).unwrap_err();
        assert!(matches!(err, AlgebraError::FiberDependence { .. }));
    }
}
