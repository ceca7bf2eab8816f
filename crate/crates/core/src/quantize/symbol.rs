//! First-order differential operators `c^k d_k + e` with complex symbolic
//! coefficients, and their commutators.

use crate::algebra::{poisson_bracket, AlgebraError, PolynomialObservable};
use crate::coords::Dims;
use crate::expr::{EvalError, Expr, VariableBinding};
use crate::linalg::C64;

/// `re + i im`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexExpr {
    pub re: Expr,
    pub im: Expr,
}

impl ComplexExpr {
    pub fn real(re: Expr) -> Self {
        ComplexExpr { re, im: Expr::zero() }
    }

    pub fn imag(im: Expr) -> Self {
        ComplexExpr { re: Expr::zero(), im }
    }

    pub fn zero() -> Self {
        Self::real(Expr::zero())
    }

    pub fn add(&self, o: &Self) -> Self {
        ComplexExpr {
            re: self.re.add(&o.re),
            im: self.im.add(&o.im),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        ComplexExpr {
            re: self.re.sub(&o.re),
            im: self.im.sub(&o.im),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        ComplexExpr {
            re: self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            im: self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> Self {
        ComplexExpr {
            re: self.im.neg(),
            im: self.re.clone(),
        }
    }

    pub fn diff(&self, var: &str) -> Self {
        ComplexExpr {
            re: self.re.diff(var),
            im: self.im.diff(var),
        }
    }

    pub fn eval(&self, b: &VariableBinding) -> Result<C64, EvalError> {
        Ok(C64::new(self.re.eval(b)?, self.im.eval(b)?))
    }
}

/// The operator `vector[k] d_k + scalar`.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderSymbol {
    pub vector: Vec<ComplexExpr>,
    pub scalar: ComplexExpr,
}

impl FirstOrderSymbol {
    /// Symbol of `f^ = -i a^k d_k - (i/2) d_k a^k + b`.
    pub fn of_affine(f: &PolynomialObservable) -> Result<Self, AlgebraError> {
        if !f.is_affine() {
            return Err(AlgebraError::NotAffine(f.degree()));
        }
        let a = f.linear_coefficients();
        let mut divergence = Expr::zero();
        for (k, ak) in a.iter().enumerate() {
            divergence = divergence.add(&ak.diff(&Dims::q(k)));
        }
        Ok(FirstOrderSymbol {
            vector: a.iter().map(|ak| ComplexExpr::imag(ak.neg())).collect(),
            scalar: ComplexExpr {
                re: f.scalar_part(),
                im: divergence.mul(&Expr::constant(-0.5)),
            },
        })
    }

    fn apply_vector(&self, g: &ComplexExpr) -> ComplexExpr {
        self.vector
            .iter()
            .enumerate()
            .fold(ComplexExpr::zero(), |acc, (k, c)| acc.add(&c.mul(&g.diff(&Dims::q(k)))))
    }

    /// `[self, other]`, again a first-order operator.
    pub fn commutator(&self, other: &Self) -> Self {
        let vector = self
            .vector
            .iter()
            .zip(&other.vector)
            .map(|(c, d)| self.apply_vector(d).sub(&other.apply_vector(c)))
            .collect();
        let scalar = self.apply_vector(&other.scalar).sub(&other.apply_vector(&self.scalar));
        FirstOrderSymbol { vector, scalar }
    }

    pub fn add(&self, other: &Self) -> Self {
        FirstOrderSymbol {
            vector: self.vector.iter().zip(&other.vector).map(|(a, b)| a.add(b)).collect(),
            scalar: self.scalar.add(&other.scalar),
        }
    }

    pub fn times_i(&self) -> Self {
        FirstOrderSymbol {
            vector: self.vector.iter().map(ComplexExpr::times_i).collect(),
            scalar: self.scalar.times_i(),
        }
    }

    /// Largest modulus among the coefficients at `b`.
    pub fn max_abs(&self, b: &VariableBinding) -> Result<f64, EvalError> {
        let mut m = self.scalar.eval(b)?.norm();
        for c in &self.vector {
            m = m.max(c.eval(b)?.norm());
        }
        Ok(m)
    }
}

/// Largest coefficient of `[f^, g^] + i {f, g}^` over `points`.
pub fn dirac_symbol_defect(
    f: &PolynomialObservable,
    g: &PolynomialObservable,
    points: &[VariableBinding],
) -> Result<f64, AlgebraError> {
    let bracket = poisson_bracket(f, g)?;
    let lhs = FirstOrderSymbol::of_affine(f)?.commutator(&FirstOrderSymbol::of_affine(g)?);
    let residual = lhs.add(&FirstOrderSymbol::of_affine(&bracket)?.times_i());
    let mut worst: f64 = 0.0;
    for b in points {
        worst = worst.max(residual.max_abs(b)?);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn canonical_pair() {
        let p = PolynomialObservable::momentum(1, 0);
        let q = PolynomialObservable::position(1, 0);
        let c = FirstOrderSymbol::of_affine(&p)
            .unwrap()
            .commutator(&FirstOrderSymbol::of_affine(&q).unwrap());
        let b = VariableBinding::new().with("q1", 0.3);
        assert_eq!(c.scalar.eval(&b).unwrap(), C64::new(0.0, -1.0));
        assert_eq!(c.vector[0].eval(&b).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn varying_coefficients() {
        let vars = ["q1", "q2"];
        let f = PolynomialObservable::affine(
            &[parse_expr("sin(q1)*q2", &vars).unwrap(), parse_expr("q1^2", &vars).unwrap()],
            parse_expr("cos(q2)", &vars).unwrap(),
        );
        let g = PolynomialObservable::affine(
            &[parse_expr("exp(q2/3)", &vars).unwrap(), parse_expr("1 + q1*q2", &vars).unwrap()],
            parse_expr("q1*q2^2", &vars).unwrap(),
        );
        let pts: Vec<VariableBinding> = (0..10)
            .map(|i| VariableBinding::new().with("q1", 0.3 * i as f64 - 1.0).with("q2", 0.7 - 0.2 * i as f64))
            .collect();
        assert!(dirac_symbol_defect(&f, &g, &pts).unwrap() <= 1e-12);
    }
}
