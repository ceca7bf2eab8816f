use super::{Expr, Func, Node};

impl Expr {
    /// Exact partial derivative with respect to `var`.
    pub fn diff(&self, var: &str) -> Expr {
        if !self.depends_on(var) {
            return Expr::zero();
        }
        match self.node() {
            Node::Const(_) => Expr::zero(),
            Node::Var(_) => Expr::one(),
            Node::Add(a, b) => a.diff(var).add(&b.diff(var)),
            Node::Sub(a, b) => a.diff(var).sub(&b.diff(var)),
            Node::Mul(a, b) => a.diff(var).mul(b).add(&a.mul(&b.diff(var))),
            Node::Div(a, b) => {
                let num = a.diff(var).mul(b).sub(&a.mul(&b.diff(var)));
                num.div(&b.powi(2))
            }
            Node::Neg(a) => a.diff(var).neg(),
            Node::Pow(a, n) => Expr::constant(*n as f64)
                .mul(&a.powi(n - 1))
                .mul(&a.diff(var)),
            Node::Func(f, a) => {
                let inner = a.diff(var);
                let outer = match f {
                    Func::Sin => a.cos(),
                    Func::Cos => a.sin().neg(),
                    Func::Exp => self.clone(),
                    Func::Tanh => Expr::one().sub(&self.powi(2)),
                    Func::Sqrt => Expr::constant(0.5).div(self),
                };
                outer.mul(&inner)
            }
            Node::Root(a, n) => self
                .div(&Expr::constant(*n as f64).mul(a))
                .mul(&a.diff(var)),
            Node::Bump { x, center, radius } => {
                // B = exp(1 - 1/(1 - u^2)), u = (x - c)/r, dB = B * d(-1/(1 - u^2))
                let u = x.sub(center).div(radius);
                let w = Expr::one().sub(&u.powi(2));
                let profile = Expr::one().sub(&Expr::one().div(&w)).exp();
                let body = profile.mul(&w.powi(-1).neg().diff(var));
                Expr::gate(&u, &body)
            }
            Node::Gate { u, body } => Expr::gate(u, &body.diff(var)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, VariableBinding};
    use super::*;

    fn at(name: &str, v: f64) -> VariableBinding {
        VariableBinding::new().with(name, v)
    }

    #[test]
    fn calculus_identities() {
        let e = parse_expr("sin(q1)", &["q1"]).unwrap();
        let d = e.diff("q1");
        assert_eq!(d.to_string(), "cos(q1)");

        let e = parse_expr("s1*q1 + t", &["s1", "q1", "t"]).unwrap();
        assert_eq!(e.diff("s1"), Expr::var("q1"));

        let e = parse_expr("q1^3 + exp(q2)", &["q1", "q2"]).unwrap();
        assert!(e.diff("t").is_zero());
    }

    #[test]
    fn bump_derivative_vanishes_outside_support() {
        let e = parse_expr("bump(q1; 0.5, 2)", &["q1"]).unwrap();
        let mut d = e.clone();
        for _ in 0..3 {
            d = d.diff("q1");
            for x in [0.5 + 2.0 + 1e-9, 0.5 - 2.0 - 1e-9, 0.5 + 2.0, 0.5 - 2.0 + 1e-9, 10.0] {
                assert!(d.eval(&at("q1", x)).unwrap().abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn root_derivative() {
        let e = parse_expr("root(q1^2 + 1; 3)", &["q1"]).unwrap();
        let d = e.diff("q1");
        let x = 0.7;
        let h = 1e-5;
        let fd = (e.eval(&at("q1", x + h)).unwrap() - e.eval(&at("q1", x - h)).unwrap()) / (2.0 * h);
        assert!((d.eval(&at("q1", x)).unwrap() - fd).abs() < 1e-8);
    }
}
