//! Real-valued coefficient fields.
//!
//! Every connection component, observable coefficient and parameter function
//! is an [`Expr`]: an immutable arithmetic tree over named variables that can
//! be printed, parsed back, evaluated and differentiated exactly.
//!
//! Simplification is deliberately shallow: constructors fold constants and
//! apply the `0`/`1` identities, nothing else.

mod compile;
mod diff;
mod parse;

pub use compile::CompiledExpr;
pub use parse::{parse_expr, parse_expr_with, ParseError};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Smooth compactly supported mollifier `exp(1 - 1/(1 - u^2))` on `|u| < 1`.
pub fn bump_profile(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// Elementary one-argument functions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Tanh => x.tanh(),
            Func::Sqrt => x.sqrt(),
        }
    }
}

/// A node of the expression tree.
#[derive(Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    /// Integer power.
    Pow(Expr, i32),
    Func(Func, Expr),
    /// Positive real `n`-th root of a nonnegative argument.
    Root(Expr, u32),
    /// `bump(x; center, radius)`.
    Bump {
        x: Expr,
        center: Expr,
        radius: Expr,
    },
    /// `gate(u; body)`: `body` where `|u| < 1`, zero elsewhere. Derivatives of
    /// bumps live under a gate so the singular rational factors are never
    /// evaluated outside the support.
    Gate { u: Expr, body: Expr },
}

/// Immutable, cheaply clonable expression tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

/// Values for the free variables of an expression.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariableBinding(BTreeMap<String, f64>);

impl VariableBinding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_owned(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for VariableBinding {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        VariableBinding(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("{func} outside its domain at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("non-finite result")]
    NonFinite,
}

impl Expr {
    fn from_node(node: Node) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(value: f64) -> Expr {
        Expr::from_node(Node::Const(value))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Expr {
        Expr::from_node(Node::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a + b),
            (Some(a), _) if a == 0.0 => rhs.clone(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expr::from_node(Node::Add(self.clone(), rhs.clone())),
        }
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a - b),
            (Some(a), _) if a == 0.0 => rhs.neg(),
            (_, Some(b)) if b == 0.0 => self.clone(),
            _ => Expr::from_node(Node::Sub(self.clone(), rhs.clone())),
        }
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) => Expr::constant(a * b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 0.0 => Expr::zero(),
            (Some(a), _) if a == 1.0 => rhs.clone(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            (Some(a), _) if a == -1.0 => rhs.neg(),
            (_, Some(b)) if b == -1.0 => self.neg(),
            _ => Expr::from_node(Node::Mul(self.clone(), rhs.clone())),
        }
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        match (self.as_const(), rhs.as_const()) {
            (Some(a), Some(b)) if b != 0.0 => Expr::constant(a / b),
            (Some(a), _) if a == 0.0 => Expr::zero(),
            (_, Some(b)) if b == 1.0 => self.clone(),
            _ => Expr::from_node(Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(c) => Expr::constant(-c),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::from_node(Node::Neg(self.clone())),
        }
    }

    pub fn powi(&self, exponent: i32) -> Expr {
        match (exponent, self.as_const()) {
            (0, _) => Expr::one(),
            (1, _) => self.clone(),
            (_, Some(c)) if c.powi(exponent).is_finite() => Expr::constant(c.powi(exponent)),
            _ => Expr::from_node(Node::Pow(self.clone(), exponent)),
        }
    }

    pub fn apply(func: Func, arg: &Expr) -> Expr {
        if let Some(c) = arg.as_const() {
            let v = func.apply(c);
            if v.is_finite() {
                return Expr::constant(v);
            }
        }
        Expr::from_node(Node::Func(func, arg.clone()))
    }

    pub fn sin(&self) -> Expr {
        Expr::apply(Func::Sin, self)
    }

    pub fn cos(&self) -> Expr {
        Expr::apply(Func::Cos, self)
    }

    pub fn exp(&self) -> Expr {
        Expr::apply(Func::Exp, self)
    }

    pub fn tanh(&self) -> Expr {
        Expr::apply(Func::Tanh, self)
    }

    pub fn sqrt(&self) -> Expr {
        Expr::apply(Func::Sqrt, self)
    }

    /// Positive `n`-th root, `n >= 1`.
    pub fn root(&self, n: u32) -> Expr {
        assert!(n >= 1, "root degree must be positive");
        if n == 1 {
            return self.clone();
        }
        if let Some(c) = self.as_const() {
            if c >= 0.0 {
                return Expr::constant(c.powf(1.0 / n as f64));
            }
        }
        Expr::from_node(Node::Root(self.clone(), n))
    }

    pub fn bump(x: &Expr, center: &Expr, radius: &Expr) -> Expr {
        if let (Some(x), Some(c), Some(r)) = (x.as_const(), center.as_const(), radius.as_const()) {
            if r > 0.0 {
                return Expr::constant(bump_profile((x - c) / r));
            }
        }
        Expr::from_node(Node::Bump {
            x: x.clone(),
            center: center.clone(),
            radius: radius.clone(),
        })
    }

    pub fn gate(u: &Expr, body: &Expr) -> Expr {
        if body.is_zero() {
            return Expr::zero();
        }
        if let Some(u) = u.as_const() {
            return if u.abs() < 1.0 { body.clone() } else { Expr::zero() };
        }
        Expr::from_node(Node::Gate {
            u: u.clone(),
            body: body.clone(),
        })
    }

    /// Names of the variables the tree depends on.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(v.to_string());
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) | Node::Root(a, _) => {
                a.collect_vars(out)
            }
            Node::Bump { x, center, radius } => {
                x.collect_vars(out);
                center.collect_vars(out);
                radius.collect_vars(out);
            }
            Node::Gate { u, body } => {
                u.collect_vars(out);
                body.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, name: &str) -> bool {
        match self.node() {
            Node::Const(_) => false,
            Node::Var(v) => &**v == name,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.depends_on(name) || b.depends_on(name)
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) | Node::Root(a, _) => {
                a.depends_on(name)
            }
            Node::Bump { x, center, radius } => {
                x.depends_on(name) || center.depends_on(name) || radius.depends_on(name)
            }
            Node::Gate { u, body } => u.depends_on(name) || body.depends_on(name),
        }
    }

    /// Replace every occurrence of `name` by `with`.
    pub fn substitute(&self, name: &str, with: &Expr) -> Expr {
        if !self.depends_on(name) {
            return self.clone();
        }
        let s = |e: &Expr| e.substitute(name, with);
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(_) => with.clone(),
            Node::Add(a, b) => s(a).add(&s(b)),
            Node::Sub(a, b) => s(a).sub(&s(b)),
            Node::Mul(a, b) => s(a).mul(&s(b)),
            Node::Div(a, b) => s(a).div(&s(b)),
            Node::Neg(a) => s(a).neg(),
            Node::Pow(a, n) => s(a).powi(*n),
            Node::Func(f, a) => Expr::apply(*f, &s(a)),
            Node::Root(a, n) => s(a).root(*n),
            Node::Bump { x, center, radius } => Expr::bump(&s(x), &s(center), &s(radius)),
            Node::Gate { u, body } => Expr::gate(&s(u), &s(body)),
        }
    }

    /// Replace several variables by constants at once.
    pub fn bind_constants(&self, values: &VariableBinding) -> Expr {
        values
            .0
            .iter()
            .fold(self.clone(), |e, (k, v)| e.substitute(k, &Expr::constant(*v)))
    }

    /// Evaluate at a binding that covers every free variable.
    pub fn eval(&self, binding: &VariableBinding) -> Result<f64, EvalError> {
        let v = self.eval_inner(binding)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, b: &VariableBinding) -> Result<f64, EvalError> {
        Ok(match self.node() {
            Node::Const(c) => *c,
            Node::Var(v) => b.get(v).ok_or_else(|| EvalError::Unbound(v.to_string()))?,
            Node::Add(x, y) => x.eval_inner(b)? + y.eval_inner(b)?,
            Node::Sub(x, y) => x.eval_inner(b)? - y.eval_inner(b)?,
            Node::Mul(x, y) => x.eval_inner(b)? * y.eval_inner(b)?,
            Node::Div(x, y) => {
                let num = x.eval_inner(b)?;
                let den = y.eval_inner(b)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Node::Neg(x) => -x.eval_inner(b)?,
            Node::Pow(x, n) => {
                let base = x.eval_inner(b)?;
                if base == 0.0 && *n < 0 {
                    return Err(EvalError::DivisionByZero);
                }
                base.powi(*n)
            }
            Node::Func(f, x) => {
                let arg = x.eval_inner(b)?;
                if *f == Func::Sqrt && arg < 0.0 {
                    return Err(EvalError::Domain { func: "sqrt", arg });
                }
                f.apply(arg)
            }
            Node::Root(x, n) => {
                let arg = x.eval_inner(b)?;
                if arg < 0.0 {
                    return Err(EvalError::Domain { func: "root", arg });
                }
                arg.powf(1.0 / *n as f64)
            }
            Node::Bump { x, center, radius } => {
                let r = radius.eval_inner(b)?;
                if r == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                bump_profile((x.eval_inner(b)? - center.eval_inner(b)?) / r)
            }
            Node::Gate { u, body } => {
                if u.eval_inner(b)?.abs() < 1.0 {
                    body.eval_inner(b)?
                } else {
                    0.0
                }
            }
        })
    }

    /// Number of nodes, counting shared subtrees once per occurrence.
    pub fn size(&self) -> usize {
        1 + match self.node() {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.size() + b.size()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Func(_, a) | Node::Root(a, _) => a.size(),
            Node::Bump { x, center, radius } => x.size() + center.size() + radius.size(),
            Node::Gate { u, body } => u.size() + body.size(),
        }
    }
}

impl From<f64> for Expr {
    fn from(value: f64) -> Self {
        Expr::constant(value)
    }
}

macro_rules! binary_op {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(self, rhs)
            }
        }
        impl std::ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::$method(&self, &rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                Expr::$method(&self, rhs)
            }
        }
    };
}

binary_op!(Add, add);
binary_op!(Sub, sub);
binary_op!(Mul, mul);
binary_op!(Div, div);

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(&self)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c}")
                }
            }
            Node::Var(v) => write!(f, "{v}"),
            Node::Add(a, b) => write!(f, "({a} + {b})"),
            Node::Sub(a, b) => write!(f, "({a} - {b})"),
            Node::Mul(a, b) => write!(f, "({a} * {b})"),
            Node::Div(a, b) => write!(f, "({a} / {b})"),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Pow(a, n) => write!(f, "({a}^{n})"),
            Node::Func(func, a) => write!(f, "{}({a})", func.name()),
            Node::Root(a, n) => write!(f, "root({a}; {n})"),
            Node::Bump { x, center, radius } => write!(f, "bump({x}; {center}, {radius})"),
            Node::Gate { u, body } => write!(f, "gate({u}; {body})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(name: &str) -> Expr {
        Expr::var(name)
    }

    #[test]
    fn folds_identities() {
        let x = q("q1");
        assert_eq!(x.mul(&Expr::one()), x);
        assert_eq!(Expr::zero().mul(&x), Expr::zero());
        assert_eq!(x.add(&Expr::zero()), x);
        assert_eq!(Expr::constant(2.0).mul(&Expr::constant(3.0)).as_const(), Some(6.0));
        assert_eq!(x.powi(0).as_const(), Some(1.0));
        assert_eq!(x.neg().neg(), x);
    }

    #[test]
    fn eval_examples() {
        let b = VariableBinding::new().with("q1", 3.0);
        assert_eq!(q("q1").powi(2).eval(&b), Ok(9.0));
        let bump = Expr::bump(&q("q1"), &Expr::zero(), &Expr::one());
        assert_eq!(bump.eval(&VariableBinding::new().with("q1", 2.0)), Ok(0.0));
        assert_eq!(Expr::zero().exp().eval(&VariableBinding::new()), Ok(1.0));
    }

    #[test]
    fn eval_errors() {
        let e = q("q1").div(&q("q2"));
        let b = VariableBinding::new().with("q1", 1.0).with("q2", 0.0);
        assert_eq!(e.eval(&b), Err(EvalError::DivisionByZero));
        assert_eq!(
            q("w").eval(&VariableBinding::new()),
            Err(EvalError::Unbound("w".into()))
        );
        let s = q("q1").sqrt();
        assert!(matches!(
            s.eval(&VariableBinding::new().with("q1", -1.0)),
            Err(EvalError::Domain { func: "sqrt", .. })
        ));
        let big = q("q1").exp();
        assert_eq!(
            big.eval(&VariableBinding::new().with("q1", 1e4)),
            Err(EvalError::NonFinite)
        );
    }

    #[test]
    fn free_vars_and_substitution() {
        let e = q("q1").powi(2).add(&q("s1").mul(&q("q1")));
        let vars: Vec<_> = e.free_vars().into_iter().collect();
        assert_eq!(vars, vec!["q1".to_string(), "s1".to_string()]);
        let sub = e.substitute("s1", &Expr::constant(2.0));
        assert!(!sub.depends_on("s1"));
        let v = sub.eval(&VariableBinding::new().with("q1", 3.0)).unwrap();
        assert_eq!(v, 15.0);
    }

    #[test]
    fn bump_profile_support() {
        assert_eq!(bump_profile(1.0), 0.0);
        assert_eq!(bump_profile(-1.5), 0.0);
        assert!((bump_profile(0.0) - 1.0).abs() < 1e-15);
        assert!(bump_profile(0.99) > 0.0);
    }
}
