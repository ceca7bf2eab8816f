use super::{bump_profile, EvalError, Expr, Func, Node};

#[derive(Clone, Debug)]
enum Instr {
    Const(f64),
    Load(usize),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Pow(i32),
    Func(Func),
    Root(u32),
    Bump,
    /// Pops `u`; when `|u| >= 1` pushes zero and skips the gated body.
    Gate(usize),
}

/// An expression flattened to a stack program over positional variable slots.
///
/// Used on hot paths (grid sampling, integrators) where name lookups would
/// dominate.
#[derive(Clone, Debug)]
pub struct CompiledExpr {
    code: Vec<Instr>,
    max_stack: usize,
}

impl CompiledExpr {
    /// Compile against a slot layout; every free variable must appear in `slots`.
    pub fn new(expr: &Expr, slots: &[&str]) -> Result<Self, EvalError> {
        let mut code = Vec::new();
        emit(expr, slots, &mut code)?;
        let max_stack = stack_depth(&code);
        Ok(CompiledExpr { code, max_stack })
    }

    /// Evaluate with `values[i]` bound to `slots[i]`.
    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        let mut stack: Vec<f64> = Vec::with_capacity(self.max_stack);
        let mut pc = 0;
        while pc < self.code.len() {
            match &self.code[pc] {
                Instr::Const(c) => stack.push(*c),
                Instr::Load(i) => stack.push(values[*i]),
                Instr::Add => binary(&mut stack, |a, b| a + b),
                Instr::Sub => binary(&mut stack, |a, b| a - b),
                Instr::Mul => binary(&mut stack, |a, b| a * b),
                Instr::Div => binary(&mut stack, |a, b| a / b),
                Instr::Neg => {
                    let a = stack.last_mut().expect("stack underflow");
                    *a = -*a;
                }
                Instr::Pow(n) => {
                    let a = stack.last_mut().expect("stack underflow");
                    *a = a.powi(*n);
                }
                Instr::Func(f) => {
                    let a = stack.last_mut().expect("stack underflow");
                    *a = f.apply(*a);
                }
                Instr::Root(n) => {
                    let a = stack.last_mut().expect("stack underflow");
                    *a = if *a < 0.0 { f64::NAN } else { a.powf(1.0 / *n as f64) };
                }
                Instr::Bump => {
                    let r = stack.pop().expect("stack underflow");
                    let c = stack.pop().expect("stack underflow");
                    let x = stack.last_mut().expect("stack underflow");
                    *x = bump_profile((*x - c) / r);
                }
                Instr::Gate(skip) => {
                    let u = stack.pop().expect("stack underflow");
                    if u.abs() >= 1.0 || u.is_nan() {
                        stack.push(0.0);
                        pc += skip;
                    }
                }
            }
            pc += 1;
        }
        let v = stack.pop().expect("empty program");
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }
}

fn binary(stack: &mut Vec<f64>, op: impl Fn(f64, f64) -> f64) {
    let b = stack.pop().expect("stack underflow");
    let a = stack.last_mut().expect("stack underflow");
    *a = op(*a, b);
}

fn emit(e: &Expr, slots: &[&str], code: &mut Vec<Instr>) -> Result<(), EvalError> {
    match e.node() {
        Node::Const(c) => code.push(Instr::Const(*c)),
        Node::Var(v) => {
            let i = slots
                .iter()
                .position(|s| *s == &**v)
                .ok_or_else(|| EvalError::Unbound(v.to_string()))?;
            code.push(Instr::Load(i));
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            emit(a, slots, code)?;
            emit(b, slots, code)?;
            code.push(match e.node() {
                Node::Add(..) => Instr::Add,
                Node::Sub(..) => Instr::Sub,
                Node::Mul(..) => Instr::Mul,
                _ => Instr::Div,
            });
        }
        Node::Neg(a) => {
            emit(a, slots, code)?;
            code.push(Instr::Neg);
        }
        Node::Pow(a, n) => {
            emit(a, slots, code)?;
            code.push(Instr::Pow(*n));
        }
        Node::Func(f, a) => {
            emit(a, slots, code)?;
            code.push(Instr::Func(*f));
        }
        Node::Root(a, n) => {
            emit(a, slots, code)?;
            code.push(Instr::Root(*n));
        }
        Node::Bump { x, center, radius } => {
            emit(x, slots, code)?;
            emit(center, slots, code)?;
            emit(radius, slots, code)?;
            code.push(Instr::Bump);
        }
        Node::Gate { u, body } => {
            emit(u, slots, code)?;
            let at = code.len();
            code.push(Instr::Gate(0));
            emit(body, slots, code)?;
            code[at] = Instr::Gate(code.len() - at - 1);
        }
    }
    Ok(())
}

fn stack_depth(code: &[Instr]) -> usize {
    // Upper bound: straight-line simulation ignoring gate skips.
    let mut depth: isize = 0;
    let mut max = 0;
    for ins in code {
        depth += match ins {
            Instr::Const(_) | Instr::Load(_) => 1,
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Div | Instr::Gate(_) => -1,
            Instr::Bump => -2,
            _ => 0,
        };
        max = max.max(depth);
    }
    max as usize + 1
}

#[cfg(test)]
mod tests {
    use super::super::{parse_expr, VariableBinding};
    use super::*;

    #[test]
    fn agrees_with_tree_evaluation() {
        let vars = ["t", "s1", "q1"];
        let src = "sin(t)*q1^2 - exp(-s1)/(2 + cos(q1)) + bump(q1; s1, 1.5) + root(1 + q1^2; 3)";
        let e = parse_expr(src, &vars).unwrap();
        let d = e.diff("q1").diff("q1");
        for expr in [&e, &d] {
            let c = CompiledExpr::new(expr, &vars).unwrap();
            for k in 0..50 {
                let x = [0.1 * k as f64, 0.3 - 0.02 * k as f64, -2.0 + 0.09 * k as f64];
                let b: VariableBinding = vars.iter().copied().zip(x).collect();
                let tree = expr.eval(&b).unwrap();
                let flat = c.eval(&x).unwrap();
                assert!((tree - flat).abs() <= 1e-12 * (1.0 + tree.abs()), "{tree} {flat}");
            }
        }
    }

    #[test]
    fn missing_slot_is_reported() {
        let e = parse_expr("q1 + q2", &["q1", "q2"]).unwrap();
        assert!(matches!(
            CompiledExpr::new(&e, &["q1"]),
            Err(EvalError::Unbound(name)) if name == "q2"
        ));
    }

    #[test]
    fn non_finite_is_an_error() {
        let e = parse_expr("1 / q1", &["q1"]).unwrap();
        let c = CompiledExpr::new(&e, &["q1"]).unwrap();
        assert_eq!(c.eval(&[0.0]), Err(EvalError::NonFinite));
    }
}
