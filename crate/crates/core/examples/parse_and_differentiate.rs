//! Parse a coefficient field, differentiate it exactly and compare with a
//! central difference.

use leafquant::expr::CompiledExpr;
use leafquant::{parse_expr, VariableBinding};

fn main() {
    let vars = ["t", "s1", "q1"];
    let a = parse_expr("exp(-q1^2/2) * (1 + 0.3*sin(s1 - t)) + bump(q1; 0.5, 2)", &vars).unwrap();
    let da = a.diff("q1");
    println!("a        = {a}");
    println!("d a / dq = {da}");

    let at = |q: f64| VariableBinding::new().with("t", 0.2).with("s1", 1.1).with("q1", q);
    let h = 1e-4;
    for q in [-1.0, 0.0, 0.7, 1.9] {
        let exact = da.eval(&at(q)).unwrap();
        let fd = (a.eval(&at(q + h)).unwrap() - a.eval(&at(q - h)).unwrap()) / (2.0 * h);
        println!("q = {q:5.2}  exact {exact:+.10}  central difference {fd:+.10}  gap {:.1e}", (exact - fd).abs());
    }

    let compiled = CompiledExpr::new(&da, &vars).unwrap();
    println!("compiled at (0.2, 1.1, 0.7): {}", compiled.eval(&[0.2, 1.1, 0.7]).unwrap());

    match parse_expr("q3 + 1", &vars) {
        Err(e) => println!("rejected: {e}"),
        Ok(_) => unreachable!(),
    }
}
