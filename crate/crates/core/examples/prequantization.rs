//! Curvature of the canonical leafwise connection and leafwise differentials.

use leafquant::algebra::PolynomialObservable;
use leafquant::bundle::{leafwise_differential, prequant_curvature_check};
use leafquant::parse_expr;

fn main() {
    for n in [1, 2] {
        let report = prequant_curvature_check(n);
        println!("n = {n}: curvature is i Omega: {}", report.holds);
        for c in report.components.iter().filter(|c| c.expected_imag != 0.0) {
            println!("  R[{}, {}] = i * ({})", c.row, c.col, c.imag);
        }
    }

    let vars = ["t", "s1", "q1", "q2"];
    let f = PolynomialObservable::monomial(2, &[0, 1], parse_expr("q1*sin(q2)", &vars).unwrap())
        .unwrap()
        .add(&PolynomialObservable::scalar(2, parse_expr("s1*q2^2", &vars).unwrap()))
        .unwrap();
    let d = leafwise_differential(&f);
    println!("f = {f}");
    for k in 0..2 {
        println!("  d~f along dq{}: {}", k + 1, d.dq[k]);
        println!("  d~f along dp{}: {}", k + 1, d.dp[k]);
    }
}
