//! Leafwise Poisson brackets of polynomial observables.

use leafquant::algebra::{hamiltonian_vector_field, poisson_bracket, PolynomialObservable};
use leafquant::{parse_expr, Expr, VariableBinding};

fn main() {
    let vars = ["t", "s1", "q1"];
    let q = PolynomialObservable::position(1, 0);
    let p = PolynomialObservable::momentum(1, 0);
    println!("{{p, q}} = {}", poisson_bracket(&p, &q).unwrap());

    // driven oscillator with its centre at s1
    let h = PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5))
        .unwrap()
        .add(&PolynomialObservable::scalar(1, parse_expr("0.5*(q1 - s1)^2", &vars).unwrap()))
        .unwrap();
    println!("H        = {h}");
    println!("{{H, q}} = {}", poisson_bracket(&h, &q).unwrap());
    println!("{{H, p}} = {}", poisson_bracket(&h, &p).unwrap());

    let f = PolynomialObservable::affine(&[parse_expr("sin(q1)", &vars).unwrap()], parse_expr("q1*s1", &vars).unwrap());
    let g = PolynomialObservable::affine(&[parse_expr("q1^2", &vars).unwrap()], parse_expr("cos(q1)", &vars).unwrap());
    let fg = poisson_bracket(&f, &g).unwrap();
    println!("{{f, g}} = {fg}  (affine: {})", fg.is_affine());

    let theta = hamiltonian_vector_field(&f);
    let contracted = theta.contract(&g).unwrap();
    let b = VariableBinding::new().with("t", 0.0).with("s1", 0.4).with("q1", 0.9);
    println!(
        "theta_f(g) = {:.12}, {{f, g}} = {:.12} at (s1, q1, p1) = (0.4, 0.9, 1.3)",
        contracted.eval(&b, &[1.3]).unwrap(),
        fg.eval(&b, &[1.3]).unwrap()
    );

    let jacobi = |a: &PolynomialObservable, b: &PolynomialObservable, c: &PolynomialObservable| {
        poisson_bracket(a, &poisson_bracket(b, c).unwrap()).unwrap()
    };
    let cyclic = jacobi(&f, &g, &h)
        .add(&jacobi(&g, &h, &f))
        .unwrap()
        .add(&jacobi(&h, &f, &g))
        .unwrap();
    println!("Jacobi sum at the same point: {:.2e}", cyclic.eval(&b, &[1.3]).unwrap());
}
