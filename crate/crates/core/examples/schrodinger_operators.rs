//! Affine observables as Hermitian operators on a periodic grid, and the
//! Dirac condition on a Gaussian.

use leafquant::algebra::{poisson_bracket, PolynomialObservable};
use leafquant::linalg::C64;
use leafquant::parse_expr;
use leafquant::quantize::{inner_product, quantize_affine, FiberGrid, WaveSection};

fn dirac_defect(points: usize) -> f64 {
    let vars = ["t", "s1", "q1"];
    let f = PolynomialObservable::affine(&[parse_expr("1 + 0.4*sin(q1)", &vars).unwrap()], parse_expr("q1^2/2", &vars).unwrap());
    let g = PolynomialObservable::affine(&[parse_expr("exp(-q1^2/4)", &vars).unwrap()], parse_expr("s1*q1", &vars).unwrap());
    let grid = FiberGrid::new(1, points, 10.0).unwrap();
    let (t, sigma) = (0.0, [0.5]);
    let fh = quantize_affine(&f, &grid, t, &sigma).unwrap();
    let gh = quantize_affine(&g, &grid, t, &sigma).unwrap();
    let bh = quantize_affine(&poisson_bracket(&f, &g).unwrap(), &grid, t, &sigma).unwrap();
    let residual = fh.commutator(&gh).add_scaled(&bh, C64::new(0.0, 1.0));
    let psi = WaveSection::gaussian(&grid, &[0.3], 1.0, &[0.5]);
    psi.apply(&residual).norm_sqr().sqrt()
}

fn main() {
    let grid = FiberGrid::new(1, 128, 8.0).unwrap();
    let vars = ["t", "s1", "q1"];
    let f = PolynomialObservable::affine(&[parse_expr("1 + q1^2/10", &vars).unwrap()], parse_expr("cos(q1)", &vars).unwrap());
    let fh = quantize_affine(&f, &grid, 0.0, &[0.0]).unwrap();
    println!("f = {f}: {} nonzeros, hermiticity defect {:.1e}", fh.nnz(), fh.hermiticity_defect());

    let psi = WaveSection::gaussian(&grid, &[1.0], 0.8, &[0.5]);
    let chi = WaveSection::gaussian(&grid, &[-0.5], 1.2, &[-1.0]);
    let lhs = inner_product(&psi.apply(&fh), &chi).unwrap();
    let rhs = inner_product(&psi, &chi.apply(&fh)).unwrap();
    println!("<f psi, chi> = {lhs:.12}\n<psi, f chi> = {rhs:.12}");

    let p = quantize_affine(&PolynomialObservable::momentum(1, 0), &grid, 0.0, &[0.0]).unwrap();
    println!("<p> on a Gaussian kicked by 0.5: {:.6}", psi.expectation(&p).re);

    let (coarse, fine) = (dirac_defect(256), dirac_defect(512));
    println!("Dirac defect N=256: {coarse:.3e}, N=512: {fine:.3e}, ratio {:.2}", coarse / fine);
}
