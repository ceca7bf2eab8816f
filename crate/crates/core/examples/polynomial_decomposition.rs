//! Split a quartic observable into sums of products of affine factors over a
//! three-chart cover, then quantize it with each ordering rule.

use leafquant::algebra::{decompose_polynomial, BumpCover, PolynomialObservable};
use leafquant::quantize::{quantize_factorization, FiberGrid, Ordering};
use leafquant::{parse_expr, Dims};

fn main() {
    let vars = ["t", "s1", "q1"];
    let f = PolynomialObservable::monomial(1, &[0, 0, 0, 0], parse_expr("1/24", &vars).unwrap())
        .unwrap()
        .add(&PolynomialObservable::monomial(1, &[0, 0], parse_expr("0.5 + 0.1*q1^2", &vars).unwrap()).unwrap())
        .unwrap()
        .add(&PolynomialObservable::scalar(1, parse_expr("0.5*q1^2", &vars).unwrap()))
        .unwrap();
    let cover = BumpCover::uniform_1d(8.0, 3);
    let fac = decompose_polynomial(&f, &cover).unwrap();
    println!("f = {f}");
    println!("{} affine products over {} charts", fac.terms.len(), cover.len());

    let dims = Dims::new(1, 1);
    let mut worst: f64 = 0.0;
    let mut partition: f64 = 0.0;
    for q in cover.samples(200) {
        for d in [2, 4] {
            partition = partition.max((cover.partition_sum(d, &q).unwrap() - 1.0).abs());
        }
        let b = dims.binding(0.0, &[0.0], &q);
        for p in [-1.5, 0.3, 2.0] {
            let want = f.eval(&b, &[p]).unwrap();
            worst = worst.max((want - fac.eval(&b, &[p]).unwrap()).abs() / want.abs().max(1.0));
        }
    }
    println!("partition of unity defect {partition:.1e}, reconstruction defect {worst:.1e}");

    let grid = FiberGrid::new(1, 64, 8.0).unwrap();
    for ordering in [Ordering::Symmetric, Ordering::Left, Ordering::Right] {
        let op = quantize_factorization(&fac, &grid, 0.0, &[0.0], ordering).unwrap();
        println!("{ordering:?}: hermiticity defect {:.2e}", op.hermiticity_defect());
    }
}
