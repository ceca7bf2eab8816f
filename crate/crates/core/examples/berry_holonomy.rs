//! Geometric factors around the unit circle for a flat and a curved
//! connection, with step-doubling convergence for the curved one.

use leafquant::algebra::{BumpCover, PolynomialObservable};
use leafquant::bundle::{connection_curvature, BundleModel, ParameterPath};
use leafquant::evolve::{geometric_factor, DrivenHamiltonian};
use leafquant::linalg::{unitarity_defect, DenseMatrix, C64};
use leafquant::quantize::{FiberGrid, Ordering};
use leafquant::{parse_expr, Dims};

fn loop_system(lambda: [&str; 2]) -> DrivenHamiltonian {
    let vars = ["t", "s1", "s2", "q1"];
    let row = lambda.iter().map(|s| parse_expr(s, &vars).unwrap()).collect();
    let bundle = BundleModel::new(Dims::new(2, 1), vec![row], vec![parse_expr("0", &vars).unwrap()], None).unwrap();
    let circle = ParameterPath::closed_form(
        vec![parse_expr("cos(t)", &["t"]).unwrap(), parse_expr("sin(t)", &["t"]).unwrap()],
        (0.0, 2.0 * std::f64::consts::PI),
        true,
    )
    .unwrap();
    DrivenHamiltonian::new(
        bundle,
        circle,
        PolynomialObservable::zero(1),
        BumpCover::single(1, 8.0),
        FiberGrid::new(1, 64, 8.0).unwrap(),
        Ordering::Symmetric,
    )
    .unwrap()
}

fn distance_from_identity(u: &DenseMatrix) -> f64 {
    (u - DenseMatrix::identity(u.nrows(), u.ncols())).norm()
}

fn main() {
    let t1 = 2.0 * std::f64::consts::PI;

    let flat = loop_system(["1", "0.5"]);
    let u = geometric_factor(&flat, t1, 512).unwrap();
    println!("flat: ||U_geo - I|| = {:.2e}", distance_from_identity(&u));

    let curved = loop_system(["1", "q1"]);
    println!("curvature F[0][0][1] = {}", connection_curvature(curved.bundle())[0][0][1]);
    let factors: Vec<DenseMatrix> = [1024, 2048, 4096]
        .iter()
        .map(|s| geometric_factor(&curved, t1, *s).unwrap())
        .collect();
    let d1 = (&factors[1] - &factors[0]).norm();
    let d2 = (&factors[2] - &factors[1]).norm();
    let third = C64::new(1.0 / 3.0, 0.0);
    let r1 = (&factors[1] * C64::new(4.0, 0.0) - &factors[0]) * third;
    let r2 = (&factors[2] * C64::new(4.0, 0.0) - &factors[1]) * third;
    println!("curved: differences {d1:.3e}, {d2:.3e}, ratio {:.4}", d1 / d2);
    println!("Richardson stability {:.2e}", (&r2 - &r1).norm());
    println!(
        "||U_geo - I|| = {:.4}, unitarity defect {:.1e}",
        distance_from_identity(&r2),
        unitarity_defect(&factors[2])
    );
}
