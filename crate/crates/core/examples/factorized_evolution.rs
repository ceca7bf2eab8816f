//! Splitting the evolution into geometric and dynamic factors: exact when
//! the generators commute, measurably off when they do not.

use leafquant::algebra::{BumpCover, PolynomialObservable};
use leafquant::bundle::{BundleModel, ParameterPath};
use leafquant::evolve::{split_evolution, split_evolution_state, DrivenHamiltonian};
use leafquant::quantize::{FiberGrid, Ordering};
use leafquant::scenario::preset;
use leafquant::{parse_expr, Dims, Expr};

fn main() {
    // G = p along chi = t, H' = p^2 = G^2
    let bundle = BundleModel::new(Dims::new(1, 1), vec![vec![Expr::one()]], vec![Expr::zero()], None).unwrap();
    let path = ParameterPath::closed_form(vec![parse_expr("t", &["t"]).unwrap()], (0.0, 1.0), false).unwrap();
    let h = PolynomialObservable::monomial(1, &[0, 0], Expr::one()).unwrap();
    let dh = DrivenHamiltonian::new(
        bundle,
        path,
        h,
        BumpCover::single(1, 8.0),
        FiberGrid::new(1, 64, 8.0).unwrap(),
        Ordering::Symmetric,
    )
    .unwrap();
    let split = split_evolution(&dh, 256, 1e-8).unwrap();
    println!("commuting: {:?}", split.report);

    let built = preset("driven_oscillator").unwrap().build().unwrap();
    let report = split_evolution_state(&built.system, 2000, &built.initial, 1e-8).unwrap();
    println!("driven oscillator: {report:?}");
}
