//! Spectrum of the quantized oscillator and the phase its ground state
//! picks up over one period.

use leafquant::algebra::{BumpCover, PolynomialObservable};
use leafquant::bundle::{BundleModel, ParameterPath};
use leafquant::evolve::{evolve_time_ordered, DrivenHamiltonian};
use leafquant::linalg::{HermitianEigen, C64};
use leafquant::quantize::{overlap, FiberGrid, Ordering, WaveSection};
use leafquant::{parse_expr, Dims, Expr};

fn main() {
    let points = 256;
    let half_width = 10.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    let bundle = BundleModel::new(Dims::new(1, 1), vec![vec![Expr::zero()]], vec![Expr::zero()], None).unwrap();
    let path = ParameterPath::closed_form(vec![Expr::zero()], (0.0, two_pi), true).unwrap();
    let h = PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5))
        .unwrap()
        .add(&PolynomialObservable::scalar(1, parse_expr("0.5*q1^2", &["q1"]).unwrap()))
        .unwrap();
    let grid = FiberGrid::new(1, points, half_width).unwrap();
    let dh = DrivenHamiltonian::new(bundle, path, h, BumpCover::single(1, half_width), grid.clone(), Ordering::Symmetric)
        .unwrap();

    let eig = HermitianEigen::new(&dh.dynamic_operator(0.0).unwrap().to_dense());
    // the central difference also resolves momenta near pi/h, so every
    // level shows up twice
    for k in 0..4 {
        let (a, b) = (eig.values()[2 * k], eig.values()[2 * k + 1]);
        println!("E_{k} = {a:.6}, {b:.6}  (k + 1/2 = {})", k as f64 + 0.5);
    }

    let ground = WaveSection::new(&grid, eig.vector(0)).normalized();
    let result = evolve_time_ordered(&dh, 1024, false, None).unwrap();
    let u = result.unitary.unwrap();
    let amps: Vec<C64> = (0..grid.size())
        .map(|i| (0..grid.size()).map(|j| u[(i, j)] * ground.amplitudes[j]).sum())
        .collect();
    let evolved = WaveSection::new(&grid, amps);
    let phase = overlap(&ground, &evolved).unwrap().arg();
    println!("ground-state phase after 2 pi: {phase:.6} (-pi = {:.6})", -std::f64::consts::PI);
    println!("unitarity defect {:.1e}", result.unitarity_defect);
}
