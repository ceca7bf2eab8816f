use std::f64::consts::PI;

use leafquant::algebra::{BumpCover, PolynomialObservable};
use leafquant::bundle::{BundleModel, ParameterPath};
use leafquant::evolve::{evolve, propagate_state, DrivenHamiltonian, EvolutionMode, EvolveOptions};
use leafquant::linalg::HermitianEigen;
use leafquant::quantize::{inner_product, overlap, FiberGrid, Ordering, WaveSection};
use leafquant::scenario::preset_source;
use leafquant::scenario::parse_scenario;
use leafquant::{parse_expr, Dims, Expr};

fn system(lambda: &str, path: &str, span: (f64, f64), h: PolynomialObservable, points: usize, half_width: f64) -> DrivenHamiltonian {
    let vars = ["t", "s1", "q1"];
    let bundle = BundleModel::new(
        Dims::new(1, 1),
        vec![vec![parse_expr(lambda, &vars).unwrap()]],
        vec![Expr::zero()],
        None,
    )
    .unwrap();
    let path = ParameterPath::closed_form(vec![parse_expr(path, &["t"]).unwrap()], span, false).unwrap();
    DrivenHamiltonian::new(
        bundle,
        path,
        h,
        BumpCover::single(1, half_width),
        FiberGrid::new(1, points, half_width).unwrap(),
        Ordering::Symmetric,
    )
    .unwrap()
}

fn oscillator() -> PolynomialObservable {
    PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5))
        .unwrap()
        .add(&PolynomialObservable::scalar(1, parse_expr("0.5*q1^2", &["q1"]).unwrap()))
        .unwrap()
}

fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

#[test]
fn oscillator_ground_energy_converges_at_second_order() {
    let e0 = |points| {
        let dh = system("0", "0", (0.0, 1.0), oscillator(), points, 10.0);
        HermitianEigen::new(&dh.dynamic_operator(0.0).unwrap().to_dense()).min_value()
    };
    let (coarse, fine) = (e0(256) - 0.5, e0(512) - 0.5);
    assert!(fine.abs() < 1e-3, "{fine}");
    let ratio = coarse / fine;
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn ground_state_phase_after_one_period() {
    let dh = system("0", "0", (0.0, 2.0 * PI), oscillator(), 256, 10.0);
    let eig = HermitianEigen::new(&dh.dynamic_operator(0.0).unwrap().to_dense());
    let ground = WaveSection::new(dh.grid(), eig.vector(0)).normalized();
    let result = propagate_state(&dh, 512, &ground).unwrap();
    let end = result.final_state.unwrap();
    let phase = overlap(&ground, &end).unwrap().arg();
    assert!((phase - wrap(-2.0 * PI * eig.min_value())).abs() < 1e-8, "{phase}");
    assert!((phase + PI).abs() < 5e-3, "{phase}");
}

#[test]
fn momentum_connection_translates_states() {
    // G = p along sigma = t on [0, 1] shifts a packet by +1
    let dh = system("1", "t", (0.0, 1.0), PolynomialObservable::zero(1), 256, 8.0);
    let psi = WaveSection::gaussian(dh.grid(), &[0.0], 1.0, &[0.0]).normalized();
    let result = propagate_state(&dh, 200, &psi).unwrap();
    let last = result.observations.last().unwrap();
    assert!((last.exp_q[0] - 1.0).abs() < 1e-3, "{}", last.exp_q[0]);
    let target = WaveSection::gaussian(dh.grid(), &[1.0], 1.0, &[0.0]).normalized();
    let fidelity = inner_product(&target, result.final_state.as_ref().unwrap()).unwrap().norm();
    assert!(fidelity > 1.0 - 1e-3, "{fidelity}");
}

#[test]
fn state_and_unitary_modes_agree() {
    let mut v: serde_json::Value = serde_json::from_str(preset_source("nonabelian_loop").unwrap()).unwrap();
    v["grid"]["N"] = serde_json::json!(32);
    let built = parse_scenario(&v.to_string()).unwrap().build().unwrap();
    let dh = &built.system;
    let run = |mode| {
        let options = EvolveOptions {
            mode,
            emit_trajectory: false,
            sample_every: 64,
        };
        evolve(dh, dh.span().1, 256, &options, Some(&built.initial)).unwrap()
    };
    let a = run(EvolutionMode::Unitary).final_state.unwrap();
    let b = run(EvolutionMode::State).final_state.unwrap();
    let gap: f64 = a
        .amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| (x - y).norm_sqr())
        .fold(0.0, |acc, v| acc + v)
        .sqrt();
    assert!(gap < 1e-9, "{gap}");
}
