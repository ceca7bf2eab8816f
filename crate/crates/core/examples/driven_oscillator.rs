//! An oscillator dragged along sin(t): quantum expectation values against
//! the classical trajectory.

use leafquant::evolve::{classical_hamilton_flow, propagate_state, ClassicalState};
use leafquant::scenario::preset;

fn main() {
    let built = preset("driven_oscillator").unwrap().build().unwrap();
    let dh = &built.system;
    let steps = built.config.integrator.steps;
    let result = propagate_state(dh, steps, &built.initial).unwrap();
    let obs = &result.observations;
    let start = ClassicalState {
        t: 0.0,
        q: obs[0].exp_q.clone(),
        p: obs[0].exp_p.clone(),
    };
    let classical = classical_hamilton_flow(dh, &start, dh.span().1, steps).unwrap();
    let (mut dq, mut dp): (f64, f64) = (0.0, 0.0);
    for (o, c) in obs.iter().zip(&classical) {
        dq = dq.max((o.exp_q[0] - c.q[0]).abs());
        dp = dp.max((o.exp_p[0] - c.p[0]).abs());
    }
    for i in (0..=steps).step_by(steps / 10) {
        println!(
            "t = {:5.2}  <q> = {:+.6}  q_cl = {:+.6}  <p> = {:+.6}  p_cl = {:+.6}",
            obs[i].t, obs[i].exp_q[0], classical[i].q[0], obs[i].exp_p[0], classical[i].p[0]
        );
    }
    println!("max |<q> - q_cl| = {dq:.2e}, max |<p> - p_cl| = {dp:.2e}");
    println!("norm drift {:.1e}", result.unitarity_defect);
}
