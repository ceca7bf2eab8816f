//! Hamilton's equations for the classical `H_chi`, as an oracle for the
//! quantum expectation values.

use serde::{Deserialize, Serialize};

use crate::algebra::PolynomialObservable;

use super::{DrivenHamiltonian, EvolveError};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalState {
    pub t: f64,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

/// Partial derivatives of `H_chi = base + v^lambda geo_lambda`, with `v` the
/// path velocity.
struct Partials {
    base_dq: Vec<PolynomialObservable>,
    base_dp: Vec<PolynomialObservable>,
    geo_dq: Vec<Vec<PolynomialObservable>>,
    geo_dp: Vec<Vec<PolynomialObservable>>,
}

impl Partials {
    fn new(dh: &DrivenHamiltonian) -> Result<Self, EvolveError> {
        let dims = dh.dims();
        let base = dh.drift.add(dh.dynamic())?;
        let geo: Vec<PolynomialObservable> = (0..dims.m)
            .map(|l| {
                let mut w = vec![0.0; dims.m];
                w[l] = 1.0;
                dh.connection_observable(&w)
            })
            .collect();
        Ok(Partials {
            base_dq: (0..dims.n).map(|k| base.d_q(k)).collect(),
            base_dp: (0..dims.n).map(|k| base.d_p(k)).collect(),
            geo_dq: geo.iter().map(|g| (0..dims.n).map(|k| g.d_q(k)).collect()).collect(),
            geo_dp: geo.iter().map(|g| (0..dims.n).map(|k| g.d_p(k)).collect()).collect(),
        })
    }

    /// `(dq/dt, dp/dt) = (dH/dp, -dH/dq)`.
    fn field(&self, dh: &DrivenHamiltonian, t: f64, q: &[f64], p: &[f64]) -> Result<(Vec<f64>, Vec<f64>), EvolveError> {
        let b = dh.binding(t, q)?;
        let v = dh.path().velocity(t)?;
        let n = q.len();
        let mut dq = vec![0.0; n];
        let mut dp = vec![0.0; n];
        for k in 0..n {
            dq[k] = self.base_dp[k].eval(&b, p)?;
            dp[k] = -self.base_dq[k].eval(&b, p)?;
            for (l, vl) in v.iter().enumerate() {
                if *vl != 0.0 {
                    dq[k] += vl * self.geo_dp[l][k].eval(&b, p)?;
                    dp[k] -= vl * self.geo_dq[l][k].eval(&b, p)?;
                }
            }
        }
        Ok((dq, dp))
    }
}

fn axpy(x: &[f64], a: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(xi, yi)| xi + a * yi).collect()
}

/// Classical RK4 trajectory from `initial` to `t_end`, `steps + 1` states.
pub fn classical_hamilton_flow(
    dh: &DrivenHamiltonian,
    initial: &ClassicalState,
    t_end: f64,
    steps: usize,
) -> Result<Vec<ClassicalState>, EvolveError> {
    if steps == 0 {
        return Err(EvolveError::NoSteps);
    }
    let n = dh.dims().n;
    if initial.q.len() != n || initial.p.len() != n {
        return Err(EvolveError::Dimension(format!("classical state must have {n} coordinates")));
    }
    let partials = Partials::new(dh)?;
    let dt = (t_end - initial.t) / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    let (mut q, mut p) = (initial.q.clone(), initial.p.clone());
    for j in 0..steps {
        let t = initial.t + j as f64 * dt;
        let (k1q, k1p) = partials.field(dh, t, &q, &p)?;
        let (k2q, k2p) = partials.field(dh, t + dt / 2.0, &axpy(&q, dt / 2.0, &k1q), &axpy(&p, dt / 2.0, &k1p))?;
        let (k3q, k3p) = partials.field(dh, t + dt / 2.0, &axpy(&q, dt / 2.0, &k2q), &axpy(&p, dt / 2.0, &k2p))?;
        let (k4q, k4p) = partials.field(dh, t + dt, &axpy(&q, dt, &k3q), &axpy(&p, dt, &k3p))?;
        for k in 0..n {
            q[k] += dt / 6.0 * (k1q[k] + 2.0 * k2q[k] + 2.0 * k3q[k] + k4q[k]);
            p[k] += dt / 6.0 * (k1p[k] + 2.0 * k2p[k] + 2.0 * k3p[k] + k4p[k]);
        }
        let t_next = initial.t + (j + 1) as f64 * dt;
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(EvolveError::NonFinite { t: t_next });
        }
        out.push(ClassicalState {
            t: t_next,
            q: q.clone(),
            p: p.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BumpCover;
    use crate::bundle::{BundleModel, ParameterPath};
    use crate::coords::Dims;
    use crate::expr::{parse_expr, Expr};
    use crate::quantize::{FiberGrid, Ordering};

    fn system(lambda: &str, path: &str, h: PolynomialObservable, t1: f64) -> DrivenHamiltonian {
        let vars = ["t", "s1", "q1"];
        let bundle = BundleModel::new(
            Dims::new(1, 1),
            vec![vec![parse_expr(lambda, &vars).unwrap()]],
            vec![Expr::zero()],
            None,
        )
        .unwrap();
        let path = ParameterPath::closed_form(vec![parse_expr(path, &["t"]).unwrap()], (0.0, t1), false).unwrap();
        DrivenHamiltonian::new(
            bundle,
            path,
            h,
            BumpCover::single(1, 8.0),
            FiberGrid::new(1, 16, 8.0).unwrap(),
            Ordering::Symmetric,
        )
        .unwrap()
    }

    fn kinetic() -> PolynomialObservable {
        PolynomialObservable::monomial(1, &[0, 0], Expr::constant(0.5)).unwrap()
    }

    #[test]
    fn free_particle() {
        let dh = system("0", "0", kinetic(), 3.0);
        let start = ClassicalState { t: 0.0, q: vec![0.2], p: vec![1.0] };
        let traj = classical_hamilton_flow(&dh, &start, 3.0, 300).unwrap();
        for s in &traj {
            assert!((s.q[0] - 0.2 - s.t).abs() < 1e-10);
        }
    }

    #[test]
    fn driven_oscillator_matches_linear_solution() {
        let h = kinetic()
            .add(&PolynomialObservable::scalar(1, parse_expr("0.5*(q1 - s1)^2", &["s1", "q1"]).unwrap()))
            .unwrap();
        let dh = system("1", "sin(t)", h, 10.0);
        let start = ClassicalState { t: 0.0, q: vec![1.0], p: vec![0.5] };
        let traj = classical_hamilton_flow(&dh, &start, 10.0, 10000).unwrap();
        for s in traj.iter().step_by(97) {
            let x = s.t.cos() + 0.5 * s.t.sin();
            let p = -s.t.sin() + 0.5 * s.t.cos();
            assert!((s.q[0] - s.t.sin() - x).abs() < 1e-6);
            assert!((s.p[0] - p).abs() < 1e-6);
        }
    }
}
