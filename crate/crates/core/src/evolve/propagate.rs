//! Ordered products of step exponentials.

use serde::{Deserialize, Serialize};

use crate::linalg::{
    dense_apply, expm_apply, expm_apply_vec, krylov_propagate, unitarity_defect, DenseMatrix, HermitianEigen,
    SparseMatrix, C64,
};
use crate::quantize::{derivative_matrix, position_operator, WaveSection};

use super::{DrivenHamiltonian, EvolveError};

const HERMITICITY_LIMIT: f64 = 1e-10;

/// How step exponentials are applied.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvolutionMode {
    /// The running unitary product is formed.
    #[default]
    Unitary,
    /// Only the state is propagated, by Krylov exponentials of the sparse step operators.
    State,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolveOptions {
    pub mode: EvolutionMode,
    pub emit_trajectory: bool,
    /// Record an [`Observation`] every this many steps (and at the end).
    pub sample_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            mode: EvolutionMode::Unitary,
            emit_trajectory: false,
            sample_every: 1,
        }
    }
}

/// Expectation values and overlaps at one time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub t: f64,
    pub sigma: Vec<f64>,
    pub dsigma_dt: Vec<f64>,
    pub exp_q: Vec<f64>,
    pub exp_p: Vec<f64>,
    pub norm: f64,
    /// `<psi_0 | psi(t)>`.
    pub overlap_total: (f64, f64),
    /// `<psi_0 | U_geo(t) psi_0>`.
    pub overlap_geometric: (f64, f64),
    /// `||U^dagger U - I||_F` when the running product is formed, otherwise
    /// the norm drift `| ||psi|| - ||psi_0|| |`.
    pub unitarity_defect: f64,
}

/// Wrapped and unwrapped phases of the final overlaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phases {
    pub total: f64,
    pub geometric: f64,
    pub dynamic: f64,
    pub total_unwrapped: f64,
    pub geometric_unwrapped: f64,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    /// The time-ordered evolution operator (unitary mode only).
    pub unitary: Option<DenseMatrix>,
    pub unitarity_defect: f64,
    pub max_hermiticity_defect: f64,
    pub observations: Vec<Observation>,
    /// States after every step when requested.
    pub trajectory: Vec<WaveSection>,
    pub final_state: Option<WaveSection>,
    pub phases: Option<Phases>,
}

fn grid_times(dh: &DrivenHamiltonian, t_end: f64, steps: usize) -> Result<(f64, f64), EvolveError> {
    if steps == 0 {
        return Err(EvolveError::NoSteps);
    }
    dh.check_time(t_end)?;
    let t0 = dh.span().0;
    Ok((t0, (t_end - t0) / steps as f64))
}

/// `H_chi` at the step midpoints, checked for Hermiticity.
fn step_hamiltonians(dh: &DrivenHamiltonian, t0: f64, dt: f64, steps: usize) -> Result<(Vec<SparseMatrix>, f64), EvolveError> {
    let mut worst: f64 = 0.0;
    let mut out = Vec::with_capacity(steps);
    for j in 0..steps {
        let t = t0 + (j as f64 + 0.5) * dt;
        let h = dh.hamiltonian(t)?;
        let defect = h.hermiticity_defect();
        if defect > HERMITICITY_LIMIT {
            return Err(EvolveError::NonHermitian { t, defect });
        }
        worst = worst.max(defect);
        out.push(h);
    }
    Ok((out, worst))
}

fn segment_generators(dh: &DrivenHamiltonian, t0: f64, dt: f64, steps: usize) -> Result<Vec<SparseMatrix>, EvolveError> {
    (0..steps)
        .map(|j| dh.segment_generator(t0 + j as f64 * dt, t0 + (j + 1) as f64 * dt))
        .collect()
}

fn dynamic_generators(dh: &DrivenHamiltonian, t0: f64, dt: f64, steps: usize) -> Result<Vec<SparseMatrix>, EvolveError> {
    (0..steps)
        .map(|j| dh.dynamic_operator(t0 + (j as f64 + 0.5) * dt))
        .collect()
}

/// Step exponentials `exp(-i tau A_j)`.
///
/// Sparse generators are exponentiated by Taylor series acting directly on
/// the accumulated product. When all generators coincide, one verified
/// eigendecomposition gives the step and the full product instead.
struct DenseStepper<'a> {
    gens: &'a [SparseMatrix],
    tau: f64,
    constant: Option<(DenseMatrix, DenseMatrix)>,
}

impl<'a> DenseStepper<'a> {
    fn new(gens: &'a [SparseMatrix], tau: f64) -> Self {
        let repeated = !gens.is_empty() && !gens[0].is_zero() && gens.windows(2).all(|w| w[0] == w[1]);
        let constant = if repeated {
            let eig = HermitianEigen::new(&gens[0].to_dense());
            eig.checked_propagator(tau)
                .zip(eig.checked_propagator(tau * gens.len() as f64))
        } else {
            None
        };
        DenseStepper { gens, tau, constant }
    }

    fn is_constant(&self) -> bool {
        self.constant.is_some()
    }

    fn advance(&self, j: usize, u: &DenseMatrix) -> DenseMatrix {
        match &self.constant {
            Some((step, _)) => step * u,
            None => expm_apply(&self.gens[j], self.tau, u),
        }
    }

    fn advance_vec(&self, j: usize, psi: &[C64]) -> Vec<C64> {
        match &self.constant {
            Some((step, _)) => dense_apply(step, psi),
            None => expm_apply_vec(&self.gens[j], self.tau, psi),
        }
    }

    /// The full ordered product `E_last .. E_1`.
    fn product(&self) -> DenseMatrix {
        if let Some((_, full)) = &self.constant {
            return full.clone();
        }
        let dim = self.gens.first().map_or(0, SparseMatrix::dim);
        let mut u = DenseMatrix::identity(dim, dim);
        for j in 0..self.gens.len() {
            u = self.advance(j, &u);
        }
        u
    }
}

fn ordered_product(gens: &[SparseMatrix], tau: f64) -> DenseMatrix {
    DenseStepper::new(gens, tau).product()
}

fn to_pair(z: C64) -> (f64, f64) {
    (z.re, z.im)
}

fn dot(bra: &[C64], ket: &[C64], weight: f64) -> C64 {
    bra.iter().zip(ket).map(|(a, b)| a.conj() * b).sum::<C64>() * weight
}

struct Observer {
    q_ops: Vec<SparseMatrix>,
    p_ops: Vec<SparseMatrix>,
    weight: f64,
    psi0: Vec<C64>,
    norm0: f64,
}

impl Observer {
    fn new(dh: &DrivenHamiltonian, psi0: &WaveSection) -> Result<Self, EvolveError> {
        let grid = dh.grid();
        let n = grid.fiber_dim();
        let p_ops = (0..n)
            .map(|k| Ok(derivative_matrix(grid, k)?.scale(C64::new(0.0, -1.0))))
            .collect::<Result<_, EvolveError>>()?;
        let weight = grid.cell_volume();
        let norm0 = dot(&psi0.amplitudes, &psi0.amplitudes, weight).re.sqrt();
        Ok(Observer {
            q_ops: (0..n).map(|k| position_operator(grid, k)).collect(),
            p_ops,
            weight,
            psi0: psi0.amplitudes.clone(),
            norm0,
        })
    }

    fn observe(
        &self,
        dh: &DrivenHamiltonian,
        t: f64,
        psi: &[C64],
        geo: &[C64],
        unitarity: Option<f64>,
    ) -> Result<Observation, EvolveError> {
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(EvolveError::NonFinite { t });
        }
        let norm_sqr = dot(psi, psi, self.weight).re;
        let expect = |op: &SparseMatrix| dot(psi, &op.apply(psi), self.weight).re / norm_sqr;
        let norm = norm_sqr.sqrt();
        Ok(Observation {
            t,
            sigma: dh.path().position(t)?,
            dsigma_dt: dh.path().velocity(t)?,
            exp_q: self.q_ops.iter().map(expect).collect(),
            exp_p: self.p_ops.iter().map(expect).collect(),
            norm,
            overlap_total: to_pair(dot(&self.psi0, psi, self.weight)),
            overlap_geometric: to_pair(dot(&self.psi0, geo, self.weight)),
            unitarity_defect: unitarity.unwrap_or((norm - self.norm0).abs()),
        })
    }
}

fn wrap(phi: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut x = phi.rem_euclid(two_pi);
    if x > std::f64::consts::PI {
        x -= two_pi;
    }
    x
}

/// Continuous phase along a sequence of complex values.
pub fn unwrap_phases(values: &[(f64, f64)]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut prev: Option<f64> = None;
    for (re, im) in values {
        let a = im.atan2(*re);
        let u = match prev {
            None => a,
            Some(p) => p + wrap(a - p),
        };
        out.push(u);
        prev = Some(u);
    }
    out
}

fn phases(obs: &[Observation]) -> Option<Phases> {
    let last = obs.last()?;
    let total_u = unwrap_phases(&obs.iter().map(|o| o.overlap_total).collect::<Vec<_>>());
    let geo_u = unwrap_phases(&obs.iter().map(|o| o.overlap_geometric).collect::<Vec<_>>());
    let total = last.overlap_total.1.atan2(last.overlap_total.0);
    let geometric = last.overlap_geometric.1.atan2(last.overlap_geometric.0);
    Some(Phases {
        total,
        geometric,
        dynamic: wrap(total - geometric),
        total_unwrapped: *total_u.last()?,
        geometric_unwrapped: *geo_u.last()?,
    })
}

/// `U = prod_j exp(-i dt H_chi(t_{j+1/2}))` over the whole path span.
pub fn evolve_time_ordered(
    dh: &DrivenHamiltonian,
    steps: usize,
    emit_trajectory: bool,
    initial: Option<&WaveSection>,
) -> Result<EvolutionResult, EvolveError> {
    let options = EvolveOptions {
        mode: EvolutionMode::Unitary,
        emit_trajectory,
        sample_every: 1.max(steps / 256),
    };
    evolve(dh, dh.span().1, steps, &options, initial)
}

/// State-only propagation with Krylov exponentials, observing every step.
pub fn propagate_state(
    dh: &DrivenHamiltonian,
    steps: usize,
    initial: &WaveSection,
) -> Result<EvolutionResult, EvolveError> {
    let options = EvolveOptions {
        mode: EvolutionMode::State,
        emit_trajectory: false,
        sample_every: 1,
    };
    evolve(dh, dh.span().1, steps, &options, Some(initial))
}

/// Midpoint time-ordered evolution on `[t0, t_end]`.
///
/// Alongside `psi(t) = U(t) psi_0` the geometric companion
/// `U_geo(t) psi_0` is propagated so that both phases can be observed.
pub fn evolve(
    dh: &DrivenHamiltonian,
    t_end: f64,
    steps: usize,
    options: &EvolveOptions,
    initial: Option<&WaveSection>,
) -> Result<EvolutionResult, EvolveError> {
    let (t0, dt) = grid_times(dh, t_end, steps)?;
    if let Some(psi) = initial {
        if psi.grid != *dh.grid() {
            return Err(EvolveError::GridMismatch);
        }
    }
    if options.mode == EvolutionMode::State && initial.is_none() {
        return Err(EvolveError::Dimension("state mode needs an initial state".into()));
    }
    let (hams, max_herm) = step_hamiltonians(dh, t0, dt, steps)?;
    let observer = initial.map(|psi| Observer::new(dh, psi)).transpose()?;
    let geo = match initial {
        Some(_) => segment_generators(dh, t0, dt, steps)?,
        None => Vec::new(),
    };
    let every = options.sample_every.max(1);
    let mut observations = Vec::new();
    let mut trajectory = Vec::new();
    let mut psi: Vec<C64> = initial.map(|w| w.amplitudes.clone()).unwrap_or_default();
    let mut phi = psi.clone();
    let mut unitary = None;
    let mut final_defect = 0.0;

    match options.mode {
        EvolutionMode::Unitary => {
            let dim = dh.grid().size();
            let stepper = DenseStepper::new(&hams, dt);
            let geo_stepper = DenseStepper::new(&geo, 1.0);
            let constant = stepper.is_constant();
            let mut u = DenseMatrix::identity(dim, dim);
            if let Some(obs) = &observer {
                observations.push(obs.observe(dh, t0, &psi, &phi, Some(0.0))?);
            }
            for j in 0..steps {
                if !constant {
                    u = stepper.advance(j, &u);
                }
                if observer.is_some() {
                    psi = stepper.advance_vec(j, &psi);
                    phi = geo_stepper.advance_vec(j, &phi);
                }
                let t = t0 + (j + 1) as f64 * dt;
                if let Some(obs) = &observer {
                    if (j + 1) % every == 0 || j + 1 == steps {
                        let defect = (!constant).then(|| unitarity_defect(&u));
                        observations.push(obs.observe(dh, t, &psi, &phi, defect)?);
                    }
                    if options.emit_trajectory {
                        trajectory.push(WaveSection::new(dh.grid(), psi.clone()).at(t, &dh.path().position(t)?));
                    }
                }
            }
            if constant {
                u = stepper.product();
            }
            final_defect = unitarity_defect(&u);
            unitary = Some(u);
        }
        EvolutionMode::State => {
            let obs = observer.as_ref().expect("checked above");
            observations.push(obs.observe(dh, t0, &psi, &phi, None)?);
            for j in 0..steps {
                psi = krylov_propagate(&hams[j], dt, &psi);
                phi = krylov_propagate(&geo[j], 1.0, &phi);
                let t = t0 + (j + 1) as f64 * dt;
                if (j + 1) % every == 0 || j + 1 == steps {
                    let o = obs.observe(dh, t, &psi, &phi, None)?;
                    final_defect = o.unitarity_defect;
                    observations.push(o);
                }
                if options.emit_trajectory {
                    trajectory.push(WaveSection::new(dh.grid(), psi.clone()).at(t, &dh.path().position(t)?));
                }
            }
        }
    }
    let final_state = initial.map(|_| WaveSection::new(dh.grid(), psi).at(t_end, &dh.path().position(t_end).unwrap_or_default()));
    Ok(EvolutionResult {
        unitary,
        unitarity_defect: final_defect,
        max_hermiticity_defect: max_herm,
        phases: phases(&observations),
        observations,
        trajectory,
        final_state,
    })
}

/// Path-ordered product of `exp(-i K_j)` over `segments` pieces of
/// `[t0, t_end]`, `K_j` the quantized `Lambda^k_lambda dsigma^lambda p_k`.
pub fn geometric_factor(dh: &DrivenHamiltonian, t_end: f64, segments: usize) -> Result<DenseMatrix, EvolveError> {
    let (t0, dt) = grid_times(dh, t_end, segments)?;
    Ok(ordered_product(&segment_generators(dh, t0, dt, segments)?, 1.0))
}

/// Outcome of comparing `U` with `U_geo U_dyn`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitReport {
    /// `max_t ||[G, H']||_F / (||G||_F ||H'||_F)` over 32 sample times.
    pub commutator: f64,
    /// `||U - U_geo U_dyn||_F`, or its action on the initial state in state mode.
    pub factorization_defect: f64,
    /// True when the generators commute (commutator at most `1e-10`), so
    /// that the defect was checked against the tolerance.
    pub asserted: bool,
    /// `Some(defect <= tolerance)` when asserted.
    pub holds: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct SplitEvolution {
    pub geometric: DenseMatrix,
    pub dynamic: DenseMatrix,
    pub full: DenseMatrix,
    pub report: SplitReport,
}

const COMMUTE_THRESHOLD: f64 = 1e-10;

fn commutator_report(dh: &DrivenHamiltonian) -> Result<f64, EvolveError> {
    let (t0, t1) = dh.span();
    let mut worst: f64 = 0.0;
    for i in 0..32 {
        let t = t0 + (i as f64 + 0.5) / 32.0 * (t1 - t0);
        let g = dh.geometric_generator(t)?;
        let h = dh.dynamic_operator(t)?;
        let scale = g.frobenius_norm() * h.frobenius_norm();
        if scale > 0.0 {
            worst = worst.max(g.commutator(&h).frobenius_norm() / scale);
        }
    }
    Ok(worst)
}

fn finish_report(commutator: f64, defect: f64, tolerance: f64) -> SplitReport {
    let asserted = commutator <= COMMUTE_THRESHOLD;
    SplitReport {
        commutator,
        factorization_defect: defect,
        asserted,
        holds: asserted.then_some(defect <= tolerance),
    }
}

/// `U`, `U_geo` and `U_dyn` as dense unitaries over the whole span.
pub fn split_evolution(dh: &DrivenHamiltonian, steps: usize, tolerance: f64) -> Result<SplitEvolution, EvolveError> {
    let t1 = dh.span().1;
    let (t0, dt) = grid_times(dh, t1, steps)?;
    let (hams, _) = step_hamiltonians(dh, t0, dt, steps)?;
    let full = ordered_product(&hams, dt);
    let geometric = ordered_product(&segment_generators(dh, t0, dt, steps)?, 1.0);
    let dynamic = ordered_product(&dynamic_generators(dh, t0, dt, steps)?, dt);
    let defect = (&full - &geometric * &dynamic).norm();
    Ok(SplitEvolution {
        report: finish_report(commutator_report(dh)?, defect, tolerance),
        geometric,
        dynamic,
        full,
    })
}

/// The split compared on one state: `||U psi_0 - U_geo U_dyn psi_0||`.
pub fn split_evolution_state(
    dh: &DrivenHamiltonian,
    steps: usize,
    initial: &WaveSection,
    tolerance: f64,
) -> Result<SplitReport, EvolveError> {
    let t1 = dh.span().1;
    let (t0, dt) = grid_times(dh, t1, steps)?;
    let (hams, _) = step_hamiltonians(dh, t0, dt, steps)?;
    let geo = segment_generators(dh, t0, dt, steps)?;
    let dynamic = dynamic_generators(dh, t0, dt, steps)?;
    let mut full = initial.amplitudes.clone();
    let mut split = initial.amplitudes.clone();
    for j in 0..steps {
        full = krylov_propagate(&hams[j], dt, &full);
        split = krylov_propagate(&dynamic[j], dt, &split);
    }
    for k in &geo {
        split = krylov_propagate(k, 1.0, &split);
    }
    let w = initial.grid.cell_volume();
    let defect = full
        .iter()
        .zip(&split)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt()
        * w.sqrt();
    Ok(finish_report(commutator_report(dh)?, defect, tolerance))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unwrapping_follows_winding() {
        let vals: Vec<(f64, f64)> = (0..40).map(|i| (0.3 * i as f64).cos()).zip((0..40).map(|i| (0.3 * i as f64).sin())).collect();
        let u = unwrap_phases(&vals);
        assert!((u[39] - 0.3 * 39.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_range() {
        assert!((wrap(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap(-0.5) + 0.5).abs() < 1e-15);
    }
}
