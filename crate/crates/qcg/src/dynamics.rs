//! Time evolution of gate protocols, unitary and dephasing.
//!
//! Closed evolution steps the state with piecewise-constant matrix
//! exponentials of the midpoint Hamiltonian. Open evolution integrates the
//! dephasing master equation rho' = -i[H, rho] + gamma sum_s (Z_s rho Z_s -
//! rho) with classic 4th-order explicit steps, re-Hermitizing after every
//! step and renormalizing the trace only when it drifts past 1e-9. Both
//! integrators emit 201 uniformly spaced output samples regardless of the
//! internal step count.

use crate::hamiltonians::GateProtocol;
use crate::linalg::{
    bloch_vector, partial_trace, sigma_z, tensor, BlochVector, DensityMatrix, Operator, C64,
};
use crate::{Error, Result};

/// Number of uniformly spaced output samples per trajectory.
pub const OUTPUT_SAMPLES: usize = 201;

/// Positivity floor beyond which integration is reported as failed.
pub const POSITIVITY_FLOOR: f64 = -1e-6;

/// Trace drift threshold that triggers renormalization (open evolution) or
/// indicates integrator trouble (closed evolution).
pub const TRACE_DRIFT_GUARD: f64 = 1e-9;

/// Dephasing noise acting on one or more qubit sites with a common rate.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSpec {
    gamma: f64,
    sites: Vec<usize>,
}

impl NoiseSpec {
    /// Builds a noise description; the rate must be finite and non-negative.
    pub fn new(gamma: f64, sites: Vec<usize>) -> Result<Self> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("dephasing rate must be >= 0, got {gamma}"),
            });
        }
        if sites.is_empty() {
            return Err(Error::InvalidParameter {
                name: "site",
                reason: "dephasing needs at least one target site".into(),
            });
        }
        Ok(Self { gamma, sites })
    }

    /// Noise on the protocol's driven qubit(s).
    pub fn for_protocol(gamma: f64, protocol: &GateProtocol) -> Result<Self> {
        Self::new(gamma, protocol.noise_sites().to_vec())
    }

    /// Dephasing rate.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Dephased qubit indices.
    pub fn sites(&self) -> &[usize] {
        &self.sites
    }
}

/// Everything needed to run one evolution: protocol, end time, internal step
/// density, optional noise.
///
/// The step density is counted per unit of sweep progress t_end / tau, so a
/// timing overshoot runs proportionally more steps. Floquet protocols must
/// resolve the fast drive: the constructor enforces at least 20 steps per
/// cycle (and never fewer than 1000 per unit).
#[derive(Clone, Debug)]
pub struct EvolutionSpec {
    protocol: GateProtocol,
    t_end: f64,
    steps_per_unit: usize,
    noise: Option<NoiseSpec>,
}

impl EvolutionSpec {
    /// Builds an evolution spec, validating end time, step density, and
    /// noise site indices.
    pub fn new(
        protocol: GateProtocol,
        t_end: f64,
        steps_per_unit: usize,
        noise: Option<NoiseSpec>,
    ) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("end time must be positive and finite, got {t_end}"),
            });
        }
        let required = protocol.floor_steps_per_unit();
        if steps_per_unit < required {
            return Err(Error::StepDensity {
                given: steps_per_unit,
                required,
            });
        }
        if let Some(n) = &noise {
            for &site in n.sites() {
                if site >= protocol.layout().len() {
                    return Err(Error::InvalidParameter {
                        name: "site",
                        reason: format!(
                            "dephasing site {site} outside the {}-qubit layout",
                            protocol.layout().len()
                        ),
                    });
                }
            }
        }
        Ok(Self {
            protocol,
            t_end,
            steps_per_unit,
            noise,
        })
    }

    /// Builds an evolution spec with the protocol's default step density.
    pub fn with_default_steps(
        protocol: GateProtocol,
        t_end: f64,
        noise: Option<NoiseSpec>,
    ) -> Result<Self> {
        let steps = protocol.default_steps_per_unit();
        Self::new(protocol, t_end, steps, noise)
    }

    /// The protocol being evolved.
    pub fn protocol(&self) -> &GateProtocol {
        &self.protocol
    }

    /// Evolution end time.
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    /// Step density per unit sweep progress.
    pub fn steps_per_unit(&self) -> usize {
        self.steps_per_unit
    }

    /// Attached noise, if any.
    pub fn noise(&self) -> Option<&NoiseSpec> {
        self.noise.as_ref()
    }

    /// Total internal step count: density times sweep units, rounded up to a
    /// multiple of 200 so output samples land exactly on step boundaries.
    pub fn step_count(&self) -> usize {
        let units = self.t_end / self.protocol.profile().tau();
        let raw = (self.steps_per_unit as f64 * units).ceil() as usize;
        raw.max(200).div_ceil(200) * 200
    }
}

/// A sampled evolution: 201 output times with the full-space state at each,
/// plus the integrator health indicators.
#[derive(Clone, Debug)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    layout: Vec<usize>,
    max_trace_drift: f64,
    min_eigenvalue: f64,
}

impl Trajectory {
    /// Output sample times, ascending from 0 to t_end.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Full-space states at the output times.
    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// Qubit factor dimensions of the stored states.
    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    /// Worst |tr rho - 1| observed before renormalization.
    pub fn max_trace_drift(&self) -> f64 {
        self.max_trace_drift
    }

    /// Most negative eigenvalue observed across output samples.
    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    /// State at the final time.
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("trajectory is never empty")
    }
}

/// Pauli Z embedded on one site of a qubit layout.
pub(crate) fn z_on_site(layout: &[usize], site: usize) -> Result<Operator> {
    let mut op: Option<Operator> = None;
    for (idx, &dim) in layout.iter().enumerate() {
        let factor = if idx == site {
            if dim != 2 {
                return Err(Error::BadLayout {
                    dims: layout.to_vec(),
                    dim,
                });
            }
            sigma_z()
        } else {
            Operator::identity(dim)?
        };
        op = Some(match op {
            None => factor,
            Some(acc) => tensor(&acc, &factor)?,
        });
    }
    op.ok_or(Error::BadLayout {
        dims: layout.to_vec(),
        dim: 0,
    })
}

struct SampleTracker {
    times: Vec<f64>,
    states: Vec<DensityMatrix>,
    max_trace_drift: f64,
    min_eigenvalue: f64,
}

impl SampleTracker {
    fn new() -> Self {
        Self {
            times: Vec::with_capacity(OUTPUT_SAMPLES),
            states: Vec::with_capacity(OUTPUT_SAMPLES),
            max_trace_drift: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }

    /// Validates and records one output sample.
    fn record(&mut self, t: f64, op: &Operator) -> Result<()> {
        if !op.max_abs().is_finite() {
            return Err(Error::IntegrationFailure {
                t,
                reason: "state diverged to non-finite entries".into(),
            });
        }
        let drift = (op.trace() - C64::new(1.0, 0.0)).norm();
        self.max_trace_drift = self.max_trace_drift.max(drift);
        let (w, _) = op.hermitized().eigh()?;
        let min_eig = w.first().copied().unwrap_or(0.0);
        self.min_eigenvalue = self.min_eigenvalue.min(min_eig);
        if min_eig < POSITIVITY_FLOOR {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("eigenvalue {min_eig:e} below the {POSITIVITY_FLOOR:e} floor"),
            });
        }
        if drift > 1e-6 {
            return Err(Error::IntegrationFailure {
                t,
                reason: format!("trace drifted by {drift:e}"),
            });
        }
        self.times.push(t);
        self.states.push(DensityMatrix::from_op_unchecked(op.clone()));
        Ok(())
    }

    fn finish(self, layout: Vec<usize>) -> Trajectory {
        Trajectory {
            times: self.times,
            states: self.states,
            layout,
            max_trace_drift: self.max_trace_drift,
            min_eigenvalue: self.min_eigenvalue,
        }
    }
}

/// Closed-evolution integrator: per-step exponential of the midpoint
/// Hamiltonian. Exactly unitary at every step.
pub(crate) fn exp_integrate<H>(
    h_at: H,
    t_end: f64,
    n_steps: usize,
    rho0: &DensityMatrix,
    layout: &[usize],
) -> Result<Trajectory>
where
    H: Fn(f64) -> Result<Operator>,
{
    let dt = t_end / n_steps as f64;
    let stride = n_steps / (OUTPUT_SAMPLES - 1);
    let mut tracker = SampleTracker::new();
    let mut rho = rho0.op().clone();
    tracker.record(0.0, &rho)?;
    for step in 0..n_steps {
        let t_mid = (step as f64 + 0.5) * dt;
        let u = crate::linalg::herm_exp(&h_at(t_mid)?, dt)?;
        rho = u.matmul(&rho)?.matmul(&u.adjoint())?;
        let done = step + 1;
        if done % stride == 0 {
            let t = if done == n_steps {
                t_end
            } else {
                done as f64 * dt
            };
            tracker.record(t, &rho)?;
        }
    }
    Ok(tracker.finish(layout.to_vec()))
}

/// Open-evolution integrator: classic 4th-order explicit steps on the
/// dephasing master equation, Hermitizing each step and renormalizing the
/// trace when it drifts past the guard.
pub(crate) fn rk4_integrate<H>(
    h_at: H,
    zops: &[Operator],
    gamma: f64,
    t_end: f64,
    n_steps: usize,
    rho0: &DensityMatrix,
    layout: &[usize],
) -> Result<Trajectory>
where
    H: Fn(f64) -> Result<Operator>,
{
    let dim = rho0.dim();
    let dt = t_end / n_steps as f64;
    let stride = n_steps / (OUTPUT_SAMPLES - 1);
    let minus_i = C64::new(0.0, -1.0);

    let rhs = |h: &Operator, rho: &Operator| -> Result<Operator> {
        let mut out = crate::linalg::commutator(h, rho)?.scaled(minus_i);
        for z in zops {
            let zrz = z.matmul(rho)?.matmul(z)?;
            out = &out + &(&zrz - rho).scaled_re(gamma);
        }
        Ok(out)
    };

    let mut tracker = SampleTracker::new();
    let mut rho = rho0.op().clone();
    if rho.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: dim,
        });
    }
    tracker.record(0.0, &rho)?;
    for step in 0..n_steps {
        let t = step as f64 * dt;
        let h0 = h_at(t)?;
        let h_mid = h_at(t + 0.5 * dt)?;
        let h1 = h_at(t + dt)?;
        let k1 = rhs(&h0, &rho)?;
        let k2 = rhs(&h_mid, &(&rho + &k1.scaled_re(0.5 * dt)))?;
        let k3 = rhs(&h_mid, &(&rho + &k2.scaled_re(0.5 * dt)))?;
        let k4 = rhs(&h1, &(&rho + &k3.scaled_re(dt)))?;
        let incr = &(&k1 + &k4) + &(&k2 + &k3).scaled_re(2.0);
        rho = &rho + &incr.scaled_re(dt / 6.0);
        rho = rho.hermitized();
        let tr = rho.trace().re;
        let drift = (tr - 1.0).abs();
        tracker.max_trace_drift = tracker.max_trace_drift.max(drift);
        if drift > TRACE_DRIFT_GUARD {
            if !(tr.is_finite() && tr > 0.5) {
                return Err(Error::IntegrationFailure {
                    t: t + dt,
                    reason: format!("trace collapsed to {tr}"),
                });
            }
            rho = rho.scaled_re(1.0 / tr);
        }
        let done = step + 1;
        if done % stride == 0 {
            let t_out = if done == n_steps {
                t_end
            } else {
                done as f64 * dt
            };
            tracker.record(t_out, &rho)?;
        }
    }
    Ok(tracker.finish(layout.to_vec()))
}

/// Evolves a full-space initial state under the protocol.
///
/// Dispatches to the exponential integrator when no dephasing acts
/// (gamma = 0 reduces the master equation to the closed one) and to the
/// 4th-order open integrator otherwise.
pub fn propagate(spec: &EvolutionSpec, rho0: &DensityMatrix) -> Result<Trajectory> {
    let protocol = spec.protocol();
    if rho0.dim() != protocol.dim() {
        return Err(Error::DimensionMismatch {
            left: rho0.dim(),
            right: protocol.dim(),
        });
    }
    let n = spec.step_count();
    let gamma = spec.noise().map(|ns| ns.gamma()).unwrap_or(0.0);
    if gamma > 0.0 {
        let noise = spec.noise().expect("gamma > 0 implies noise");
        let zops: Vec<Operator> = noise
            .sites()
            .iter()
            .map(|&s| z_on_site(protocol.layout(), s))
            .collect::<Result<_>>()?;
        rk4_integrate(
            |t| protocol.h_at(t),
            &zops,
            gamma,
            spec.t_end(),
            n,
            rho0,
            protocol.layout(),
        )
    } else {
        exp_integrate(
            |t| protocol.h_at(t),
            spec.t_end(),
            n,
            rho0,
            protocol.layout(),
        )
    }
}

/// Accumulates the full propagator U(t_end, 0) of a noiseless evolution.
///
/// Rejects specs that carry noise: open evolution has no propagator in this
/// form. The result is checked to be unitary to 1e-10.
pub fn propagate_unitary_operator(spec: &EvolutionSpec) -> Result<Operator> {
    if spec.noise().map(|ns| ns.gamma() > 0.0).unwrap_or(false) {
        return Err(Error::InvalidParameter {
            name: "noise",
            reason: "unitary propagation is undefined under dephasing".into(),
        });
    }
    let protocol = spec.protocol();
    let n = spec.step_count();
    let dt = spec.t_end() / n as f64;
    let mut u = Operator::identity(protocol.dim())?;
    for step in 0..n {
        let t_mid = (step as f64 + 0.5) * dt;
        let step_u = crate::linalg::herm_exp(&protocol.h_at(t_mid)?, dt)?;
        u = step_u.matmul(&u)?;
    }
    let residue = (&u.adjoint().matmul(&u)? - &Operator::identity(protocol.dim())?).max_abs();
    if residue > 1e-10 {
        return Err(Error::IntegrationFailure {
            t: spec.t_end(),
            reason: format!("propagator unitarity residue {residue:e}"),
        });
    }
    Ok(u)
}

/// Reduces a trajectory to per-qubit Bloch time series, indexed
/// [qubit][sample].
pub fn reduce_trajectory(traj: &Trajectory, layout: &[usize]) -> Result<Vec<Vec<BlochVector>>> {
    if layout != traj.layout() {
        return Err(Error::BadLayout {
            dims: layout.to_vec(),
            dim: traj.states()[0].dim(),
        });
    }
    let mut series = vec![Vec::with_capacity(traj.times().len()); layout.len()];
    for state in traj.states() {
        for (q, out) in series.iter_mut().enumerate() {
            let reduced = if layout.len() == 1 {
                state.clone()
            } else {
                partial_trace(state, layout, q)?
            };
            out.push(bloch_vector(&reduced)?);
        }
    }
    Ok(series)
}
