//! Figures of merit: averaged gate infidelity and time-averaged drive cost.
//!
//! Infidelity averages the overlap error over three fixed probe states with
//! configurable weights; it is global-phase invariant and purity-normalized
//! so mixed probes count fairly. Cost is the time average of a norm of the
//! full generating Hamiltonian over the gate window, by default the trace
//! norm.

use std::fmt;
use std::str::FromStr;

use crate::dynamics::{propagate, EvolutionSpec};
use crate::hamiltonians::GateProtocol;
use crate::linalg::{operator_norm, tensor, trace_norm, DensityMatrix, Operator};
use crate::{Error, Result};

/// Norm applied to the Hamiltonian inside the cost integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Sum of absolute eigenvalues (default).
    Trace,
    /// Largest absolute eigenvalue.
    Operator,
    /// Root-sum-square of entries.
    Frobenius,
}

impl NormKind {
    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            NormKind::Trace => "trace",
            NormKind::Operator => "operator",
            NormKind::Frobenius => "frobenius",
        }
    }

    /// Applies the norm to a Hermitian operator.
    pub fn apply(&self, op: &Operator) -> Result<f64> {
        match self {
            NormKind::Trace => trace_norm(op),
            NormKind::Operator => operator_norm(op),
            NormKind::Frobenius => Ok(op.frobenius_norm()),
        }
    }
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trace" => Ok(NormKind::Trace),
            "operator" => Ok(NormKind::Operator),
            "frobenius" => Ok(NormKind::Frobenius),
            other => Err(Error::InvalidParameter {
                name: "norm",
                reason: format!("unknown norm '{other}'; valid values are trace, operator, frobenius"),
            }),
        }
    }
}

/// Tolerance on the probe-weight sum.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// The probe states the infidelity averages over, with their weights.
///
/// The standard single-qubit set is diag(2/3, 1/3), the all-1/2 matrix, and
/// the maximally mixed state: together they witness population errors,
/// coherence errors, and trace leakage.
#[derive(Clone, Debug)]
pub struct ProbeSet {
    states: Vec<DensityMatrix>,
    weights: Vec<f64>,
}

impl ProbeSet {
    /// The standard three single-qubit probes with equal weights.
    pub fn standard() -> Self {
        Self::with_weights([1.0 / 3.0; 3]).expect("equal weights sum to 1")
    }

    /// The standard probes with caller-chosen weights summing to 1.
    pub fn with_weights(weights: [f64; 3]) -> Result<Self> {
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() >= WEIGHT_SUM_TOL {
            return Err(Error::InvalidParameter {
                name: "weights",
                reason: format!("probe weights must sum to 1, got {sum}"),
            });
        }
        let rho1 = Operator::from_real(2, &[2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0])?;
        let rho2 = Operator::from_real(2, &[0.5, 0.5, 0.5, 0.5])?;
        let rho3 = Operator::from_real(2, &[0.5, 0.0, 0.0, 0.5])?;
        Ok(Self {
            states: vec![
                DensityMatrix::new(rho1)?,
                DensityMatrix::new(rho2)?,
                DensityMatrix::new(rho3)?,
            ],
            weights: weights.to_vec(),
        })
    }

    /// Two-qubit probes rho_i (x) rho_i for the controlled gates, equal
    /// weights.
    pub fn two_qubit() -> Self {
        Self::two_qubit_with_weights([1.0 / 3.0; 3]).expect("equal weights sum to 1")
    }

    /// Two-qubit probes with caller-chosen weights summing to 1.
    pub fn two_qubit_with_weights(weights: [f64; 3]) -> Result<Self> {
        let single = Self::with_weights(weights)?;
        let states = single
            .states
            .iter()
            .map(|rho| {
                let op = tensor(rho.op(), rho.op()).expect("4x4");
                DensityMatrix::new(op).expect("product of states is a state")
            })
            .collect();
        Ok(Self {
            states,
            weights: single.weights,
        })
    }

    /// Probe states.
    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// Probe weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Average gate infidelity
/// J = 1 - sum_i (w_i / tr rho_i^2) Re tr[U rho_i U† rho_i(t)].
///
/// `evolved[i]` is the computational-qubit state reached from probe i; for
/// auxiliary protocols that means the partial trace over the auxiliary.
pub fn gate_infidelity(
    target: &Operator,
    evolved: &[DensityMatrix],
    probes: &ProbeSet,
) -> Result<f64> {
    if evolved.len() != probes.states().len() {
        return Err(Error::InvalidParameter {
            name: "evolved",
            reason: format!(
                "expected {} evolved states, got {}",
                probes.states().len(),
                evolved.len()
            ),
        });
    }
    let sum: f64 = probes.weights().iter().sum();
    if (sum - 1.0).abs() >= WEIGHT_SUM_TOL {
        return Err(Error::InvalidParameter {
            name: "weights",
            reason: format!("probe weights must sum to 1, got {sum}"),
        });
    }
    let udag = target.adjoint();
    let mut fidelity = 0.0;
    for ((probe, state), &w) in probes.states().iter().zip(evolved).zip(probes.weights()) {
        if probe.dim() != target.dim() || state.dim() != target.dim() {
            return Err(Error::DimensionMismatch {
                left: state.dim(),
                right: target.dim(),
            });
        }
        let ideal = target.matmul(probe.op())?.matmul(&udag)?;
        let overlap = ideal.matmul(state.op())?.trace().re;
        fidelity += w * overlap / probe.purity();
    }
    Ok(1.0 - fidelity)
}

/// Infidelity against the final target at each trajectory output time.
///
/// Runs one evolution per probe and reduces each sample to the
/// computational factor. Returns (time, J) pairs; the last entry is the
/// final gate infidelity.
pub fn dynamical_infidelity(spec: &EvolutionSpec, probes: &ProbeSet) -> Result<Vec<(f64, f64)>> {
    let protocol = spec.protocol();
    let target = protocol.target();
    let mut trajectories = Vec::with_capacity(probes.states().len());
    for probe in probes.states() {
        let rho0 = protocol.embed_probe(probe)?;
        trajectories.push(propagate(spec, &rho0)?);
    }
    let times = trajectories[0].times().to_vec();
    let mut series = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let evolved: Vec<DensityMatrix> = trajectories
            .iter()
            .map(|traj| protocol.reduce_to_computational(&traj.states()[k]))
            .collect::<Result<_>>()?;
        series.push((t, gate_infidelity(target, &evolved, probes)?));
    }
    Ok(series)
}

/// Final-time gate infidelity of a protocol run.
pub fn final_infidelity(spec: &EvolutionSpec, probes: &ProbeSet) -> Result<f64> {
    let protocol = spec.protocol();
    let target = protocol.target();
    let mut evolved = Vec::with_capacity(probes.states().len());
    for probe in probes.states() {
        let rho0 = protocol.embed_probe(probe)?;
        let traj = propagate(spec, &rho0)?;
        evolved.push(protocol.reduce_to_computational(traj.final_state())?);
    }
    gate_infidelity(target, &evolved, probes)
}

/// Result of a cost quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostReport {
    /// Time-averaged Hamiltonian norm (1/tau) int ||H(t)|| dt.
    pub cost: f64,
    /// Gate duration the average is taken over.
    pub tau: f64,
    /// Number of quadrature nodes used.
    pub quadrature_points: usize,
}

/// Baseline number of Simpson nodes.
pub const COST_MIN_POINTS: usize = 2001;

/// Minimum Simpson nodes per Floquet cycle.
pub const COST_POINTS_PER_CYCLE: usize = 40;

/// Time-averaged norm of the full generating Hamiltonian over [0, tau].
///
/// Composite Simpson quadrature on at least 2001 nodes; periodic protocols
/// get at least 40 nodes per drive cycle so the fast oscillation is
/// resolved.
pub fn cost(protocol: &GateProtocol, norm: NormKind) -> Result<CostReport> {
    let tau = protocol.profile().tau();
    let mut points = COST_MIN_POINTS;
    if let Some(ratio) = protocol.floquet_ratio() {
        let per_cycle = (COST_POINTS_PER_CYCLE as f64 * ratio).ceil() as usize;
        points = points.max(per_cycle + 1);
    }
    if points % 2 == 0 {
        points += 1;
    }
    let h = tau / (points - 1) as f64;
    let mut acc = 0.0;
    for k in 0..points {
        let t = if k + 1 == points { tau } else { k as f64 * h };
        let f = norm.apply(&protocol.h_at(t)?)?;
        let w = if k == 0 || k + 1 == points {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc += w * f;
    }
    let integral = acc * h / 3.0;
    Ok(CostReport {
        cost: integral / tau,
        tau,
        quadrature_points: points,
    })
}
