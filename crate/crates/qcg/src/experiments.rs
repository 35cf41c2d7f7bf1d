//! Scenario runners producing structured sweep data.
//!
//! Each runner maps a resolved [`ExperimentConfig`] to an ordered list of
//! records: infidelity vs duration, infidelity vs time, cost vs duration,
//! infidelity vs timing error, infidelity vs dephasing strength, Bloch
//! trajectories, the two-leg gate sequence, and the controlled-Z gate.
//! Sweep points are independent jobs executed on a worker pool; results are
//! merged back in parameter order, so output is deterministic regardless of
//! scheduling. The only nondeterministic column is `runtime_seconds`.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{propagate, reduce_trajectory, EvolutionSpec, NoiseSpec};
use crate::hamiltonians::{
    build_cz_protocol, build_protocol, CzKind, FloquetHarmonic, FloquetParams, GateProtocol,
    GateSpec, ProtocolKind,
};
use crate::linalg::{partial_trace, BlochVector, DensityMatrix};
use crate::metrics::{cost, dynamical_infidelity, final_infidelity, NormKind, ProbeSet};
use crate::ramps::{RampKind, RampProfile, TimingError, TimingSign};
use crate::{Error, Result};

/// The experiment being run; its name labels every emitted record.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scenario {
    DurationSweep,
    Dynamical,
    CostSweep,
    TimingSweep,
    DephasingSweep,
    Bloch,
    Sequence,
    Cz,
}

impl Scenario {
    /// Canonical snake_case name used in record rows.
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::DurationSweep => "duration_sweep",
            Scenario::Dynamical => "dynamical",
            Scenario::CostSweep => "cost_sweep",
            Scenario::TimingSweep => "timing_sweep",
            Scenario::DephasingSweep => "dephasing_sweep",
            Scenario::Bloch => "bloch",
            Scenario::Sequence => "sequence",
            Scenario::Cz => "cz",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which gate family the sweep drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GatePreset {
    /// Single-qubit Hadamard (auxiliary protocols use two qubits).
    Hadamard,
    /// Controlled-Z on two computational qubits.
    Cz,
}

impl GatePreset {
    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            GatePreset::Hadamard => "hadamard",
            GatePreset::Cz => "cz",
        }
    }
}

impl fmt::Display for GatePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GatePreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hadamard" => Ok(GatePreset::Hadamard),
            "cz" => Ok(GatePreset::Cz),
            other => Err(Error::InvalidParameter {
                name: "gate",
                reason: format!("unknown gate '{other}'; valid values are hadamard, cz"),
            }),
        }
    }
}

/// How the dephasing sweep realizes its tau*gamma axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DephasingAxis {
    /// Fix tau, sweep gamma = (tau*gamma)/tau (default).
    Gamma,
    /// Fix gamma, sweep tau = (tau*gamma)/gamma.
    Tau,
}

impl DephasingAxis {
    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            DephasingAxis::Gamma => "gamma",
            DephasingAxis::Tau => "tau",
        }
    }
}

impl FromStr for DephasingAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gamma" => Ok(DephasingAxis::Gamma),
            "tau" => Ok(DephasingAxis::Tau),
            other => Err(Error::InvalidParameter {
                name: "dephasing_sweep",
                reason: format!("unknown sweep axis '{other}'; valid values are gamma, tau"),
            }),
        }
    }
}

/// Which qubits the controlled-Z direct protocol dephases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CzNoiseSite {
    Both,
    Control,
    Target,
}

impl CzNoiseSite {
    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            CzNoiseSite::Both => "both",
            CzNoiseSite::Control => "control",
            CzNoiseSite::Target => "target",
        }
    }

    fn sites(&self) -> Vec<usize> {
        match self {
            CzNoiseSite::Both => vec![0, 1],
            CzNoiseSite::Control => vec![0],
            CzNoiseSite::Target => vec![1],
        }
    }
}

impl FromStr for CzNoiseSite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(CzNoiseSite::Both),
            "control" => Ok(CzNoiseSite::Control),
            "target" => Ok(CzNoiseSite::Target),
            other => Err(Error::InvalidParameter {
                name: "cz_dephasing",
                reason: format!("unknown site choice '{other}'; valid values are both, control, target"),
            }),
        }
    }
}

/// One sweep row: a single (protocol, ramp, parameter value) evaluation.
///
/// Exactly one of `infidelity` and `cost` is set, depending on the scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub scenario: String,
    pub protocol: String,
    pub ramp: String,
    pub param: String,
    pub value: f64,
    pub infidelity: Option<f64>,
    pub cost: Option<f64>,
    pub runtime_seconds: f64,
}

impl SweepRecord {
    fn infidelity_row(
        scenario: Scenario,
        protocol: &str,
        ramp: RampKind,
        param: &str,
        value: f64,
        infidelity: f64,
        runtime_seconds: f64,
    ) -> Self {
        Self {
            scenario: scenario.name().to_string(),
            protocol: protocol.to_string(),
            ramp: ramp.name().to_string(),
            param: param.to_string(),
            value,
            infidelity: Some(infidelity),
            cost: None,
            runtime_seconds,
        }
    }

    fn cost_row(
        scenario: Scenario,
        protocol: &str,
        ramp: RampKind,
        param: &str,
        value: f64,
        cost: f64,
        runtime_seconds: f64,
    ) -> Self {
        Self {
            scenario: scenario.name().to_string(),
            protocol: protocol.to_string(),
            ramp: ramp.name().to_string(),
            param: param.to_string(),
            value,
            infidelity: None,
            cost: Some(cost),
            runtime_seconds,
        }
    }
}

/// One Bloch-trajectory sample for one tracked qubit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlochRecord {
    pub scenario: String,
    pub protocol: String,
    pub qubit: String,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Sweep output: ordered records plus any per-row failures.
#[derive(Debug)]
pub struct SweepOutcome {
    /// Successful rows, in parameter order.
    pub records: Vec<SweepRecord>,
    /// Row-level failures (the sweep continues past them).
    pub failures: Vec<Error>,
}

/// Fully resolved experiment parameters.
///
/// Build one with [`ExperimentConfig::defaults_for`] and adjust fields; the
/// runners validate what they use.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Protocols to sweep.
    pub protocols: Vec<ProtocolKind>,
    /// Ramp shapes to sweep.
    pub ramps: Vec<RampKind>,
    /// Gate family.
    pub gate: GatePreset,
    /// Duration for single-duration scenarios.
    pub tau: f64,
    /// Duration grid lower edge (duration/cost sweeps).
    pub tau_min: f64,
    /// Duration grid upper edge.
    pub tau_max: f64,
    /// Duration grid size.
    pub tau_points: usize,
    /// Periodic-drive frequency ratio omega/omega0.
    pub ratio: f64,
    /// Periodic-drive control harmonic.
    pub harmonic: FloquetHarmonic,
    /// Norm used by the cost quadrature.
    pub norm: NormKind,
    /// Largest timing error magnitude.
    pub eps_max: f64,
    /// Timing error grid spacing.
    pub eps_step: f64,
    /// Dephasing grid lower edge (in tau*gamma).
    pub taugamma_min: f64,
    /// Dephasing grid upper edge.
    pub taugamma_max: f64,
    /// Dephasing grid size.
    pub taugamma_points: usize,
    /// Which variable realizes the tau*gamma axis.
    pub dephasing_axis: DephasingAxis,
    /// Dephasing rate for fixed-gamma scenarios (Bloch, dephasing tau-axis).
    pub gamma: f64,
    /// Dephased sites of the direct controlled-Z protocol.
    pub cz_noise: CzNoiseSite,
    /// Integration density override; `None` uses the protocol default.
    pub steps_per_unit: Option<usize>,
    /// Probe weights.
    pub weights: [f64; 3],
}

impl ExperimentConfig {
    /// Scenario-appropriate defaults: figure-panel grids and protocol sets.
    pub fn defaults_for(scenario: Scenario) -> Self {
        let mut cfg = Self {
            protocols: ProtocolKind::ALL.to_vec(),
            ramps: vec![RampKind::Linear],
            gate: GatePreset::Hadamard,
            tau: 1.0,
            tau_min: 0.1,
            tau_max: 10.0,
            tau_points: 40,
            ratio: 200.0,
            harmonic: FloquetHarmonic::Odd,
            norm: NormKind::Trace,
            eps_max: 0.3,
            eps_step: 0.01,
            taugamma_min: 0.0,
            taugamma_max: 5.0,
            taugamma_points: 26,
            dephasing_axis: DephasingAxis::Gamma,
            gamma: 0.0,
            cz_noise: CzNoiseSite::Both,
            steps_per_unit: None,
            weights: [1.0 / 3.0; 3],
        };
        match scenario {
            Scenario::DurationSweep | Scenario::Dynamical => {}
            Scenario::CostSweep => {
                cfg.tau_min = 0.05;
                cfg.tau_max = 20.0;
            }
            Scenario::TimingSweep => {
                cfg.protocols = vec![ProtocolKind::Ie];
                cfg.ramps = RampKind::ALL.to_vec();
            }
            Scenario::DephasingSweep | Scenario::Cz => {
                cfg.protocols = vec![ProtocolKind::Cd, ProtocolKind::Ie];
            }
            Scenario::Bloch => {
                cfg.protocols = vec![ProtocolKind::Cd, ProtocolKind::Ie];
            }
            Scenario::Sequence => {
                cfg.protocols = vec![ProtocolKind::Cd];
            }
        }
        cfg
    }

    fn probes(&self) -> Result<ProbeSet> {
        match self.gate {
            GatePreset::Hadamard => ProbeSet::with_weights(self.weights),
            GatePreset::Cz => ProbeSet::two_qubit_with_weights(self.weights),
        }
    }

    /// Builds the protocol for one sweep point.
    fn protocol_for(&self, kind: ProtocolKind, ramp: RampKind, tau: f64) -> Result<GateProtocol> {
        let profile = RampProfile::new(ramp, tau)?;
        match self.gate {
            GatePreset::Hadamard => {
                let fp = match kind {
                    ProtocolKind::Fe => {
                        Some(FloquetParams::new(tau, self.ratio, self.harmonic)?)
                    }
                    _ => None,
                };
                build_protocol(kind, &GateSpec::hadamard(), profile, fp)
            }
            GatePreset::Cz => {
                let cz = match kind {
                    ProtocolKind::Cd => CzKind::Cd,
                    ProtocolKind::Ie => CzKind::Ie,
                    other => {
                        return Err(Error::Config {
                            message: format!(
                                "the cz gate supports protocols cd, ie; got {other}"
                            ),
                        })
                    }
                };
                build_cz_protocol(cz, profile)
            }
        }
    }

    /// Builds the evolution spec, honoring a step-density override.
    fn evolution(
        &self,
        protocol: GateProtocol,
        t_end: f64,
        noise: Option<NoiseSpec>,
    ) -> Result<EvolutionSpec> {
        match self.steps_per_unit {
            Some(steps) => EvolutionSpec::new(protocol, t_end, steps, noise),
            None => EvolutionSpec::with_default_steps(protocol, t_end, noise),
        }
    }

    /// Sites the dephasing channel acts on for a given protocol.
    fn noise_sites(&self, protocol: &GateProtocol) -> Vec<usize> {
        if self.gate == GatePreset::Cz && protocol.aux_site().is_none() {
            self.cz_noise.sites()
        } else {
            protocol.noise_sites().to_vec()
        }
    }
}

/// Logarithmically spaced grid with exact endpoints.
pub fn logspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && max > min) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("logspace needs 0 < min < max, got [{min}, {max}]"),
        });
    }
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("grid needs at least 2 points, got {points}"),
        });
    }
    let n = points - 1;
    Ok((0..=n)
        .map(|i| {
            if i == 0 {
                min
            } else if i == n {
                max
            } else {
                min * (max / min).powf(i as f64 / n as f64)
            }
        })
        .collect())
}

/// Linearly spaced grid with exact endpoints.
pub fn linspace(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && max > min) {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("linspace needs min < max, got [{min}, {max}]"),
        });
    }
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!("grid needs at least 2 points, got {points}"),
        });
    }
    let n = points - 1;
    Ok((0..=n)
        .map(|i| {
            if i == n {
                max
            } else {
                min + (max - min) * i as f64 / n as f64
            }
        })
        .collect())
}

fn row_error(scenario: Scenario, protocol: &str, param: &str, value: f64, source: Error) -> Error {
    Error::Row {
        scenario: scenario.name().to_string(),
        protocol: protocol.to_string(),
        param: param.to_string(),
        value,
        source: Box::new(source),
    }
}

/// Runs ordered jobs on the worker pool and splits successes from failures,
/// both in job order.
fn collect_rows<J, F>(jobs: Vec<J>, run: F) -> (Vec<SweepRecord>, Vec<Error>)
where
    J: Sync,
    F: Fn(&J) -> Result<SweepRecord> + Sync,
{
    let results: Vec<Result<SweepRecord>> = jobs.par_iter().map(&run).collect();
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for result in results {
        match result {
            Ok(record) => records.push(record),
            Err(err) => failures.push(err),
        }
    }
    (records, failures)
}

fn first_failure(failures: Vec<Error>) -> Result<()> {
    match failures.into_iter().next() {
        Some(err) => Err(err),
        None => Ok(()),
    }
}

/// Final gate infidelity over a duration grid, one record per
/// (protocol, ramp, tau). Row failures are collected and the sweep
/// continues.
pub fn run_duration_sweep(cfg: &ExperimentConfig) -> Result<SweepOutcome> {
    let grid = logspace(cfg.tau_min, cfg.tau_max, cfg.tau_points)?;
    let probes = cfg.probes()?;
    let mut jobs = Vec::new();
    for &kind in &cfg.protocols {
        for &ramp in &cfg.ramps {
            for &tau in &grid {
                jobs.push((kind, ramp, tau));
            }
        }
    }
    let (records, failures) = collect_rows(jobs, |&(kind, ramp, tau)| {
        let start = Instant::now();
        let run = || -> Result<f64> {
            let protocol = cfg.protocol_for(kind, ramp, tau)?;
            let spec = cfg.evolution(protocol, tau, None)?;
            final_infidelity(&spec, &probes)
        };
        let j = run().map_err(|e| row_error(Scenario::DurationSweep, kind.name(), "tau", tau, e))?;
        Ok(SweepRecord::infidelity_row(
            Scenario::DurationSweep,
            kind.name(),
            ramp,
            "tau",
            tau,
            j,
            start.elapsed().as_secs_f64(),
        ))
    });
    Ok(SweepOutcome { records, failures })
}

/// Infidelity against the final target at every output time, 201 records
/// per (protocol, ramp) at the configured duration.
pub fn run_dynamical(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let probes = cfg.probes()?;
    let mut jobs = Vec::new();
    for &kind in &cfg.protocols {
        for &ramp in &cfg.ramps {
            jobs.push((kind, ramp));
        }
    }
    let results: Vec<Result<Vec<SweepRecord>>> = jobs
        .par_iter()
        .map(|&(kind, ramp)| {
            let start = Instant::now();
            let run = || -> Result<Vec<(f64, f64)>> {
                let protocol = cfg.protocol_for(kind, ramp, cfg.tau)?;
                let spec = cfg.evolution(protocol, cfg.tau, None)?;
                dynamical_infidelity(&spec, &probes)
            };
            let series = run()
                .map_err(|e| row_error(Scenario::Dynamical, kind.name(), "t", cfg.tau, e))?;
            let runtime = start.elapsed().as_secs_f64();
            Ok(series
                .into_iter()
                .map(|(t, j)| {
                    SweepRecord::infidelity_row(
                        Scenario::Dynamical,
                        kind.name(),
                        ramp,
                        "t",
                        t,
                        j,
                        runtime,
                    )
                })
                .collect())
        })
        .collect();
    let mut records = Vec::new();
    for result in results {
        records.extend(result?);
    }
    Ok(records)
}

/// Time-averaged drive cost over a duration grid, one record per
/// (protocol, ramp, tau).
pub fn run_cost_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let grid = logspace(cfg.tau_min, cfg.tau_max, cfg.tau_points)?;
    let mut jobs = Vec::new();
    for &kind in &cfg.protocols {
        for &ramp in &cfg.ramps {
            for &tau in &grid {
                jobs.push((kind, ramp, tau));
            }
        }
    }
    let (records, failures) = collect_rows(jobs, |&(kind, ramp, tau)| {
        let start = Instant::now();
        let run = || -> Result<f64> {
            let protocol = cfg.protocol_for(kind, ramp, tau)?;
            Ok(cost(&protocol, cfg.norm)?.cost)
        };
        let c = run().map_err(|e| row_error(Scenario::CostSweep, kind.name(), "tau", tau, e))?;
        Ok(SweepRecord::cost_row(
            Scenario::CostSweep,
            kind.name(),
            ramp,
            "tau",
            tau,
            c,
            start.elapsed().as_secs_f64(),
        ))
    });
    first_failure(failures)?;
    Ok(records)
}

/// Final infidelity vs signed timing error at fixed duration. Each ramp
/// gets one row at zero error and overshoot/undershoot rows for every
/// nonzero grid value.
pub fn run_timing_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    if !(cfg.eps_step > 0.0 && cfg.eps_step.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "eps_step",
            reason: format!("step must be positive, got {}", cfg.eps_step),
        });
    }
    let probes = cfg.probes()?;
    let steps = (cfg.eps_max / cfg.eps_step + 1e-9).floor() as usize;
    let mut jobs = Vec::new();
    for &kind in &cfg.protocols {
        for &ramp in &cfg.ramps {
            jobs.push((kind, ramp, TimingError::new(0.0, TimingSign::Overshoot)?));
            for k in 1..=steps {
                let eps = k as f64 * cfg.eps_step;
                jobs.push((kind, ramp, TimingError::new(eps, TimingSign::Overshoot)?));
                jobs.push((kind, ramp, TimingError::new(eps, TimingSign::Undershoot)?));
            }
        }
    }
    let (records, failures) = collect_rows(jobs, |&(kind, ramp, timing)| {
        let start = Instant::now();
        let run = || -> Result<f64> {
            let protocol = cfg.protocol_for(kind, ramp, cfg.tau)?;
            let t_end = timing.effective_duration(cfg.tau);
            let spec = cfg.evolution(protocol, t_end, None)?;
            final_infidelity(&spec, &probes)
        };
        let j = run().map_err(|e| {
            row_error(Scenario::TimingSweep, kind.name(), "epsilon", timing.signed(), e)
        })?;
        Ok(SweepRecord::infidelity_row(
            Scenario::TimingSweep,
            kind.name(),
            ramp,
            "epsilon",
            timing.signed(),
            j,
            start.elapsed().as_secs_f64(),
        ))
    });
    first_failure(failures)?;
    Ok(records)
}

/// Final infidelity vs dephasing strength tau*gamma, one record per
/// (protocol, ramp, grid point). The axis is realized per
/// [`DephasingAxis`].
pub fn run_dephasing_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let grid = linspace(cfg.taugamma_min, cfg.taugamma_max, cfg.taugamma_points)?;
    if cfg.dephasing_axis == DephasingAxis::Tau {
        if !(cfg.gamma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!(
                    "sweeping tau at fixed gamma needs gamma > 0, got {}",
                    cfg.gamma
                ),
            });
        }
        if grid[0] <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "taugamma_min",
                reason: "sweeping tau at fixed gamma needs tau*gamma > 0".to_string(),
            });
        }
    }
    let probes = cfg.probes()?;
    let mut jobs = Vec::new();
    for &kind in &cfg.protocols {
        for &ramp in &cfg.ramps {
            for &tg in &grid {
                jobs.push((kind, ramp, tg));
            }
        }
    }
    let (records, failures) = collect_rows(jobs, |&(kind, ramp, tg)| {
        let start = Instant::now();
        let run = || -> Result<f64> {
            let (tau, gamma) = match cfg.dephasing_axis {
                DephasingAxis::Gamma => (cfg.tau, tg / cfg.tau),
                DephasingAxis::Tau => (tg / cfg.gamma, cfg.gamma),
            };
            let protocol = cfg.protocol_for(kind, ramp, tau)?;
            let noise = if gamma > 0.0 {
                Some(NoiseSpec::new(gamma, cfg.noise_sites(&protocol))?)
            } else {
                None
            };
            let spec = cfg.evolution(protocol, tau, noise)?;
            final_infidelity(&spec, &probes)
        };
        let j = run().map_err(|e| {
            row_error(Scenario::DephasingSweep, kind.name(), "taugamma", tg, e)
        })?;
        Ok(SweepRecord::infidelity_row(
            Scenario::DephasingSweep,
            kind.name(),
            ramp,
            "taugamma",
            tg,
            j,
            start.elapsed().as_secs_f64(),
        ))
    });
    first_failure(failures)?;
    Ok(records)
}

fn qubit_labels(protocol: &GateProtocol) -> Vec<&'static str> {
    match (protocol.layout().len(), protocol.aux_site()) {
        (1, _) => vec!["computational"],
        (2, Some(_)) => vec!["computational", "auxiliary"],
        (2, None) => vec!["control", "target"],
        _ => vec!["control", "target", "auxiliary"],
    }
}

/// Bloch trajectories of every tracked qubit from the |+> computational
/// start, optionally under dephasing at the configured gamma.
pub fn run_bloch(cfg: &ExperimentConfig) -> Result<Vec<BlochRecord>> {
    let results: Vec<Result<Vec<BlochRecord>>> = cfg
        .protocols
        .par_iter()
        .map(|&kind| {
            let ramp = cfg.ramps[0];
            let run = || -> Result<Vec<BlochRecord>> {
                let protocol = cfg.protocol_for(kind, ramp, cfg.tau)?;
                let start = match cfg.gate {
                    GatePreset::Hadamard => DensityMatrix::plus_qubit(),
                    GatePreset::Cz => {
                        let plus = DensityMatrix::plus_qubit();
                        let op = crate::linalg::tensor(plus.op(), plus.op())?;
                        DensityMatrix::new(op)?
                    }
                };
                let rho0 = protocol.embed_probe(&start)?;
                let noise = if cfg.gamma > 0.0 {
                    Some(NoiseSpec::new(cfg.gamma, cfg.noise_sites(&protocol))?)
                } else {
                    None
                };
                let spec = cfg.evolution(protocol, cfg.tau, noise)?;
                let traj = propagate(&spec, &rho0)?;
                let layout = spec.protocol().layout().to_vec();
                let series = reduce_trajectory(&traj, &layout)?;
                let labels = qubit_labels(spec.protocol());
                let mut records = Vec::new();
                for (qubit, path) in series.iter().enumerate() {
                    for (k, b) in path.iter().enumerate() {
                        records.push(BlochRecord {
                            scenario: Scenario::Bloch.name().to_string(),
                            protocol: kind.name().to_string(),
                            qubit: labels[qubit].to_string(),
                            t: traj.times()[k],
                            x: b.x,
                            y: b.y,
                            z: b.z,
                        });
                    }
                }
                Ok(records)
            };
            run().map_err(|e| row_error(Scenario::Bloch, kind.name(), "t", cfg.tau, e))
        })
        .collect();
    let mut records = Vec::new();
    for result in results {
        records.extend(result?);
    }
    Ok(records)
}

/// Two-leg reuse sequence: a ground-start gate followed by an
/// excited-start gate on the same auxiliary.
///
/// Emits three rows per ramp: the computational register's return overlap
/// deficit, the auxiliary's return overlap deficit, and the single-leg
/// excited-start gate infidelity.
pub fn run_sequence(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let probes = cfg.probes()?;
    let mut records = Vec::new();
    for &ramp in &cfg.ramps {
        let start = Instant::now();
        let gate = GateSpec::hadamard();
        let profile = RampProfile::new(ramp, cfg.tau)?;
        let ground = build_protocol(ProtocolKind::Cd, &gate, profile.clone(), None)?;
        let excited = build_protocol(
            ProtocolKind::Cd,
            &gate.excited_state_variant(),
            profile.clone(),
            None,
        )?;

        // Leg 1 from |+> (x) |0>; leg 2 continues from the leg-1 output,
        // whose auxiliary has been driven to |1>.
        let rho0 = ground.embed_probe(&DensityMatrix::plus_qubit())?;
        let layout = ground.layout().to_vec();
        let spec1 = cfg.evolution(ground, cfg.tau, None)?;
        let mid = propagate(&spec1, &rho0)?.final_state().clone();
        let spec2 = cfg.evolution(excited, cfg.tau, None)?;
        let fin = propagate(&spec2, &mid)?.final_state().clone();

        let register = partial_trace(&fin, &layout, 0)?;
        let auxiliary = partial_trace(&fin, &layout, 1)?;
        let plus = DensityMatrix::plus_qubit();
        let register_overlap = register.op().matmul(plus.op())?.trace().re;
        let aux_overlap = auxiliary.op().at(0, 0).re;
        let runtime = start.elapsed().as_secs_f64();
        records.push(SweepRecord::infidelity_row(
            Scenario::Sequence,
            "cd",
            ramp,
            "register_return",
            cfg.tau,
            1.0 - register_overlap,
            runtime,
        ));
        records.push(SweepRecord::infidelity_row(
            Scenario::Sequence,
            "cd",
            ramp,
            "auxiliary_return",
            cfg.tau,
            1.0 - aux_overlap,
            runtime,
        ));

        // The excited-start leg is a complete gate in its own right.
        let start = Instant::now();
        let excited = build_protocol(
            ProtocolKind::Cd,
            &gate.excited_state_variant(),
            profile,
            None,
        )?;
        let spec = cfg.evolution(excited, cfg.tau, None)?;
        let j = final_infidelity(&spec, &probes)?;
        records.push(SweepRecord::infidelity_row(
            Scenario::Sequence,
            "cd",
            ramp,
            "excited_leg_gate",
            cfg.tau,
            j,
            start.elapsed().as_secs_f64(),
        ));
    }
    Ok(records)
}

/// Controlled-Z runs: one infidelity record and one cost record per
/// (protocol, ramp) at the configured duration.
pub fn run_cz(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    let probes = ProbeSet::two_qubit_with_weights(cfg.weights)?;
    let mut jobs = Vec::new();
    for &kind in &cfg.protocols {
        for &ramp in &cfg.ramps {
            jobs.push((kind, ramp));
        }
    }
    let results: Vec<Result<Vec<SweepRecord>>> = jobs
        .par_iter()
        .map(|&(kind, ramp)| {
            let cz = match kind {
                ProtocolKind::Cd => CzKind::Cd,
                ProtocolKind::Ie => CzKind::Ie,
                other => {
                    return Err(Error::Config {
                        message: format!("the cz scenario supports protocols cd, ie; got {other}"),
                    })
                }
            };
            let run = || -> Result<Vec<SweepRecord>> {
                let start = Instant::now();
                let profile = RampProfile::new(ramp, cfg.tau)?;
                let protocol = build_cz_protocol(cz, profile.clone())?;
                let spec = cfg.evolution(protocol, cfg.tau, None)?;
                let j = final_infidelity(&spec, &probes)?;
                let j_runtime = start.elapsed().as_secs_f64();
                let start = Instant::now();
                let protocol = build_cz_protocol(cz, profile)?;
                let c = cost(&protocol, cfg.norm)?.cost;
                Ok(vec![
                    SweepRecord::infidelity_row(
                        Scenario::Cz,
                        kind.name(),
                        ramp,
                        "tau",
                        cfg.tau,
                        j,
                        j_runtime,
                    ),
                    SweepRecord::cost_row(
                        Scenario::Cz,
                        kind.name(),
                        ramp,
                        "tau",
                        cfg.tau,
                        c,
                        start.elapsed().as_secs_f64(),
                    ),
                ])
            };
            run().map_err(|e| row_error(Scenario::Cz, kind.name(), "tau", cfg.tau, e))
        })
        .collect();
    let mut records = Vec::new();
    for result in results {
        records.extend(result?);
    }
    Ok(records)
}

/// Largest distance from any point of `path` to the polyline through
/// `reference`, treating the reference as a geometric set (no time
/// matching).
pub fn max_distance_to_path(path: &[BlochVector], reference: &[BlochVector]) -> f64 {
    path.iter()
        .map(|p| distance_to_polyline(p, reference))
        .fold(0.0, f64::max)
}

fn distance_to_polyline(point: &BlochVector, reference: &[BlochVector]) -> f64 {
    if reference.is_empty() {
        return f64::INFINITY;
    }
    if reference.len() == 1 {
        return point.distance(&reference[0]);
    }
    reference
        .windows(2)
        .map(|seg| distance_to_segment(point, &seg[0], &seg[1]))
        .fold(f64::INFINITY, f64::min)
}

fn distance_to_segment(p: &BlochVector, a: &BlochVector, b: &BlochVector) -> f64 {
    let ab = [b.x - a.x, b.y - a.y, b.z - a.z];
    let ap = [p.x - a.x, p.y - a.y, p.z - a.z];
    let len_sq = ab[0] * ab[0] + ab[1] * ab[1] + ab[2] * ab[2];
    let s = if len_sq > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1] + ap[2] * ab[2]) / len_sq).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [
        ap[0] - s * ab[0],
        ap[1] - s * ab[1],
        ap[2] - s * ab[2],
    ];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_helpers() {
        let g = logspace(0.1, 10.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.1);
        assert_eq!(g[4], 10.0);
        assert!((g[2] - 1.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(logspace(0.0, 1.0, 5).is_err());
        assert!(logspace(0.1, 10.0, 1).is_err());

        let l = linspace(0.0, 5.0, 26).unwrap();
        assert_eq!(l.len(), 26);
        assert_eq!(l[0], 0.0);
        assert_eq!(l[25], 5.0);
        assert!((l[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn duration_sweep_smoke() {
        let mut cfg = ExperimentConfig::defaults_for(Scenario::DurationSweep);
        cfg.protocols = vec![ProtocolKind::Cd, ProtocolKind::Uncontrolled];
        cfg.tau_min = 0.5;
        cfg.tau_max = 2.0;
        cfg.tau_points = 3;
        let out = run_duration_sweep(&cfg).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.records.len(), 6);
        // Ordered by (protocol, ramp, tau) as listed in the config.
        assert_eq!(out.records[0].protocol, "cd");
        assert_eq!(out.records[3].protocol, "uncontrolled");
        for rec in &out.records {
            assert_eq!(rec.scenario, "duration_sweep");
            assert_eq!(rec.param, "tau");
            assert!(rec.cost.is_none());
            let j = rec.infidelity.unwrap();
            if rec.protocol == "cd" {
                assert!(j < 1e-8, "cd tau={} J={j:e}", rec.value);
            } else {
                assert!(j > 1e-4);
            }
        }
    }

    #[test]
    fn dynamical_smoke() {
        let mut cfg = ExperimentConfig::defaults_for(Scenario::Dynamical);
        cfg.protocols = vec![ProtocolKind::Ie];
        let records = run_dynamical(&cfg).unwrap();
        assert_eq!(records.len(), 201);
        assert!((records[0].infidelity.unwrap() - 0.2).abs() < 1e-10);
        assert!(records.last().unwrap().infidelity.unwrap() < 1e-8);
        assert_eq!(records[0].param, "t");
    }

    #[test]
    fn timing_grid_structure() {
        let mut cfg = ExperimentConfig::defaults_for(Scenario::TimingSweep);
        cfg.eps_max = 0.03;
        let records = run_timing_sweep(&cfg).unwrap();
        // Per ramp: one zero row plus 3 paired rows.
        assert_eq!(records.len(), 3 * 7);
        let linear: Vec<&SweepRecord> =
            records.iter().filter(|r| r.ramp == "linear").collect();
        assert_eq!(linear.len(), 7);
        assert_eq!(linear[0].value, 0.0);
        assert!(linear[0].infidelity.unwrap() < 1e-8);
        assert!((linear[1].value - 0.01).abs() < 1e-12);
        assert!((linear[2].value + 0.01).abs() < 1e-12);
        // Overshoot and undershoot coincide on the linear ramp.
        assert!(
            (linear[1].infidelity.unwrap() - linear[2].infidelity.unwrap()).abs() < 1e-10
        );
    }

    #[test]
    fn dephasing_smoke() {
        let mut cfg = ExperimentConfig::defaults_for(Scenario::DephasingSweep);
        cfg.protocols = vec![ProtocolKind::Cd];
        cfg.taugamma_max = 1.0;
        cfg.taugamma_points = 2;
        let records = run_dephasing_sweep(&cfg).unwrap();
        assert_eq!(records.len(), 2);
        assert!(records[0].infidelity.unwrap() < 1e-8);
        assert!((records[1].infidelity.unwrap() - 0.06355907124802057).abs() < 1e-6);
    }

    #[test]
    fn bloch_smoke() {
        let mut cfg = ExperimentConfig::defaults_for(Scenario::Bloch);
        cfg.protocols = vec![ProtocolKind::Cd];
        let records = run_bloch(&cfg).unwrap();
        assert_eq!(records.len(), 2 * 201);
        let comp: Vec<&BlochRecord> = records
            .iter()
            .filter(|r| r.qubit == "computational")
            .collect();
        let aux: Vec<&BlochRecord> =
            records.iter().filter(|r| r.qubit == "auxiliary").collect();
        assert_eq!(comp.len(), 201);
        // |+> start, |0> end for the computational qubit.
        assert!((comp[0].x - 1.0).abs() < 1e-9);
        assert!((comp[200].z - 1.0).abs() < 1e-7);
        // The auxiliary is driven |0> -> |1>.
        assert!((aux[0].z - 1.0).abs() < 1e-9);
        assert!((aux[200].z + 1.0).abs() < 1e-7);
    }

    #[test]
    fn sequence_rows() {
        let cfg = ExperimentConfig::defaults_for(Scenario::Sequence);
        let records = run_sequence(&cfg).unwrap();
        assert_eq!(records.len(), 3);
        let params: Vec<&str> = records.iter().map(|r| r.param.as_str()).collect();
        assert_eq!(
            params,
            ["register_return", "auxiliary_return", "excited_leg_gate"]
        );
        for rec in &records {
            assert!(
                rec.infidelity.unwrap() < 1e-8,
                "{}: {:e}",
                rec.param,
                rec.infidelity.unwrap()
            );
        }
    }

    #[test]
    fn cz_rows() {
        let cfg = ExperimentConfig::defaults_for(Scenario::Cz);
        let records = run_cz(&cfg).unwrap();
        assert_eq!(records.len(), 4);
        for rec in records.iter().step_by(2) {
            assert!(rec.infidelity.unwrap() < 1e-8, "{}", rec.protocol);
        }
        // The direct protocol's constant drive averages to 3 pi / (2 tau).
        let ie_cost = records[3].cost.unwrap();
        assert!((ie_cost - 1.5 * std::f64::consts::PI).abs() < 1e-9);
        let mut bad = ExperimentConfig::defaults_for(Scenario::Cz);
        bad.protocols = vec![ProtocolKind::Fe];
        assert!(run_cz(&bad).is_err());
    }

    #[test]
    fn polyline_distance() {
        let path = vec![
            BlochVector::new(0.0, 0.0, 1.0).unwrap(),
            BlochVector::new(0.5, 0.0, 0.5).unwrap(),
        ];
        let reference = vec![
            BlochVector::new(0.0, 0.0, 1.0).unwrap(),
            BlochVector::new(1.0, 0.0, 0.0).unwrap(),
        ];
        // Both path points lie on the reference chord.
        assert!(max_distance_to_path(&path, &reference) < 1e-12);
        // A point off the chord measures its perpendicular distance.
        let off = vec![BlochVector::new(0.0, 0.5, 0.0).unwrap()];
        let d = max_distance_to_path(&off, &reference);
        assert!((d - (0.5f64 * 0.5 + 0.5 * 0.5 + 0.5 * 0.5).sqrt()).abs() < 1e-12);
    }
}
