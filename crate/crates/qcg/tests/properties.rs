//! Property-based checks of the algebraic invariants the physics relies on:
//! unitarity of Hermitian exponentials, norm invariances, tensor and partial
//! trace consistency, ramp boundary behavior, and the gauge freedoms of the
//! infidelity functional.

use proptest::prelude::*;

use qcg::hamiltonians::{build_protocol, GateSpec, ProtocolKind};
use qcg::linalg::{
    bloch_vector, herm_exp, operator_norm, partial_trace, tensor, trace_norm, BlochVector,
    DensityMatrix, Operator, C64,
};
use qcg::metrics::{gate_infidelity, ProbeSet};
use qcg::ramps::{RampKind, RampProfile, TimingError, TimingSign};

/// Hermitian operator with entries of order one.
fn hermitian(dim: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), dim * dim).prop_map(move |parts| {
        let entries: Vec<C64> = parts.into_iter().map(|(re, im)| C64::new(re, im)).collect();
        Operator::new(dim, entries).unwrap().hermitized()
    })
}

/// Bloch point drawn inside the unit ball.
fn bloch_point() -> impl Strategy<Value = BlochVector> {
    ((-1.0..1.0f64), (-1.0..1.0f64), (-1.0..1.0f64), (0.0..1.0f64)).prop_map(|(x, y, z, r)| {
        let norm = (x * x + y * y + z * z).sqrt().max(1e-12);
        let scale = r / norm;
        BlochVector::new(x * scale, y * scale, z * scale).unwrap()
    })
}

fn qubit_state() -> impl Strategy<Value = DensityMatrix> {
    bloch_point().prop_map(|b| DensityMatrix::from_bloch(&b))
}

fn ramp_kind() -> impl Strategy<Value = RampKind> {
    prop::sample::select(RampKind::ALL.to_vec())
}

fn max_entry_gap(a: &Operator, b: &Operator) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

proptest! {
    #[test]
    fn hermitian_exponentials_are_unitary(h in hermitian(4), s in -10.0..10.0f64) {
        let u = herm_exp(&h, s).unwrap();
        let gram = u.adjoint().matmul(&u).unwrap();
        let id = Operator::identity(4).unwrap();
        prop_assert!(max_entry_gap(&gram, &id) < 1e-10);
    }

    #[test]
    fn hermitian_exponentials_compose(h in hermitian(2), s in -5.0..5.0f64, t in -5.0..5.0f64) {
        let u = herm_exp(&h, s).unwrap().matmul(&herm_exp(&h, t).unwrap()).unwrap();
        let v = herm_exp(&h, s + t).unwrap();
        prop_assert!(max_entry_gap(&u, &v) < 1e-10);
    }

    #[test]
    fn norms_are_unitary_invariant(h in hermitian(4), g in hermitian(4), s in -3.0..3.0f64) {
        let u = herm_exp(&g, s).unwrap();
        let rotated = u.matmul(&h).unwrap().matmul(&u.adjoint()).unwrap();
        let tr = trace_norm(&h).unwrap();
        let op = operator_norm(&h).unwrap();
        prop_assert!((trace_norm(&rotated).unwrap() - tr).abs() < 1e-9 * tr.max(1.0));
        prop_assert!((operator_norm(&rotated).unwrap() - op).abs() < 1e-9 * op.max(1.0));
        prop_assert!((h.frobenius_norm() - rotated.frobenius_norm()).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_inverts_tensor(a in qubit_state(), b in qubit_state()) {
        let joint = DensityMatrix::new(tensor(a.op(), b.op()).unwrap()).unwrap();
        let left = partial_trace(&joint, &[2, 2], 0).unwrap();
        let right = partial_trace(&joint, &[2, 2], 1).unwrap();
        prop_assert!(max_entry_gap(left.op(), a.op()) < 1e-12);
        prop_assert!(max_entry_gap(right.op(), b.op()) < 1e-12);
    }

    #[test]
    fn bloch_coordinates_round_trip(b in bloch_point()) {
        let rho = DensityMatrix::from_bloch(&b);
        let back = bloch_vector(&rho).unwrap();
        prop_assert!(back.distance(&b) < 1e-12);
        // Purity is fixed by the radius alone.
        prop_assert!((rho.purity() - 0.5 * (1.0 + b.norm_sqr())).abs() < 1e-12);
    }

    #[test]
    fn ramps_rise_from_zero_to_one(kind in ramp_kind(), tau in 0.05..20.0f64) {
        let ramp = RampProfile::new(kind, tau).unwrap();
        prop_assert!(ramp.lambda(0.0).unwrap().abs() < 1e-12);
        prop_assert!((ramp.lambda(tau).unwrap() - 1.0).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 0..=100 {
            let lam = ramp.lambda(tau * k as f64 / 100.0).unwrap();
            prop_assert!(lam >= prev - 1e-12 && lam <= 1.0 + 1e-12);
            prev = lam;
        }
    }

    #[test]
    fn ramp_slope_matches_finite_differences(
        kind in ramp_kind(),
        tau in 0.05..20.0f64,
        frac in 0.01..0.99f64,
    ) {
        let ramp = RampProfile::new(kind, tau).unwrap();
        let t = frac * tau;
        let h = 1e-5 * tau;
        let fd = (ramp.lambda(t + h).unwrap() - ramp.lambda(t - h).unwrap()) / (2.0 * h);
        let slope = ramp.lambda_dot(t).unwrap();
        prop_assert!((slope - fd).abs() < 1e-6 * slope.abs().max(1.0));
    }

    #[test]
    fn clock_errors_scale_durations_linearly(eps in 0.0..0.5f64, tau in 0.05..20.0f64) {
        let over = TimingError::new(eps, TimingSign::Overshoot).unwrap();
        let under = TimingError::new(eps, TimingSign::Undershoot).unwrap();
        prop_assert!((over.effective_duration(tau) - tau * (1.0 + eps)).abs() < 1e-12 * tau);
        prop_assert!((under.effective_duration(tau) - tau * (1.0 - eps)).abs() < 1e-12 * tau);
    }

    #[test]
    fn infidelity_ignores_global_phase(theta in 0.0..std::f64::consts::TAU) {
        let probes = ProbeSet::standard();
        let evolved: Vec<DensityMatrix> = probes.states().to_vec();
        let target = GateSpec::hadamard().target_unitary().clone();
        let phased = target.scaled(C64::from_polar(1.0, theta));
        let a = gate_infidelity(&target, &evolved, &probes).unwrap();
        let b = gate_infidelity(&phased, &evolved, &probes).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn identity_gate_on_unchanged_probes_is_perfect(
        raw in (0.01..1.0f64, 0.01..1.0f64, 0.01..1.0f64),
    ) {
        let sum = raw.0 + raw.1 + raw.2;
        let probes = ProbeSet::with_weights([raw.0 / sum, raw.1 / sum, raw.2 / sum]).unwrap();
        let evolved: Vec<DensityMatrix> = probes.states().to_vec();
        let id = Operator::identity(2).unwrap();
        let j = gate_infidelity(&id, &evolved, &probes).unwrap();
        prop_assert!(j.abs() < 1e-12);
    }

    #[test]
    fn probe_embedding_round_trips(b in bloch_point(), kind in ramp_kind()) {
        let probe = DensityMatrix::from_bloch(&b);
        let protocol = build_protocol(
            ProtocolKind::Cd,
            &GateSpec::hadamard(),
            RampProfile::new(kind, 1.0).unwrap(),
            None,
        )
        .unwrap();
        let embedded = protocol.embed_probe(&probe).unwrap();
        let back = protocol.reduce_to_computational(&embedded).unwrap();
        prop_assert!(max_entry_gap(back.op(), probe.op()) < 1e-12);
    }
}
