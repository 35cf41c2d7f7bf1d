//! Time-dependent Hamiltonians for the three gate-control schemes.
//!
//! The auxiliary-evolution family drives an extra qubit through an avoided
//! crossing; the computational qubit picks up a projector-dependent phase
//! that realizes the gate. Control is added either as an exact
//! counterdiabatic term (CD) or as a high-frequency periodic drive whose
//! cycle average reproduces it (FE). The inverse-engineered family (IE)
//! drives the computational qubit directly with a Hamiltonian constructed
//! from a chosen eigenbasis path. [`GateProtocol`] packages each variant
//! behind one `h_at(t)` callable with a declared Hilbert-space layout.

use std::fmt;
use std::str::FromStr;

use crate::linalg::{
    commutator, identity2, ket0_projector, ket1_projector, sigma_x, sigma_y, sigma_z, tensor,
    DensityMatrix, Operator, C64,
};
use crate::ramps::RampProfile;
use crate::{Error, Result};

/// Fixed final rotation angle of the auxiliary sweep.
pub const THETA_F: f64 = std::f64::consts::PI;

/// Spectral-gap floor below which the gauge potential is rejected.
pub const MIN_SPECTRAL_GAP: f64 = 1e-10;

/// Minimum Floquet frequency ratio.
pub const MIN_FLOQUET_RATIO: f64 = 10.0;

const PI: f64 = std::f64::consts::PI;

fn axis_sigma(axis: [f64; 3]) -> Operator {
    let sx = sigma_x().scaled_re(axis[0]);
    let sy = sigma_y().scaled_re(axis[1]);
    let sz = sigma_z().scaled_re(axis[2]);
    &(&sx + &sy) + &sz
}

/// Which state the auxiliary qubit starts in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuxStart {
    /// Start in |0>; the sweep leaves the auxiliary in |1>.
    Ground,
    /// Start in |1>; the sweep returns the auxiliary to |0>.
    Excited,
}

impl AuxStart {
    /// Density matrix of the starting auxiliary state.
    pub fn state(&self) -> DensityMatrix {
        match self {
            AuxStart::Ground => DensityMatrix::ground_qubit(),
            AuxStart::Excited => DensityMatrix::excited_qubit(),
        }
    }

    /// Projector onto the state the auxiliary should occupy after the sweep.
    pub fn final_projector(&self) -> Operator {
        match self {
            AuxStart::Ground => ket1_projector(),
            AuxStart::Excited => ket0_projector(),
        }
    }
}

/// Target single-qubit gate expressed through its rotation axis and the
/// relative phase between the two axis projectors.
///
/// The realized unitary is P+ + exp(i phase_minus) P- with
/// P+- = (1 +- n.sigma)/2, up to global phase.
#[derive(Clone, Debug)]
pub struct GateSpec {
    axis: [f64; 3],
    phase_plus: f64,
    phase_minus: f64,
    theta_f: f64,
    target: Operator,
    aux_start: AuxStart,
}

impl GateSpec {
    /// Builds a gate from a unit rotation axis and the minus-projector phase.
    ///
    /// The axis must be normalized to 1e-12.
    pub fn single_qubit(axis: [f64; 3], phase_minus: f64) -> Result<Self> {
        let norm = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if (norm - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter {
                name: "axis",
                reason: format!("rotation axis must be a unit vector, |n| = {norm}"),
            });
        }
        let ns = axis_sigma(axis);
        let plus = &(&identity2() + &ns).scaled_re(0.5);
        let minus = &(&identity2() - &ns).scaled_re(0.5);
        let target = plus + &minus.scaled(C64::from_polar(1.0, phase_minus));
        Ok(Self {
            axis,
            phase_plus: 0.0,
            phase_minus,
            theta_f: THETA_F,
            target,
            aux_start: AuxStart::Ground,
        })
    }

    /// The Hadamard preset: axis (1, 0, 1)/sqrt(2), minus phase pi.
    pub fn hadamard() -> Self {
        let inv = 1.0 / 2.0f64.sqrt();
        Self::single_qubit([inv, 0.0, inv], PI).expect("unit axis")
    }

    /// The same computational gate executed from an excited auxiliary.
    ///
    /// All block phases are negated and the auxiliary starts in |1>, which
    /// the sweep returns to |0>. The realized computational unitary is
    /// unchanged, so the target is carried over as is.
    pub fn excited_state_variant(&self) -> Self {
        Self {
            axis: self.axis,
            phase_plus: -self.phase_plus,
            phase_minus: -self.phase_minus,
            theta_f: self.theta_f,
            target: self.target.clone(),
            aux_start: AuxStart::Excited,
        }
    }

    /// Rotation axis.
    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }

    /// Phase on the plus projector (fixed at 0 for the base variant).
    pub fn phase_plus(&self) -> f64 {
        self.phase_plus
    }

    /// Phase on the minus projector.
    pub fn phase_minus(&self) -> f64 {
        self.phase_minus
    }

    /// Final sweep angle (fixed at pi).
    pub fn theta_f(&self) -> f64 {
        self.theta_f
    }

    /// Ideal computational unitary.
    pub fn target_unitary(&self) -> &Operator {
        &self.target
    }

    /// Starting auxiliary state.
    pub fn aux_start(&self) -> AuxStart {
        self.aux_start
    }

    /// Axis projectors (P+, P-).
    pub fn projectors(&self) -> (Operator, Operator) {
        let ns = axis_sigma(self.axis);
        let plus = (&identity2() + &ns).scaled_re(0.5);
        let minus = (&identity2() - &ns).scaled_re(0.5);
        (plus, minus)
    }
}

/// Variational gauge-potential expansion coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct AgpCoefficients {
    alphas: Vec<f64>,
}

impl AgpCoefficients {
    /// Wraps explicit coefficients; at least one is required.
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(Error::InvalidParameter {
                name: "alphas",
                reason: "expansion needs at least one coefficient".into(),
            });
        }
        Ok(Self { alphas })
    }

    /// Expansion order l.
    pub fn order(&self) -> usize {
        self.alphas.len()
    }

    /// Coefficients alpha_1 .. alpha_l.
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// Harmonic content of the periodic gauge-potential drive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FloquetHarmonic {
    /// First odd harmonic sin(omega t) with amplitude 2 omega0 alpha_1.
    /// Cycle-averaging against the fast prefactor reproduces the
    /// counterdiabatic term to leading order; this is the working default.
    Odd,
    /// Literal second harmonic sin(2 omega t) with amplitude omega0 alpha_1.
    /// Averages to zero against the fast prefactor, so it leaves the bare
    /// dynamics essentially uncorrected; kept selectable for comparison.
    Second,
}

impl FloquetHarmonic {
    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            FloquetHarmonic::Odd => "odd",
            FloquetHarmonic::Second => "second",
        }
    }
}

impl fmt::Display for FloquetHarmonic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FloquetHarmonic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "odd" => Ok(FloquetHarmonic::Odd),
            "second" => Ok(FloquetHarmonic::Second),
            other => Err(Error::InvalidParameter {
                name: "floquet_harmonic",
                reason: format!("unknown harmonic '{other}'; valid values are odd, second"),
            }),
        }
    }
}

/// Frequencies of the periodic drive: reference omega0 = 2 pi / tau and the
/// fast frequency omega = ratio * omega0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FloquetParams {
    omega0: f64,
    ratio: f64,
    harmonic: FloquetHarmonic,
}

impl FloquetParams {
    /// Builds drive frequencies for a gate of duration tau.
    ///
    /// The frequency ratio must be at least 10; the scheme is a
    /// high-frequency expansion and degrades quickly below that.
    pub fn new(tau: f64, ratio: f64, harmonic: FloquetHarmonic) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tau",
                reason: format!("duration must be positive and finite, got {tau}"),
            });
        }
        if !(ratio.is_finite() && ratio >= MIN_FLOQUET_RATIO) {
            return Err(Error::InvalidParameter {
                name: "ratio",
                reason: format!("frequency ratio must be >= {MIN_FLOQUET_RATIO}, got {ratio}"),
            });
        }
        Ok(Self {
            omega0: 2.0 * PI / tau,
            ratio,
            harmonic,
        })
    }

    /// Reference frequency 2 pi / tau.
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Frequency ratio omega / omega0.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    /// Fast drive frequency.
    pub fn omega(&self) -> f64 {
        self.ratio * self.omega0
    }

    /// Harmonic convention of the gauge-potential channel.
    pub fn harmonic(&self) -> FloquetHarmonic {
        self.harmonic
    }
}

/// Basis-path angles and their time derivatives for direct driving.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IeParams {
    /// Polar basis angle.
    pub theta: f64,
    /// Azimuthal basis angle.
    pub phi: f64,
    /// Time derivative of theta.
    pub theta_dot: f64,
    /// Time derivative of phi.
    pub phi_dot: f64,
}

impl IeParams {
    /// Constant-basis preset realizing the Hadamard gate.
    pub fn hadamard() -> Self {
        Self {
            theta: PI / 4.0,
            phi: 0.0,
            theta_dot: 0.0,
            phi_dot: 0.0,
        }
    }
}

/// Bare auxiliary driving Hamiltonian
/// -[cos(pi lam) sz + sin(pi lam)(cos phi sx + sin phi sy)].
///
/// Eigenvalues are +-1 for every (phi, lam); lam may exceed 1 when a clock
/// error extends the sweep.
pub fn aux_drive_h(phi: f64, lam: f64) -> Operator {
    let (c, s) = ((PI * lam).cos(), (PI * lam).sin());
    let transverse = &sigma_x().scaled_re(phi.cos()) + &sigma_y().scaled_re(phi.sin());
    (&sigma_z().scaled_re(c) + &transverse.scaled_re(s)).scaled_re(-1.0)
}

/// Derivative of [`aux_drive_h`] with respect to lam:
/// pi [sin(pi lam) sz - cos(pi lam)(cos phi sx + sin phi sy)].
pub fn aux_drive_dh(phi: f64, lam: f64) -> Operator {
    let (c, s) = ((PI * lam).cos(), (PI * lam).sin());
    let transverse = &sigma_x().scaled_re(phi.cos()) + &sigma_y().scaled_re(phi.sin());
    (&sigma_z().scaled_re(s) - &transverse.scaled_re(c)).scaled_re(PI)
}

/// Counterdiabatic direction (pi/2)(cos phi sy - sin phi sx) for one block;
/// the full CD term is lambda_dot times this.
pub fn cd_block(phi: f64) -> Operator {
    (&sigma_y().scaled_re(phi.cos()) - &sigma_x().scaled_re(phi.sin())).scaled_re(PI / 2.0)
}

/// Composite gate Hamiltonian P+ (x) H_{phi+} + P- (x) H_{phi-} on
/// computational (x) auxiliary.
pub fn aux_total_h(gate: &GateSpec, lam: f64) -> Operator {
    let (plus, minus) = gate.projectors();
    let hp = aux_drive_h(gate.phase_plus(), lam);
    let hm = aux_drive_h(gate.phase_minus(), lam);
    &tensor(&plus, &hp).expect("4x4") + &tensor(&minus, &hm).expect("4x4")
}

/// Exact adiabatic gauge potential from the spectral formula
/// i sum_{m != n} |m><m| dh |n><n| / (E_n - E_m).
///
/// Rejects spectra with a gap below 1e-10: the formula divides by the gap
/// and the result would be meaningless noise.
pub fn exact_gauge_potential(h: &Operator, dh: &Operator) -> Result<Operator> {
    let (w, v) = h.eigh()?;
    let n = h.dim();
    let mut min_gap = f64::INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            min_gap = min_gap.min((w[i] - w[j]).abs());
        }
    }
    if min_gap <= MIN_SPECTRAL_GAP {
        return Err(Error::DegenerateSpectrum {
            gap: min_gap,
            min_gap: MIN_SPECTRAL_GAP,
        });
    }
    // Work in the eigenbasis: M = V† dh V, A_mn = i M_mn / (E_n - E_m).
    let m = v.adjoint().matmul(dh)?.matmul(&v)?;
    let mut a_eig = Operator::zeros(n)?;
    for row in 0..n {
        for col in 0..n {
            if row == col {
                continue;
            }
            let denom = w[col] - w[row];
            a_eig.set(row, col, C64::new(0.0, 1.0) * m.at(row, col) / denom);
        }
    }
    v.matmul(&a_eig)?.matmul(&v.adjoint())
}

/// Nested-commutator gauge potential
/// i sum_{k=1..l} alpha_k [h, [h, ... [h, dh]]] with 2k-1 commutators.
pub fn nested_commutator_agp(
    h: &Operator,
    dh: &Operator,
    coeffs: &AgpCoefficients,
) -> Result<Operator> {
    let mut acc = Operator::zeros(h.dim())?;
    let mut nested = dh.clone();
    for (k, &alpha) in coeffs.alphas().iter().enumerate() {
        // Advance from C_{2(k-1)} (or dh at k=0) to C_{2k-1}.
        nested = commutator(h, &nested)?;
        acc = &acc + &nested.scaled_re(alpha);
        if k + 1 < coeffs.order() {
            nested = commutator(h, &nested)?;
        }
    }
    Ok(acc.scaled(C64::new(0.0, 1.0)))
}

/// Solves a small real linear system by Gaussian elimination with partial
/// pivoting. A system that is singular but has zero right-hand side returns
/// the zero solution.
fn solve_real(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, context: &'static str) -> Result<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .flatten()
        .fold(0.0f64, |m, &x| m.max(x.abs()))
        .max(1e-300);
    let rhs_scale = b.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let mut order: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r][col].abs()))
            .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot <= 1e-12 * scale {
            if rhs_scale <= 1e-12 * scale.max(1.0) {
                return Ok(vec![0.0; n]);
            }
            return Err(Error::SingularSystem {
                context: context.to_string(),
            });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        order.swap(col, pivot_row);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in (col + 1)..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

/// Variational gauge-potential coefficients at order l.
///
/// The deviation operator G = dh + sum_k alpha_k C_{2k} (with C_1 = [h, dh],
/// C_{j+1} = [h, C_j]) has action Tr[G^2] quadratic in alpha, so the
/// minimizer solves the l x l system
/// sum_j Tr(C_{2k} C_{2j}) alpha_j = -Tr(dh C_{2k}).
pub fn minimize_action(h: &Operator, dh: &Operator, l: usize) -> Result<AgpCoefficients> {
    if l == 0 {
        return Err(Error::InvalidParameter {
            name: "l",
            reason: "expansion order must be at least 1".into(),
        });
    }
    // Even-depth nested commutators C_2, C_4, ..., C_{2l}.
    let mut evens: Vec<Operator> = Vec::with_capacity(l);
    let mut nested = dh.clone();
    for _ in 0..l {
        nested = commutator(h, &nested)?;
        nested = commutator(h, &nested)?;
        evens.push(nested.clone());
    }
    let mut a = vec![vec![0.0; l]; l];
    let mut b = vec![0.0; l];
    for k in 0..l {
        for j in 0..l {
            a[k][j] = evens[k].matmul(&evens[j])?.trace().re;
        }
        b[k] = -dh.matmul(&evens[k])?.trace().re;
    }
    let alphas = solve_real(a, b, "gauge-potential action minimization")?;
    AgpCoefficients::new(alphas)
}

/// Periodically driven block Hamiltonian
/// [1 + ratio cos(omega t)] H_phi + B(t) dH_phi.
///
/// The gauge-potential channel B(t) carries the first odd harmonic
/// lambda_dot 2 omega0 alpha_1 sin(omega t) by default, or the literal
/// second harmonic lambda_dot omega0 alpha_1 sin(2 omega t) when selected.
pub fn floquet_h(
    phi: f64,
    t: f64,
    profile: &RampProfile,
    fp: &FloquetParams,
    coeffs: &AgpCoefficients,
) -> Result<Operator> {
    let lam = profile.lambda(t)?;
    let ld = profile.lambda_dot(t)?;
    let alpha1 = coeffs.alphas()[0];
    let (w0, w) = (fp.omega0(), fp.omega());
    let a = 1.0 + fp.ratio() * (w * t).cos();
    let b = match fp.harmonic() {
        FloquetHarmonic::Odd => ld * 2.0 * w0 * alpha1 * (w * t).sin(),
        FloquetHarmonic::Second => ld * w0 * alpha1 * (2.0 * w * t).sin(),
    };
    Ok(&aux_drive_h(phi, lam).scaled_re(a) + &aux_drive_dh(phi, lam).scaled_re(b))
}

/// Inverse-engineered driving Hamiltonian H = (1/2) omega_vec . sigma_vec
/// built from the basis-path angles and their derivatives.
pub fn ie_h(p: &IeParams, t: f64, profile: &RampProfile) -> Result<Operator> {
    let lam = profile.lambda(t)?;
    let ld = profile.lambda_dot(t)?;
    let (cl, sl) = ((PI * lam).cos(), (PI * lam).sin());
    let (cth, sth) = (p.theta.cos(), p.theta.sin());
    let (cph, sph) = (p.phi.cos(), p.phi.sin());
    let radial = p.theta_dot * cth * sl + PI * ld * sth;
    let wx = (cl - 1.0) * p.phi_dot * cph * cth * sth
        + (p.phi_dot * sth * sl + (cl - 1.0) * p.theta_dot) * sph
        + radial * cph;
    let wy = (cl - 1.0) * p.phi_dot * sph * sth * cth
        + (p.phi_dot * sth * sl - (cl - 1.0) * p.theta_dot) * cph
        + radial * sph;
    let wz = -p.theta_dot * sth * sl - (cl - 1.0) * p.phi_dot * sth * sth + PI * ld * cth;
    let h = &(&sigma_x().scaled_re(wx) + &sigma_y().scaled_re(wy)) + &sigma_z().scaled_re(wz);
    Ok(h.scaled_re(0.5))
}

/// Composite controlled-phase Hamiltonian on control (x) target (x)
/// auxiliary: the phi = pi block acts only on the |11> computational
/// subspace, every other subspace sees the phi = 0 sweep.
pub fn cz_aux_h(lam: f64) -> Operator {
    let h0 = aux_drive_h(0.0, lam);
    let hpi = aux_drive_h(PI, lam);
    let spectator = &tensor(&ket0_projector(), &identity2()).expect("4x4")
        + &tensor(&ket1_projector(), &ket0_projector()).expect("4x4");
    let active = tensor(&ket1_projector(), &ket1_projector()).expect("4x4");
    &tensor(&spectator, &h0).expect("8x8") + &tensor(&active, &hpi).expect("8x8")
}

/// Counterdiabatic direction for the controlled-phase composite;
/// the full term is lambda_dot times this. The |11> subspace carries the
/// phi = pi block's flipped sign.
pub fn cz_cd_correction() -> Operator {
    let p11 = tensor(&ket1_projector(), &ket1_projector()).expect("4x4");
    let four = Operator::identity(4).expect("4x4");
    let weights = &four - &p11.scaled_re(2.0);
    tensor(&weights, &cd_block(0.0)).expect("8x8")
}

/// Direct controlled-Z Hamiltonian
/// (pi lambda_dot / 4)(Z (x) 1 + 1 (x) Z - Z (x) Z), diagonal with entries
/// proportional to (1, 1, 1, -3).
pub fn cz_ie_h(profile: &RampProfile, t: f64) -> Result<Operator> {
    let ld = profile.lambda_dot(t)?;
    let mut h = Operator::zeros(4)?;
    let f = PI * ld / 4.0;
    h.set(0, 0, C64::new(f, 0.0));
    h.set(1, 1, C64::new(f, 0.0));
    h.set(2, 2, C64::new(f, 0.0));
    h.set(3, 3, C64::new(-3.0 * f, 0.0));
    Ok(h)
}

/// Control scheme selector for the single-qubit protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    /// Bare auxiliary sweep, no correction.
    Uncontrolled,
    /// Auxiliary sweep plus the exact counterdiabatic term.
    Cd,
    /// Auxiliary sweep with the periodic high-frequency drive.
    Fe,
    /// Direct inverse-engineered drive on the computational qubit.
    Ie,
}

impl ProtocolKind {
    /// All supported kinds, in canonical listing order.
    pub const ALL: [ProtocolKind; 4] = [
        ProtocolKind::Cd,
        ProtocolKind::Fe,
        ProtocolKind::Ie,
        ProtocolKind::Uncontrolled,
    ];

    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            ProtocolKind::Uncontrolled => "uncontrolled",
            ProtocolKind::Cd => "cd",
            ProtocolKind::Fe => "fe",
            ProtocolKind::Ie => "ie",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uncontrolled" => Ok(ProtocolKind::Uncontrolled),
            "cd" => Ok(ProtocolKind::Cd),
            "fe" => Ok(ProtocolKind::Fe),
            "ie" => Ok(ProtocolKind::Ie),
            other => Err(Error::InvalidParameter {
                name: "protocol",
                reason: format!(
                    "unknown protocol '{other}'; valid values are cd, fe, ie, uncontrolled"
                ),
            }),
        }
    }
}

/// Control scheme selector for the controlled-Z protocols.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CzKind {
    /// Auxiliary sweep with the counterdiabatic term.
    Cd,
    /// Direct diagonal drive on the two computational qubits.
    Ie,
}

impl CzKind {
    /// Canonical lower-case name.
    pub fn name(&self) -> &'static str {
        match self {
            CzKind::Cd => "cd",
            CzKind::Ie => "ie",
        }
    }
}

/// The concrete Hamiltonian form a protocol evaluates.
#[derive(Clone, Debug)]
enum HForm {
    AuxBare {
        gate: GateSpec,
    },
    AuxCd {
        gate: GateSpec,
    },
    AuxFe {
        gate: GateSpec,
        fp: FloquetParams,
        coeffs: AgpCoefficients,
    },
    DirectIe {
        params: IeParams,
    },
    CzCd,
    CzIe,
}

/// A runnable gate realization: Hamiltonian, Hilbert-space layout, ramp, and
/// ideal target, bound together.
///
/// Layout lists the qubit factors in tensor order, computational first;
/// the auxiliary, when present, is always the last factor.
#[derive(Clone, Debug)]
pub struct GateProtocol {
    label: &'static str,
    form: HForm,
    profile: RampProfile,
    layout: Vec<usize>,
    aux_site: Option<usize>,
    noise_sites: Vec<usize>,
    target: Operator,
}

/// Default integration density (steps per unit lambda progress) for the
/// smooth protocols.
pub const BASE_STEPS_PER_UNIT: usize = 2000;

/// Default integration density per Floquet cycle. 256 steps per cycle keeps
/// the midpoint exponential integrator converged well below the gate
/// infidelities the periodic drive itself reaches.
pub const FE_STEPS_PER_CYCLE: usize = 256;

impl GateProtocol {
    /// Protocol name as reported in sweep records.
    pub fn label(&self) -> &'static str {
        self.label
    }

    /// Total Hilbert-space dimension.
    pub fn dim(&self) -> usize {
        self.layout.iter().product()
    }

    /// Qubit factor dimensions in tensor order.
    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    /// Index of the auxiliary factor, if the scheme uses one.
    pub fn aux_site(&self) -> Option<usize> {
        self.aux_site
    }

    /// Qubit indices dephasing acts on by default: the driven qubit(s).
    pub fn noise_sites(&self) -> &[usize] {
        &self.noise_sites
    }

    /// Ramp schedule.
    pub fn profile(&self) -> &RampProfile {
        &self.profile
    }

    /// Same protocol on a different schedule.
    pub fn with_profile(&self, profile: RampProfile) -> Result<Self> {
        // Floquet frequencies are tied to the duration; rebuild them.
        let form = match &self.form {
            HForm::AuxFe { gate, fp, coeffs } => HForm::AuxFe {
                gate: gate.clone(),
                fp: FloquetParams::new(profile.tau(), fp.ratio(), fp.harmonic())?,
                coeffs: coeffs.clone(),
            },
            other => other.clone(),
        };
        Ok(Self {
            form,
            profile,
            ..self.clone()
        })
    }

    /// Ideal unitary on the computational factor.
    pub fn target(&self) -> &Operator {
        &self.target
    }

    /// Floquet frequency ratio, when the scheme is periodic.
    pub fn floquet_ratio(&self) -> Option<f64> {
        match &self.form {
            HForm::AuxFe { fp, .. } => Some(fp.ratio()),
            _ => None,
        }
    }

    /// Gate the protocol realizes, when auxiliary-based.
    pub fn gate(&self) -> Option<&GateSpec> {
        match &self.form {
            HForm::AuxBare { gate } | HForm::AuxCd { gate } | HForm::AuxFe { gate, .. } => {
                Some(gate)
            }
            _ => None,
        }
    }

    /// The Hamiltonian at laboratory time t.
    pub fn h_at(&self, t: f64) -> Result<Operator> {
        match &self.form {
            HForm::AuxBare { gate } => {
                let lam = self.profile.lambda(t)?;
                Ok(aux_total_h(gate, lam))
            }
            HForm::AuxCd { gate } => {
                let lam = self.profile.lambda(t)?;
                let ld = self.profile.lambda_dot(t)?;
                let (plus, minus) = gate.projectors();
                let cd = &tensor(&plus, &cd_block(gate.phase_plus()))?
                    + &tensor(&minus, &cd_block(gate.phase_minus()))?;
                Ok(&aux_total_h(gate, lam) + &cd.scaled_re(ld))
            }
            HForm::AuxFe { gate, fp, coeffs } => {
                let (plus, minus) = gate.projectors();
                let hp = floquet_h(gate.phase_plus(), t, &self.profile, fp, coeffs)?;
                let hm = floquet_h(gate.phase_minus(), t, &self.profile, fp, coeffs)?;
                Ok(&tensor(&plus, &hp)? + &tensor(&minus, &hm)?)
            }
            HForm::DirectIe { params } => ie_h(params, t, &self.profile),
            HForm::CzCd => {
                let lam = self.profile.lambda(t)?;
                let ld = self.profile.lambda_dot(t)?;
                Ok(&cz_aux_h(lam) + &cz_cd_correction().scaled_re(ld))
            }
            HForm::CzIe => cz_ie_h(&self.profile, t),
        }
    }

    /// Extends a computational probe with the auxiliary start state.
    pub fn embed_probe(&self, probe: &DensityMatrix) -> Result<DensityMatrix> {
        match (&self.aux_site, self.gate()) {
            (Some(_), _) => {
                let aux = match &self.form {
                    HForm::CzCd => AuxStart::Ground.state(),
                    _ => self
                        .gate()
                        .map(|g| g.aux_start().state())
                        .unwrap_or_else(DensityMatrix::ground_qubit),
                };
                let op = tensor(probe.op(), aux.op())?;
                DensityMatrix::new(op)
            }
            _ => {
                if probe.dim() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        left: probe.dim(),
                        right: self.dim(),
                    });
                }
                Ok(probe.clone())
            }
        }
    }

    /// Reduces a full state to the computational factor(s).
    pub fn reduce_to_computational(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match self.aux_site {
            Some(site) => crate::linalg::trace_out_factor(rho, &self.layout, site),
            None => Ok(rho.clone()),
        }
    }

    /// Minimum accepted integration density in steps per unit lambda.
    pub fn floor_steps_per_unit(&self) -> usize {
        match self.floquet_ratio() {
            Some(ratio) => 1000usize.max((20.0 * ratio).ceil() as usize),
            None => 1000,
        }
    }

    /// Default integration density in steps per unit lambda.
    pub fn default_steps_per_unit(&self) -> usize {
        match self.floquet_ratio() {
            Some(ratio) => ((FE_STEPS_PER_CYCLE as f64) * ratio).ceil() as usize,
            None => BASE_STEPS_PER_UNIT,
        }
    }
}

/// Binds a single-qubit control scheme, gate, and ramp into a protocol.
///
/// FE requires Floquet parameters. IE requires a known basis-path preset:
/// only the Hadamard gate (axis (1,0,1)/sqrt(2), minus phase pi) ships with
/// one.
pub fn build_protocol(
    kind: ProtocolKind,
    gate: &GateSpec,
    profile: RampProfile,
    fp: Option<FloquetParams>,
) -> Result<GateProtocol> {
    let target = gate.target_unitary().clone();
    match kind {
        ProtocolKind::Uncontrolled => Ok(GateProtocol {
            label: "uncontrolled",
            form: HForm::AuxBare { gate: gate.clone() },
            profile,
            layout: vec![2, 2],
            aux_site: Some(1),
            noise_sites: vec![1],
            target,
        }),
        ProtocolKind::Cd => Ok(GateProtocol {
            label: "cd",
            form: HForm::AuxCd { gate: gate.clone() },
            profile,
            layout: vec![2, 2],
            aux_site: Some(1),
            noise_sites: vec![1],
            target,
        }),
        ProtocolKind::Fe => {
            let fp = fp.ok_or(Error::InvalidParameter {
                name: "ratio",
                reason: "the periodic drive needs Floquet parameters".into(),
            })?;
            // Variational coefficient for this drive family, evaluated at a
            // generic sweep point; it is parameter-independent here.
            let coeffs = minimize_action(
                &aux_drive_h(gate.phase_minus(), 0.25),
                &aux_drive_dh(gate.phase_minus(), 0.25),
                1,
            )?;
            Ok(GateProtocol {
                label: "fe",
                form: HForm::AuxFe {
                    gate: gate.clone(),
                    fp,
                    coeffs,
                },
                profile,
                layout: vec![2, 2],
                aux_site: Some(1),
                noise_sites: vec![1],
                target,
            })
        }
        ProtocolKind::Ie => {
            let hadamard = GateSpec::hadamard();
            let axis_err: f64 = gate
                .axis()
                .iter()
                .zip(hadamard.axis().iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let phase_err = (gate.phase_minus().abs() - PI).abs();
            if axis_err > 1e-12 || phase_err > 1e-12 {
                return Err(Error::InvalidParameter {
                    name: "gate",
                    reason: "no inverse-engineered basis-path preset for this gate; \
                             only the Hadamard preset is available"
                        .into(),
                });
            }
            Ok(GateProtocol {
                label: "ie",
                form: HForm::DirectIe {
                    params: IeParams::hadamard(),
                },
                profile,
                layout: vec![2],
                aux_site: None,
                noise_sites: vec![0],
                target,
            })
        }
    }
}

/// Binds a controlled-Z control scheme and ramp into a protocol.
pub fn build_cz_protocol(kind: CzKind, profile: RampProfile) -> Result<GateProtocol> {
    let mut target = Operator::identity(4)?;
    target.set(3, 3, C64::new(-1.0, 0.0));
    match kind {
        CzKind::Cd => Ok(GateProtocol {
            label: "cd",
            form: HForm::CzCd,
            profile,
            layout: vec![2, 2, 2],
            aux_site: Some(2),
            noise_sites: vec![2],
            target,
        }),
        CzKind::Ie => Ok(GateProtocol {
            label: "ie",
            form: HForm::CzIe,
            profile,
            layout: vec![2, 2],
            aux_site: None,
            noise_sites: vec![0, 1],
            target,
        }),
    }
}
