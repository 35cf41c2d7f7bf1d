//! Dense complex linear algebra for 2-, 4-, and 8-dimensional Hilbert spaces.
//!
//! Everything is double precision and heap-dense: the largest matrix is 8x8,
//! so there is nothing to gain from sparsity and everything to gain from
//! simple, auditable kernels. Hermitian eigendecomposition uses a cyclic
//! Jacobi scheme with an off-diagonal threshold of 1e-14, which keeps results
//! bit-reproducible across platforms.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::{Error, Result};

/// Double-precision complex scalar used throughout.
pub type C64 = Complex<f64>;

/// Dimensions accepted by [`Operator::new`].
pub const SUPPORTED_DIMS: [usize; 3] = [2, 4, 8];

/// Off-diagonal threshold at which the Jacobi sweep stops.
const JACOBI_THRESHOLD: f64 = 1e-14;

/// Maximum Jacobi sweeps before reporting non-convergence.
const JACOBI_MAX_SWEEPS: usize = 100;

/// Hermiticity tolerance for operators entering spectral routines.
const HERM_TOL: f64 = 1e-9;

const I: C64 = C64::new(0.0, 1.0);
const ONE: C64 = C64::new(1.0, 0.0);
const ZERO: C64 = C64::new(0.0, 0.0);

/// Dense complex square matrix over a 2-, 4-, or 8-dimensional space.
///
/// The universal carrier for Hamiltonians, unitaries, projectors, and raw
/// density-matrix arithmetic. Entries are row-major. Values are immutable
/// after construction; all arithmetic allocates fresh operators, which keeps
/// sharing across sweep workers free of synchronization.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    entries: Vec<C64>,
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator {}x{} [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let e = self.at(i, j);
                write!(f, "{:+.4}{:+.4}i ", e.re, e.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Operator {
    /// Builds an operator from row-major entries.
    ///
    /// Rejects dimensions outside {2, 4, 8} and entry buffers of the wrong
    /// length.
    pub fn new(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if !SUPPORTED_DIMS.contains(&dim) {
            return Err(Error::UnsupportedDimension { dim });
        }
        if entries.len() != dim * dim {
            return Err(Error::EntryCount {
                len: entries.len(),
                dim,
            });
        }
        Ok(Self { dim, entries })
    }

    /// The zero operator.
    pub fn zeros(dim: usize) -> Result<Self> {
        Self::new(dim, vec![ZERO; dim * dim])
    }

    /// The identity operator.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut op = Self::zeros(dim)?;
        for i in 0..dim {
            op.entries[i * dim + i] = ONE;
        }
        Ok(op)
    }

    /// Convenience constructor from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major entry slice.
    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    /// Entry at (row, col).
    #[inline]
    pub fn at(&self, row: usize, col: usize) -> C64 {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: C64) {
        self.entries[row * self.dim + col] = value;
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(i, j, self.at(j, i).conj());
            }
        }
        out
    }

    /// Matrix trace.
    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.at(i, i)).sum()
    }

    /// Largest entry magnitude; 0 for the zero operator.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|e| e.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermiticity, max |a_ij - conj(a_ji)|.
    pub fn hermiticity_residue(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let r = (self.at(i, j) - self.at(j, i).conj()).norm();
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Whether the operator is Hermitian within `tol`.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residue() <= tol
    }

    /// The Hermitian part (A + A†)/2. Projects away rounding residue.
    pub fn hermitized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = (self.at(i, j) + self.at(j, i).conj()) * 0.5;
                out.set(i, j, v);
            }
        }
        out
    }

    /// Scales every entry by a complex factor.
    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    /// Scales every entry by a real factor.
    pub fn scaled_re(&self, factor: f64) -> Self {
        self.scaled(C64::new(factor, 0.0))
    }

    /// Matrix product self * rhs.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n)?;
        for i in 0..n {
            for k in 0..n {
                let a = self.at(i, k);
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    let v = out.at(i, j) + a * rhs.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        Ok(out)
    }

    /// Frobenius norm sqrt(sum |a_ij|^2). Defined for any operator.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Eigendecomposition of a Hermitian operator.
    ///
    /// Returns eigenvalues in ascending order and the unitary whose columns
    /// are the matching eigenvectors, so that `self = V diag(w) V†`.
    /// Cyclic Jacobi with complex rotations; off-diagonal threshold 1e-14
    /// relative to the largest entry.
    pub fn eigh(&self) -> Result<(Vec<f64>, Operator)> {
        let residue = self.hermiticity_residue();
        if residue > HERM_TOL * (1.0 + self.max_abs()) {
            return Err(Error::NotHermitian { residue });
        }
        let n = self.dim;
        let mut a = self.hermitized();
        let mut v = Operator::identity(n)?;
        let scale = a.max_abs().max(1e-300);
        let stop = JACOBI_THRESHOLD * scale;

        let mut converged = false;
        let mut sweeps = 0;
        while sweeps < JACOBI_MAX_SWEEPS {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a.at(p, q).norm());
                }
            }
            if off <= stop {
                converged = true;
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.at(p, q);
                    let b = apq.norm();
                    if b <= stop * 1e-2 {
                        continue;
                    }
                    // Phase that makes the pivot real, then a real rotation.
                    let ph = apq / b;
                    let app = a.at(p, p).re;
                    let aqq = a.at(q, q).re;
                    let tau = (aqq - app) / (2.0 * b);
                    let t = if tau >= 0.0 {
                        1.0 / (tau + (1.0 + tau * tau).sqrt())
                    } else {
                        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // J[p][p] = c, J[p][q] = s, J[q][p] = -s conj(ph),
                    // J[q][q] = c conj(ph); apply A <- J† A J, V <- V J.
                    let (cc, ss) = (C64::new(c, 0.0), C64::new(s, 0.0));
                    let phc = ph.conj();
                    for i in 0..n {
                        let aip = a.at(i, p);
                        let aiq = a.at(i, q);
                        a.set(i, p, aip * cc - aiq * ss * phc);
                        a.set(i, q, aip * ss + aiq * cc * phc);
                    }
                    for j in 0..n {
                        let apj = a.at(p, j);
                        let aqj = a.at(q, j);
                        a.set(p, j, apj * cc - aqj * ss * ph);
                        a.set(q, j, apj * ss + aqj * cc * ph);
                    }
                    for i in 0..n {
                        let vip = v.at(i, p);
                        let viq = v.at(i, q);
                        v.set(i, p, vip * cc - viq * ss * phc);
                        v.set(i, q, vip * ss + viq * cc * phc);
                    }
                }
            }
            sweeps += 1;
        }
        if !converged {
            let mut off = 0.0f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    off = off.max(a.at(p, q).norm());
                }
            }
            if off > stop {
                return Err(Error::EigenNoConvergence {
                    sweeps: JACOBI_MAX_SWEEPS,
                    off,
                });
            }
        }

        let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.at(i, i).re, i)).collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("eigenvalues are finite"));
        let eigenvalues: Vec<f64> = pairs.iter().map(|&(w, _)| w).collect();
        let mut vectors = Operator::zeros(n)?;
        for (new_col, &(_, old_col)) in pairs.iter().enumerate() {
            for i in 0..n {
                vectors.set(i, new_col, v.at(i, old_col));
            }
        }
        Ok((eigenvalues, vectors))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim, "operator dimensions must match");
        Operator {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scaled_re(-1.0)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.matmul(rhs).expect("operator dimensions must match")
    }
}

/// Pauli sigma_x.
pub fn sigma_x() -> Operator {
    Operator::new(2, vec![ZERO, ONE, ONE, ZERO]).expect("static 2x2")
}

/// Pauli sigma_y.
pub fn sigma_y() -> Operator {
    Operator::new(2, vec![ZERO, -I, I, ZERO]).expect("static 2x2")
}

/// Pauli sigma_z.
pub fn sigma_z() -> Operator {
    Operator::from_real(2, &[1.0, 0.0, 0.0, -1.0]).expect("static 2x2")
}

/// 2x2 identity.
pub fn identity2() -> Operator {
    Operator::identity(2).expect("static 2x2")
}

/// Projector |0><0| on a single qubit.
pub fn ket0_projector() -> Operator {
    Operator::from_real(2, &[1.0, 0.0, 0.0, 0.0]).expect("static 2x2")
}

/// Projector |1><1| on a single qubit.
pub fn ket1_projector() -> Operator {
    Operator::from_real(2, &[0.0, 0.0, 0.0, 1.0]).expect("static 2x2")
}

/// Kronecker product a (x) b with (a(x)b)[i*db+k][j*db+l] = a[i][j] b[k][l].
///
/// The product dimension must stay within the supported maximum of 8.
pub fn tensor(a: &Operator, b: &Operator) -> Result<Operator> {
    let dim = a.dim() * b.dim();
    if dim > 8 {
        return Err(Error::DimensionOverflow { dim });
    }
    let (da, db) = (a.dim(), b.dim());
    let mut out = Operator::zeros(dim)?;
    for i in 0..da {
        for j in 0..da {
            let aij = a.at(i, j);
            if aij == ZERO {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out.set(i * db + k, j * db + l, aij * b.at(k, l));
                }
            }
        }
    }
    Ok(out)
}

/// Commutator ab - ba.
pub fn commutator(a: &Operator, b: &Operator) -> Result<Operator> {
    let ab = a.matmul(b)?;
    let ba = b.matmul(a)?;
    Ok(&ab - &ba)
}

/// Unitary exp(-i s h) of a Hermitian operator via eigendecomposition.
pub fn herm_exp(h: &Operator, s: f64) -> Result<Operator> {
    let (w, v) = h.eigh()?;
    let n = h.dim();
    // V diag(exp(-i s w)) V†
    let mut out = Operator::zeros(n)?;
    for i in 0..n {
        for j in 0..n {
            let mut acc = ZERO;
            for (k, &wk) in w.iter().enumerate() {
                let phase = C64::from_polar(1.0, -s * wk);
                acc += v.at(i, k) * phase * v.at(j, k).conj();
            }
            out.set(i, j, acc);
        }
    }
    Ok(out)
}

/// Trace norm of a Hermitian operator: sum of absolute eigenvalues.
pub fn trace_norm(h: &Operator) -> Result<f64> {
    let (w, _) = h.eigh()?;
    Ok(w.iter().map(|x| x.abs()).sum())
}

/// Operator norm of a Hermitian operator: largest absolute eigenvalue.
pub fn operator_norm(h: &Operator) -> Result<f64> {
    let (w, _) = h.eigh()?;
    Ok(w.iter().fold(0.0f64, |m, x| m.max(x.abs())))
}

/// Hermitian, unit-trace, positive operator: the evolved system state.
///
/// The validating constructor enforces |trace - 1| < 1e-9, Hermiticity to
/// 1e-9, and minimum eigenvalue >= -1e-8. Integrators construct states
/// through a crate-internal path with a relaxed positivity floor and report
/// the worst eigenvalue they saw.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

/// Trace tolerance for density matrices.
pub const DM_TRACE_TOL: f64 = 1e-9;
/// Hermiticity tolerance for density matrices.
pub const DM_HERM_TOL: f64 = 1e-9;
/// Positivity floor for density matrices (integrator tolerance).
pub const DM_EIG_FLOOR: f64 = -1e-8;

impl DensityMatrix {
    /// Validates and wraps an operator as a density matrix.
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_floor(op, DM_EIG_FLOOR)
    }

    /// Validating constructor with a caller-chosen positivity floor.
    pub(crate) fn with_floor(op: Operator, eig_floor: f64) -> Result<Self> {
        let tr = op.trace();
        if (tr - ONE).norm() >= DM_TRACE_TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("trace {} is not 1 within {:e}", tr, DM_TRACE_TOL),
            });
        }
        let residue = op.hermiticity_residue();
        if residue >= DM_HERM_TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("hermiticity residue {residue:e} exceeds {DM_HERM_TOL:e}"),
            });
        }
        let (w, _) = op.hermitized().eigh()?;
        let min_eig = w.first().copied().unwrap_or(0.0);
        if min_eig < eig_floor {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("minimum eigenvalue {min_eig:e} is below {eig_floor:e}"),
            });
        }
        Ok(Self { op })
    }

    /// Pure state |0><0| on a single qubit.
    pub fn ground_qubit() -> Self {
        Self {
            op: ket0_projector(),
        }
    }

    /// Pure state |1><1| on a single qubit.
    pub fn excited_qubit() -> Self {
        Self {
            op: ket1_projector(),
        }
    }

    /// Pure state |+><+| on a single qubit.
    pub fn plus_qubit() -> Self {
        Self {
            op: Operator::from_real(2, &[0.5, 0.5, 0.5, 0.5]).expect("static 2x2"),
        }
    }

    /// Pure state rho = |psi><psi| from a normalized state vector.
    pub fn from_state_vector(psi: &[C64]) -> Result<Self> {
        let dim = psi.len();
        let norm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() >= DM_TRACE_TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("state vector norm {norm} is not 1"),
            });
        }
        let mut op = Operator::zeros(dim)?;
        for i in 0..dim {
            for j in 0..dim {
                op.set(i, j, psi[i] * psi[j].conj());
            }
        }
        Ok(Self { op })
    }

    /// Reconstructs the 2x2 state (1 + x sx + y sy + z sz)/2 from Bloch
    /// components.
    pub fn from_bloch(b: &BlochVector) -> Self {
        let mut op = Operator::zeros(2).expect("static 2x2");
        op.set(0, 0, C64::new((1.0 + b.z) / 2.0, 0.0));
        op.set(1, 1, C64::new((1.0 - b.z) / 2.0, 0.0));
        op.set(0, 1, C64::new(b.x / 2.0, -b.y / 2.0));
        op.set(1, 0, C64::new(b.x / 2.0, b.y / 2.0));
        Self { op }
    }

    /// The wrapped operator.
    pub fn op(&self) -> &Operator {
        &self.op
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    /// Purity Re tr(rho^2); 1 for pure states, 1/dim for maximally mixed.
    pub fn purity(&self) -> f64 {
        let sq = self.op.matmul(&self.op).expect("same dim");
        sq.trace().re
    }

    pub(crate) fn from_op_unchecked(op: Operator) -> Self {
        Self { op }
    }
}

/// Single-qubit Bloch components (tr(rho sx), tr(rho sy), tr(rho sz)).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    /// Validates |r|^2 <= 1 + 1e-9 and each component in [-1, 1].
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let norm2 = x * x + y * y + z * z;
        if norm2 > 1.0 + 1e-9 || !norm2.is_finite() {
            return Err(Error::InvalidParameter {
                name: "bloch vector",
                reason: format!("squared length {norm2} exceeds 1"),
            });
        }
        Ok(Self { x, y, z })
    }

    /// Squared length.
    pub fn norm_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    /// Euclidean distance to another point.
    pub fn distance(&self, other: &Self) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Bloch components of a single-qubit density matrix.
///
/// Rejects dimensions other than 2 and imaginary residue above 1e-10.
pub fn bloch_vector(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: 2,
        });
    }
    let op = rho.op();
    let tx = op.at(0, 1) + op.at(1, 0);
    let ty = (op.at(0, 1) - op.at(1, 0)) * I;
    let tz = op.at(0, 0) - op.at(1, 1);
    let imag = tx.im.abs().max(ty.im.abs()).max(tz.im.abs());
    if imag >= 1e-10 {
        return Err(Error::InvalidDensityMatrix {
            reason: format!("Bloch components have imaginary residue {imag:e}"),
        });
    }
    BlochVector::new(tx.re, ty.re, tz.re)
}

fn check_layout(dim: usize, dims: &[usize]) -> Result<()> {
    let product: usize = dims.iter().product();
    if product != dim || dims.is_empty() {
        return Err(Error::BadLayout {
            dims: dims.to_vec(),
            dim,
        });
    }
    Ok(())
}

/// Traces out one factor of a tensor-product space, keeping the rest grouped.
///
/// `dims` lists the factor dimensions in tensor order; `traced` indexes the
/// factor to remove. Tracing B out of rho_A (x) rho_B returns rho_A exactly.
pub fn trace_out_factor(rho: &DensityMatrix, dims: &[usize], traced: usize) -> Result<DensityMatrix> {
    let op = trace_out_factor_op(rho.op(), dims, traced)?;
    Ok(DensityMatrix::from_op_unchecked(op))
}

pub(crate) fn trace_out_factor_op(op: &Operator, dims: &[usize], traced: usize) -> Result<Operator> {
    check_layout(op.dim(), dims)?;
    if traced >= dims.len() {
        return Err(Error::BadLayout {
            dims: dims.to_vec(),
            dim: op.dim(),
        });
    }
    // Split the index as (left, t, right) with strides computed from dims.
    let left: usize = dims[..traced].iter().product();
    let mid = dims[traced];
    let right: usize = dims[traced + 1..].iter().product();
    let out_dim = left * right;
    let mut out = Operator::zeros(out_dim)?;
    for il in 0..left {
        for ir in 0..right {
            for jl in 0..left {
                for jr in 0..right {
                    let mut acc = ZERO;
                    for k in 0..mid {
                        let row = (il * mid + k) * right + ir;
                        let col = (jl * mid + k) * right + jr;
                        acc += op.at(row, col);
                    }
                    out.set(il * right + ir, jl * right + jr, acc);
                }
            }
        }
    }
    Ok(out)
}

/// Reduces a multi-factor state to the single factor `keep`.
///
/// `dims` lists the factor dimensions in tensor order. All other factors are
/// traced out. Trace and Hermiticity are preserved exactly.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: usize) -> Result<DensityMatrix> {
    check_layout(rho.dim(), dims)?;
    if keep >= dims.len() {
        return Err(Error::BadLayout {
            dims: dims.to_vec(),
            dim: rho.dim(),
        });
    }
    let mut op = rho.op().clone();
    let mut live: Vec<usize> = dims.to_vec();
    let mut keep_pos = keep;
    while live.len() > 1 {
        let traced = if keep_pos == 0 { live.len() - 1 } else { 0 };
        op = trace_out_factor_op(&op, &live, traced)?;
        live.remove(traced);
        if traced < keep_pos {
            keep_pos -= 1;
        }
    }
    Ok(DensityMatrix::from_op_unchecked(op))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "expected {b}, got {a} (tol {tol})");
    }

    fn assert_op_close(a: &Operator, b: &Operator, tol: f64) {
        assert_eq!(a.dim(), b.dim());
        let worst = (a - b).max_abs();
        assert!(worst <= tol, "operators differ by {worst:e} (tol {tol:e})");
    }

    #[test]
    fn constructor_rejects_bad_dims() {
        assert!(matches!(
            Operator::zeros(3),
            Err(Error::UnsupportedDimension { dim: 3 })
        ));
        assert!(matches!(
            Operator::new(2, vec![ZERO; 3]),
            Err(Error::EntryCount { len: 3, dim: 2 })
        ));
    }

    #[test]
    fn pauli_algebra() {
        // [sz, sx] = 2i sy and [sx, sy] = 2i sz.
        let lhs = commutator(&sigma_z(), &sigma_x()).unwrap();
        assert_op_close(&lhs, &sigma_y().scaled(C64::new(0.0, 2.0)), 1e-15);
        let lhs = commutator(&sigma_x(), &sigma_y()).unwrap();
        assert_op_close(&lhs, &sigma_z().scaled(C64::new(0.0, 2.0)), 1e-15);
        // [H, H] = 0.
        let h = &sigma_x() + &sigma_z();
        assert_close(commutator(&h, &h).unwrap().max_abs(), 0.0, 1e-15);
    }

    #[test]
    fn tensor_products() {
        // 1 (x) sz on |01> has eigenvalue -1: entry (1,1) of the product.
        let op = tensor(&identity2(), &sigma_z()).unwrap();
        assert_close(op.at(1, 1).re, -1.0, 1e-15);
        // sz (x) 1 + 1 (x) sz has diagonal (2, 0, 0, -2).
        let sum = &tensor(&sigma_z(), &identity2()).unwrap() + &op;
        let diag: Vec<f64> = (0..4).map(|i| sum.at(i, i).re).collect();
        assert_eq!(diag, vec![2.0, 0.0, 0.0, -2.0]);
        // |1><1| (x) |1><1| = diag(0,0,0,1).
        let p11 = tensor(&ket1_projector(), &ket1_projector()).unwrap();
        for i in 0..4 {
            assert_close(p11.at(i, i).re, if i == 3 { 1.0 } else { 0.0 }, 1e-15);
        }
        // Dimension overflow is rejected.
        let op4 = Operator::identity(4).unwrap();
        assert!(matches!(
            tensor(&op4, &op4),
            Err(Error::DimensionOverflow { dim: 16 })
        ));
    }

    #[test]
    fn eigh_known_spectra() {
        let (w, v) = (&sigma_x() + &sigma_z()).eigh().unwrap();
        let s = 2.0f64.sqrt();
        assert_close(w[0], -s, 1e-14);
        assert_close(w[1], s, 1e-14);
        // Reconstruction V diag(w) V†.
        let mut recon = Operator::zeros(2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = ZERO;
                for k in 0..2 {
                    acc += v.at(i, k) * C64::new(w[k], 0.0) * v.at(j, k).conj();
                }
                recon.set(i, j, acc);
            }
        }
        assert_op_close(&recon, &(&sigma_x() + &sigma_z()), 1e-13);
    }

    #[test]
    fn eigh_complex_hermitian_8x8() {
        // Deterministic pseudo-random Hermitian matrix.
        let n = 8;
        let mut entries = vec![ZERO; n * n];
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
        };
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    C64::new(rand(), 0.0)
                } else {
                    C64::new(rand(), rand())
                };
                entries[i * n + j] = v;
                entries[j * n + i] = v.conj();
            }
        }
        let h = Operator::new(n, entries).unwrap();
        let (w, v) = h.eigh().unwrap();
        // Ascending order.
        for k in 1..n {
            assert!(w[k] >= w[k - 1]);
        }
        // Unitarity of V.
        let vthv = v.adjoint().matmul(&v).unwrap();
        assert_op_close(&vthv, &Operator::identity(n).unwrap(), 1e-12);
        // Residual ||H v_k - w_k v_k||.
        let hv = h.matmul(&v).unwrap();
        for k in 0..n {
            for i in 0..n {
                let r = (hv.at(i, k) - C64::new(w[k], 0.0) * v.at(i, k)).norm();
                assert!(r < 1e-12, "eigen residual {r:e}");
            }
        }
    }

    #[test]
    fn herm_exp_examples() {
        // exp(-i (pi/2) sz) = diag(e^{-i pi/2}, e^{i pi/2}).
        let u = herm_exp(&sigma_z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert!((u.at(0, 0) - C64::from_polar(1.0, -std::f64::consts::FRAC_PI_2)).norm() < 1e-14);
        assert!((u.at(1, 1) - C64::from_polar(1.0, std::f64::consts::FRAC_PI_2)).norm() < 1e-14);
        // Zero time gives the identity.
        let u = herm_exp(&(&sigma_x() + &sigma_z()), 0.0).unwrap();
        assert_op_close(&u, &Operator::identity(2).unwrap(), 1e-14);
        // exp(-i pi sx) = -1.
        let u = herm_exp(&sigma_x(), std::f64::consts::PI).unwrap();
        assert_op_close(&u, &Operator::identity(2).unwrap().scaled_re(-1.0), 1e-12);
        // Non-Hermitian input is rejected.
        let bad = Operator::new(2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        assert!(matches!(herm_exp(&bad, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn herm_exp_is_unitary() {
        let h = &(&sigma_x().scaled_re(0.7) + &sigma_y().scaled_re(-1.3)) + &sigma_z().scaled_re(2.1);
        for &s in &[0.1, 1.0, 10.0, -10.0] {
            let u = herm_exp(&h, s).unwrap();
            let err = (&u.adjoint().matmul(&u).unwrap() - &Operator::identity(2).unwrap()).max_abs();
            assert!(err < 1e-12, "unitarity residue {err:e} at s={s}");
        }
    }

    #[test]
    fn norms() {
        // trace_norm(sx + sz) = 2 sqrt(2); eigenvalues are +-sqrt(2).
        assert_close(
            trace_norm(&(&sigma_x() + &sigma_z())).unwrap(),
            2.0 * 2.0f64.sqrt(),
            1e-13,
        );
        assert_close(trace_norm(&identity2()).unwrap(), 2.0, 1e-14);
        assert_close(operator_norm(&(&sigma_x() + &sigma_z())).unwrap(), 2.0f64.sqrt(), 1e-13);
        assert_close(identity2().frobenius_norm(), 2.0f64.sqrt(), 1e-14);
    }

    #[test]
    fn trace_norm_unitary_invariance() {
        let h = &(&sigma_x().scaled_re(0.3) + &sigma_y().scaled_re(0.9)) + &sigma_z().scaled_re(-1.1);
        let u = herm_exp(&(&sigma_x() + &sigma_y().scaled_re(0.4)), 0.77).unwrap();
        let rotated = u.matmul(&h).unwrap().matmul(&u.adjoint()).unwrap();
        assert_close(trace_norm(&rotated).unwrap(), trace_norm(&h).unwrap(), 1e-10);
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(ket0_projector()).is_ok());
        // Trace 2 rejected.
        assert!(matches!(
            DensityMatrix::new(identity2()),
            Err(Error::InvalidDensityMatrix { .. })
        ));
        // Negative eigenvalue rejected.
        let neg = Operator::from_real(2, &[1.5, 0.0, 0.0, -0.5]).unwrap();
        assert!(matches!(
            DensityMatrix::new(neg),
            Err(Error::InvalidDensityMatrix { .. })
        ));
        // Purity of a pure state is 1; of the maximally mixed state 1/2.
        assert_close(DensityMatrix::plus_qubit().purity(), 1.0, 1e-15);
        let mixed = DensityMatrix::new(identity2().scaled_re(0.5)).unwrap();
        assert_close(mixed.purity(), 0.5, 1e-15);
    }

    #[test]
    fn bloch_vector_examples() {
        let b = bloch_vector(&DensityMatrix::plus_qubit()).unwrap();
        assert_close(b.x, 1.0, 1e-15);
        assert_close(b.y, 0.0, 1e-15);
        assert_close(b.z, 0.0, 1e-15);
        let mixed = DensityMatrix::new(identity2().scaled_re(0.5)).unwrap();
        let b = bloch_vector(&mixed).unwrap();
        assert_close(b.norm_sqr(), 0.0, 1e-15);
        let b = bloch_vector(&DensityMatrix::ground_qubit()).unwrap();
        assert_close(b.z, 1.0, 1e-15);
        // Dim 4 rejected.
        let rho4 = DensityMatrix::new(Operator::identity(4).unwrap().scaled_re(0.25)).unwrap();
        assert!(bloch_vector(&rho4).is_err());
    }

    #[test]
    fn bloch_roundtrip() {
        let b = BlochVector::new(0.3, -0.4, 0.5).unwrap();
        let rho = DensityMatrix::from_bloch(&b);
        let back = bloch_vector(&rho).unwrap();
        assert_close(back.x, b.x, 1e-12);
        assert_close(back.y, b.y, 1e-12);
        assert_close(back.z, b.z, 1e-12);
    }

    #[test]
    fn partial_trace_examples() {
        // Bell state reduces to the maximally mixed state.
        let inv = 1.0 / 2.0f64.sqrt();
        let bell = DensityMatrix::from_state_vector(&[
            C64::new(inv, 0.0),
            ZERO,
            ZERO,
            C64::new(inv, 0.0),
        ])
        .unwrap();
        let red = partial_trace(&bell, &[2, 2], 0).unwrap();
        assert!((&red.op().clone() - &identity2().scaled_re(0.5)).max_abs() < 1e-15);

        // Product state round-trips.
        let rho_a = DensityMatrix::plus_qubit();
        let prod_op = tensor(rho_a.op(), DensityMatrix::ground_qubit().op()).unwrap();
        let prod = DensityMatrix::new(prod_op).unwrap();
        let back = partial_trace(&prod, &[2, 2], 0).unwrap();
        assert!((&back.op().clone() - rho_a.op()).max_abs() < 1e-15);
        // Trace is preserved exactly.
        assert!((back.op().trace() - ONE).norm() < 1e-14);

        // Inconsistent dims are rejected.
        assert!(partial_trace(&prod, &[2, 4], 0).is_err());
        assert!(partial_trace(&prod, &[2, 2], 2).is_err());
    }

    #[test]
    fn trace_out_factor_three_qubits() {
        // (|0><0| (x) |+><+|) (x) |1><1|: tracing the last factor keeps the
        // first two grouped.
        let a = tensor(&ket0_projector(), DensityMatrix::plus_qubit().op()).unwrap();
        let full = tensor(&a, &ket1_projector()).unwrap();
        let rho = DensityMatrix::new(full).unwrap();
        let red = trace_out_factor(&rho, &[2, 2, 2], 2).unwrap();
        assert!((&red.op().clone() - &a).max_abs() < 1e-15);
        // Tracing the middle factor of the same state keeps factors 0 and 2.
        let red = trace_out_factor(&rho, &[2, 2, 2], 1).unwrap();
        let expect = tensor(&ket0_projector(), &ket1_projector()).unwrap();
        assert!((&red.op().clone() - &expect).max_abs() < 1e-15);
    }
}
