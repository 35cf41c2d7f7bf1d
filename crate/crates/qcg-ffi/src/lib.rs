//! C ABI for the gate-control library.
//!
//! The surface is a handle-based wrapper: build a protocol with
//! [`qcg_protocol_new`], query it with the `qcg_*` functions, release it
//! with [`qcg_protocol_free`]. Every fallible call returns a status code
//! and leaves a human-readable message for [`qcg_last_error_message`];
//! numerical results are written through out-pointers only on success.
//!
//! The committed header `include/qcg.h` mirrors this file; rebuild it with
//! `cargo build -p qcg-ffi --features headers`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;

use qcg::dynamics::{propagate, reduce_trajectory, EvolutionSpec, NoiseSpec};
use qcg::hamiltonians::{
    build_protocol, FloquetHarmonic, FloquetParams, GateProtocol, GateSpec, ProtocolKind,
};
use qcg::linalg::DensityMatrix;
use qcg::metrics::{cost, final_infidelity, NormKind, ProbeSet};
use qcg::ramps::{RampKind, RampProfile};

/// Success.
pub const QCG_OK: c_int = 0;
/// A required pointer argument was null.
pub const QCG_ERR_NULL: c_int = -1;
/// An argument was outside its valid range or unparseable.
pub const QCG_ERR_INVALID: c_int = -2;
/// The computation itself failed.
pub const QCG_ERR_NUMERICAL: c_int = -3;

/// Samples per Bloch trajectory returned by [`qcg_bloch_path`].
pub const QCG_BLOCH_SAMPLES: usize = 201;

/// Opaque protocol handle.
pub struct QcgProtocol {
    inner: GateProtocol,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn clear_error() {
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::default();
    });
}

/// Message describing the most recent failure on this thread, empty after
/// a success. The pointer stays valid until the next `qcg_*` call on the
/// same thread.
#[no_mangle]
pub extern "C" fn qcg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qcg_version() -> *const c_char {
    static VERSION: OnceLock<CString> = OnceLock::new();
    VERSION
        .get_or_init(|| CString::new(qcg::VERSION).expect("version has no NUL"))
        .as_ptr()
}

/// Reads a C string argument; records an error and returns `None` when the
/// pointer is null or not UTF-8.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated string.
unsafe fn read_str<'a>(name: &str, ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        set_error(&format!("{name} is null"));
        return None;
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Some(s),
        Err(_) => {
            set_error(&format!("{name} is not valid UTF-8"));
            None
        }
    }
}

fn run_guarded<F: FnOnce() -> Result<(), (c_int, String)>>(body: F) -> c_int {
    clear_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => QCG_OK,
        Ok(Err((code, message))) => {
            set_error(&message);
            code
        }
        Err(_) => {
            set_error("internal panic");
            QCG_ERR_NUMERICAL
        }
    }
}

/// Builds a protocol handle.
///
/// `kind` is one of "cd", "fe", "ie", "uncontrolled"; `ramp` is one of
/// "linear", "polynomial", "sinusoidal"; `tau` is the gate duration;
/// `ratio` is the drive frequency ratio, used only by the "fe" kind
/// (pass 0 otherwise). Returns null on failure with the reason available
/// from [`qcg_last_error_message`]. Free the handle with
/// [`qcg_protocol_free`].
///
/// # Safety
/// `kind` and `ramp` must be null or NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn qcg_protocol_new(
    kind: *const c_char,
    ramp: *const c_char,
    tau: f64,
    ratio: f64,
) -> *mut QcgProtocol {
    clear_error();
    let Some(kind) = read_str("kind", kind) else {
        return std::ptr::null_mut();
    };
    let Some(ramp) = read_str("ramp", ramp) else {
        return std::ptr::null_mut();
    };
    let built = catch_unwind(|| -> Result<GateProtocol, qcg::Error> {
        let kind: ProtocolKind = kind.parse()?;
        let ramp: RampKind = ramp.parse()?;
        let profile = RampProfile::new(ramp, tau)?;
        let fp = match kind {
            ProtocolKind::Fe => Some(FloquetParams::new(tau, ratio, FloquetHarmonic::Odd)?),
            _ => None,
        };
        build_protocol(kind, &GateSpec::hadamard(), profile, fp)
    });
    match built {
        Ok(Ok(protocol)) => Box::into_raw(Box::new(QcgProtocol { inner: protocol })),
        Ok(Err(err)) => {
            set_error(&err.to_string());
            std::ptr::null_mut()
        }
        Err(_) => {
            set_error("internal panic");
            std::ptr::null_mut()
        }
    }
}

/// Releases a protocol handle. Null is a no-op.
///
/// # Safety
/// `protocol` must be null or a pointer from [`qcg_protocol_new`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn qcg_protocol_free(protocol: *mut QcgProtocol) {
    if !protocol.is_null() {
        drop(Box::from_raw(protocol));
    }
}

/// Total Hilbert-space dimension of the protocol, or 0 if the handle is
/// null.
///
/// # Safety
/// `protocol` must be null or a live handle from [`qcg_protocol_new`].
#[no_mangle]
pub unsafe extern "C" fn qcg_protocol_dim(protocol: *const QcgProtocol) -> c_int {
    match protocol.as_ref() {
        Some(p) => p.inner.dim() as c_int,
        None => 0,
    }
}

unsafe fn evolve_spec(
    protocol: &GateProtocol,
    gamma: f64,
) -> Result<EvolutionSpec, (c_int, String)> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err((
            QCG_ERR_INVALID,
            format!("gamma must be finite and nonnegative, got {gamma}"),
        ));
    }
    let noise = if gamma > 0.0 {
        Some(
            NoiseSpec::for_protocol(gamma, protocol)
                .map_err(|e| (QCG_ERR_INVALID, e.to_string()))?,
        )
    } else {
        None
    };
    let tau = protocol.profile().tau();
    EvolutionSpec::with_default_steps(protocol.clone(), tau, noise)
        .map_err(|e| (QCG_ERR_INVALID, e.to_string()))
}

/// Final averaged gate infidelity of the protocol, optionally under
/// dephasing at rate `gamma` on the protocol's driven sites. Writes the
/// result to `out` and returns a status code.
///
/// # Safety
/// `protocol` must be null or a live handle; `out` must be null or point
/// to a writable double.
#[no_mangle]
pub unsafe extern "C" fn qcg_gate_infidelity(
    protocol: *const QcgProtocol,
    gamma: f64,
    out: *mut f64,
) -> c_int {
    let (Some(handle), Some(out)) = (protocol.as_ref(), out.as_mut()) else {
        set_error("protocol or out is null");
        return QCG_ERR_NULL;
    };
    run_guarded(|| {
        let spec = evolve_spec(&handle.inner, gamma)?;
        let probes = ProbeSet::standard();
        let j = final_infidelity(&spec, &probes)
            .map_err(|e| (QCG_ERR_NUMERICAL, e.to_string()))?;
        *out = j;
        Ok(())
    })
}

/// Time-averaged Hamiltonian norm of the protocol. `norm` is one of
/// "trace", "operator", "frobenius". Writes the result to `out` and
/// returns a status code.
///
/// # Safety
/// `protocol` must be null or a live handle; `norm` null or a
/// NUL-terminated string; `out` null or a writable double.
#[no_mangle]
pub unsafe extern "C" fn qcg_cost(
    protocol: *const QcgProtocol,
    norm: *const c_char,
    out: *mut f64,
) -> c_int {
    let (Some(handle), Some(out)) = (protocol.as_ref(), out.as_mut()) else {
        set_error("protocol or out is null");
        return QCG_ERR_NULL;
    };
    let Some(norm) = read_str("norm", norm) else {
        return QCG_ERR_NULL;
    };
    let norm: NormKind = match norm.parse() {
        Ok(n) => n,
        Err(err) => {
            set_error(&err.to_string());
            return QCG_ERR_INVALID;
        }
    };
    run_guarded(|| {
        let report =
            cost(&handle.inner, norm).map_err(|e| (QCG_ERR_NUMERICAL, e.to_string()))?;
        *out = report.cost;
        Ok(())
    })
}

/// Bloch trajectory of one tracked qubit from the |+> computational start,
/// optionally under dephasing at rate `gamma`.
///
/// Writes [`QCG_BLOCH_SAMPLES`] (x, y, z) triples to `out_xyz`, which must
/// hold at least `3 * QCG_BLOCH_SAMPLES` doubles (`len` is its capacity in
/// doubles). `qubit` indexes the protocol layout: 0 is the computational
/// qubit, the auxiliary (when present) is last.
///
/// # Safety
/// `protocol` must be null or a live handle; `out_xyz` null or the start
/// of `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qcg_bloch_path(
    protocol: *const QcgProtocol,
    gamma: f64,
    qubit: usize,
    out_xyz: *mut f64,
    len: usize,
) -> c_int {
    let Some(handle) = protocol.as_ref() else {
        set_error("protocol is null");
        return QCG_ERR_NULL;
    };
    if out_xyz.is_null() {
        set_error("out_xyz is null");
        return QCG_ERR_NULL;
    }
    let needed = 3 * QCG_BLOCH_SAMPLES;
    if len < needed {
        set_error(&format!("out_xyz holds {len} doubles, need {needed}"));
        return QCG_ERR_INVALID;
    }
    let sites = handle.inner.layout().len();
    if qubit >= sites {
        set_error(&format!("qubit {qubit} outside the {sites}-site layout"));
        return QCG_ERR_INVALID;
    }
    let out = std::slice::from_raw_parts_mut(out_xyz, needed);
    run_guarded(|| {
        let spec = evolve_spec(&handle.inner, gamma)?;
        let rho0 = spec
            .protocol()
            .embed_probe(&DensityMatrix::plus_qubit())
            .map_err(|e| (QCG_ERR_INVALID, e.to_string()))?;
        let traj = propagate(&spec, &rho0).map_err(|e| (QCG_ERR_NUMERICAL, e.to_string()))?;
        let layout = spec.protocol().layout().to_vec();
        let series = reduce_trajectory(&traj, &layout)
            .map_err(|e| (QCG_ERR_NUMERICAL, e.to_string()))?;
        let path = &series[qubit];
        debug_assert_eq!(path.len(), QCG_BLOCH_SAMPLES);
        for (k, b) in path.iter().enumerate() {
            out[3 * k] = b.x;
            out[3 * k + 1] = b.y;
            out[3 * k + 2] = b.z;
        }
        Ok(())
    })
}
