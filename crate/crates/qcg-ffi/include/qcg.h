/* C interface to the qcg gate-control library. Regenerate with `cargo build -p qcg-ffi --features headers`. */

#ifndef QCG_H
#define QCG_H

/* This file is generated by cbindgen; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Success.
#define QCG_OK 0

// A required pointer argument was null.
#define QCG_ERR_NULL -1

// An argument was outside its valid range or unparseable.
#define QCG_ERR_INVALID -2

// The computation itself failed.
#define QCG_ERR_NUMERICAL -3

// Samples per Bloch trajectory returned by [`qcg_bloch_path`].
#define QCG_BLOCH_SAMPLES 201

// Opaque protocol handle.
typedef struct QcgProtocol QcgProtocol;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread, empty after
// a success. The pointer stays valid until the next `qcg_*` call on the
// same thread.
const char *qcg_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *qcg_version(void);

// Builds a protocol handle.
//
// `kind` is one of "cd", "fe", "ie", "uncontrolled"; `ramp` is one of
// "linear", "polynomial", "sinusoidal"; `tau` is the gate duration;
// `ratio` is the drive frequency ratio, used only by the "fe" kind
// (pass 0 otherwise). Returns null on failure with the reason available
// from [`qcg_last_error_message`]. Free the handle with
// [`qcg_protocol_free`].
//
// # Safety
// `kind` and `ramp` must be null or NUL-terminated strings.
struct QcgProtocol *qcg_protocol_new(const char *kind, const char *ramp, double tau, double ratio);

// Releases a protocol handle. Null is a no-op.
//
// # Safety
// `protocol` must be null or a pointer from [`qcg_protocol_new`] that has
// not been freed yet.
void qcg_protocol_free(struct QcgProtocol *protocol);

// Total Hilbert-space dimension of the protocol, or 0 if the handle is
// null.
//
// # Safety
// `protocol` must be null or a live handle from [`qcg_protocol_new`].
int qcg_protocol_dim(const struct QcgProtocol *protocol);

// Final averaged gate infidelity of the protocol, optionally under
// dephasing at rate `gamma` on the protocol's driven sites. Writes the
// result to `out` and returns a status code.
//
// # Safety
// `protocol` must be null or a live handle; `out` must be null or point
// to a writable double.
int qcg_gate_infidelity(const struct QcgProtocol *protocol, double gamma, double *out);

// Time-averaged Hamiltonian norm of the protocol. `norm` is one of
// "trace", "operator", "frobenius". Writes the result to `out` and
// returns a status code.
//
// # Safety
// `protocol` must be null or a live handle; `norm` null or a
// NUL-terminated string; `out` null or a writable double.
int qcg_cost(const struct QcgProtocol *protocol, const char *norm, double *out);

// Bloch trajectory of one tracked qubit from the |+> computational start,
// optionally under dephasing at rate `gamma`.
//
// Writes [`QCG_BLOCH_SAMPLES`] (x, y, z) triples to `out_xyz`, which must
// hold at least `3 * QCG_BLOCH_SAMPLES` doubles (`len` is its capacity in
// doubles). `qubit` indexes the protocol layout: 0 is the computational
// qubit, the auxiliary (when present) is last.
//
// # Safety
// `protocol` must be null or a live handle; `out_xyz` null or the start
// of `len` writable doubles.
int qcg_bloch_path(const struct QcgProtocol *protocol,
                   double gamma,
                   size_t qubit,
                   double *out_xyz,
                   size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QCG_H */
