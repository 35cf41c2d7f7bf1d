//! Crate-wide error type.

/// Errors produced by construction, algebra, propagation, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Hilbert-space dimension outside the supported set {2, 4, 8}.
    #[error("dimension {dim} is not supported (expected 2, 4, or 8)")]
    UnsupportedDimension { dim: usize },

    /// Entry buffer length does not match the declared square dimension.
    #[error("{len} entries do not fill a {dim}x{dim} matrix")]
    EntryCount { len: usize, dim: usize },

    /// Two operands have incompatible dimensions.
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    /// A tensor product would exceed the supported maximum dimension.
    #[error("tensor product dimension {dim} exceeds the supported maximum 8")]
    DimensionOverflow { dim: usize },

    /// An operation requiring a Hermitian operator received one that is not.
    #[error("operator is not Hermitian (residue {residue:.3e})")]
    NotHermitian { residue: f64 },

    /// A matrix failed the density-matrix invariants.
    #[error("not a density matrix: {reason}")]
    InvalidDensityMatrix { reason: String },

    /// The Jacobi eigensolver failed to reach its off-diagonal threshold.
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal {off:.3e})")]
    EigenNoConvergence { sweeps: usize, off: f64 },

    /// A spectral construction hit a (near-)degenerate spectrum.
    #[error("degenerate spectrum: smallest gap {gap:.3e} is below {min_gap:.3e}")]
    DegenerateSpectrum { gap: f64, min_gap: f64 },

    /// A linear solve met a singular coefficient matrix.
    #[error("singular linear system: {context}")]
    SingularSystem { context: String },

    /// A time argument was negative.
    #[error("negative time t = {t}")]
    NegativeTime { t: f64 },

    /// A constructor argument was out of range.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// The requested step count is below the density floor for the protocol.
    #[error("step count {given} is below the required minimum {required}")]
    StepDensity { given: usize, required: usize },

    /// The integrator detected a violated invariant mid-run.
    #[error("integration failure at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    /// Factor dimensions do not multiply to the operator dimension.
    #[error("factor dimensions {dims:?} do not match total dimension {dim}")]
    BadLayout { dims: Vec<usize>, dim: usize },

    /// A sweep row failed; carries enough context to identify the row.
    #[error("{scenario} row (protocol={protocol}, {param}={value}) failed: {source}")]
    Row {
        scenario: String,
        protocol: String,
        param: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    /// Configuration problem: unknown key, bad value, malformed file.
    #[error("config error: {message}")]
    Config { message: String },

    /// Output writer was handed nothing to write.
    #[error("empty record list: nothing to write")]
    EmptyRecords,

    /// Filesystem problem while reading config or writing output.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization problem.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
