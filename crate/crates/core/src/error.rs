use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors shared across the crate. Every fallible operation reports through
/// this enum so callers (and the CLI) can map failures to exit codes uniformly.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix has non-finite entries")]
    NonFiniteMatrix,

    #[error("non-finite value at chart {chart} coordinate {coord}")]
    NonFinite { chart: &'static str, coord: String },

    #[error("expected rank {expected}, found numerical rank {found}")]
    RankDeficient { expected: usize, found: usize },

    #[error("rank decision ambiguous: singular value {value:.3e} within a factor 10 of cutoff {cutoff:.3e}")]
    RankAmbiguous { value: f64, cutoff: f64 },

    #[error("shape mismatch: {context} (got {rows}x{cols})")]
    ShapeMismatch {
        context: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("projector check failed: {context} (residual {residual:.3e})")]
    NotProjector { context: &'static str, residual: f64 },

    #[error("frames {i} and {j} are not pointwise orthogonal (overlap {overlap:.3e})")]
    NotOrthogonal { i: usize, j: usize, overlap: f64 },

    #[error("flag is not complete: ranks sum to {total_rank} in ambient dimension {ambient}")]
    NotComplete { total_rank: usize, ambient: usize },

    #[error("invalid index subset: {reason}")]
    BadSigma { reason: String },

    #[error("frame drops rank at {count} unregistered sample points (worst sigma_min {worst:.3e})")]
    RankDrop { count: usize, worst: f64 },

    #[error("frame column {col} vanishes identically")]
    ZeroColumn { col: usize },

    #[error("interpolation sampling is rank deficient: {context}")]
    RankDeficientSampling { context: String },

    #[error("section dimension profile is inconsistent: {context}")]
    ProfileInconsistent { context: String },

    #[error("matrix numerically singular: {context} (margin {margin:.3e})")]
    Singular { context: &'static str, margin: f64 },

    #[error("factor reconstruction failed: {context} (error {error:.3e})")]
    ReconstructionFailed { context: String, error: f64 },

    #[error("flag field is not J2-sigma holomorphic: residual {residual:.3e} > {tol:.3e}")]
    NotJ2Holomorphic { residual: f64, tol: f64 },

    #[error("bundle is not harmonic: residual {residual:.3e} > {tol:.3e}")]
    NotHarmonic { residual: f64, tol: f64 },

    #[error("KM frame invalid: {reason}")]
    KmFrameInvalid { reason: String },

    #[error("lift verification failed: j2 residual {j2:.3e}, reconstruction {reconstruction:.3e} (tol {tol:.3e})")]
    LiftResidualExceeded {
        j2: f64,
        reconstruction: f64,
        tol: f64,
    },

    #[error("bundle already has length 0; nothing to reduce")]
    LengthNotPositive,

    #[error("no length-reducing move found: {candidates}")]
    NoReducingMove { candidates: String },

    #[error("subbundle containment failed: {context} (residual {residual:.3e})")]
    NotNested { context: &'static str, residual: f64 },

    #[error("derivative condition failed: d/dz sections of the inner bundle leave the outer bundle (residual {residual:.3e})")]
    DerivativeConditionFailed { residual: f64 },

    #[error("basis index {index} outside the truncated range -{neg_count}..=-1, 1..={pos_count}")]
    BadBasisIndex {
        index: i64,
        neg_count: usize,
        pos_count: usize,
    },
}
