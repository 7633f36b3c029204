/// Numerical thresholds used throughout the crate.
///
/// `rank_tol` is relative to the largest singular value of the matrix under
/// inspection. `residual_tol` is an absolute bound on tensorial residuals
/// evaluated at grid nodes. `prune_tol` drops polynomial coefficients that are
/// pure round-off. `fd_step` is the default step for finite-difference
/// cross-checks of exact derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub rank_tol: f64,
    pub residual_tol: f64,
    pub prune_tol: f64,
    pub fd_step: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            rank_tol: 1e-10,
            residual_tol: 1e-8,
            prune_tol: 1e-12,
            fd_step: 1e-4,
        }
    }
}
