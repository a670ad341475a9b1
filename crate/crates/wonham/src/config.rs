//! Numerical tolerances, collected in one place.

/// Tolerances used across validation, subspace computation, and filtering.
///
/// Defaults are chosen for dense double-precision work at small state counts
/// (d up to a few dozen). Every operation that needs a tolerance reads it
/// from here, so a single override propagates everywhere.
#[derive(Debug, Clone, Copy)]
pub struct NumericsConfig {
    /// Probability vectors must sum to 1 within this after renormalization.
    pub prob_sum_tol: f64,
    /// Accepted deviation of rate-matrix row sums from zero at validation;
    /// the diagonal is then corrected so that A·1 = 0 holds to machine level.
    pub row_sum_tol: f64,
    /// Relative rank / membership tolerance for subspace computations.
    pub rank_tol: f64,
    /// Relative tolerance for null-space extraction via SVD.
    pub nullspace_tol: f64,
    /// Hurwitz margin factor: eigenvalues with real part above
    /// `-hurwitz_margin * ‖A‖∞` are treated as lying on the imaginary axis.
    pub hurwitz_margin: f64,
    /// Pairwise orthonormality tolerance for basis checks.
    pub ortho_tol: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            prob_sum_tol: 1e-12,
            row_sum_tol: 1e-9,
            rank_tol: 1e-8,
            nullspace_tol: 1e-10,
            hurwitz_margin: 1e-8,
            ortho_tol: 1e-10,
        }
    }
}
