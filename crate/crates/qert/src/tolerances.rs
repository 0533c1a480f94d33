//! Numerical tolerances used by validation routines.

/// Validation tolerances for operators and states.
///
/// The defaults leave ample double-precision headroom for dense matrices up
/// to dimension ~1024. All of them can be overridden per call site.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Maximum absolute entry of `A - A†` for a matrix to count as Hermitian.
    pub herm: f64,
    /// Maximum max-norm defect of `Σ M†M - I` (or `U†U - I`).
    pub norm: f64,
    /// Eigenvalues of a state may be as low as `-psd`.
    pub psd: f64,
    /// A state trace may exceed 1 by at most `tr`.
    pub tr: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: 1e-8,
            norm: 1e-8,
            psd: 1e-8,
            tr: 1e-8,
        }
    }
}
