use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("basis is singular: |determinant| = {det:e} is below threshold")]
    SingularBasis { det: f64 },

    #[error("state is not normalized: norm^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("negative time t = {0}")]
    NegativeTime(f64),

    #[error("decay density is negative ({value:e}) at t = {t}")]
    NegativeDensity { t: f64, value: f64 },

    #[error("postselection never fires: transition probability integrates to {integral:e}")]
    ZeroPostselection { integral: f64 },

    #[error("postselected state is orthogonal to the preselected state")]
    OrthogonalPrePost,

    #[error("weak value undefined for degenerate masses (delta M = 0)")]
    DegenerateMass,

    #[error("postselection with |b_P| = 0 is singular")]
    SingularPostselection,

    #[error("ratio is indeterminate at k = 1, |b_P| = 0; use the x-parameterized limit")]
    IndeterminateAtOrigin,

    #[error("need at least 2 samples, got {n}")]
    InsufficientSamples { n: usize },

    #[error("cumulative distribution is not monotone: density dips to {value:e} at t = {t}")]
    NonMonotoneCdf { t: f64, value: f64 },
}

impl Error {
    /// Errors that come from the physics (as opposed to malformed input).
    pub fn is_domain(&self) -> bool {
        !matches!(
            self,
            Error::InvalidParams(_)
                | Error::NotNormalized { .. }
                | Error::NegativeTime(_)
                | Error::InsufficientSamples { .. }
        )
    }
}
