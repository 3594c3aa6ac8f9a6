use thiserror::Error;

/// Errors produced by the transform algebra, the molecular pipeline, and the
/// Fock/phase-space simulators.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not unitary (max |U\u{2020}U - I| = {residual:.3e}, tol {tol:.1e})")]
    NonUnitary { residual: f64, tol: f64 },

    #[error(
        "Bogoliubov constraints violated (|YY\u{2020}-XX\u{2020}-I| = {hyperbolic:.3e}, \
         |XY\u{1d57}-YX\u{1d57}| = {symmetric:.3e}, tol {tol:.1e})"
    )]
    ConstraintViolation {
        hyperbolic: f64,
        symmetric: f64,
        tol: f64,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("displacement relocation system is singular")]
    SingularSystem,

    #[error("mode frequency must be strictly positive, got {0} cm^-1")]
    InvalidFrequency(f64),

    #[error("temperature must be non-negative, got {0} K")]
    InvalidTemperature(f64),

    #[error("Duschinsky matrix is not orthogonal (max residual {0:.3e})")]
    NonOrthogonal(f64),

    #[error("mode-mixing matrix J is numerically singular (condition number {0:.3e})")]
    SingularJ(f64),

    #[error("captured probability {achieved:.6} below target {target:.6}; raise n_max or lower target_mass")]
    InsufficientTruncation { achieved: f64, target: f64 },

    #[error("photon-number block with {photons} total photons exceeds limit {limit}")]
    PhotonBlockLimit { photons: usize, limit: usize },

    #[error("transition table has no entries with positive probability")]
    EmptyTable,

    #[error("covariance matrix V + I is numerically singular")]
    SingularCovariance,

    #[error("Gaussian state is not physical (min symplectic eigenvalue {0:.6})")]
    Unphysical(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
