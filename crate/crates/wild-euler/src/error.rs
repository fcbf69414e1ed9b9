use thiserror::Error;

/// Crate-wide error type. Variants mirror the failure modes of the
/// individual subsystems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field data: {0}")]
    InvalidField(String),
    #[error("vector field has a nonzero swirl component")]
    NotSwirlFree,
    #[error("grid too coarse: need at least 4 points per differentiated axis")]
    GridTooCoarse,
    #[error("unknown weak form tag `{0}`")]
    UnknownWeakForm(String),
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("density is zero or negative where a division is required")]
    DegenerateDensity,
    #[error("negative chi is outside the admissible range")]
    NegativeChi,
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("ODE integration produced a non-finite state")]
    IntegrationDiverged,
    #[error("chi does not exceed the threshold at t = 0; no feasibility window")]
    NoWindow,
    #[error("state difference is not in the wave cone")]
    NotInCone,
    #[error("wave-cone kernel is rank deficient in an ambiguous way")]
    DegenerateDirection,
    #[error("fan speed too large: lambda * R must stay below 1")]
    FanTooFast,
    #[error("grid resolves no interior fan cells at the requested time")]
    FanUnresolved,
    #[error("no grid point with positive hull margin and positive gap remains")]
    Saturated,
    #[error("perturbation rejected: hull margin or gap decrease could not be preserved")]
    StepRejected,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
