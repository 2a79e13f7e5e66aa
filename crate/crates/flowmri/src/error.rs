use thiserror::Error;

/// Crate-wide error type. Variants map onto the failure modes of the
/// individual pipeline stages.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("mask has no exterior cells")]
    AllInterior,
    #[error("mask has no interior cells")]
    AllExterior,
    #[error("field has no zero level set")]
    NoInterface,
    #[error("sampling density unreachable: {0}")]
    DensityUnreachable(String),
    #[error("background region too small: {got} pixels, need {need}")]
    RegionTooSmall { got: usize, need: usize },
    #[error("no active pixels in region")]
    EmptyActiveRegion,
    #[error("empty region: {0}")]
    EmptyRegion(String),
    #[error("signal index {0} out of range (1..={1})")]
    IndexOutOfRange(usize, usize),
    #[error("nonlinear solver failed to converge: {0}")]
    NonConvergence(String),
    #[error("singular system: {0}")]
    SingularSystem(String),
    #[error("line search failed in stage {stage} after {halvings} halvings")]
    LineSearchFailure { stage: &'static str, halvings: usize },
    #[error("flow solver failed: {0}")]
    SolverFailure(String),
    #[error("segmentation collapsed to a single region")]
    SegmentationDegenerate,
    #[error("invalid geometry: {0}")]
    GeometryInvalid(String),
    #[error("sigma must be positive")]
    ZeroSigma,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("file format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
