use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite coordinate")]
    NonFiniteCoordinate,
    #[error("mirror map undefined on diagonal")]
    MirrorMapOnDiagonal,
    #[error("arclength out of range: s={s}, geodesic length={len}")]
    ArclengthOutOfRange { s: f64, len: f64 },
    #[error("grid resolution must be a power of two and at least 8, got {0}")]
    BadGridResolution(usize),
    #[error("dt exceeds CFL bound: dt={dt}, bound={bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("solver diverged at t={0}")]
    SolverDiverged(f64),
    #[error("field evolution implemented for flat reference only")]
    NonFlatEvolution,
    #[error("time out of range: t={t}, solution covers [0, {t_max}]")]
    TimeOutOfRange { t: f64, t_max: f64 },
    #[error("no snapshot saved at t={0}")]
    SnapshotNotSaved(f64),
    #[error("barrier escaped to -infinity")]
    BarrierEscaped,
    #[error("area normalization violated: need max p0 >= 0 >= min p0")]
    AreaNormalizationViolated,
    #[error("barrier parameter out of range: {0}")]
    BadBarrierParams(String),
    #[error("conformal exponent blow-up")]
    ConformalBlowUp,
    #[error("Jacobi parameter out of range: {0}")]
    BadJacobiSpec(String),
    #[error("insufficient samples: got {got}, need {need}")]
    InsufficientSamples { got: usize, need: usize },
    #[error("fewer than {need} usable points for fitting, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("parameter domain violation: {0}")]
    DomainError(String),
    #[error("config error at {place}: {msg}")]
    Config { place: String, msg: String },
    #[error("unknown experiment: {0}")]
    UnknownExperiment(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed field file: {0}")]
    MalformedField(String),
}

pub type Result<T> = std::result::Result<T, Error>;
