use thiserror::Error;

/// Crate-wide error type. Variant names follow the failure modes of the
/// individual operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported prime {0}: p must be an odd prime")]
    UnsupportedPrime(u64),
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("zero argument not allowed")]
    ZeroArgument,
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u64, u64),
    #[error("coordinate mismatch: {0}")]
    CoordinateMismatch(String),
    #[error("measure kind mismatch: {0}")]
    KindMismatch(String),
    #[error("anchor collision after shift: {0}")]
    AnchorCollision(String),
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),
    #[error("step level exceeds conductor bound: level {level} > bound {bound}")]
    LevelExceedsBound { level: u32, bound: u32 },
    #[error("entry is not rational / not representable: {0}")]
    NonRationalEntry(String),
    #[error("pole on the contour without a germ interpretation: {0}")]
    PoleOnContour(String),
    #[error("nonconvergent tail: {0}")]
    NonconvergentTail(String),
    #[error("transfer params inconsistent with input coordinate: {0}")]
    ParamsInconsistent(String),
    #[error("unbounded support: {0}")]
    UnboundedSupport(String),
    #[error("nonfactorizable input: {0}")]
    NonfactorizableInput(String),
    #[error("instance too large: {0}")]
    InstanceTooLarge(String),
    #[error("ill-conditioned germ fit: {0}")]
    IllConditionedFit(String),
    #[error("window too deep for precision: {0}")]
    WindowTooDeep(String),
    #[error("enumeration depth exceeded: {0}")]
    DepthExceeded(String),
    #[error("singular point requested without germ mode: {0}")]
    SingularPointWithoutGermMode(String),
    #[error("invalid Levi subset: {0}")]
    InvalidSubset(String),
    #[error("zero spherical root")]
    ZeroRoot,
    #[error("row consistency failure: {0}")]
    ConsistencyFailure(String),
    #[error("underived row: {0}")]
    UnderivedRow(String),
    #[error("table mismatch: {0}")]
    MismatchReport(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
