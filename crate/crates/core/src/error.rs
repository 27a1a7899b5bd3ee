use thiserror::Error;

/// Errors raised by configuration checks and the processing chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("tau * B_h = {0} is not a positive even integer")]
    NonIntegerBinCount(f64),
    #[error("carrier {index} ({freq_hz} Hz) is off the B_h grid or outside the total band")]
    CarrierOffGrid { index: usize, freq_hz: f64 },
    #[error("carriers {0} and {1} occupy the same band")]
    DuplicateCarrier(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("target {index} is off the grid: {reason}")]
    TargetOffGrid { index: usize, reason: String },
    #[error("envelope bin {bin} fell below the floor and was lifted")]
    FloorViolation { bin: usize },
    #[error("band of transmitter {0} exceeds the global spectrum")]
    BandOverflow(usize),
    #[error("band of transmitter {0} is missing from the spectra")]
    MissingBand(usize),
    #[error("index out of range: {0}")]
    IndexOutOfRange(String),
    #[error("least-squares system is singular at iteration {iteration}")]
    SingularLs { iteration: usize },
    #[error("expected a {expected} waveform bank")]
    FamilyMismatch { expected: &'static str },
    #[error("cannot place {requested} targets: {reason}")]
    SceneTooDense { requested: usize, reason: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid experiment spec: {0}")]
    InvalidSpec(String),
    #[error("trial {trial} at sweep point {point}: {source}")]
    Trial {
        point: usize,
        trial: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("malformed tensor file: {0}")]
    TensorFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
