use thiserror::Error;

/// Invalid parameters in a distribution, model or run configuration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{key}: {message}")]
    InvalidValue { key: String, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error("malformed config: {0}")]
    Malformed(String),
}

impl ConfigError {
    pub fn invalid(key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::InvalidValue {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Prefix the key path of an `InvalidValue` error, e.g. `std` -> `eps.std`.
    pub fn nested(self, parent: &str) -> Self {
        match self {
            ConfigError::InvalidValue { key, message } => ConfigError::InvalidValue {
                key: format!("{parent}.{key}"),
                message,
            },
            ConfigError::UnknownKey(k) => ConfigError::UnknownKey(format!("{parent}.{k}")),
            ConfigError::MissingKey(k) => ConfigError::MissingKey(format!("{parent}.{k}")),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("{0}")]
    OutOfDomain(String),
}

/// Failures of a running model path.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("price floor breach at t={t}: price {price} is not positive")]
    PriceFloorBreach { t: usize, price: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("series is degenerate: {0}")]
    Degenerate(String),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("{0}")]
    Domain(String),
    #[error("tail too small: {n_tail} points above cutoff, need at least {min}")]
    TailTooSmall { n_tail: usize, min: usize },
    #[error("no Kesten regime: {0}")]
    NoKestenRegime(String),
    #[error("price at index {index} is not positive: {value}")]
    NonPositivePrice { index: usize, value: f64 },
    #[error("root bracketing failed: {0}")]
    Bracketing(String),
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("row {row}: cannot parse `{value}` as a number")]
    NonNumeric { row: usize, value: String },
    #[error("row {row}: price {value} is not positive")]
    NonPositive { row: usize, value: f64 },
    #[error("need at least {need} values, got {got}")]
    TooShort { need: usize, got: usize },
    #[error(transparent)]
    Config(#[from] ConfigError),
}
