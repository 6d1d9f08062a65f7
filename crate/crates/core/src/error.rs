use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its admissible range.
    #[error("{name} = {value} is out of range: {reason}")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("density matrix rejected: {0}")]
    InvalidState(String),

    #[error("correlation undefined for setting pair {pair} (settings {first_setting}..={last_setting}): zero total coincidences")]
    UndefinedCorrelation {
        pair: usize,
        first_setting: usize,
        last_setting: usize,
    },

    #[error("incomplete records: {0}")]
    IncompleteRecords(String),

    #[error("timestamp stream {label} is not sorted at index {index}")]
    UnsortedStream { label: String, index: usize },

    #[error("visibility fit failed: {0}")]
    FitFailure(String),

    #[error("behavior table rejected: {reason} (max deviation {deviation:e})")]
    InvalidBehavior { reason: String, deviation: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::Domain {
            name,
            value,
            reason,
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether this error stems from the user-supplied configuration rather
    /// than from measurement data or the environment.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Domain { .. } | Error::InvalidState(_)
        )
    }
}

pub(crate) fn ensure_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
) -> Result<()> {
    if value.is_finite() && value >= lo && value <= hi {
        Ok(())
    } else {
        Err(Error::domain(name, value, "outside the admissible interval"))
    }
}

pub(crate) fn ensure_nonneg(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::domain(name, value, "must be finite and non-negative"))
    }
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(name, value, "must be finite and positive"))
    }
}
