use thiserror::Error;

/// Errors raised anywhere in the simulator.
///
/// `Config` variants map to exit code 2 in the command-line tool, everything
/// else to exit code 3.
#[derive(Debug, Error)]
pub enum QcsError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse scenario {path}: {message}")]
    Parse { path: String, message: String },

    #[error("satellite index {index} out of range for orbit with {count} satellites")]
    SatelliteIndex { index: usize, count: usize },

    #[error("traces do not share a time grid: {0}")]
    GridMismatch(String),

    #[error("no correlation peak: {0}")]
    NoPeak(String),

    #[error("empty shadow: cut-off {cutoff} ebit/s is not reached at zenith (max {zenith_rate:.3} ebit/s)")]
    EmptyShadow { cutoff: f64, zenith_rate: f64 },

    #[error("unknown station {0}")]
    UnknownStation(String),

    #[error("malformed timestamp dump: {0}")]
    Dump(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl QcsError {
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            QcsError::Config(_) | QcsError::Parse { .. } | QcsError::UnknownStation(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, QcsError>;
