use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "wavelength {wavelength_um:.4} um is outside the valid interval [{min_um}, {max_um}] um of {source_label}"
    )]
    WavelengthOutOfRange {
        wavelength_um: f64,
        min_um: f64,
        max_um: f64,
        source_label: String,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no phase-matching solution: {0}")]
    NoSolution(String),

    #[error("grid too coarse: {samples_per_feature:.2} samples across a {feature_um:.2} um feature (need at least 2)")]
    Resolution {
        samples_per_feature: f64,
        feature_um: f64,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("correlation undefined: the map has no weight")]
    UndefinedCorrelation,

    #[error("degenerate distribution: zero variance along the {0} axis")]
    DegenerateDistribution(&'static str),

    #[error("bootstrap skipped {skipped} of {total} resamples as degenerate (limit 1%)")]
    TooManyDegenerateResamples { skipped: usize, total: usize },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
