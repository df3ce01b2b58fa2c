use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{message} at line {line}")]
    Parse {
        line: u64,
        field: String,
        message: String,
    },

    #[error("cannot read `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("invalid taxonomy: {0}")]
    Taxonomy(String),

    #[error("unknown domain id `{0}`")]
    UnknownDomain(String),

    #[error("unknown country `{0}`")]
    UnknownCountry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("year {0} is not present in the investment tensor")]
    MissingYear(i32),

    #[error("no investment data for year {0}")]
    NoInvestment(i32),

    #[error("matrix is not symmetric: entries ({row}, {col}) differ by {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("eigensolver failed to converge within {iterations} iterations (worst residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("degenerate spectrum: eigenvalue {index} = {value} is not simple (neighbour gap {gap:e})")]
    DegenerateSpectrum { index: usize, value: f64, gap: f64 },

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("country `{country}` is already specialized in `{domain}`")]
    AlreadySpecialized { country: String, domain: String },

    #[error("invalid bloc: {0}")]
    InvalidBloc(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(line: u64, field: &str, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            field: field.to_owned(),
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end: 2 for bad input or
    /// configuration, 1 for failures inside the computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::Csv(_)
            | Error::Taxonomy(_)
            | Error::UnknownDomain(_)
            | Error::UnknownCountry(_)
            | Error::InvalidParameter(_)
            | Error::MissingYear(_)
            | Error::InvalidBloc(_) => 2,
            Error::NoInvestment(_)
            | Error::NotSymmetric { .. }
            | Error::Convergence { .. }
            | Error::DegenerateSpectrum { .. }
            | Error::Insufficient(_)
            | Error::AlreadySpecialized { .. } => 1,
        }
    }
}
