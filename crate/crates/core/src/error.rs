use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("horizon cost needs exactly {expected} period costs, got {got}")]
    HorizonLength { expected: usize, got: usize },

    #[error("interval for step {0} is not pending (never emitted or already resolved)")]
    NotPending(usize),

    #[error("associated gain does not saturate at E = {errors}, t = {t} (bound {bound})")]
    NotAssociated { errors: u64, t: usize, bound: f64 },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("column `{column}` not found in {path} (available: {available})")]
    MissingColumn {
        path: PathBuf,
        column: String,
        available: String,
    },

    #[error("{path}, row {row}: value {value} is outside [0, 1]")]
    OutOfRange { path: PathBuf, row: usize, value: f64 },

    #[error("{path}, row {row}: cannot parse `{raw}` as a number")]
    Parse { path: PathBuf, row: usize, raw: String },

    #[error("series too short: need {needed} samples, have {have}")]
    SeriesTooShort { needed: usize, have: usize },

    #[error("step {t}: {source}")]
    Step {
        t: i64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at_step(self, t: i64) -> Self {
        Error::Step {
            t,
            source: Box::new(self),
        }
    }
}
