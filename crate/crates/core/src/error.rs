use std::path::PathBuf;

/// Errors raised anywhere in the estimation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("column `{0}` not found")]
    MissingColumn(String),

    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),

    #[error("duplicate entity key {0}")]
    DuplicateEntity(String),

    #[error("row {row}, column {column}: cannot parse `{value}` as a number (file line {line})")]
    Parse {
        row: usize,
        line: u64,
        column: String,
        value: String,
    },

    #[error("row {row}: column `{column}` is not an integer year: `{value}`")]
    BadYear {
        row: usize,
        column: String,
        value: String,
    },

    #[error("fewer than 3 rows remain after dropping incomplete cases ({remaining} left, {dropped} dropped)")]
    TooFewRows { remaining: usize, dropped: usize },

    #[error("column `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("column `{0}` has a degenerate range (max = min)")]
    DegenerateRange(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("path references unknown block `{0}`")]
    UnknownBlock(String),

    #[error("manifest variable `{0}` is assigned more than once")]
    DuplicateManifest(String),

    #[error("cycle detected among blocks: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("not enough observations: {0}")]
    InsufficientObservations(String),

    #[error("singular design: {0}")]
    Singular(String),

    #[error("block `{block}` has negative normalized weight on `{manifest}`; set its invert flag")]
    NegativeIndexWeight { block: String, manifest: String },

    #[error("{failed} of {total} bootstrap replicates failed (limit 20%): {first_failure}")]
    BootstrapFailures {
        failed: usize,
        total: usize,
        first_failure: String,
    },

    #[error("invalid bootstrap settings: {0}")]
    InvalidBootSpec(String),

    #[error("rank-deficient design: {} collinear with earlier columns", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("log transform of `{column}` needs strictly positive values (row {row} = {value})")]
    NonPositiveLog {
        column: String,
        row: usize,
        value: f64,
    },

    #[error("invalid regression: {0}")]
    InvalidRegression(String),

    #[error("index tables share no entities")]
    DisjointEntities,

    #[error("invalid synthetic spec: {0}")]
    InvalidSynthSpec(String),

    #[error("residual variance would be non-positive for `{0}`")]
    NegativeResidualVariance(String),

    #[error("estimation did not converge after {0} iterations")]
    NotConverged(usize),

    #[error("unknown block `{0}`")]
    NoSuchBlock(String),
}

impl Error {
    /// True for numerical failures (as opposed to bad input).
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ZeroVariance(_)
                | Error::DegenerateRange(_)
                | Error::Singular(_)
                | Error::BootstrapFailures { .. }
                | Error::RankDeficient(_)
                | Error::NegativeIndexWeight { .. }
                | Error::InsufficientObservations(_)
                | Error::NotConverged(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
