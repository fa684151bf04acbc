use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown mode label `{0}`")]
    UnknownMode(String),
    #[error("duplicate mode label `{0}`")]
    DuplicateMode(String),
    #[error("invalid mode `{label}`: {reason}")]
    InvalidMode { label: String, reason: String },
    #[error("invalid coupling {photon}-{magnon}: {reason}")]
    InvalidEdge {
        photon: String,
        magnon: String,
        reason: String,
    },
    #[error("more than one coupling between `{photon}` and `{magnon}`")]
    DuplicateEdge { photon: String, magnon: String },
    #[error("magnon frequency must be positive, got {0} GHz")]
    NonPositiveFrequency(f64),
    #[error("cannot parse phase `{0}`")]
    InvalidPhase(String),
    #[error("matrix is not Hermitian (deviation {deviation:.3e} relative)")]
    NotHermitian { deviation: f64 },
    #[error("matrix dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular linear system")]
    Singular,
    #[error("grid is empty")]
    EmptyGrid,
    #[error("grid must be strictly increasing (violation at index {0})")]
    GridNotIncreasing(usize),
    #[error("no grid points inside window [{lo}, {hi}] GHz")]
    EmptyWindow { lo: f64, hi: f64 },
    #[error("branch {branch} out of range (sweep has {count} branches)")]
    BranchOutOfRange { branch: usize, count: usize },
    #[error("`{0}` is not a photon mode")]
    NotAPhoton(String),
    #[error("mode `{0}` has zero total loss; transmission is undefined")]
    ZeroLoss(String),
    #[error("invalid port configuration: {0}")]
    InvalidPort(String),
    #[error("cycle is not closed or references missing edges")]
    CycleNotClosed,
    #[error("no field samples inside sphere region `{0}`")]
    EmptyRegion(String),
    #[error("coupling phase undefined: mode `{mode}` has no transverse field over `{region}`")]
    UndefinedPhase { mode: String, region: String },
    #[error("mode field carries no energy over the cavity volume")]
    ZeroEnergyMode,
    #[error("invalid field sample: {0}")]
    InvalidSample(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid fit specification: {0}")]
    InvalidFitSpec(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input, as opposed
    /// to a failure during computation.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Singular | Error::NotHermitian { .. } | Error::Io(_))
    }
}
