use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range for {len} nodes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("integration diverged at t = {time}")]
    IntegrationDiverged { time: f64 },

    #[error("nodes not synchronized after burn-in (max pairwise deviation {deviation:e})")]
    NotSynchronized { deviation: f64 },

    #[error("global synchronization not reached before t = {horizon}; extend the horizon")]
    SimulationTooShort { horizon: f64 },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {gap:e}")]
    NonSymmetric { row: usize, col: usize, gap: f64 },

    #[error("coupling graph is disconnected (second eigenvalue {lambda2:e} is not negative)")]
    DisconnectedGraph { lambda2: f64 },

    #[error("filtration is not monotone: {0}")]
    InconsistentFiltration(String),

    #[error("simplex budget exceeded: {required} simplices required, budget is {budget}")]
    BudgetExceeded { required: u64, budget: u64 },

    #[error("bar has a non-finite endpoint [{birth}, {death}); cap essential classes first")]
    NonFiniteBar { birth: f64, death: f64 },

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),

    #[error("least-squares problem is underdetermined: {rows} rows, {cols} columns")]
    Underdetermined { rows: usize, cols: usize },

    #[error("line {line}: {message}")]
    Pdb { line: usize, message: String },

    #[error("no C-alpha atoms found")]
    NoCalpha,

    #[error("{path}: {message}")]
    Input { path: String, message: String },

    #[error("config line {line}, key `{key}`: {message}")]
    Config { line: usize, key: String, message: String },

    #[error("{residue}: {source}")]
    Residue {
        residue: String,
        #[source]
        source: Box<Error>,
    },

    #[error("protein {protein}: {source}")]
    Protein {
        protein: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn at_residue(self, residue: impl Into<String>) -> Self {
        Error::Residue {
            residue: residue.into(),
            source: Box::new(self),
        }
    }

    pub fn in_protein(self, protein: impl Into<String>) -> Self {
        Error::Protein {
            protein: protein.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through residue and protein annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Residue { source, .. } | Error::Protein { source, .. } => source.root(),
            other => other,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self.root() {
            Error::InvalidArgument(_) | Error::Config { .. } => "usage",
            Error::DimensionMismatch { .. } | Error::IndexOutOfRange { .. } => "usage",
            Error::Pdb { .. } | Error::NoCalpha | Error::Input { .. } => "input",
            Error::Io(_) | Error::Json(_) => "input",
            Error::BudgetExceeded { .. } => "budget",
            _ => "numerical",
        }
    }

    /// Process exit code: 1 usage/config, 2 input, 3 numerical failure, 4 budget.
    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "usage" => 1,
            "input" => 2,
            "budget" => 4,
            _ => 3,
        }
    }
}
