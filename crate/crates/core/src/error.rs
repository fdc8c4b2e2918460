use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("overlapping arguments: {0}")]
    Overlap(String),
    #[error("cause and effect must differ (got {0} twice)")]
    SamePair(usize),
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("invalid dataset: {0}")]
    InvalidData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("state space of {states} joint configurations exceeds cap {cap}")]
    StateSpaceTooLarge { states: f64, cap: usize },
    #[error("table with {cells} cells exceeds cap {cap}")]
    TableTooLarge { cells: f64, cap: usize },
    #[error("average treatment effect requires binary cause and effect")]
    NotBinary,
    #[error("PDAG admits no consistent DAG extension")]
    NotExtendable,
    #[error("more than {cap} consistent DAG extensions")]
    TooManyExtensions { cap: usize },
    #[error("no positive labels")]
    NoPositives,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    /// A shared stage (structure learning, PC) failed for a run.
    #[error("{stage} failed: {message}")]
    Upstream { stage: &'static str, message: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("toml: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
