use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node out of range: {node} (graph has {num_nodes} nodes)")]
    NodeOutOfRange { node: usize, num_nodes: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("infeasible size partition: {nodes} nodes cannot hold {parts} blobs of at least {min_size}")]
    InfeasiblePartition { nodes: usize, parts: usize, min_size: usize },
    #[error("generation failed: {0}")]
    Generation(String),
    #[error("shape mismatch for `{name}`: expected {expected:?}, found {found:?}")]
    ShapeMismatch { name: String, expected: alloc::vec::Vec<usize>, found: alloc::vec::Vec<usize> },
    #[error("missing parameter `{0}`")]
    MissingParam(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
    #[error("empty training split")]
    EmptyTrainingSplit,
    #[error("task mismatch: {0}")]
    TaskMismatch(String),
    #[error("alpha gradient is O(|V|^2): {nodes} nodes exceeds the limit of {limit}")]
    AlphaGradientTooLarge { nodes: usize, limit: usize },
    #[error("threat model violation: {0}")]
    ThreatModelViolation(String),
    #[error("target node required for this indicator")]
    MissingTarget,
    #[error("equivalency constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("no valid action")]
    NoValidAction,
    #[error("enumeration of {count} candidates exceeds the cap of {cap}")]
    EnumerationCap { count: u128, cap: u128 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
