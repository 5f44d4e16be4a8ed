use thiserror::Error;

use crate::rational::ParseRationalError;
use crate::topology::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {}", join(.0))]
    InvalidTopology(Vec<Violation>),
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("request has no VMs")]
    EmptyRequest,
    #[error("duplicate VM id `{0}`")]
    DuplicateVm(String),
    #[error("unknown VM `{0}`")]
    UnknownVm(String),
    #[error("self-loop chatter edge on VM `{0}`")]
    SelfLoop(String),
    #[error("duplicate edge {0}")]
    DuplicateEdge(String),
    #[error("nonpositive bandwidth on {0}")]
    NonpositiveBandwidth(String),
    #[error(
        "request has {k} VMs but the subset solver is limited to {limit}; \
         use the cluster solver for uniform requests"
    )]
    SubsetLimit { k: usize, limit: usize },

    #[error("VM {0} is not mapped to a leaf")]
    UnmappedVm(usize),
    #[error("node `{0}` is not a leaf")]
    NotALeaf(String),
    #[error("leaf `{leaf}` hosts {used} VMs but has {slots} slots")]
    SlotViolation { leaf: String, used: usize, slots: u32 },
    #[error("leaf counts sum to {got}, expected {expected}")]
    CountMismatch { got: usize, expected: usize },
    #[error("no feasible embedding exists")]
    Infeasible,

    #[error("oracle limited to {max_leaves} leaves and {max_k} VMs (got {leaves} leaves, {k} VMs)")]
    OracleLimit {
        leaves: usize,
        k: usize,
        max_leaves: usize,
        max_k: usize,
    },

    #[error("invalid cluster request: {0}")]
    InvalidCluster(String),
    #[error("invalid 3-partition instance: {0}")]
    InvalidThreePartition(String),
    #[error("instance would have {size} nodes, above the cap of {cap}")]
    SizeCap { size: u128, cap: u128 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("arithmetic overflow while computing {0}")]
    Overflow(&'static str),
    #[error(transparent)]
    Parse(#[from] ParseRationalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
