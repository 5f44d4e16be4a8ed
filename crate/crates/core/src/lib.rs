//! Minimum-congestion placement of virtual networks on tree datacenters.
//!
//! Given a tree of switches and servers with capacitated links, and a request
//! graph of VMs with pairwise and uplink bandwidth demands, find the placement
//! of VMs on server slots that minimizes the worst link load ratio.

pub mod bench;
pub mod cluster;
pub mod dp;
pub mod embedding;
pub mod error;
pub mod hardness;
pub mod io;
pub mod oracle;
pub mod rational;
pub mod request;
pub mod topogen;
pub mod topology;

pub use cluster::{cluster_solve, expand_counts, ClusterPlacement, ClusterRequest};
pub use dp::{min_congestion, solve, solve_with, SolveOptions};
pub use embedding::{evaluate, Embedding};
pub use error::{Error, Result};
pub use hardness::{HardInstance, ThreePartitionInstance};
pub use oracle::linear_scan;
pub use rational::{Capacity, Congestion, Rational};
pub use request::{build_flow_table, RequestGraph, RequestSpec, VmSubset, SUBSET_LIMIT};
pub use topogen::{apply_residuals, gen_three_tier};
pub use topology::{to_binary, BinaryTopology, NodeId, Topology, TopologySpec};
