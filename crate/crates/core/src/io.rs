//! JSON files read and written by the command-line tool.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::cluster::ClusterPlacement;
use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::request::{RequestGraph, RequestSpec};
use crate::topology::{NodeId, Topology, TopologySpec};

pub fn read_topology(path: impl AsRef<Path>) -> Result<Topology> {
    let spec: TopologySpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    Topology::from_spec(&spec)
}

pub fn read_request(path: impl AsRef<Path>) -> Result<RequestGraph> {
    let spec: RequestSpec = serde_json::from_str(&fs::read_to_string(path)?)?;
    RequestGraph::from_spec(&spec)
}

pub fn topology_json(t: &Topology) -> Value {
    serde_json::to_value(t.to_spec()).expect("topology specs serialize")
}

pub fn request_json(r: &RequestGraph) -> Value {
    serde_json::to_value(r.to_spec()).expect("request specs serialize")
}

/// `{ "congestion", "assignment": { vm: leaf } }`, assignment optional.
pub fn embedding_json(t: &Topology, r: &RequestGraph, e: &Embedding, with_assignment: bool) -> Value {
    let mut out = Map::new();
    out.insert("congestion".into(), Value::String(e.congestion.to_string()));
    if with_assignment {
        let assignment = (0..r.k())
            .map(|i| (r.vm_label(i).to_string(), Value::String(t.label(e.assignment[i]).to_string())))
            .collect();
        out.insert("assignment".into(), Value::Object(assignment));
    }
    Value::Object(out)
}

pub fn infeasible_json() -> Value {
    json!({ "infeasible": true })
}

/// `{ "congestion", "counts": { leaf: n } }`.
pub fn counts_json(t: &Topology, p: &ClusterPlacement) -> Value {
    let counts: Map<String, Value> = p
        .counts
        .iter()
        .map(|(&leaf, &n)| (t.label(leaf).to_string(), json!(n)))
        .collect();
    json!({ "congestion": p.congestion.to_string(), "counts": counts })
}

/// Reads the `assignment` object of an embedding file, in VM order.
pub fn parse_assignment(t: &Topology, r: &RequestGraph, v: &Value) -> Result<Vec<NodeId>> {
    let map = v
        .get("assignment")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::InvalidArgument("missing `assignment` object".into()))?;
    let mut out = vec![None; r.k()];
    for (vm, leaf) in map {
        let i = (0..r.k())
            .find(|&i| r.vm_label(i) == vm)
            .ok_or_else(|| Error::UnknownVm(vm.clone()))?;
        let leaf = leaf
            .as_str()
            .ok_or_else(|| Error::InvalidArgument(format!("leaf for `{vm}` must be a string")))?;
        out[i] = Some(t.lookup(leaf)?);
    }
    out.into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or(Error::UnmappedVm(i)))
        .collect()
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or stdout when `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
