//! Rooted, capacitated datacenter trees and their binary normalization.
//!
//! A [`Topology`] is always valid: it can only be obtained from
//! [`Topology::from_spec`] (which runs [`validate_topology`]) or from
//! [`TopologyBuilder`]. Node ids are dense indices; the edge above a node `u`
//! is identified by `u` itself.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Capacity;

/// Index of a node inside its [`Topology`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkNode {
    pub label: String,
    pub parent: Option<NodeId>,
    /// Capacity of the edge to the parent; `None` only at the root.
    pub parent_capacity: Option<Capacity>,
    pub vm_slots: u32,
    /// Set on nodes inserted by [`to_binary`].
    pub synthetic: bool,
}

/// Unvalidated, label-based description of a tree; the JSON file schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub root: String,
    pub nodes: Vec<NodeSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: String,
    #[serde(default)]
    pub parent: Option<String>,
    #[serde(default)]
    pub capacity: Option<Capacity>,
    #[serde(default)]
    pub vm_slots: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoServerLeaves,
    MissingRoot(String),
    DuplicateId(String),
    RootHasParent(String),
    RootHasCapacity(String),
    SlotsOnRoot(String),
    MultipleRoots(String),
    UnknownParent { node: String, parent: String },
    Cycle(String),
    Disconnected(String),
    MissingCapacity(String),
    NonpositiveCapacity(String),
    SlotsOnInternalNode(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoServerLeaves => write!(f, "no server leaves"),
            Violation::MissingRoot(r) => write!(f, "root `{r}` is not among the nodes"),
            Violation::DuplicateId(n) => write!(f, "duplicate node id `{n}`"),
            Violation::RootHasParent(n) => write!(f, "root `{n}` has a parent"),
            Violation::RootHasCapacity(n) => write!(f, "root `{n}` has a parent capacity"),
            Violation::SlotsOnRoot(n) => write!(f, "root `{n}` cannot host VMs"),
            Violation::MultipleRoots(n) => {
                write!(f, "multiple roots: node `{n}` has no parent")
            }
            Violation::UnknownParent { node, parent } => {
                write!(f, "node `{node}` has unknown parent `{parent}`")
            }
            Violation::Cycle(n) => write!(f, "cycle detected at node `{n}`"),
            Violation::Disconnected(n) => write!(f, "node `{n}` is disconnected from the root"),
            Violation::MissingCapacity(n) => write!(f, "edge above `{n}` has no capacity"),
            Violation::NonpositiveCapacity(n) => {
                write!(f, "nonpositive capacity on edge above `{n}`")
            }
            Violation::SlotsOnInternalNode(n) => {
                write!(f, "internal node `{n}` has VM slots")
            }
        }
    }
}

/// Every invariant violation in `spec`; empty when it describes a valid tree.
pub fn validate_topology(spec: &TopologySpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, n) in spec.nodes.iter().enumerate() {
        if index.insert(n.id.as_str(), i).is_some() {
            out.push(Violation::DuplicateId(n.id.clone()));
        }
    }
    let Some(&root) = index.get(spec.root.as_str()) else {
        out.push(Violation::MissingRoot(spec.root.clone()));
        return out;
    };

    let mut parent: Vec<Option<usize>> = vec![None; spec.nodes.len()];
    let mut has_child = vec![false; spec.nodes.len()];
    for (i, n) in spec.nodes.iter().enumerate() {
        if i == root {
            if n.parent.is_some() {
                out.push(Violation::RootHasParent(n.id.clone()));
            }
            if n.capacity.is_some() {
                out.push(Violation::RootHasCapacity(n.id.clone()));
            }
            if n.vm_slots > 0 {
                out.push(Violation::SlotsOnRoot(n.id.clone()));
            }
            continue;
        }
        match &n.parent {
            None => out.push(Violation::MultipleRoots(n.id.clone())),
            Some(p) => match index.get(p.as_str()) {
                None => out.push(Violation::UnknownParent {
                    node: n.id.clone(),
                    parent: p.clone(),
                }),
                Some(&pi) => {
                    parent[i] = Some(pi);
                    has_child[pi] = true;
                }
            },
        }
        match n.capacity {
            None => out.push(Violation::MissingCapacity(n.id.clone())),
            Some(Capacity::Finite(c)) if c.is_zero() => {
                out.push(Violation::NonpositiveCapacity(n.id.clone()))
            }
            _ => {}
        }
    }

    // Walk parent chains; 0 = unvisited, 1 = on current walk, 2 = reaches root,
    // 3 = dead end (cycle or broken chain).
    let mut state = vec![0u8; spec.nodes.len()];
    state[root] = 2;
    for start in 0..spec.nodes.len() {
        if state[start] != 0 {
            continue;
        }
        let mut walk = Vec::new();
        let mut cur = start;
        let outcome = loop {
            match state[cur] {
                0 => {
                    state[cur] = 1;
                    walk.push(cur);
                    match parent[cur] {
                        Some(p) => cur = p,
                        None => break 3,
                    }
                }
                1 => {
                    // cur is on a cycle formed within this walk
                    let pos = walk.iter().position(|&w| w == cur).unwrap();
                    for &w in &walk[pos..] {
                        out.push(Violation::Cycle(spec.nodes[w].id.clone()));
                    }
                    for &w in &walk[pos..] {
                        state[w] = 3;
                    }
                    walk.truncate(pos);
                    break 3;
                }
                s => break s,
            }
        };
        for &w in &walk {
            if outcome == 3 && parent[w].is_some() {
                out.push(Violation::Disconnected(spec.nodes[w].id.clone()));
            }
            state[w] = outcome;
        }
    }

    let mut servers = 0;
    for (i, n) in spec.nodes.iter().enumerate() {
        if i == root {
            continue;
        }
        if has_child[i] && n.vm_slots > 0 {
            out.push(Violation::SlotsOnInternalNode(n.id.clone()));
        }
        if !has_child[i] && n.vm_slots > 0 && state[i] == 2 {
            servers += 1;
        }
    }
    if servers == 0 {
        out.push(Violation::NoServerLeaves);
    }
    out
}

/// A validated rooted tree with edge capacities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    nodes: Vec<NetworkNode>,
    children: Vec<Vec<NodeId>>,
    depth: Vec<u32>,
    root: NodeId,
    index: HashMap<String, NodeId>,
}

impl Topology {
    pub fn from_spec(spec: &TopologySpec) -> Result<Self> {
        let violations = validate_topology(spec);
        if !violations.is_empty() {
            return Err(Error::InvalidTopology(violations));
        }
        let index: HashMap<&str, usize> = spec
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id.as_str(), i))
            .collect();
        let nodes = spec
            .nodes
            .iter()
            .map(|n| NetworkNode {
                label: n.id.clone(),
                parent: n.parent.as_ref().map(|p| NodeId(index[p.as_str()])),
                parent_capacity: n.capacity,
                vm_slots: n.vm_slots,
                synthetic: false,
            })
            .collect::<Vec<_>>();
        let mut children = vec![Vec::new(); nodes.len()];
        for (i, n) in nodes.iter().enumerate() {
            if let Some(p) = n.parent {
                children[p.0].push(NodeId(i));
            }
        }
        Ok(Self::assemble(nodes, children, NodeId(index[spec.root.as_str()])))
    }

    /// Builds derived indices. Callers guarantee the parts form a valid tree.
    fn assemble(nodes: Vec<NetworkNode>, children: Vec<Vec<NodeId>>, root: NodeId) -> Self {
        let mut depth = vec![0u32; nodes.len()];
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            for &c in &children[u.0] {
                depth[c.0] = depth[u.0] + 1;
                stack.push(c);
            }
        }
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.label.clone(), NodeId(i)))
            .collect();
        Topology {
            nodes,
            children,
            depth,
            root,
            index,
        }
    }

    pub fn to_spec(&self) -> TopologySpec {
        TopologySpec {
            root: self.label(self.root).to_string(),
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeSpec {
                    id: n.label.clone(),
                    parent: n.parent.map(|p| self.label(p).to_string()),
                    capacity: n.parent_capacity,
                    vm_slots: n.vm_slots,
                })
                .collect(),
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, u: NodeId) -> &NetworkNode {
        &self.nodes[u.0]
    }

    pub fn nodes(&self) -> &[NetworkNode] {
        &self.nodes
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn label(&self, u: NodeId) -> &str {
        &self.nodes[u.0].label
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn lookup(&self, label: &str) -> Result<NodeId> {
        self.find(label)
            .ok_or_else(|| Error::UnknownNode(label.to_string()))
    }

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        self.nodes[u.0].parent
    }

    pub fn children(&self, u: NodeId) -> &[NodeId] {
        &self.children[u.0]
    }

    /// Capacity of the edge above `u`; `None` at the root.
    pub fn capacity(&self, u: NodeId) -> Option<Capacity> {
        self.nodes[u.0].parent_capacity
    }

    pub fn slots(&self, u: NodeId) -> u32 {
        self.nodes[u.0].vm_slots
    }

    pub fn depth(&self, u: NodeId) -> u32 {
        self.depth[u.0]
    }

    pub fn is_leaf(&self, u: NodeId) -> bool {
        u != self.root && self.children[u.0].is_empty()
    }

    /// Non-root nodes without children, in id order.
    pub fn leaves(&self) -> Vec<NodeId> {
        self.ids().filter(|&u| self.is_leaf(u)).collect()
    }

    /// Leaves with at least one VM slot, in id order.
    pub fn servers(&self) -> Vec<NodeId> {
        self.ids()
            .filter(|&u| self.is_leaf(u) && self.slots(u) > 0)
            .collect()
    }

    pub fn total_slots(&self) -> u64 {
        self.nodes.iter().map(|n| n.vm_slots as u64).sum()
    }

    pub fn max_children(&self) -> usize {
        self.children.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.len());
        let mut stack = vec![(self.root, false)];
        while let Some((u, expanded)) = stack.pop() {
            if expanded {
                out.push(u);
            } else {
                stack.push((u, true));
                for &c in self.children(u).iter().rev() {
                    stack.push((c, false));
                }
            }
        }
        out
    }

    /// Number of VM slots in the subtree below each node.
    pub fn subtree_slots(&self) -> Vec<u64> {
        let mut cap = vec![0u64; self.len()];
        for u in self.postorder() {
            cap[u.0] = self.slots(u) as u64
                + self.children(u).iter().map(|c| cap[c.0]).sum::<u64>();
        }
        cap
    }

    /// Lowest common ancestor of `u` and `v`.
    pub fn lca(&self, mut u: NodeId, mut v: NodeId) -> NodeId {
        while self.depth(u) > self.depth(v) {
            u = self.parent(u).unwrap();
        }
        while self.depth(v) > self.depth(u) {
            v = self.parent(v).unwrap();
        }
        while u != v {
            u = self.parent(u).unwrap();
            v = self.parent(v).unwrap();
        }
        u
    }

    /// Edges (named by their lower endpoint) on the unique `u`–`v` path:
    /// climbing from `u` to the common ancestor, then descending to `v`.
    pub fn path_edges(&self, u: NodeId, v: NodeId) -> Result<Vec<NodeId>> {
        for w in [u, v] {
            if w.0 >= self.len() {
                return Err(Error::UnknownNode(format!("#{}", w.0)));
            }
        }
        let top = self.lca(u, v);
        let mut up = Vec::new();
        let mut cur = u;
        while cur != top {
            up.push(cur);
            cur = self.parent(cur).unwrap();
        }
        let mut down = Vec::new();
        cur = v;
        while cur != top {
            down.push(cur);
            cur = self.parent(cur).unwrap();
        }
        up.extend(down.into_iter().rev());
        Ok(up)
    }

    pub fn path_edges_by_label(&self, u: &str, v: &str) -> Result<Vec<NodeId>> {
        self.path_edges(self.lookup(u)?, self.lookup(v)?)
    }
}

/// Incremental construction of a [`Topology`]; parents must be added first,
/// so the result is a tree by construction.
#[derive(Debug, Default)]
pub struct TopologyBuilder {
    nodes: Vec<NetworkNode>,
    children: Vec<Vec<NodeId>>,
}

impl TopologyBuilder {
    pub fn new(root_label: impl Into<String>) -> Self {
        TopologyBuilder {
            nodes: vec![NetworkNode {
                label: root_label.into(),
                parent: None,
                parent_capacity: None,
                vm_slots: 0,
                synthetic: false,
            }],
            children: vec![Vec::new()],
        }
    }

    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn add(
        &mut self,
        label: impl Into<String>,
        parent: NodeId,
        capacity: Capacity,
        vm_slots: u32,
    ) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(NetworkNode {
            label: label.into(),
            parent: Some(parent),
            parent_capacity: Some(capacity),
            vm_slots,
            synthetic: false,
        });
        self.children.push(Vec::new());
        self.children[parent.0].push(id);
        id
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Runs full validation (duplicate labels, capacities, slots).
    pub fn build(self) -> Result<Topology> {
        let t = Topology::assemble(self.nodes, self.children, NodeId(0));
        Topology::from_spec(&t.to_spec())
    }
}

/// A topology where every node has at most two children.
///
/// Original nodes keep their ids; synthetic nodes are appended after them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryTopology {
    tree: Topology,
    original_len: usize,
    expands: BTreeMap<NodeId, NodeId>,
}

impl BinaryTopology {
    pub fn tree(&self) -> &Topology {
        &self.tree
    }

    pub fn into_tree(self) -> Topology {
        self.tree
    }

    /// Number of nodes the source topology had.
    pub fn original_len(&self) -> usize {
        self.original_len
    }

    /// For each synthetic node, the original node whose children it groups.
    pub fn provenance(&self) -> &BTreeMap<NodeId, NodeId> {
        &self.expands
    }
}

impl Deref for BinaryTopology {
    type Target = Topology;

    fn deref(&self) -> &Topology {
        &self.tree
    }
}

/// Replaces every node with more than two children by a left-leaning complete
/// binary tree whose internal edges are unbounded. Leaves, slots and original
/// edge capacities are untouched.
pub fn to_binary(t: &Topology) -> BinaryTopology {
    let mut nodes = t.nodes.clone();
    let mut children = t.children.clone();
    let mut expands = BTreeMap::new();
    let mut labels: HashSet<String> = t.nodes.iter().map(|n| n.label.clone()).collect();

    for v in t.ids() {
        if t.children(v).len() <= 2 {
            continue;
        }
        let group = t.children(v).to_vec();
        children[v.0].clear();
        let mut counter = 0usize;
        let mut stack = vec![(v, group)];
        while let Some((parent, group)) = stack.pop() {
            if group.len() <= 2 {
                for c in group {
                    nodes[c.0].parent = Some(parent);
                    children[parent.0].push(c);
                }
                continue;
            }
            let mid = group.len().div_ceil(2);
            let halves = [group[..mid].to_vec(), group[mid..].to_vec()];
            let mut pending = Vec::new();
            for half in halves {
                if half.len() == 1 {
                    nodes[half[0].0].parent = Some(parent);
                    children[parent.0].push(half[0]);
                    continue;
                }
                let label = loop {
                    counter += 1;
                    let l = format!("{}~{}", t.label(v), counter);
                    if labels.insert(l.clone()) {
                        break l;
                    }
                };
                let s = NodeId(nodes.len());
                nodes.push(NetworkNode {
                    label,
                    parent: Some(parent),
                    parent_capacity: Some(Capacity::Unbounded),
                    vm_slots: 0,
                    synthetic: true,
                });
                children.push(Vec::new());
                children[parent.0].push(s);
                expands.insert(s, v);
                pending.push((s, half));
            }
            // LIFO: push right first so the left subtree gets lower labels
            for p in pending.into_iter().rev() {
                stack.push(p);
            }
        }
    }

    BinaryTopology {
        tree: Topology::assemble(nodes, children, t.root),
        original_len: t.len(),
        expands,
    }
}
