//! Virtual-cluster requests `<k, B>`: the count-based specialization of the
//! subset DP.
//!
//! A cluster request is the uniform clique on `k` VMs with `B / (k - 1)` on
//! every pair and no uplinks. Every subset of `z` VMs then cuts the same flow,
//! `z (k - z) B / (k - 1)`, so the DP state is just the count `z` and each
//! node does `O(k^2)` work.

use std::collections::BTreeMap;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::rational::{Capacity, Congestion, Rational};
use crate::request::{RequestBuilder, RequestGraph};
use crate::topology::{BinaryTopology, NodeId, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterRequest {
    k: usize,
    bandwidth: Rational,
}

impl ClusterRequest {
    pub fn new(k: usize, bandwidth: Rational) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidCluster("k must be at least 1".into()));
        }
        if bandwidth.is_zero() {
            return Err(Error::InvalidCluster("bandwidth must be positive".into()));
        }
        Ok(ClusterRequest { k, bandwidth })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn bandwidth(&self) -> Rational {
        self.bandwidth
    }

    /// Per-pair demand of the equivalent clique, `B / (k - 1)`.
    pub fn pair_bandwidth(&self) -> Option<Rational> {
        if self.k < 2 {
            return None;
        }
        self.bandwidth.checked_div_int(self.k as u64 - 1)
    }

    /// Flow leaving a subtree that holds `z` of the `k` VMs.
    pub fn cut_flow(&self, z: usize) -> Result<Rational> {
        if self.k == 1 || z == 0 || z >= self.k {
            return Ok(Rational::ZERO);
        }
        let pairs = (z as u64)
            .checked_mul((self.k - z) as u64)
            .ok_or(Error::Overflow("cluster cut"))?;
        self.bandwidth
            .checked_mul_int(pairs)
            .and_then(|f| f.checked_div_int(self.k as u64 - 1))
            .ok_or(Error::Overflow("cluster cut"))
    }

    /// The explicit clique request this cluster stands for, VMs `v1..vk`.
    pub fn to_clique(&self) -> Result<RequestGraph> {
        let mut b = RequestBuilder::new();
        for i in 0..self.k {
            b.vm(format!("v{}", i + 1))?;
        }
        if let Some(w) = self.pair_bandwidth() {
            for i in 0..self.k {
                for j in i + 1..self.k {
                    b.chatter_at(i, j, w)?;
                }
            }
        }
        b.build()
    }
}

/// How many cluster VMs each leaf receives.
pub type LeafCounts = BTreeMap<NodeId, usize>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterPlacement {
    pub congestion: Rational,
    /// Leaves with a nonzero count only.
    pub counts: LeafCounts,
}

/// Per-node rows `cong[u, z]` for `z = 0..=k` and their splits, stored
/// row-major with `k + 1` entries per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    k: usize,
    /// Internal nodes only; leaves follow the slot base case.
    cong: Vec<Congestion>,
    /// Count sent to the first child.
    part: Vec<u32>,
    /// Set when `cong` holds this node's row alone.
    only: Option<NodeId>,
}

impl CountTable {
    pub fn k(&self) -> usize {
        self.k
    }

    /// `None` for leaves and for rows that were not kept.
    pub fn cong(&self, u: NodeId, z: usize) -> Option<Congestion> {
        if z > self.k {
            return None;
        }
        let row = match self.only {
            Some(v) if v == u => 0,
            Some(_) => return None,
            None => u.index(),
        };
        self.cong.get(row * (self.k + 1) + z).copied()
    }

    pub fn split(&self, u: NodeId, z: usize) -> usize {
        self.part[u.index() * (self.k + 1) + z] as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterOptions {
    /// Skip counts above a subtree's slot total; results are unchanged.
    pub prune: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { prune: true }
    }
}

fn flow_ratio(f: Rational, cap: Capacity) -> Result<Congestion> {
    cap.load_ratio(f)
        .map(Congestion::Finite)
        .ok_or(Error::Overflow("cluster flow/capacity ratio"))
}

/// Fills the count table bottom-up. Root row holds only `z = k`.
pub fn cluster_table(t: &BinaryTopology, c: &ClusterRequest, opts: ClusterOptions) -> Result<CountTable> {
    count_dp(t, c, opts, true)
}

/// Without `retain`, rows of internal nodes other than the root are dropped.
fn count_dp(t: &BinaryTopology, c: &ClusterRequest, opts: ClusterOptions, retain: bool) -> Result<CountTable> {
    let tree: &Topology = t;
    let k = c.k;
    let w = k + 1;
    let caps = tree.subtree_slots();
    let flows: Vec<Rational> = (0..=k).map(|z| c.cut_flow(z)).collect::<Result<_>>()?;
    let root = tree.root();
    // up[u] = max(cong[u], flow / capacity of the edge above u)
    let mut up = vec![Congestion::Infeasible; tree.len() * w];
    let mut part = vec![0u32; tree.len() * w];
    let mut cong = if retain {
        vec![Congestion::Infeasible; tree.len() * w]
    } else {
        Vec::new()
    };
    let mut root_row = vec![Congestion::Infeasible; w];

    for u in tree.postorder() {
        let kids = tree.children(u);
        let base = u.index() * w;
        if kids.is_empty() {
            let slots = tree.slots(u) as usize;
            up[base..base + w.min(slots + 1)].fill(Congestion::ZERO);
        } else {
            let cap_u = caps[u.index()];
            let l = kids[0].index() * w;
            let l_cap = caps[kids[0].index()];
            let r = kids.get(1).map(|rk| rk.index() * w);
            let r_cap = kids.get(1).map_or(0, |rk| caps[rk.index()]);
            let zs = if u == root { k..=k } else { 0..=k };
            for z in zs {
                if opts.prune && z as u64 > cap_u {
                    continue;
                }
                let (mut best, mut arg) = (Congestion::Infeasible, z);
                match r {
                    None => best = up[l + z],
                    Some(r) => {
                        for i in 0..=z {
                            if opts.prune && (i as u64 > l_cap || (z - i) as u64 > r_cap) {
                                continue;
                            }
                            let v = up[l + i].max(up[r + z - i]);
                            if v < best {
                                best = v;
                                arg = i;
                            }
                        }
                    }
                }
                up[base + z] = best;
                part[base + z] = arg as u32;
            }
            if retain {
                cong[base..base + w].copy_from_slice(&up[base..base + w]);
            }
            if u == root {
                root_row.copy_from_slice(&up[base..base + w]);
                break;
            }
        }
        let cap = tree.capacity(u).expect("non-root edge");
        for (z, cell) in up[base..base + w].iter_mut().enumerate() {
            // max(Infeasible, x) is Infeasible
            if !cell.is_feasible() {
                continue;
            }
            *cell = (*cell).max(flow_ratio(flows[z], cap)?);
        }
    }
    let only = (!retain).then_some(root);
    if !retain {
        cong = root_row;
    }
    Ok(CountTable { k, cong, part, only })
}

/// Minimum congestion placement of a cluster; `None` if it does not fit.
pub fn cluster_solve(t: &BinaryTopology, c: &ClusterRequest) -> Result<Option<ClusterPlacement>> {
    cluster_solve_with(t, c, ClusterOptions::default())
}

pub fn cluster_solve_with(
    t: &BinaryTopology,
    c: &ClusterRequest,
    opts: ClusterOptions,
) -> Result<Option<ClusterPlacement>> {
    let tree: &Topology = t;
    if (tree.total_slots() as u128) < c.k as u128 {
        return Ok(None);
    }
    if c.k == 1 {
        let leaf = tree.servers()[0];
        return Ok(Some(ClusterPlacement {
            congestion: Rational::ZERO,
            counts: [(leaf, 1)].into_iter().collect(),
        }));
    }
    let table = count_dp(t, c, opts, false)?;
    let root = tree.root();
    let Congestion::Finite(value) = table.cong(root, c.k).unwrap_or(Congestion::Infeasible) else {
        return Ok(None);
    };
    let mut counts = LeafCounts::new();
    let mut stack = vec![(root, c.k)];
    while let Some((u, z)) = stack.pop() {
        if z == 0 {
            continue;
        }
        let kids = tree.children(u);
        if kids.is_empty() {
            counts.insert(u, z);
            continue;
        }
        let i = table.split(u, z);
        stack.push((kids[0], i));
        if let Some(&rk) = kids.get(1) {
            stack.push((rk, z - i));
        }
    }
    Ok(Some(ClusterPlacement {
        congestion: value,
        counts,
    }))
}

/// Congestion of a count placement, from the cut-flow formula.
pub fn count_congestion(t: &Topology, c: &ClusterRequest, counts: &LeafCounts) -> Result<Rational> {
    check_counts(t, c, counts)?;
    let mut below = vec![0usize; t.len()];
    for (&leaf, &n) in counts {
        below[leaf.index()] = n;
    }
    let mut worst = Rational::ZERO;
    for u in t.postorder() {
        if let Some(p) = t.parent(u) {
            below[p.index()] += below[u.index()];
            let cap = t.capacity(u).unwrap();
            let r = cap
                .load_ratio(c.cut_flow(below[u.index()])?)
                .ok_or(Error::Overflow("cluster congestion"))?;
            worst = worst.max(r);
        }
    }
    Ok(worst)
}

fn check_counts(t: &Topology, c: &ClusterRequest, counts: &LeafCounts) -> Result<()> {
    let mut total = 0usize;
    for (&leaf, &n) in counts {
        if leaf.index() >= t.len() {
            return Err(Error::UnknownNode(format!("#{}", leaf.index())));
        }
        if !t.is_leaf(leaf) {
            return Err(Error::NotALeaf(t.label(leaf).to_string()));
        }
        if n > t.slots(leaf) as usize {
            return Err(Error::SlotViolation {
                leaf: t.label(leaf).to_string(),
                used: n,
                slots: t.slots(leaf),
            });
        }
        total += n;
    }
    if total != c.k {
        return Err(Error::CountMismatch {
            got: total,
            expected: c.k,
        });
    }
    Ok(())
}

/// Labels the counted slots with VMs `0..k`, filling leaves in id order.
/// Any labeling is optimal since all VMs are interchangeable.
pub fn expand_counts(t: &Topology, c: &ClusterRequest, counts: &LeafCounts) -> Result<Embedding> {
    let congestion = count_congestion(t, c, counts)?;
    let assignment = counts
        .iter()
        .flat_map(|(&leaf, &n)| std::iter::repeat_n(leaf, n))
        .collect();
    Ok(Embedding {
        assignment,
        congestion,
    })
}
