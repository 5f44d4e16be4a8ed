//! Exact minimum-congestion embedding by dynamic programming over VM subsets.
//!
//! For every node `u` of a binary tree and every subset `S` of VMs,
//! `cong[u, S]` is the best congestion achievable on the edges inside `T_u`
//! when exactly `S` is placed below `u`. An internal node tries every split
//! `S_l ⊆ S` between its children:
//!
//! ```text
//! cong[u, S] = min over S_l ⊆ S of max(cong[l, S_l], cong[r, S \ S_l],
//!                                      Flow[S_l] / c(l), Flow[S \ S_l] / c(r))
//! ```
//!
//! Each child's row is folded with its uplink term once ("up rows"), so the
//! inner loop is a single `max` and comparison. Splits are enumerated with the
//! decreasing submask walk and the first strict minimum wins, which makes the
//! recorded partitions deterministic.
//!
//! With [`SolveOptions::prune`] set, cells where a side would receive more VMs
//! than its subtree has slots are skipped. Those cells are infeasible in the
//! full recurrence too, so values and recorded splits are identical; only the
//! amount of work changes.

use std::collections::HashMap;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::rational::{Capacity, Congestion, Rational};
use crate::request::{build_flow_table, FlowTable, RequestGraph, VmSubset};
use crate::topology::{BinaryTopology, NodeId, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolveOptions {
    /// Skip cells that exceed subtree slot counts.
    pub prune: bool,
    /// Keep the split table needed to rebuild an embedding.
    pub record_partitions: bool,
    /// Keep every internal node's congestion row (memory heavy).
    pub retain_tables: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            prune: true,
            record_partitions: true,
            retain_tables: false,
        }
    }
}

impl SolveOptions {
    /// The recurrence evaluated over every subset and every split, with no
    /// capacity-based skipping. Used to measure the algorithm's raw scaling.
    pub fn exhaustive() -> Self {
        SolveOptions {
            prune: false,
            record_partitions: true,
            retain_tables: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum PartRow {
    Dense(Vec<u32>),
    Sparse(HashMap<u32, u32>),
    Single { set: u32, left: u32 },
}

/// For every internal node and subset, the VMs sent to the first child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionTable {
    k: usize,
    rows: Vec<Option<PartRow>>,
}

impl PartitionTable {
    pub fn k(&self) -> usize {
        self.k
    }

    /// `Part[u, S]` as `(S_l, S \ S_l)`, if that cell was computed.
    pub fn get(&self, u: NodeId, s: VmSubset) -> Option<(VmSubset, VmSubset)> {
        let left = match self.rows.get(u.index())?.as_ref()? {
            PartRow::Dense(v) => *v.get(s.0 as usize)?,
            PartRow::Sparse(m) => *m.get(&s.0)?,
            PartRow::Single { set, left } => {
                if *set != s.0 {
                    return None;
                }
                *left
            }
        };
        Some((VmSubset(left), VmSubset(s.0 & !left)))
    }
}

/// Congestion rows for internal nodes; leaves follow the slot base case and
/// the root only holds `cong[g, V]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CongestionTable {
    k: usize,
    root: NodeId,
    root_value: Congestion,
    rows: Vec<Option<Vec<Congestion>>>,
    leaf_slots: Vec<Option<u32>>,
}

impl CongestionTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn get(&self, u: NodeId, s: VmSubset) -> Option<Congestion> {
        if u == self.root {
            return (s == VmSubset::full(self.k)).then_some(self.root_value);
        }
        if let Some(slots) = self.leaf_slots.get(u.index()).copied().flatten() {
            return Some(leaf_congestion(s, slots));
        }
        self.rows.get(u.index())?.as_ref()?.get(s.0 as usize).copied()
    }
}

/// Output of one DP run.
#[derive(Clone, Debug)]
pub struct DpRun {
    pub congestion: Congestion,
    pub partitions: Option<PartitionTable>,
    pub tables: Option<CongestionTable>,
}

fn leaf_congestion(s: VmSubset, slots: u32) -> Congestion {
    if s.len() <= slots {
        Congestion::ZERO
    } else {
        Congestion::Infeasible
    }
}

/// `Flow[S] / c`, exactly.
fn flow_ratio(flow: &FlowTable, s: u32, cap: Capacity) -> Result<Congestion> {
    match cap {
        Capacity::Unbounded => Ok(Congestion::ZERO),
        Capacity::Finite(c) => {
            let num = flow.raw(VmSubset(s)) as u128 * c.denom() as u128;
            let den = flow.denom() as u128 * c.numer() as u128;
            Rational::from_u128(num, den)
                .map(Congestion::Finite)
                .ok_or(Error::Overflow("flow/capacity ratio"))
        }
    }
}

/// Number of subsets of a `k`-set with at most `c` elements.
fn subsets_up_to(k: usize, c: u64) -> u64 {
    let mut total = 0u64;
    let mut binom = 1u64;
    for i in 0..=k {
        if i as u64 > c {
            break;
        }
        total = total.saturating_add(binom);
        binom = binom.saturating_mul((k - i) as u64) / (i as u64 + 1);
    }
    total
}

struct Child<'a> {
    up: &'a [Congestion],
    cap: u32,
}

/// Best split of `s` between two children; `(value, S_l)`.
#[inline]
fn best_split(s: u32, l: &Child, r: &Child, prune: bool) -> (Congestion, u32) {
    let mut best = Congestion::Infeasible;
    let mut arg = s;
    let mut sl = s;
    loop {
        let sr = s ^ sl;
        if !prune || (sl.count_ones() <= l.cap && sr.count_ones() <= r.cap) {
            let t = l.up[sl as usize].max(r.up[sr as usize]);
            if t < best {
                best = t;
                arg = sl;
                if prune && best == Congestion::ZERO {
                    break;
                }
            }
        }
        if sl == 0 {
            break;
        }
        sl = (sl - 1) & s;
    }
    (best, arg)
}

/// Runs the DP on `t` for request `r`.
pub fn run_dp(t: &BinaryTopology, r: &RequestGraph, opts: SolveOptions) -> Result<DpRun> {
    let flow = build_flow_table(r)?;
    run_dp_with_flow(t, r.k(), &flow, opts)
}

pub(crate) fn run_dp_with_flow(
    t: &BinaryTopology,
    k: usize,
    flow: &FlowTable,
    opts: SolveOptions,
) -> Result<DpRun> {
    let tree: &Topology = t;
    debug_assert!(tree.max_children() <= 2);
    let size = 1usize << k;
    let full = VmSubset::full(k).0;
    let caps: Vec<u32> = tree
        .subtree_slots()
        .into_iter()
        .map(|c| c.min(u32::MAX as u64) as u32)
        .collect();
    let root = tree.root();

    let mut up: Vec<Option<Vec<Congestion>>> = vec![None; tree.len()];
    let mut parts: Vec<Option<PartRow>> = vec![None; tree.len()];
    let mut kept: Vec<Option<Vec<Congestion>>> = vec![None; tree.len()];
    let mut leaf_slots = vec![None; tree.len()];
    let empty_row = {
        let mut v = vec![Congestion::Infeasible; size];
        v[0] = Congestion::ZERO;
        v
    };
    let mut root_value = Congestion::Infeasible;

    for u in tree.postorder() {
        let kids = tree.children(u);
        if u == root {
            let l = Child {
                up: up[kids[0].index()].as_deref().unwrap(),
                cap: caps[kids[0].index()],
            };
            let (value, arg) = match kids.get(1) {
                Some(rk) => {
                    let r = Child {
                        up: up[rk.index()].as_deref().unwrap(),
                        cap: caps[rk.index()],
                    };
                    best_split(full, &l, &r, opts.prune)
                }
                None => (l.up[full as usize], full),
            };
            root_value = value;
            if opts.record_partitions {
                parts[u.index()] = Some(PartRow::Single {
                    set: full,
                    left: arg,
                });
            }
            break;
        }

        let cap_u = caps[u.index()];
        let live = |s: u32| !opts.prune || s.count_ones() <= cap_u;
        let row: Vec<Congestion> = if kids.is_empty() {
            leaf_slots[u.index()] = Some(tree.slots(u));
            (0..size as u32)
                .map(|s| leaf_congestion(VmSubset(s), tree.slots(u)))
                .collect()
        } else {
            let l_up = up[kids[0].index()].take().unwrap();
            let r_up = kids.get(1).map(|rk| up[rk.index()].take().unwrap());
            let l = Child {
                up: &l_up,
                cap: caps[kids[0].index()],
            };
            let r = Child {
                up: r_up.as_deref().unwrap_or(&empty_row),
                cap: kids.get(1).map_or(0, |rk| caps[rk.index()]),
            };
            let sparse = opts.prune && subsets_up_to(k, cap_u as u64) * 8 < size as u64;
            let mut dense_part = (opts.record_partitions && !sparse).then(|| vec![0u32; size]);
            let mut sparse_part = (opts.record_partitions && sparse).then(HashMap::new);
            let mut row = vec![Congestion::Infeasible; size];
            for s in 0..size as u32 {
                if !live(s) {
                    continue;
                }
                let (value, arg) = if r_up.is_some() {
                    best_split(s, &l, &r, opts.prune)
                } else {
                    (l.up[s as usize], s)
                };
                row[s as usize] = value;
                if let Some(p) = dense_part.as_mut() {
                    p[s as usize] = arg;
                }
                if let Some(p) = sparse_part.as_mut() {
                    p.insert(s, arg);
                }
            }
            if let Some(p) = dense_part {
                parts[u.index()] = Some(PartRow::Dense(p));
            }
            if let Some(p) = sparse_part {
                parts[u.index()] = Some(PartRow::Sparse(p));
            }
            if opts.retain_tables {
                kept[u.index()] = Some(row.clone());
            }
            row
        };

        // fold in the edge above u
        let cap = tree.capacity(u).expect("non-root edge");
        let mut row = row;
        for s in 0..size as u32 {
            let cell = &mut row[s as usize];
            // max(Infeasible, x) is Infeasible
            if !cell.is_feasible() {
                continue;
            }
            let ratio = flow_ratio(flow, s, cap)?;
            *cell = (*cell).max(ratio);
        }
        up[u.index()] = Some(row);
    }

    Ok(DpRun {
        congestion: root_value,
        partitions: opts.record_partitions.then_some(PartitionTable { k, rows: parts }),
        tables: opts.retain_tables.then_some(CongestionTable {
            k,
            root,
            root_value,
            rows: kept,
            leaf_slots,
        }),
    })
}

/// Rebuilds an optimal embedding by following recorded splits from the root.
pub fn backtrack(part: &PartitionTable, t: &BinaryTopology, r: &RequestGraph) -> Result<Embedding> {
    let tree: &Topology = t;
    let mut assignment: Vec<Option<NodeId>> = vec![None; r.k()];
    let mut stack = vec![(tree.root(), r.full_set())];
    while let Some((u, s)) = stack.pop() {
        if s.is_empty() {
            continue;
        }
        let kids = tree.children(u);
        if kids.is_empty() {
            if s.len() > tree.slots(u) {
                return Err(Error::Infeasible);
            }
            for vm in s.iter() {
                assignment[vm] = Some(u);
            }
            continue;
        }
        let (left, right) = part.get(u, s).ok_or(Error::Infeasible)?;
        stack.push((kids[0], left));
        match kids.get(1) {
            Some(&rk) => stack.push((rk, right)),
            None if right.is_empty() => {}
            None => return Err(Error::Infeasible),
        }
    }
    let assignment = assignment
        .into_iter()
        .enumerate()
        .map(|(i, a)| a.ok_or(Error::UnmappedVm(i)))
        .collect::<Result<Vec<_>>>()?;
    Embedding::new(tree, r, assignment)
}

/// Minimum congestion and an optimal embedding; `None` when the request does
/// not fit in the tree's slots.
pub fn solve(t: &BinaryTopology, r: &RequestGraph) -> Result<Option<Embedding>> {
    solve_with(t, r, SolveOptions::default())
}

pub fn solve_with(
    t: &BinaryTopology,
    r: &RequestGraph,
    opts: SolveOptions,
) -> Result<Option<Embedding>> {
    let opts = SolveOptions {
        record_partitions: true,
        ..opts
    };
    let run = run_dp(t, r, opts)?;
    let Congestion::Finite(value) = run.congestion else {
        return Ok(None);
    };
    let emb = backtrack(run.partitions.as_ref().unwrap(), t, r)?;
    debug_assert_eq!(emb.congestion, value);
    Ok(Some(emb))
}

/// Minimum congestion only; skips partition bookkeeping.
pub fn min_congestion(t: &BinaryTopology, r: &RequestGraph) -> Result<Congestion> {
    let opts = SolveOptions {
        record_partitions: false,
        ..SolveOptions::default()
    };
    Ok(run_dp(t, r, opts)?.congestion)
}
