//! Brute-force minimum-congestion search over every slot-respecting
//! allocation. Ground truth for small instances.

use crate::embedding::{evaluate, Embedding};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::request::RequestGraph;
use crate::topology::{NodeId, Topology};

pub const MAX_ORACLE_LEAVES: usize = 12;
pub const MAX_ORACLE_VMS: usize = 5;

/// Scans all allocations of VMs to leaves on `t` as given (no binarization).
///
/// VMs are placed in index order, each trying leaves in id order; the first
/// allocation reaching the minimum is returned. `None` when the request does
/// not fit.
pub fn linear_scan(t: &Topology, r: &RequestGraph) -> Result<Option<Embedding>> {
    let leaves = t.leaves();
    if leaves.len() > MAX_ORACLE_LEAVES || r.k() > MAX_ORACLE_VMS {
        return Err(Error::OracleLimit {
            leaves: leaves.len(),
            k: r.k(),
            max_leaves: MAX_ORACLE_LEAVES,
            max_k: MAX_ORACLE_VMS,
        });
    }
    let mut free: Vec<u32> = leaves.iter().map(|&l| t.slots(l)).collect();
    let mut current = Vec::with_capacity(r.k());
    let mut best: Option<(Rational, Vec<NodeId>)> = None;
    scan(t, r, &leaves, &mut free, &mut current, &mut best)?;
    Ok(best.map(|(congestion, assignment)| Embedding {
        assignment,
        congestion,
    }))
}

fn scan(
    t: &Topology,
    r: &RequestGraph,
    leaves: &[NodeId],
    free: &mut [u32],
    current: &mut Vec<NodeId>,
    best: &mut Option<(Rational, Vec<NodeId>)>,
) -> Result<()> {
    if current.len() == r.k() {
        let c = evaluate(t, r, current)?;
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            *best = Some((c, current.clone()));
        }
        return Ok(());
    }
    for (i, &leaf) in leaves.iter().enumerate() {
        if free[i] == 0 {
            continue;
        }
        free[i] -= 1;
        current.push(leaf);
        scan(t, r, leaves, free, current, best)?;
        current.pop();
        free[i] += 1;
    }
    Ok(())
}

/// Every slot-respecting allocation, in scan order.
pub fn allocations(t: &Topology, k: usize) -> Vec<Vec<NodeId>> {
    fn go(leaves: &[(NodeId, u32)], used: &mut Vec<u32>, cur: &mut Vec<NodeId>, k: usize, out: &mut Vec<Vec<NodeId>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for (i, &(leaf, slots)) in leaves.iter().enumerate() {
            if used[i] < slots {
                used[i] += 1;
                cur.push(leaf);
                go(leaves, used, cur, k, out);
                cur.pop();
                used[i] -= 1;
            }
        }
    }
    let leaves: Vec<_> = t.leaves().into_iter().map(|l| (l, t.slots(l))).collect();
    let mut out = Vec::new();
    go(&leaves, &mut vec![0; leaves.len()], &mut Vec::new(), k, &mut out);
    out
}
