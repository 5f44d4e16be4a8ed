//! Adversarial fixtures built from 3-partition inputs: weighted path requests
//! and unweighted star-chain requests on height-2 trees. Yes-instances come
//! with a congestion-1 certificate; no-instances force congestion at least
//! the gap bound.

use crate::embedding::{evaluate, Embedding};
use crate::error::{Error, Result};
use crate::rational::{Capacity, Rational};
use crate::request::{RequestBuilder, RequestGraph};
use crate::topology::{NodeId, Topology, TopologyBuilder};

pub const DEFAULT_SIZE_CAP: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreePartitionInstance {
    m: usize,
    b: u64,
    values: Vec<u64>,
    known_partition: Option<Vec<[usize; 3]>>,
}

impl ThreePartitionInstance {
    /// `3m` positive values summing to `mB`.
    pub fn new(m: usize, b: u64, values: Vec<u64>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidThreePartition(msg));
        if m == 0 {
            return bad("m must be at least 1".into());
        }
        if values.len() != 3 * m {
            return bad(format!("expected {} values, got {}", 3 * m, values.len()));
        }
        if values.contains(&0) {
            return bad("values must be positive".into());
        }
        let sum: u128 = values.iter().map(|&v| v as u128).sum();
        if sum != m as u128 * b as u128 {
            return bad(format!("values sum to {sum}, expected m*B = {}", m as u128 * b as u128));
        }
        Ok(ThreePartitionInstance {
            m,
            b,
            values,
            known_partition: None,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn b(&self) -> u64 {
        self.b
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }

    pub fn known_partition(&self) -> Option<&[[usize; 3]]> {
        self.known_partition.as_deref()
    }

    /// Whether `B/4 < s < B/2` holds for every value.
    pub fn is_constrained(&self) -> bool {
        self.values.iter().all(|&s| 4 * s > self.b && 2 * s < self.b)
    }

    pub fn require_constrained(&self) -> Result<()> {
        if self.is_constrained() {
            Ok(())
        } else {
            Err(Error::InvalidThreePartition(format!(
                "values must lie strictly between B/4 and B/2 (B = {})",
                self.b
            )))
        }
    }

    pub fn with_partition(mut self, triples: Vec<[usize; 3]>) -> Result<Self> {
        let mut seen = vec![false; self.values.len()];
        if triples.len() != self.m {
            return Err(Error::InvalidThreePartition(format!("expected {} triples", self.m)));
        }
        for t in &triples {
            let mut sum = 0;
            for &i in t {
                if i >= seen.len() || seen[i] {
                    return Err(Error::InvalidThreePartition(format!("bad index {i} in partition")));
                }
                seen[i] = true;
                sum += self.values[i];
            }
            if sum != self.b {
                return Err(Error::InvalidThreePartition(format!("triple {t:?} sums to {sum}")));
            }
        }
        self.known_partition = Some(triples);
        Ok(self)
    }

    /// Attaches the partition found by exhaustive search, if any.
    pub fn solved(self) -> Self {
        match find_three_partition(&self.values, self.b) {
            Some(p) => self.with_partition(p).expect("search returns valid triples"),
            None => self,
        }
    }
}

/// Exhaustive search for a split of `values` into triples each summing to `b`.
/// The smallest unused index always opens the next triple.
pub fn find_three_partition(values: &[u64], b: u64) -> Option<Vec<[usize; 3]>> {
    fn go(values: &[u64], b: u64, used: &mut [bool], out: &mut Vec<[usize; 3]>) -> bool {
        let Some(i) = used.iter().position(|u| !u) else {
            return true;
        };
        used[i] = true;
        for j in i + 1..values.len() {
            if used[j] || values[i] + values[j] >= b {
                continue;
            }
            used[j] = true;
            for l in j + 1..values.len() {
                if !used[l] && values[i] + values[j] + values[l] == b {
                    used[l] = true;
                    out.push([i, j, l]);
                    if go(values, b, used, out) {
                        return true;
                    }
                    out.pop();
                    used[l] = false;
                }
            }
            used[j] = false;
        }
        used[i] = false;
        false
    }
    if values.len() % 3 != 0 || values.iter().sum::<u64>() != b * (values.len() as u64 / 3) {
        return None;
    }
    let mut out = Vec::new();
    go(values, b, &mut vec![false; values.len()], &mut out).then_some(out)
}

/// Exhaustive search for a split of `values` into groups of any size, each
/// summing to `b`.
pub fn find_grouping(values: &[u64], b: u64) -> Option<Vec<Vec<usize>>> {
    fn fill(values: &[u64], b: u64, used: &mut [bool], group: &mut Vec<usize>, rest: u64, from: usize, out: &mut Vec<Vec<usize>>) -> bool {
        if rest == 0 {
            out.push(std::mem::take(group));
            if open(values, b, used, out) {
                return true;
            }
            *group = out.pop().unwrap();
            return false;
        }
        for j in from..values.len() {
            if !used[j] && values[j] <= rest {
                used[j] = true;
                group.push(j);
                if fill(values, b, used, group, rest - values[j], j + 1, out) {
                    return true;
                }
                group.pop();
                used[j] = false;
            }
        }
        false
    }
    fn open(values: &[u64], b: u64, used: &mut [bool], out: &mut Vec<Vec<usize>>) -> bool {
        let Some(i) = used.iter().position(|u| !u) else {
            return true;
        };
        if values[i] > b {
            return false;
        }
        used[i] = true;
        let mut group = vec![i];
        if fill(values, b, used, &mut group, b - values[i], i + 1, out) {
            return true;
        }
        used[i] = false;
        false
    }
    if b == 0 || values.iter().sum::<u64>() % b != 0 {
        return None;
    }
    let mut out = Vec::new();
    open(values, b, &mut vec![false; values.len()], &mut out).then_some(out)
}

#[derive(Clone, Debug)]
pub struct HardInstance {
    pub topology: Topology,
    pub request: RequestGraph,
    /// Congestion-1 embedding when a partition is known.
    pub certificate: Option<Embedding>,
    /// Lower bound on the optimum for no-instances.
    pub gap_bound: Rational,
}

fn finite(n: u64) -> Capacity {
    Capacity::Finite(Rational::from_integer(n))
}

/// Root `g` with `m` switches `S1..Sm` on capacity-6 links, each holding
/// `per_switch` one-slot leaves on links of capacity `leaf_cap`.
fn height_two(m: usize, per_switch: u64, leaf_cap: u64) -> Result<(Topology, Vec<Vec<NodeId>>)> {
    let mut b = TopologyBuilder::new("g");
    let mut groups = Vec::with_capacity(m);
    for j in 1..=m {
        let s = b.add(format!("S{j}"), NodeId(0), finite(6), 0);
        let leaves = (1..=per_switch)
            .map(|l| b.add(format!("S{j}.{l}"), s, finite(leaf_cap), 1))
            .collect();
        groups.push(leaves);
    }
    Ok((b.build()?, groups))
}

/// Weighted path reduction. The request is a path on `mB` VMs cut into
/// consecutive intervals of lengths `s_1..s_3m`; edges inside an interval
/// weigh `w`, edges between intervals weigh 1, and the first VM has an
/// uplink of 1. Leaf links have capacity `2w` so that an interior VM of an
/// interval, which carries both of its heavy edges, is exactly saturated.
pub fn gen_weighted_path(tp: &ThreePartitionInstance, w: u64) -> Result<HardInstance> {
    tp.require_constrained()?;
    weighted_path(tp, w)
}

/// [`gen_weighted_path`] without the `B/4 < s < B/2` requirement, for
/// no-instances small enough to solve.
pub fn gen_weighted_path_relaxed(tp: &ThreePartitionInstance, w: u64) -> Result<HardInstance> {
    weighted_path(tp, w)
}

fn weighted_path(tp: &ThreePartitionInstance, w: u64) -> Result<HardInstance> {
    if w <= 6 {
        return Err(Error::InvalidArgument(format!("W must exceed 6, got {w}")));
    }
    let leaf_cap = w.checked_mul(2).ok_or(Error::Overflow("leaf capacity"))?;
    let (topology, groups) = height_two(tp.m, tp.b, leaf_cap)?;

    let k: u64 = tp.values.iter().sum();
    let mut intervals = Vec::with_capacity(tp.values.len());
    let mut rb = RequestBuilder::new();
    let mut next = 0usize;
    for &s in &tp.values {
        let start = next;
        for _ in 0..s {
            next += 1;
            rb.vm(format!("v{next}"))?;
        }
        intervals.push(start..next);
    }
    debug_assert_eq!(next as u64, k);
    rb.uplink_at(0, Rational::ONE)?;
    let heavy = Rational::from_integer(w);
    for iv in &intervals {
        for i in iv.start..iv.end - 1 {
            rb.chatter_at(i, i + 1, heavy)?;
        }
        if iv.end < next {
            rb.chatter_at(iv.end - 1, iv.end, Rational::ONE)?;
        }
    }
    let request = rb.build()?;

    let certificate = match &tp.known_partition {
        None => None,
        Some(triples) => {
            let mut assignment = vec![NodeId(0); request.k()];
            for (triple, leaves) in triples.iter().zip(&groups) {
                let vms = triple.iter().flat_map(|&i| intervals[i].clone());
                for (vm, &leaf) in vms.zip(leaves) {
                    assignment[vm] = leaf;
                }
            }
            Some(Embedding::new(&topology, &request, assignment)?)
        }
    };
    Ok(HardInstance {
        topology,
        request,
        certificate,
        gap_bound: Rational::new(w, 6).unwrap(),
    })
}

/// `M = (5mB)^ceil((1 - eps) / eps)`.
pub fn star_multiplier(m: usize, b: u64, eps: Rational) -> Result<u128> {
    if eps.is_zero() || eps >= Rational::ONE {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {eps}")));
    }
    let (p, q) = (eps.numer() as u128, eps.denom() as u128);
    let exp = (q - p).div_ceil(p);
    let base = 5 * m as u128 * b as u128;
    let exp = u32::try_from(exp).map_err(|_| Error::Overflow("star multiplier"))?;
    base.checked_pow(exp).ok_or(Error::Overflow("star multiplier"))
}

/// Node count of the unweighted tree instance: `1 + m + m(3 + BM)`.
pub fn unweighted_tree_size(m: usize, b: u64, mult: u128) -> Option<u128> {
    let per = (b as u128).checked_mul(mult)?.checked_add(3)?;
    (m as u128).checked_mul(per)?.checked_add(1 + m as u128)
}

/// Unweighted star-chain reduction. Each value `s_i` becomes a center with
/// `s_i * M` star leaves; consecutive centers are chained, and the first and
/// last centers need an uplink. All demands are 1. Each switch `Sj` holds
/// `3 + BM` one-slot leaves on links of capacity `BM + 2`.
pub fn gen_unweighted_tree(tp: &ThreePartitionInstance, eps: Rational, size_cap: u128) -> Result<HardInstance> {
    tp.require_constrained()?;
    let mult = star_multiplier(tp.m, tp.b, eps).map_err(|e| match e {
        Error::Overflow(_) => Error::SizeCap {
            size: u128::MAX,
            cap: size_cap,
        },
        e => e,
    })?;
    let size = unweighted_tree_size(tp.m, tp.b, mult).unwrap_or(u128::MAX);
    if size > size_cap {
        return Err(Error::SizeCap { size, cap: size_cap });
    }
    let mult = mult as u64;
    let bm = tp.b * mult;
    let (topology, groups) = height_two(tp.m, 3 + bm, bm + 2)?;

    let mut rb = RequestBuilder::new();
    let mut centers = Vec::with_capacity(tp.values.len());
    let mut stars = Vec::with_capacity(tp.values.len());
    for (i, &s) in tp.values.iter().enumerate() {
        let c = rb.vm(format!("c{}", i + 1))?;
        let leaves: Vec<usize> = (1..=s * mult)
            .map(|l| rb.vm(format!("c{}.{l}", i + 1)))
            .collect::<Result<_>>()?;
        for &l in &leaves {
            rb.chatter_at(c, l, Rational::ONE)?;
        }
        centers.push(c);
        stars.push(leaves);
    }
    for pair in centers.windows(2) {
        rb.chatter_at(pair[0], pair[1], Rational::ONE)?;
    }
    rb.uplink_at(centers[0], Rational::ONE)?;
    if centers.len() > 1 {
        rb.uplink_at(*centers.last().unwrap(), Rational::ONE)?;
    }
    let request = rb.build()?;

    let certificate = match &tp.known_partition {
        None => None,
        Some(triples) => {
            let mut assignment = vec![NodeId(0); request.k()];
            for (triple, leaves) in triples.iter().zip(&groups) {
                let vms = triple
                    .iter()
                    .map(|&i| centers[i])
                    .chain(triple.iter().flat_map(|&i| stars[i].iter().copied()));
                for (vm, &leaf) in vms.zip(leaves) {
                    assignment[vm] = leaf;
                }
            }
            Some(Embedding::new(&topology, &request, assignment)?)
        }
    };
    Ok(HardInstance {
        topology,
        request,
        certificate,
        gap_bound: Rational::new(mult, 6).unwrap(),
    })
}

/// Whether the request's chatter edges form a simple path through all VMs.
pub fn is_path_request(r: &RequestGraph) -> bool {
    let k = r.k();
    let mut deg = vec![0usize; k];
    for e in r.chatter() {
        deg[e.a] += 1;
        deg[e.b] += 1;
    }
    r.chatter().len() + 1 == k && deg.iter().all(|&d| d <= 2) && is_connected(r)
}

/// Whether the request's chatter edges form a spanning tree.
pub fn is_tree_request(r: &RequestGraph) -> bool {
    r.chatter().len() + 1 == r.k() && is_connected(r)
}

fn is_connected(r: &RequestGraph) -> bool {
    let k = r.k();
    let mut adj = vec![Vec::new(); k];
    for e in r.chatter() {
        adj[e.a].push(e.b);
        adj[e.b].push(e.a);
    }
    let mut seen = vec![false; k];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Re-evaluates a certificate against its instance.
pub fn certificate_congestion(h: &HardInstance) -> Option<Result<Rational>> {
    h.certificate
        .as_ref()
        .map(|c| evaluate(&h.topology, &h.request, &c.assignment))
}
