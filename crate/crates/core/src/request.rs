//! VM request graphs and the per-subset cut flows used by the subset DP.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Largest request the subset DP accepts; tables hold `2^k` entries per node.
pub const SUBSET_LIMIT: usize = 24;

/// Chatter demand between two VMs, stored with `a < b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChatterEdge {
    pub a: usize,
    pub b: usize,
    pub bw: Rational,
}

/// VMs plus their uplink (VM–gateway) and chatter (VM–VM) demands.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestGraph {
    vms: Vec<String>,
    uplinks: Vec<Option<Rational>>,
    chatter: Vec<ChatterEdge>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSpec {
    pub vms: Vec<String>,
    #[serde(default)]
    pub uplinks: Vec<UplinkSpec>,
    #[serde(default)]
    pub chatter: Vec<ChatterSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UplinkSpec {
    pub vm: String,
    pub bw: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatterSpec {
    pub a: String,
    pub b: String,
    pub bw: Rational,
}

impl RequestGraph {
    pub fn from_spec(spec: &RequestSpec) -> Result<Self> {
        let mut b = RequestBuilder::new();
        for v in &spec.vms {
            b.vm(v.clone())?;
        }
        for u in &spec.uplinks {
            b.uplink(&u.vm, u.bw)?;
        }
        for c in &spec.chatter {
            b.chatter(&c.a, &c.b, c.bw)?;
        }
        b.build()
    }

    pub fn to_spec(&self) -> RequestSpec {
        RequestSpec {
            vms: self.vms.clone(),
            uplinks: self
                .uplinks
                .iter()
                .enumerate()
                .filter_map(|(i, u)| {
                    u.map(|bw| UplinkSpec {
                        vm: self.vms[i].clone(),
                        bw,
                    })
                })
                .collect(),
            chatter: self
                .chatter
                .iter()
                .map(|e| ChatterSpec {
                    a: self.vms[e.a].clone(),
                    b: self.vms[e.b].clone(),
                    bw: e.bw,
                })
                .collect(),
        }
    }

    /// Number of VMs.
    pub fn k(&self) -> usize {
        self.vms.len()
    }

    pub fn vm_label(&self, i: usize) -> &str {
        &self.vms[i]
    }

    pub fn vm_labels(&self) -> &[String] {
        &self.vms
    }

    pub fn uplink(&self, i: usize) -> Option<Rational> {
        self.uplinks[i]
    }

    pub fn uplinks(&self) -> impl Iterator<Item = (usize, Rational)> + '_ {
        self.uplinks
            .iter()
            .enumerate()
            .filter_map(|(i, u)| u.map(|bw| (i, bw)))
    }

    pub fn chatter(&self) -> &[ChatterEdge] {
        &self.chatter
    }

    pub fn full_set(&self) -> VmSubset {
        VmSubset::full(self.k())
    }
}

/// Builds a [`RequestGraph`], rejecting self-loops, duplicates and
/// nonpositive demands as they are added.
#[derive(Debug, Default)]
pub struct RequestBuilder {
    vms: Vec<String>,
    index: HashMap<String, usize>,
    uplinks: Vec<Option<Rational>>,
    chatter: Vec<ChatterEdge>,
    seen: HashSet<(usize, usize)>,
}

impl RequestBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vm(&mut self, label: impl Into<String>) -> Result<usize> {
        let label = label.into();
        if self.index.contains_key(&label) {
            return Err(Error::DuplicateVm(label));
        }
        let i = self.vms.len();
        self.index.insert(label.clone(), i);
        self.vms.push(label);
        self.uplinks.push(None);
        Ok(i)
    }

    fn resolve(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownVm(label.to_string()))
    }

    pub fn uplink(&mut self, vm: &str, bw: Rational) -> Result<()> {
        let i = self.resolve(vm)?;
        self.uplink_at(i, bw)
    }

    pub fn uplink_at(&mut self, i: usize, bw: Rational) -> Result<()> {
        let label = self.vms[i].clone();
        if bw.is_zero() {
            return Err(Error::NonpositiveBandwidth(format!("uplink of `{label}`")));
        }
        if self.uplinks[i].is_some() {
            return Err(Error::DuplicateEdge(format!("uplink of `{label}`")));
        }
        self.uplinks[i] = Some(bw);
        Ok(())
    }

    pub fn chatter(&mut self, a: &str, b: &str, bw: Rational) -> Result<()> {
        let (i, j) = (self.resolve(a)?, self.resolve(b)?);
        self.chatter_at(i, j, bw)
    }

    pub fn chatter_at(&mut self, i: usize, j: usize, bw: Rational) -> Result<()> {
        if i == j {
            return Err(Error::SelfLoop(self.vms[i].clone()));
        }
        let (a, b) = (i.min(j), i.max(j));
        let name = || format!("`{}`–`{}`", self.vms[a], self.vms[b]);
        if bw.is_zero() {
            return Err(Error::NonpositiveBandwidth(name()));
        }
        if !self.seen.insert((a, b)) {
            return Err(Error::DuplicateEdge(name()));
        }
        self.chatter.push(ChatterEdge { a, b, bw });
        Ok(())
    }

    pub fn build(self) -> Result<RequestGraph> {
        if self.vms.is_empty() {
            return Err(Error::EmptyRequest);
        }
        Ok(RequestGraph {
            vms: self.vms,
            uplinks: self.uplinks,
            chatter: self.chatter,
        })
    }
}

/// A set of VMs as a bitmask over VM indices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VmSubset(pub u32);

impl VmSubset {
    pub const EMPTY: VmSubset = VmSubset(0);

    /// All of `0..k`. Requires `k <= 32`.
    pub fn full(k: usize) -> Self {
        assert!(k <= 32, "subset masks hold at most 32 VMs");
        if k == 32 {
            VmSubset(u32::MAX)
        } else {
            VmSubset((1u32 << k) - 1)
        }
    }

    pub fn contains(self, vm: usize) -> bool {
        vm < 32 && self.0 >> vm & 1 == 1
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn minus(self, other: VmSubset) -> VmSubset {
        VmSubset(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: VmSubset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let i = m.trailing_zeros() as usize;
                m &= m - 1;
                Some(i)
            }
        })
    }
}

impl FromIterator<usize> for VmSubset {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        VmSubset(iter.into_iter().fold(0, |m, i| m | 1 << i))
    }
}

/// `Flow[S]` for every subset: bandwidth crossing the cut between `S` and the
/// rest of the request (gateway included).
///
/// Entries are integers over a common denominator so the table stays compact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowTable {
    k: usize,
    denom: u64,
    flows: Vec<u64>,
}

impl FlowTable {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.flows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flows.is_empty()
    }

    pub fn get(&self, s: VmSubset) -> Rational {
        Rational::new(self.flows[s.0 as usize], self.denom).expect("nonzero denominator")
    }

    /// Numerator of `Flow[S]` over [`FlowTable::denom`].
    pub fn raw(&self, s: VmSubset) -> u64 {
        self.flows[s.0 as usize]
    }

    pub fn denom(&self) -> u64 {
        self.denom
    }
}

fn lcm(a: u64, b: u64) -> Option<u64> {
    let g = crate::rational::gcd_u128(a as u128, b as u128) as u64;
    (a / g).checked_mul(b)
}

/// Evaluates the defining sum for every subset: uplinks of VMs in `S` plus
/// chatter with exactly one endpoint in `S`.
pub fn build_flow_table(r: &RequestGraph) -> Result<FlowTable> {
    let k = r.k();
    if k > SUBSET_LIMIT {
        return Err(Error::SubsetLimit {
            k,
            limit: SUBSET_LIMIT,
        });
    }
    let mut denom = 1u64;
    for (_, bw) in r.uplinks() {
        denom = lcm(denom, bw.denom()).ok_or(Error::Overflow("flow denominator"))?;
    }
    for e in r.chatter() {
        denom = lcm(denom, e.bw.denom()).ok_or(Error::Overflow("flow denominator"))?;
    }
    let scale = |bw: Rational| -> Result<u64> {
        bw.numer()
            .checked_mul(denom / bw.denom())
            .ok_or(Error::Overflow("flow numerator"))
    };
    let uplinks: Vec<(u32, u64)> = r
        .uplinks()
        .map(|(i, bw)| Ok((1u32 << i, scale(bw)?)))
        .collect::<Result<_>>()?;
    let chatter: Vec<(u32, u32, u64)> = r
        .chatter()
        .iter()
        .map(|e| Ok((1u32 << e.a, 1u32 << e.b, scale(e.bw)?)))
        .collect::<Result<_>>()?;
    let mut total = 0u64;
    for &(_, w) in &uplinks {
        total = total.checked_add(w).ok_or(Error::Overflow("total flow"))?;
    }
    for &(_, _, w) in &chatter {
        total = total.checked_add(w).ok_or(Error::Overflow("total flow"))?;
    }

    let flows = (0u32..1 << k)
        .map(|s| {
            let up: u64 = uplinks
                .iter()
                .filter(|&&(bit, _)| s & bit != 0)
                .map(|&(_, w)| w)
                .sum();
            let cut: u64 = chatter
                .iter()
                .filter(|&&(a, b, _)| (s & a != 0) != (s & b != 0))
                .map(|&(_, _, w)| w)
                .sum();
            up + cut
        })
        .collect();
    Ok(FlowTable { k, denom, flows })
}
