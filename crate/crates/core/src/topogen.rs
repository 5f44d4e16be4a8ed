//! Three-tier datacenter trees and seeded residual capacities.
//!
//! Shape: gateway `g` above a core switch `cs` (unbounded link), aggregation
//! switches at 100, top-of-rack switches at 40 and servers at 10 Gbps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rational::{Capacity, Rational};
use crate::topology::{NodeId, NodeSpec, Topology, TopologyBuilder, TopologySpec};

pub const CORE_TO_AS: u64 = 100;
pub const AS_TO_TOR: u64 = 40;
pub const TOR_TO_SERVER: u64 = 10;

/// Residuals are stored with this many fractional decimal digits.
const RESIDUAL_SCALE: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThreeTier {
    pub servers_per_rack: usize,
    pub racks_per_as: usize,
    pub as_count: usize,
    pub slots_per_server: u32,
}

impl Default for ThreeTier {
    fn default() -> Self {
        ThreeTier {
            servers_per_rack: 20,
            racks_per_as: 10,
            as_count: 5,
            slots_per_server: 1,
        }
    }
}

impl ThreeTier {
    pub fn new(servers_per_rack: usize, racks_per_as: usize, as_count: usize) -> Self {
        ThreeTier {
            servers_per_rack,
            racks_per_as,
            as_count,
            slots_per_server: 1,
        }
    }

    pub fn servers(&self) -> usize {
        self.servers_per_rack * self.racks_per_as * self.as_count
    }

    pub fn build(&self) -> Result<Topology> {
        if self.servers_per_rack == 0 || self.racks_per_as == 0 || self.as_count == 0 {
            return Err(Error::InvalidArgument("tier counts must be at least 1".into()));
        }
        if self.slots_per_server == 0 {
            return Err(Error::InvalidArgument("servers need at least one slot".into()));
        }
        let fin = |n| Capacity::Finite(Rational::from_integer(n));
        let mut b = TopologyBuilder::new("g");
        let cs = b.add("cs", NodeId(0), Capacity::Unbounded, 0);
        for a in 1..=self.as_count {
            let agg = b.add(format!("as{a}"), cs, fin(CORE_TO_AS), 0);
            for r in 1..=self.racks_per_as {
                let tor = b.add(format!("tor{a}.{r}"), agg, fin(AS_TO_TOR), 0);
                for s in 1..=self.servers_per_rack {
                    b.add(format!("srv{a}.{r}.{s}"), tor, fin(TOR_TO_SERVER), self.slots_per_server);
                }
            }
        }
        b.build()
    }
}

pub fn gen_three_tier(servers_per_rack: usize, racks_per_as: usize, as_count: usize) -> Result<Topology> {
    ThreeTier::new(servers_per_rack, racks_per_as, as_count).build()
}

/// A three-tier tree with exactly `servers` servers: racks of
/// `servers_per_rack`, ten racks per aggregation switch, the last rack and
/// aggregation switch partially filled.
pub fn three_tier_with_servers(servers: usize, servers_per_rack: usize) -> Result<Topology> {
    if servers == 0 || servers_per_rack == 0 {
        return Err(Error::InvalidArgument("server counts must be at least 1".into()));
    }
    let racks = servers.div_ceil(servers_per_rack);
    let racks_per_as = 10.min(racks);
    let full = ThreeTier::new(servers_per_rack, racks_per_as, racks.div_ceil(racks_per_as)).build()?;
    trim_leaves(&full, servers)
}

/// Keeps the first `keep` leaves by id and drops every node left without
/// leaves below it.
pub fn trim_leaves(t: &Topology, keep: usize) -> Result<Topology> {
    let mut alive = vec![false; t.len()];
    alive[t.root().index()] = true;
    for leaf in t.leaves().into_iter().take(keep) {
        let mut u = Some(leaf);
        while let Some(x) = u {
            if alive[x.index()] && x != leaf {
                break;
            }
            alive[x.index()] = true;
            u = t.parent(x);
        }
    }
    let spec = t.to_spec();
    let nodes = spec
        .nodes
        .into_iter()
        .zip(&alive)
        .filter_map(|(n, &a)| a.then_some(n))
        .collect();
    Topology::from_spec(&TopologySpec { root: spec.root, nodes })
}

/// Replaces every finite capacity `c` by a draw uniform on `[0, c]` at
/// micro-unit resolution, redrawing while the draw is at most `c / 1000`.
/// Unbounded links are kept. Edges are visited in node-id order, so a
/// given seed always yields the same residuals.
pub fn apply_residuals(t: &Topology, seed: u64) -> Result<Topology> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = t.to_spec();
    let nodes = spec
        .nodes
        .into_iter()
        .map(|n| {
            let capacity = match n.capacity {
                Some(Capacity::Finite(c)) => Some(Capacity::Finite(residual(&mut rng, c)?)),
                other => other,
            };
            Ok(NodeSpec { capacity, ..n })
        })
        .collect::<Result<_>>()?;
    Topology::from_spec(&TopologySpec { root: spec.root, nodes })
}

fn residual(rng: &mut ChaCha8Rng, c: Rational) -> Result<Rational> {
    let top = u64::try_from(c.floor_scaled(RESIDUAL_SCALE)).map_err(|_| Error::Overflow("residual"))?;
    let floor = c.checked_div_int(1000).ok_or(Error::Overflow("residual"))?;
    let as_rational = |micro: u64| Rational::new(micro, RESIDUAL_SCALE).unwrap();
    if as_rational(top) <= floor {
        // Too small to draw at this resolution.
        return Ok(c);
    }
    loop {
        let r = as_rational(rng.gen_range(0..=top));
        if r > floor {
            return Ok(r);
        }
    }
}
