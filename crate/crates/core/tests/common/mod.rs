#![allow(dead_code)]

use rand::Rng;
use treeplace::topology::{NodeId, NodeSpec, TopologyBuilder, TopologySpec};
use treeplace::{Capacity, Rational, Topology};

/// Random tree on `n` nodes where every node has at most `max_children`
/// children. Leaves get `1..=max_slots` slots; capacities are multiples of
/// 1/4 in (0, 20].
pub fn random_tree<R: Rng>(rng: &mut R, n: usize, max_children: usize, max_slots: u32) -> Topology {
    assert!(n >= 2);
    let mut parent = vec![0usize; n];
    let mut kids = vec![0usize; n];
    for i in 1..n {
        let p = loop {
            let p = rng.gen_range(0..i);
            if kids[p] < max_children {
                break p;
            }
        };
        parent[i] = p;
        kids[p] += 1;
    }
    let mut b = TopologyBuilder::new("g");
    for i in 1..n {
        let cap = Capacity::Finite(Rational::new(rng.gen_range(1..=80), 4).unwrap());
        let slots = if kids[i] == 0 { rng.gen_range(1..=max_slots) } else { 0 };
        b.add(format!("n{i}"), NodeId(parent[i]), cap, slots);
    }
    b.build().unwrap()
}

/// Same tree with every leaf's slot count redrawn from `lo..=hi`.
pub fn with_random_slots<R: Rng>(rng: &mut R, t: &Topology, lo: u32, hi: u32) -> Topology {
    let spec = t.to_spec();
    let nodes = spec
        .nodes
        .into_iter()
        .enumerate()
        .map(|(i, n)| {
            let vm_slots = if t.is_leaf(NodeId(i)) { rng.gen_range(lo..=hi) } else { 0 };
            NodeSpec { vm_slots, ..n }
        })
        .collect();
    Topology::from_spec(&TopologySpec { root: spec.root, nodes }).unwrap()
}
