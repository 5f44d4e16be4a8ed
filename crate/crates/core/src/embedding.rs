//! VM-to-leaf embeddings and their congestion.

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::request::RequestGraph;
use crate::topology::{NodeId, Topology};

/// A placement of every VM on a server leaf, with the congestion it achieves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Embedding {
    /// `assignment[i]` is the leaf hosting VM `i`.
    pub assignment: Vec<NodeId>,
    pub congestion: Rational,
}

impl Embedding {
    /// Evaluates `assignment` and pairs it with its congestion.
    pub fn new(t: &Topology, r: &RequestGraph, assignment: Vec<NodeId>) -> Result<Self> {
        let congestion = evaluate(t, r, &assignment)?;
        Ok(Embedding {
            assignment,
            congestion,
        })
    }

    pub fn leaf_of(&self, vm: usize) -> NodeId {
        self.assignment[vm]
    }
}

/// Checks that every VM sits on a leaf and no leaf is over its slot count.
pub fn check_assignment(t: &Topology, r: &RequestGraph, assignment: &[NodeId]) -> Result<()> {
    if assignment.len() < r.k() {
        return Err(Error::UnmappedVm(assignment.len()));
    }
    if assignment.len() > r.k() {
        return Err(Error::UnknownVm(format!("#{}", r.k())));
    }
    let mut used = vec![0usize; t.len()];
    for &leaf in assignment {
        if leaf.index() >= t.len() {
            return Err(Error::UnknownNode(format!("#{}", leaf.index())));
        }
        if !t.is_leaf(leaf) {
            return Err(Error::NotALeaf(t.label(leaf).to_string()));
        }
        used[leaf.index()] += 1;
    }
    for (i, &n) in used.iter().enumerate() {
        let slots = t.slots(NodeId(i));
        if n > slots as usize {
            return Err(Error::SlotViolation {
                leaf: t.label(NodeId(i)).to_string(),
                used: n,
                slots,
            });
        }
    }
    Ok(())
}

/// Flow carried by the edge above each node (zero at the root).
///
/// Each request edge adds its demand at both endpoints and removes it twice at
/// their lowest common ancestor; the subtree sum at `u` is then exactly the
/// demand with one endpoint inside `T_u`.
pub fn edge_loads(t: &Topology, r: &RequestGraph, assignment: &[NodeId]) -> Result<Vec<Rational>> {
    check_assignment(t, r, assignment)?;
    let overflow = || Error::Overflow("edge load");
    let mut plus = vec![Rational::ZERO; t.len()];
    let mut minus = vec![Rational::ZERO; t.len()];
    let add = |v: &mut Vec<Rational>, u: NodeId, w: Rational| -> Result<()> {
        v[u.index()] = v[u.index()].checked_add(w).ok_or_else(overflow)?;
        Ok(())
    };
    let root = t.root();
    for (vm, bw) in r.uplinks() {
        add(&mut plus, assignment[vm], bw)?;
        add(&mut plus, root, bw)?;
        add(&mut minus, root, bw)?;
        add(&mut minus, root, bw)?;
    }
    for e in r.chatter() {
        let (a, b) = (assignment[e.a], assignment[e.b]);
        let top = t.lca(a, b);
        add(&mut plus, a, e.bw)?;
        add(&mut plus, b, e.bw)?;
        add(&mut minus, top, e.bw)?;
        add(&mut minus, top, e.bw)?;
    }
    for u in t.postorder() {
        if let Some(p) = t.parent(u) {
            let (pu, mu) = (plus[u.index()], minus[u.index()]);
            add(&mut plus, p, pu)?;
            add(&mut minus, p, mu)?;
        }
    }
    t.ids()
        .map(|u| {
            if u == root {
                Ok(Rational::ZERO)
            } else {
                plus[u.index()]
                    .checked_sub(minus[u.index()])
                    .ok_or(Error::Overflow("edge load difference"))
            }
        })
        .collect()
}

/// Maximum over edges of carried flow divided by capacity; unbounded edges
/// contribute zero.
pub fn evaluate(t: &Topology, r: &RequestGraph, assignment: &[NodeId]) -> Result<Rational> {
    let loads = edge_loads(t, r, assignment)?;
    let mut worst = Rational::ZERO;
    for u in t.ids() {
        let Some(cap) = t.capacity(u) else { continue };
        let c = cap
            .load_ratio(loads[u.index()])
            .ok_or(Error::Overflow("congestion ratio"))?;
        worst = worst.max(c);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::Capacity;
    use crate::request::RequestBuilder;
    use crate::topology::TopologyBuilder;
    use proptest::prelude::*;

    fn cap(n: u64) -> Capacity {
        Capacity::Finite(Rational::from_integer(n))
    }

    fn q(s: &str) -> Rational {
        s.parse().unwrap()
    }

    #[test]
    fn single_uplink_on_path() {
        let mut b = TopologyBuilder::new("g");
        let s = b.add("s", NodeId(0), cap(10), 0);
        let leaf = b.add("leaf", s, cap(10), 1);
        let t = b.build().unwrap();
        let mut rb = RequestBuilder::new();
        rb.vm("v1").unwrap();
        rb.uplink("v1", q("5")).unwrap();
        let r = rb.build().unwrap();
        assert_eq!(evaluate(&t, &r, &[leaf]).unwrap(), q("1/2"));
    }

    #[test]
    fn co_located_chatter_is_free() {
        let mut b = TopologyBuilder::new("g");
        let leaf = b.add("leaf", NodeId(0), cap(1), 2);
        b.add("other", NodeId(0), cap(1), 1);
        let t = b.build().unwrap();
        let mut rb = RequestBuilder::new();
        rb.vm("a").unwrap();
        rb.vm("b").unwrap();
        rb.chatter("a", "b", q("100")).unwrap();
        let r = rb.build().unwrap();
        assert_eq!(evaluate(&t, &r, &[leaf, leaf]).unwrap(), Rational::ZERO);
    }

    #[test]
    fn assignment_errors() {
        let mut b = TopologyBuilder::new("g");
        let mid = b.add("mid", NodeId(0), cap(1), 0);
        let leaf = b.add("leaf", mid, cap(1), 1);
        let t = b.build().unwrap();
        let mut rb = RequestBuilder::new();
        rb.vm("a").unwrap();
        rb.vm("b").unwrap();
        let r = rb.build().unwrap();
        assert!(matches!(evaluate(&t, &r, &[leaf]), Err(Error::UnmappedVm(1))));
        assert!(matches!(
            evaluate(&t, &r, &[leaf, leaf]),
            Err(Error::SlotViolation { used: 2, slots: 1, .. })
        ));
        assert!(matches!(evaluate(&t, &r, &[leaf, mid]), Err(Error::NotALeaf(_))));
    }

    /// Path-walking oracle: route each demand along `path_edges` explicitly.
    fn walk_loads(t: &Topology, r: &RequestGraph, a: &[NodeId]) -> Vec<Rational> {
        let mut load = vec![Rational::ZERO; t.len()];
        let mut route = |x: NodeId, y: NodeId, w: Rational| {
            for e in t.path_edges(x, y).unwrap() {
                load[e.index()] = load[e.index()].checked_add(w).unwrap();
            }
        };
        for (vm, bw) in r.uplinks() {
            route(a[vm], t.root(), bw);
        }
        for e in r.chatter() {
            route(a[e.a], a[e.b], e.bw);
        }
        load
    }

    proptest! {
        #[test]
        fn loads_match_path_walking(
            parents in proptest::collection::vec(any::<prop::sample::Index>(), 2..30),
            caps in proptest::collection::vec(1u64..20, 30),
            k in 1usize..7,
            picks in proptest::collection::vec(any::<prop::sample::Index>(), 7),
            ups in proptest::collection::vec(proptest::option::of(1u64..9), 7),
            chats in proptest::collection::vec(proptest::option::of(1u64..9), 21),
        ) {
            let parent_of: Vec<usize> = parents.iter().enumerate().map(|(i, p)| p.index(i + 1)).collect();
            let mut has_child = vec![false; parents.len() + 1];
            for &p in &parent_of { has_child[p] = true; }
            let mut b = TopologyBuilder::new("g");
            for (i, &p) in parent_of.iter().enumerate() {
                let slots = if has_child[i + 1] { 0 } else { 8 };
                b.add(format!("n{i}"), NodeId(p), cap(caps[i]), slots);
            }
            let t = b.build().unwrap();
            let leaves = t.leaves();

            let mut rb = RequestBuilder::new();
            for i in 0..k { rb.vm(format!("v{i}")).unwrap(); }
            for i in 0..k {
                if let Some(w) = ups[i] { rb.uplink_at(i, Rational::from_integer(w)).unwrap(); }
            }
            let mut idx = 0;
            for i in 0..k { for j in i + 1..k {
                if let Some(w) = chats[idx] { rb.chatter_at(i, j, Rational::new(w, 3).unwrap()).unwrap(); }
                idx += 1;
            }}
            let r = rb.build().unwrap();
            let a: Vec<NodeId> = (0..k).map(|i| leaves[picks[i].index(leaves.len())]).collect();

            let walked = walk_loads(&t, &r, &a);
            prop_assert_eq!(edge_loads(&t, &r, &a).unwrap(), walked.clone());
            let expect = t.ids().filter_map(|u| t.capacity(u).map(|c| c.load_ratio(walked[u.index()]).unwrap())).max().unwrap();
            prop_assert_eq!(evaluate(&t, &r, &a).unwrap(), expect);
        }
    }
}
