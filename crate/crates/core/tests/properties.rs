mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::random_tree;
use treeplace::bench::random_request;
use treeplace::cluster::{cluster_solve, expand_counts, ClusterRequest};
use treeplace::{evaluate, linear_scan, solve, to_binary, Capacity, NodeId, Rational};

fn config() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn solve_on_binary_matches_scan_on_original(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(3..=14);
        let t = random_tree(&mut rng, n, 6, 2);
        prop_assume!(t.leaves().len() <= 12);
        let k = rng.gen_range(1..=4);
        let r = random_request(&mut rng, k, 0.3).unwrap();
        let bin = to_binary(&t);
        let dp = solve(&bin, &r).unwrap();
        let scan = linear_scan(&t, &r).unwrap();
        prop_assert_eq!(dp.as_ref().map(|e| e.congestion), scan.as_ref().map(|e| e.congestion));
        if let Some(e) = dp {
            prop_assert_eq!(evaluate(&t, &r, &e.assignment).unwrap(), e.congestion);
            prop_assert_eq!(evaluate(&bin, &r, &e.assignment).unwrap(), e.congestion);
        }
    }

    #[test]
    fn binarization_preserves_congestion(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=40);
        let t = random_tree(&mut rng, n, 9, 3);
        let bin = to_binary(&t);
        let k = rng.gen_range(1..=6);
        let r = random_request(&mut rng, k, 0.4).unwrap();
        let leaves = t.leaves();
        let a: Vec<NodeId> = (0..k).map(|_| leaves[rng.gen_range(0..leaves.len())]).collect();
        let over = a.iter().any(|l| a.iter().filter(|x| *x == l).count() > t.slots(*l) as usize);
        prop_assume!(!over);
        prop_assert_eq!(evaluate(&t, &r, &a).unwrap(), evaluate(&bin, &r, &a).unwrap());
    }

    #[test]
    fn binarization_shape(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=200);
        let t = random_tree(&mut rng, n, 15, 2);
        let bin = to_binary(&t);
        prop_assert!(bin.max_children() <= 2);
        prop_assert!(bin.len() <= 2 * t.len());
        prop_assert_eq!(bin.leaves(), t.leaves());
        let finite = |x: &treeplace::Topology| {
            let mut v: Vec<Rational> = x.ids().filter_map(|u| x.capacity(u).and_then(|c| c.finite())).collect();
            v.sort();
            v
        };
        prop_assert_eq!(finite(&bin), finite(&t));
        let twice = to_binary(&bin);
        prop_assert_eq!(twice.len(), bin.len());
        prop_assert_eq!(finite(&twice), finite(&t));
        for u in bin.ids().skip(t.len()) {
            prop_assert_eq!(bin.capacity(u), Some(Capacity::Unbounded));
        }
    }

    #[test]
    fn cluster_matches_generic_on_clique(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(2..=40);
        let t = random_tree(&mut rng, n, 5, 3);
        prop_assume!(t.leaves().len() <= 30);
        let k = rng.gen_range(1..=8);
        let c = ClusterRequest::new(k, Rational::new(rng.gen_range(1..=40), 4).unwrap()).unwrap();
        let bin = to_binary(&t);
        let clique = c.to_clique().unwrap();
        let generic = solve(&bin, &clique).unwrap();
        let counts = cluster_solve(&bin, &c).unwrap();
        prop_assert_eq!(counts.as_ref().map(|p| p.congestion), generic.map(|e| e.congestion));
        if let Some(p) = counts {
            let e = expand_counts(&t, &c, &p.counts).unwrap();
            prop_assert_eq!(evaluate(&t, &clique, &e.assignment).unwrap(), p.congestion);
        }
    }
}

#[test]
fn greedy_pairing_trap_matches_oracle() {
    use treeplace::request::RequestBuilder;
    use treeplace::topology::TopologyBuilder;
    let cap = |n| Capacity::Finite(Rational::from_integer(n));
    let mut b = TopologyBuilder::new("g");
    let wide = b.add("wide", NodeId(0), cap(20), 0);
    let thin = b.add("thin", NodeId(0), cap(1), 0);
    b.add("w1", wide, cap(20), 2);
    b.add("w2", wide, cap(20), 1);
    b.add("t1", thin, cap(20), 1);
    let t = b.build().unwrap();
    let mut rb = RequestBuilder::new();
    for v in ["a", "b", "c", "d"] {
        rb.vm(v).unwrap();
    }
    let q = |s: &str| s.parse::<Rational>().unwrap();
    // The heaviest pair co-located first leaves c, d split across the thin link.
    rb.chatter("a", "b", q("10")).unwrap();
    rb.chatter("c", "d", q("9")).unwrap();
    rb.chatter("b", "c", q("0.5")).unwrap();
    rb.uplink("a", q("2")).unwrap();
    let r = rb.build().unwrap();
    let dp = solve(&to_binary(&t), &r).unwrap().unwrap();
    let scan = linear_scan(&t, &r).unwrap().unwrap();
    assert_eq!(dp.congestion, scan.congestion);
}
