//! Acceptance criteria, one PASS/FAIL line each. Runs sequentially so the
//! timing sweeps are not disturbed by other work.
//!
//! `cargo test -p treeplace-core --test acceptance -- <filter>` runs only the
//! criteria whose id or name contains `<filter>`.

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_tree, with_random_slots};
use treeplace::bench::{self, random_request, BenchConfig, BenchRow, Mode, Sweep};
use treeplace::cluster::{cluster_solve, ClusterRequest};
use treeplace::hardness::{
    find_grouping, find_three_partition, gen_unweighted_tree, gen_weighted_path, gen_weighted_path_relaxed,
    ThreePartitionInstance, DEFAULT_SIZE_CAP,
};
use treeplace::topogen::{trim_leaves, ThreeTier};
use treeplace::{apply_residuals, evaluate, linear_scan, solve, to_binary, Rational};

type Check = Result<String, String>;

struct Criterion {
    id: &'static str,
    name: &'static str,
    run: fn() -> Check,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0001);
    let trials = 200;
    let mut infeasible = 0;
    for trial in 0..trials {
        let tier = ThreeTier::new(rng.gen_range(1..=4), rng.gen_range(1..=3), rng.gen_range(1..=2));
        let t = trim_leaves(&tier.build().unwrap(), rng.gen_range(1..=10)).unwrap();
        let t = apply_residuals(&t, rng.gen()).unwrap();
        let t = with_random_slots(&mut rng, &t, 1, 2);
        let k = rng.gen_range(1..=4);
        let r = random_request(&mut rng, k, 0.3).unwrap();
        let dp = solve(&to_binary(&t), &r).map_err(|e| e.to_string())?;
        let scan = linear_scan(&t, &r).map_err(|e| e.to_string())?;
        let (a, b) = (dp.map(|e| e.congestion), scan.map(|e| e.congestion));
        ensure(a == b, || format!("trial {trial}: solve {a:?} != scan {b:?}"))?;
        infeasible += a.is_none() as usize;
    }
    Ok(format!("{trials} instances agree exactly ({infeasible} infeasible)"))
}

fn normalization() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0002);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=200);
        let t = random_tree(&mut rng, n, 15, 2);
        let bin = to_binary(&t);
        ensure(bin.max_children() <= 2, || "binarized tree has a node with 3+ children".into())?;
        ensure(bin.len() <= 2 * t.len(), || format!("{} nodes became {}", t.len(), bin.len()))?;
        worst = worst.max(bin.len() as f64 / t.len() as f64);
    }
    let mut solved = 0;
    while solved < 100 {
        let n = rng.gen_range(3..=14);
        let t = random_tree(&mut rng, n, 12, 2);
        if t.leaves().len() > 12 {
            continue;
        }
        let k = rng.gen_range(1..=4);
        let r = random_request(&mut rng, k, 0.3).unwrap();
        let a = solve(&to_binary(&t), &r).unwrap().map(|e| e.congestion);
        let b = linear_scan(&t, &r).unwrap().map(|e| e.congestion);
        ensure(a == b, || format!("binarized solve {a:?} != scan on original {b:?}"))?;
        solved += 1;
    }
    Ok(format!("1000 trees within 2n (max ratio {worst:.3}); 100 binarized solves match scans"))
}

fn cluster_agreement() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0xACCE_0003);
    let mut done = 0;
    while done < 100 {
        let n = rng.gen_range(2..=45);
        let t = random_tree(&mut rng, n, 5, 3);
        if t.leaves().len() > 30 {
            continue;
        }
        let k = rng.gen_range(2..=8);
        let c = ClusterRequest::new(k, Rational::new(rng.gen_range(1..=40), 4).unwrap()).unwrap();
        let bin = to_binary(&t);
        let a = cluster_solve(&bin, &c).unwrap().map(|p| p.congestion);
        let b = solve(&bin, &c.to_clique().unwrap()).unwrap().map(|e| e.congestion);
        ensure(a == b, || format!("cluster {a:?} != clique solve {b:?} (k = {k})"))?;
        done += 1;
    }
    Ok("100 instances agree exactly".into())
}

fn hardness_yes() -> Check {
    let cases: [(u64, &[u64]); 3] = [(7, &[2, 2, 3, 2, 2, 3]), (7, &[3, 3, 2, 2, 2, 2]), (9, &[3, 3, 3, 3, 3, 3])];
    let mut out = Vec::new();
    for (b, s) in cases {
        let tp = ThreePartitionInstance::new(2, b, s.to_vec()).unwrap().solved();
        ensure(tp.known_partition().is_some(), || format!("B={b} {s:?} has no partition"))?;
        let h = gen_weighted_path(&tp, 100).map_err(|e| e.to_string())?;
        let cert = h.certificate.as_ref().unwrap();
        let eval = evaluate(&h.topology, &h.request, &cert.assignment).unwrap();
        ensure(eval == Rational::ONE, || format!("B={b} {s:?}: certificate evaluates to {eval}"))?;
        let best = solve(&to_binary(&h.topology), &h.request).map_err(|e| e.to_string())?;
        let best = best.map(|e| e.congestion);
        ensure(best == Some(Rational::ONE), || format!("B={b} {s:?}: solve gave {best:?}"))?;
        out.push(format!("k={}", h.request.k()));
    }
    // Star-chain certificates are checked by evaluation only; their k is far
    // beyond the subset solver.
    let eps = Rational::new(1, 2).unwrap();
    let trees: [(u64, &[u64], Vec<[usize; 3]>); 3] = [
        (7, &[2, 3, 2, 2, 3, 2], vec![[0, 2, 4], [1, 3, 5]]),
        (9, &[3, 3, 3, 3, 3, 3], vec![[0, 2, 4], [1, 3, 5]]),
        (11, &[3, 4, 4, 3, 4, 4], vec![[0, 2, 4], [1, 3, 5]]),
    ];
    for (b, s, p) in trees {
        let tp = ThreePartitionInstance::new(2, b, s.to_vec()).unwrap().with_partition(p).unwrap();
        let h = gen_unweighted_tree(&tp, eps, DEFAULT_SIZE_CAP).map_err(|e| e.to_string())?;
        let cert = h.certificate.as_ref().unwrap();
        let eval = evaluate(&h.topology, &h.request, &cert.assignment).unwrap();
        ensure(eval == Rational::ONE, || format!("tree B={b}: certificate evaluates to {eval}"))?;
    }
    Ok(format!(
        "weighted path certificates = solve = 1 ({}); 3 star-chain certificates = 1",
        out.join(", ")
    ))
}

fn hardness_no_weighted() -> Check {
    let w = 100;
    let cases: [(u64, &[u64]); 3] = [(7, &[2, 2, 2, 2, 2, 4]), (9, &[2, 2, 2, 4, 4, 4]), (9, &[4, 2, 4, 2, 4, 2])];
    let mut seen = Vec::new();
    for (b, s) in cases {
        ensure(find_grouping(s, b).is_none(), || format!("{s:?} splits into sum-{b} groups"))?;
        let tp = ThreePartitionInstance::new(2, b, s.to_vec()).unwrap();
        let h = gen_weighted_path_relaxed(&tp, w).map_err(|e| e.to_string())?;
        let best = solve(&to_binary(&h.topology), &h.request).map_err(|e| e.to_string())?;
        let c = best.map(|e| e.congestion).ok_or("instance infeasible")?;
        ensure(c >= h.gap_bound, || format!("B={b} {s:?}: solve {c} < W/6 = {}", h.gap_bound))?;
        seen.push(c.to_string());
    }
    Ok(format!("solve >= 50/3 on 3 no-instances (got {})", seen.join(", ")))
}

fn hardness_no_tree() -> Check {
    // Smallest constrained no-instances for m = 2; epsilon = 1/2 gives the
    // smallest legal M = 5mB.
    let eps = Rational::new(1, 2).unwrap();
    let cases: [(u64, &[u64]); 3] = [(13, &[4, 4, 4, 4, 4, 6]), (15, &[4, 4, 4, 6, 6, 6]), (16, &[5, 5, 5, 5, 5, 7])];
    let mut seen = Vec::new();
    for (b, s) in cases {
        ensure(find_three_partition(s, b).is_none(), || format!("{s:?} has a 3-partition"))?;
        let tp = ThreePartitionInstance::new(2, b, s.to_vec()).unwrap();
        let h = gen_unweighted_tree(&tp, eps, DEFAULT_SIZE_CAP).map_err(|e| e.to_string())?;
        let best = solve(&to_binary(&h.topology), &h.request)
            .map_err(|e| format!("B={b}: k={} VMs: {e}", h.request.k()))?;
        let c = best.map(|e| e.congestion).ok_or("instance infeasible")?;
        ensure(c >= h.gap_bound, || format!("B={b}: solve {c} < M/6 = {}", h.gap_bound))?;
        seen.push(c.to_string());
    }
    Ok(format!("solve >= M/6 on 3 no-instances (got {})", seen.join(", ")))
}

fn sweep(mode: Mode, sweep: Sweep, fixed: usize, points: Vec<usize>, seed: u64) -> Vec<BenchRow> {
    let mut cfg = BenchConfig::new(mode, sweep, fixed, points);
    cfg.trials = 5;
    cfg.seed = seed;
    bench::bench_scaling(&cfg).unwrap()
}

fn medians(rows: &[BenchRow]) -> String {
    rows.iter()
        .map(|r| format!("{}:{:.2e}", r.param, r.median_s))
        .collect::<Vec<_>>()
        .join(" ")
}

fn scaling_n() -> Check {
    let rows = sweep(Mode::Generic, Sweep::N, 5, (200..=2000).step_by(200).collect(), 11);
    let a = bench::fit_power(&rows);
    let ratio = rows.last().unwrap().median_s / rows[0].median_s;
    ensure((0.7..=1.3).contains(&a), || format!("exponent {a:.3} outside [0.7, 1.3]; {}", medians(&rows)))?;
    Ok(format!("exponent {a:.3} in [0.7, 1.3], t(2000)/t(200) = {ratio:.1}"))
}

fn scaling_k() -> Check {
    let rows = sweep(Mode::Generic, Sweep::K, 100, (4..=10).collect(), 12);
    let slope = bench::fit_log_slope(&rows);
    let (lo, hi) = (0.7 * 3f64.ln(), 1.3 * 3f64.ln());
    ensure((lo..=hi).contains(&slope), || {
        format!("slope {slope:.3} outside [{lo:.3}, {hi:.3}]; {}", medians(&rows))
    })?;
    Ok(format!("ln-runtime slope {slope:.3} in [{lo:.3}, {hi:.3}]"))
}

fn scaling_cluster() -> Check {
    let rows = sweep(Mode::Cluster, Sweep::K, 1000, (10..=100).step_by(10).collect(), 13);
    let a = bench::fit_power(&rows);
    ensure((1.6..=2.4).contains(&a), || format!("exponent {a:.3} outside [1.6, 2.4]; {}", medians(&rows)))?;
    Ok(format!("exponent {a:.3} in [1.6, 2.4]"))
}

fn run_cli(args: &[&str], cwd: &Path) -> Result<(Vec<u8>, i32), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_treeplace"))
        .args(args)
        .current_dir(cwd)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((out.stdout, out.status.code().unwrap_or(-1)))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    fs::write(
        d.join("r.json"),
        r#"{"vms":["a","b","c"],"uplinks":[{"vm":"a","bw":"1.5"}],"chatter":[{"a":"a","b":"b","bw":"2"},{"a":"b","b":"c","bw":"0.7"}]}"#,
    )
    .unwrap();
    let topo = [
        "gen-topology", "--servers-per-rack", "3", "--racks-per-as", "2", "--as-count", "2",
        "--slots-per-server", "2", "--seed", "42", "--residuals",
    ];
    let small = ["gen-topology", "--servers-per-rack", "2", "--racks-per-as", "2", "--as-count", "2", "--seed", "5", "--residuals"];
    fs::write(d.join("t.json"), run_cli(&topo, d)?.0).unwrap();
    fs::write(d.join("small.json"), run_cli(&small, d)?.0).unwrap();

    let commands: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("gen-topology", topo.to_vec(), vec![]),
        ("solve", vec!["solve", "--topology", "t.json", "--request", "r.json"], vec![]),
        ("cluster-solve", vec!["cluster-solve", "--topology", "t.json", "-k", "7", "-B", "0.1"], vec![]),
        ("oracle", vec!["oracle", "--topology", "small.json", "--request", "r.json"], vec![]),
        (
            "gen-hard path",
            vec!["gen-hard", "--model", "path", "--m", "2", "--B", "20", "--s", "6,7,7,6,7,7", "--out-prefix", "p_"],
            vec!["p_topology.json", "p_request.json", "p_certificate.json"],
        ),
        (
            "gen-hard tree",
            vec!["gen-hard", "--model", "tree", "--m", "2", "--B", "7", "--s", "2,3,2,2,3,2", "--out-prefix", "u_"],
            vec!["u_topology.json", "u_request.json", "u_certificate.json"],
        ),
        ("evaluate", vec!["evaluate", "--topology", "p_topology.json", "--request", "p_request.json", "--embedding", "p_certificate.json"], vec![]),
    ];
    let mut names = Vec::new();
    for (name, args, files) in &commands {
        let snapshot = || -> Result<Vec<Vec<u8>>, String> {
            let (stdout, code) = run_cli(args, d)?;
            ensure(code == 0, || format!("{name} exited with {code}"))?;
            let mut all = vec![stdout];
            for f in files {
                all.push(fs::read(d.join(f)).map_err(|e| e.to_string())?);
            }
            Ok(all)
        };
        let (first, second) = (snapshot()?, snapshot()?);
        ensure(first == second, || format!("{name} output differs between runs"))?;
        names.push(*name);
    }
    // Bench timings vary run to run; the rows and parameters must not.
    let bench_args = ["bench", "--mode", "generic", "--sweep", "k", "--fixed-n", "20", "--points", "2:4", "--trials", "2", "--seed", "7"];
    let strip = |csv: Vec<u8>| -> Vec<String> {
        String::from_utf8(csv).unwrap().lines().map(|l| l.split(',').next().unwrap().to_string()).collect()
    };
    let (a, b) = (strip(run_cli(&bench_args, d)?.0), strip(run_cli(&bench_args, d)?.0));
    ensure(a == b && a.len() == 4, || "bench rows differ between runs".into())?;
    Ok(format!("byte-identical: {}; bench param columns identical", names.join(", ")))
}

fn main() -> ExitCode {
    let filter = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let criteria = [
        Criterion { id: "1", name: "oracle equivalence", run: oracle_equivalence },
        Criterion { id: "2", name: "normalization preservation", run: normalization },
        Criterion { id: "3", name: "cluster/generic agreement", run: cluster_agreement },
        Criterion { id: "4a", name: "hardness yes-instances", run: hardness_yes },
        Criterion { id: "4b", name: "hardness no-instances, weighted path", run: hardness_no_weighted },
        Criterion { id: "4c", name: "hardness no-instances, unweighted tree", run: hardness_no_tree },
        Criterion { id: "5a", name: "scaling in n (generic)", run: scaling_n },
        Criterion { id: "5b", name: "scaling in k (generic)", run: scaling_k },
        Criterion { id: "5c", name: "scaling in k (cluster)", run: scaling_cluster },
        Criterion { id: "6", name: "determinism", run: determinism },
    ];
    let mut failed = 0;
    for c in &criteria {
        if let Some(f) = &filter {
            if !c.id.contains(f.as_str()) && !c.name.contains(f.as_str()) {
                continue;
            }
        }
        let start = Instant::now();
        let result = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(msg) => println!("PASS {} {}: {msg} [{secs:.1}s]", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("FAIL {} {}: {msg} [{secs:.1}s]", c.id, c.name);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
