//! Timing sweeps over tree size `n` or request size `k`, emitted as CSV.

use std::fmt;
use std::hint::black_box;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cluster::{cluster_solve_with, ClusterOptions, ClusterRequest};
use crate::dp::{solve_with, SolveOptions};
use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::request::{RequestBuilder, RequestGraph, SUBSET_LIMIT};
use crate::topogen::{apply_residuals, three_tier_with_servers};
use crate::topology::to_binary;

pub const CSV_HEADER: &str = "param,median_s,min_s,max_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Generic,
    Cluster,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    N,
    K,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Path,
    Random,
}

macro_rules! parse_enum {
    ($ty:ident { $($s:literal => $v:ident),* }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($ty::$v),)*
                    _ => Err(Error::InvalidArgument(format!("unknown {} `{s}`", stringify!($ty).to_lowercase()))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$v => $s,)* })
            }
        }
    };
}

parse_enum!(Mode { "generic" => Generic, "cluster" => Cluster });
parse_enum!(Sweep { "n" => N, "k" => K });
parse_enum!(Shape { "path" => Path, "random" => Random });

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub mode: Mode,
    pub sweep: Sweep,
    /// `k` when sweeping `n`, `n` when sweeping `k`.
    pub fixed: usize,
    pub points: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub servers_per_rack: usize,
    /// Generic mode only.
    pub shape: Shape,
    /// Cluster mode only.
    pub cluster_bandwidth: Rational,
}

impl BenchConfig {
    pub fn new(mode: Mode, sweep: Sweep, fixed: usize, points: Vec<usize>) -> Self {
        BenchConfig {
            mode,
            sweep,
            fixed,
            points,
            trials: 5,
            seed: 0,
            servers_per_rack: 20,
            shape: Shape::Path,
            cluster_bandwidth: Rational::ONE,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchRow {
    pub param: usize,
    pub median_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

/// Path `v1 - v2 - ... - vk` with unit demands and a unit uplink on `v1`.
pub fn path_request(k: usize) -> Result<RequestGraph> {
    let mut b = RequestBuilder::new();
    for i in 1..=k {
        b.vm(format!("v{i}"))?;
    }
    b.uplink_at(0, Rational::ONE)?;
    for i in 1..k {
        b.chatter_at(i - 1, i, Rational::ONE)?;
    }
    b.build()
}

/// A connected request on `k` VMs: a random spanning tree plus each other
/// pair with probability `extra`, every VM with an uplink with probability
/// 1/2. Demands are uniform on 0.1..=10 in steps of 0.1.
pub fn random_request<R: Rng>(rng: &mut R, k: usize, extra: f64) -> Result<RequestGraph> {
    let mut b = RequestBuilder::new();
    for i in 1..=k {
        b.vm(format!("v{i}"))?;
    }
    let bw = |rng: &mut R| Rational::new(rng.gen_range(1..=100), 10).unwrap();
    let mut linked = vec![vec![false; k]; k];
    for i in 1..k {
        let j = rng.gen_range(0..i);
        linked[j][i] = true;
        b.chatter_at(j, i, bw(rng))?;
    }
    for i in 0..k {
        for j in i + 1..k {
            if !linked[i][j] && rng.gen_bool(extra) {
                b.chatter_at(i, j, bw(rng))?;
            }
        }
    }
    for i in 0..k {
        if rng.gen_bool(0.5) {
            b.uplink_at(i, bw(rng))?;
        }
    }
    b.build()
}

/// One row per point: median, min and max over `trials` timed solves, each
/// on a fresh residual topology. A warm-up solve per point is discarded.
/// Only the solve call is timed.
pub fn bench_scaling(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.points.len());
    for &p in &cfg.points {
        let (n, k) = match cfg.sweep {
            Sweep::N => (p, cfg.fixed),
            Sweep::K => (cfg.fixed, p),
        };
        if cfg.mode == Mode::Generic && k > SUBSET_LIMIT {
            return Err(Error::SubsetLimit {
                k,
                limit: SUBSET_LIMIT,
            });
        }
        let base = three_tier_with_servers(n, cfg.servers_per_rack)?;
        let mut times = Vec::with_capacity(cfg.trials);
        for trial in 0..=cfg.trials {
            let t = to_binary(&apply_residuals(&base, rng.gen())?);
            let elapsed = match cfg.mode {
                Mode::Generic => {
                    let r = match cfg.shape {
                        Shape::Path => path_request(k)?,
                        Shape::Random => random_request(&mut rng, k, 0.2)?,
                    };
                    let start = Instant::now();
                    black_box(solve_with(&t, &r, SolveOptions::exhaustive())?);
                    start.elapsed()
                }
                Mode::Cluster => {
                    let c = ClusterRequest::new(k, cfg.cluster_bandwidth)?;
                    let start = Instant::now();
                    black_box(cluster_solve_with(&t, &c, ClusterOptions { prune: false })?);
                    start.elapsed()
                }
            };
            if trial > 0 {
                times.push(elapsed.as_secs_f64());
            }
        }
        times.sort_by(f64::total_cmp);
        let mid = times.len() / 2;
        let median_s = if times.len() % 2 == 1 {
            times[mid]
        } else {
            (times[mid - 1] + times[mid]) / 2.0
        };
        rows.push(BenchRow {
            param: p,
            median_s,
            min_s: times[0],
            max_s: times[times.len() - 1],
        });
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(mut w: W, rows: &[BenchRow]) -> io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{:.9},{:.9},{:.9}", r.param, r.median_s, r.min_s, r.max_s)?;
    }
    Ok(())
}

/// Points as `a:b` (inclusive, step 1), `a:b:step`, or `a,b,c`.
pub fn parse_points(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("bad points `{s}`"));
    let num = |x: &str| x.trim().parse::<usize>().map_err(|_| bad());
    let points = if s.contains(':') {
        let parts: Vec<_> = s.split(':').collect();
        let (lo, hi, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, c] => (num(a)?, num(b)?, num(c)?),
            _ => return Err(bad()),
        };
        if step == 0 || lo > hi {
            return Err(bad());
        }
        (lo..=hi).step_by(step).collect()
    } else {
        s.split(',').map(num).collect::<Result<Vec<_>>>()?
    };
    if points.is_empty() {
        return Err(bad());
    }
    Ok(points)
}

fn least_squares(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Best-fit `a` in `runtime ~ param^a` (log-log slope of the medians).
pub fn fit_power(rows: &[BenchRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| (r.param as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_s.ln()).collect();
    least_squares(&xs, &ys)
}

/// Best-fit slope of `ln(runtime)` against the parameter.
pub fn fit_log_slope(rows: &[BenchRow]) -> f64 {
    let xs: Vec<f64> = rows.iter().map(|r| r.param as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_s.ln()).collect();
    least_squares(&xs, &ys)
}
