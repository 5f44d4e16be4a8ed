use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use treeplace::bench::{self, BenchConfig, Mode, Shape, Sweep};
use treeplace::cluster::{cluster_solve, ClusterRequest};
use treeplace::hardness::{self, ThreePartitionInstance, DEFAULT_SIZE_CAP};
use treeplace::io::{self as tio, emit, to_pretty};
use treeplace::topogen::{apply_residuals, ThreeTier};
use treeplace::{evaluate, linear_scan, solve, to_binary, Rational};

#[derive(Parser)]
#[command(name = "treeplace", version, about = "Minimum-congestion VM placement on tree networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact subset DP for a general request (k <= 24).
    Solve {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print only the congestion.
        #[arg(long)]
        no_embedding: bool,
    },
    /// Count DP for a virtual cluster <k, B>.
    ClusterSolve {
        #[arg(long)]
        topology: PathBuf,
        #[arg(short = 'k')]
        k: usize,
        #[arg(short = 'B')]
        bandwidth: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Brute-force scan over all allocations (small instances only).
    Oracle {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Congestion of a given embedding file.
    Evaluate {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long)]
        request: PathBuf,
        #[arg(long)]
        embedding: PathBuf,
    },
    /// Hard instances from a 3-partition input.
    GenHard {
        #[arg(long, value_parser = ["path", "tree"])]
        model: String,
        #[arg(long)]
        m: usize,
        #[arg(long = "B")]
        b: u64,
        #[arg(long, value_delimiter = ',')]
        s: Vec<u64>,
        #[arg(long = "W", default_value_t = 100)]
        w: u64,
        #[arg(long, default_value = "1/2")]
        epsilon: Rational,
        /// Allow values outside (B/4, B/2) for the path model.
        #[arg(long)]
        relaxed: bool,
        #[arg(long, default_value_t = DEFAULT_SIZE_CAP)]
        size_cap: u128,
        #[arg(long)]
        out_prefix: String,
    },
    /// Three-tier datacenter topology.
    GenTopology {
        #[arg(long, default_value_t = 20)]
        servers_per_rack: usize,
        #[arg(long, default_value_t = 10)]
        racks_per_as: usize,
        #[arg(long, default_value_t = 5)]
        as_count: usize,
        #[arg(long, default_value_t = 1)]
        slots_per_server: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replace capacities with seeded uniform residuals.
        #[arg(long)]
        residuals: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runtime sweep over n or k, as CSV.
    Bench {
        #[arg(long, default_value = "generic")]
        mode: Mode,
        #[arg(long)]
        sweep: Sweep,
        /// Tree size when sweeping k.
        #[arg(long)]
        fixed_n: Option<usize>,
        /// Request size when sweeping n.
        #[arg(long)]
        fixed_k: Option<usize>,
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "path")]
        shape: Shape,
        #[arg(short = 'B', long, default_value = "1")]
        bandwidth: Rational,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn write_json(out: Option<&Path>, v: &Value) -> anyhow::Result<()> {
    emit(out, &to_pretty(v)).context("writing output")
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Solve {
            topology,
            request,
            out,
            no_embedding,
        } => {
            let t = tio::read_topology(&topology).context("reading topology")?;
            let r = tio::read_request(&request).context("reading request")?;
            match solve(&to_binary(&t), &r)? {
                Some(e) => {
                    write_json(out.as_deref(), &tio::embedding_json(&t, &r, &e, !no_embedding))?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    write_json(out.as_deref(), &tio::infeasible_json())?;
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::ClusterSolve {
            topology,
            k,
            bandwidth,
            out,
        } => {
            let t = tio::read_topology(&topology).context("reading topology")?;
            let c = ClusterRequest::new(k, bandwidth)?;
            match cluster_solve(&to_binary(&t), &c)? {
                Some(p) => {
                    write_json(out.as_deref(), &tio::counts_json(&t, &p))?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    write_json(out.as_deref(), &tio::infeasible_json())?;
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Oracle {
            topology,
            request,
            out,
        } => {
            let t = tio::read_topology(&topology).context("reading topology")?;
            let r = tio::read_request(&request).context("reading request")?;
            match linear_scan(&t, &r)? {
                Some(e) => {
                    write_json(out.as_deref(), &tio::embedding_json(&t, &r, &e, true))?;
                    Ok(ExitCode::SUCCESS)
                }
                None => {
                    write_json(out.as_deref(), &tio::infeasible_json())?;
                    Ok(ExitCode::from(2))
                }
            }
        }
        Command::Evaluate {
            topology,
            request,
            embedding,
        } => {
            let t = tio::read_topology(&topology).context("reading topology")?;
            let r = tio::read_request(&request).context("reading request")?;
            let v: Value = serde_json::from_str(&fs::read_to_string(&embedding).context("reading embedding")?)?;
            let a = tio::parse_assignment(&t, &r, &v)?;
            let c = evaluate(&t, &r, &a)?;
            write_json(None, &json!({ "congestion": c.to_string() }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenHard {
            model,
            m,
            b,
            s,
            w,
            epsilon,
            relaxed,
            size_cap,
            out_prefix,
        } => {
            let tp = ThreePartitionInstance::new(m, b, s)?.solved();
            let h = match (model.as_str(), relaxed) {
                ("path", false) => hardness::gen_weighted_path(&tp, w)?,
                ("path", true) => hardness::gen_weighted_path_relaxed(&tp, w)?,
                ("tree", false) => hardness::gen_unweighted_tree(&tp, epsilon, size_cap)?,
                _ => bail!("--relaxed applies to the path model only"),
            };
            let file = |name: &str| PathBuf::from(format!("{out_prefix}{name}"));
            fs::write(file("topology.json"), to_pretty(&tio::topology_json(&h.topology)))?;
            fs::write(file("request.json"), to_pretty(&tio::request_json(&h.request)))?;
            if let Some(cert) = &h.certificate {
                let v = tio::embedding_json(&h.topology, &h.request, cert, true);
                fs::write(file("certificate.json"), to_pretty(&v))?;
            }
            let summary = json!({
                "nodes": h.topology.len(),
                "vms": h.request.k(),
                "gap_bound": h.gap_bound.to_string(),
                "partition": tp.known_partition(),
            });
            write_json(None, &summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::GenTopology {
            servers_per_rack,
            racks_per_as,
            as_count,
            slots_per_server,
            seed,
            residuals,
            out,
        } => {
            let tier = ThreeTier {
                servers_per_rack,
                racks_per_as,
                as_count,
                slots_per_server,
            };
            let mut t = tier.build()?;
            if residuals {
                t = apply_residuals(&t, seed)?;
            }
            write_json(out.as_deref(), &tio::topology_json(&t))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench {
            mode,
            sweep,
            fixed_n,
            fixed_k,
            points,
            trials,
            seed,
            shape,
            bandwidth,
            out,
        } => {
            let fixed = match sweep {
                Sweep::K => fixed_n.context("--fixed-n is required when sweeping k")?,
                Sweep::N => fixed_k.context("--fixed-k is required when sweeping n")?,
            };
            let mut cfg = BenchConfig::new(mode, sweep, fixed, bench::parse_points(&points)?);
            cfg.trials = trials;
            cfg.seed = seed;
            cfg.shape = shape;
            cfg.cluster_bandwidth = bandwidth;
            let rows = bench::bench_scaling(&cfg)?;
            let mut csv = Vec::new();
            bench::write_csv(&mut csv, &rows)?;
            emit(out.as_deref(), &String::from_utf8(csv)?)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
