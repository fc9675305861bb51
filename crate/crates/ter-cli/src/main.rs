//! `ter`: experiment runner for the topological replay library.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ter_core::config::ExperimentConfig;
use ter_core::envs::{make_env, value_iteration};
use ter_core::harness::{aggregate, emit, emit_aggregate, parse_csv, RunRecord, Trainer};

#[derive(Parser)]
#[command(name = "ter", about = "Topological experience replay experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one training configuration and write its metrics CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run a config across seeds (and an optional value grid), then
    /// aggregate.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seed list, e.g. 0,1,2,3,4.
        #[arg(long)]
        seeds: String,
        /// Grid axis as key=v1,v2,...; repeatable for a cartesian
        /// product.
        #[arg(long)]
        grid: Vec<String>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Dump the exact optimal Q-table for an enumerable environment.
    Oracle {
        #[arg(long)]
        env: String,
        #[arg(long, default_value_t = 0.99)]
        gamma: f64,
        /// Seed controlling fixed procedural layouts.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Aggregate every run CSV in a directory into one summary file.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, seed, out } => run(&config, seed, &out),
        Command::Sweep {
            config,
            seeds,
            grid,
            out,
        } => sweep(&config, &seeds, &grid, &out),
        Command::Oracle {
            env,
            gamma,
            seed,
            out,
        } => oracle(&env, gamma, seed, &out),
        Command::Aggregate { input, out } => aggregate_dir(&input, &out),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok(ExperimentConfig::parse(&text)?)
}

fn run_one(cfg: ExperimentConfig, out: &Path) -> Result<Vec<RunRecord>> {
    let seed = cfg.seed;
    let records = Trainer::new(cfg.clone())?.train()?;
    let path = out.join(format!("run_seed{seed}.csv"));
    emit(&records, &cfg, &path)?;
    println!("wrote {}", path.display());
    Ok(records)
}

fn run(config: &Path, seed: Option<u64>, out: &Path) -> Result<()> {
    let mut cfg = load_config(config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    run_one(cfg, out)?;
    Ok(())
}

fn sweep(config: &Path, seeds: &str, grid: &[String], out: &Path) -> Result<()> {
    let base = load_config(config)?;
    let seeds: Vec<u64> = seeds
        .split(',')
        .map(|s| s.trim().parse().context("bad seed list"))
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        bail!("need at least one seed");
    }
    // Expand the cartesian product of grid axes into (label, overrides).
    let mut combos: Vec<(String, Vec<(String, String)>)> = vec![(String::new(), Vec::new())];
    for axis in grid {
        let (key, values) = axis
            .split_once('=')
            .with_context(|| format!("bad grid axis `{axis}`"))?;
        let mut next = Vec::new();
        for (label, overrides) in &combos {
            for v in values.split(',') {
                let mut o = overrides.clone();
                o.push((key.to_string(), v.to_string()));
                let label = if label.is_empty() {
                    format!("{key}={v}")
                } else {
                    format!("{label}_{key}={v}")
                };
                next.push((label, o));
            }
        }
        combos = next;
    }
    for (label, overrides) in combos {
        let dir = if label.is_empty() {
            out.to_path_buf()
        } else {
            out.join(label.replace('=', "-"))
        };
        let mut runs = Vec::new();
        for &seed in &seeds {
            let mut cfg = base.clone();
            for (k, v) in &overrides {
                cfg.set(k, v)?;
            }
            cfg.validate()?;
            cfg.seed = seed;
            runs.push(run_one(cfg, &dir)?);
        }
        let agg = aggregate(&runs)?;
        let agg_path = dir.join("aggregate.csv");
        emit_aggregate(&agg, &agg_path)?;
        println!("wrote {}", agg_path.display());
    }
    Ok(())
}

fn oracle(env_spec: &str, gamma: f64, seed: u64, out: &Path) -> Result<()> {
    let env = make_env(env_spec, seed)?;
    let Some(model) = env.model() else {
        bail!("environment `{env_spec}` has no enumerable model (procedural layouts need :fixed)");
    };
    let q = value_iteration(&model, gamma)?;
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(out)?;
    w.write_record(["state", "action", "q"])?;
    for (sid, row) in q.iter().enumerate() {
        if model.terminal_states.contains(&sid) {
            continue;
        }
        for (a, v) in row.iter().enumerate() {
            w.write_record([sid.to_string(), a.to_string(), format!("{v}")])?;
        }
    }
    w.flush()?;
    println!("wrote {}", out.display());
    Ok(())
}

fn aggregate_dir(input: &Path, out: &Path) -> Result<()> {
    let mut runs = Vec::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(input)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.extension().is_some_and(|x| x == "csv")
                && p.file_name().is_some_and(|n| n.to_string_lossy().starts_with("run_"))
        })
        .collect();
    paths.sort();
    for p in &paths {
        runs.push(parse_csv(p)?);
    }
    if runs.is_empty() {
        bail!("no run_*.csv files in {}", input.display());
    }
    let agg = aggregate(&runs)?;
    emit_aggregate(&agg, out)?;
    println!("aggregated {} runs into {}", runs.len(), out.display());
    Ok(())
}
