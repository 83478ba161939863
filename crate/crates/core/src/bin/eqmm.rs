//! Command-line entry point for simulations, sweeps and training runs.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use eqmm::harness::*;
use eqmm::rl::{QTable, TrainingSchedule};

#[derive(Parser)]
#[command(name = "eqmm", version, about = "Limit order book simulation with an equitability-aware market maker")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML); defaults apply to anything it omits.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Seeds per sweep cell.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Training episodes; phases are scaled 40/20/40.
    #[arg(long, global = true)]
    episodes: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// 200 seeds per order-size cell and 1000 training episodes.
    #[arg(long, global = true)]
    full_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one day with the configured fixed market maker.
    Run,
    /// Half-spread x depth sweep of MM profit against equitability.
    SweepMotivating,
    /// Half-spread x depth x consumer order-size sweep.
    SweepOrdersize,
    /// Order-size sweep repeated per value-agent liquidity fraction.
    SweepLiquidity,
    /// Q-learning for the configured (eta, eta_bar), or the whole grid.
    Train {
        #[arg(long)]
        grid: bool,
    },
    /// Greedy evaluation of trained policies listed in `policies.csv`.
    Evaluate {
        /// Directory holding `policies.csv`; defaults to --out.
        #[arg(long)]
        policies: Option<PathBuf>,
    },
    /// Learner trained against a fixed competitor; spread and equitability differences.
    Compete {
        #[arg(long)]
        grid: bool,
    },
    /// Pearson r and least-squares fit of two CSV columns.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
}

#[derive(Serialize, Deserialize)]
struct PolicyEntry {
    eta: f64,
    eta_bar: f64,
    file: String,
}

fn load_config(common: &Common, full_scale_samples: usize) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(p) => ScenarioConfig::load(p)?,
        None => ScenarioConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if common.full_scale {
        cfg.sweep.samples = full_scale_samples;
        cfg.rl.episodes = 1000;
        cfg.rl.schedule = Some(TrainingSchedule::default());
    }
    if let Some(n) = common.samples {
        cfg.sweep.samples = n;
    }
    if let Some(n) = common.episodes {
        cfg.rl.episodes = n;
        cfg.rl.schedule = None;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_sweep(out: &mut OutputDir, prefix: &str, summary: &SweepSummary) -> Result<()> {
    out.csv(&format!("{prefix}_episodes.csv"), &summary.rows)?;
    out.csv(&format!("{prefix}_cells.csv"), &summary.cells)?;
    out.csv(&format!("{prefix}_fits.csv"), &summary.fits)?;
    for f in &summary.fits {
        let r = f.pearson_r.map_or("undefined".into(), |r| format!("{r:.4}"));
        let slope = f.slope.map_or("undefined".into(), |s| format!("{s:.2}"));
        let mut label = f.group.clone();
        if let Some(s) = f.order_size {
            label += &format!(" size={s}");
        }
        if let Some(x) = f.liquidity_fraction {
            label += &format!(" fraction={x}");
        }
        println!("{label}: cells={} r={r} slope={slope}", f.cells);
    }
    Ok(())
}

fn policy_file(eta: f64, eta_bar: f64) -> String {
    format!("q_eta{eta}_etabar{eta_bar}.csv")
}

fn pairs(cfg: &ScenarioConfig, grid: bool) -> Vec<(f64, f64)> {
    if grid { grid_pairs(cfg) } else { vec![(cfg.rl.eta, cfg.rl.eta_bar)] }
}

fn save_policies(out: &mut OutputDir, trained: &[TrainedPolicy]) -> Result<()> {
    let curve: Vec<&TrainingRow> = trained.iter().flat_map(|t| &t.curve).collect();
    out.csv("training_curve.csv", &curve)?;
    let mut entries = Vec::new();
    for t in trained {
        let name = policy_file(t.eta, t.eta_bar);
        let mut buf = Vec::new();
        t.q.write_csv(&mut buf)?;
        out.text(&name, std::str::from_utf8(&buf)?)?;
        entries.push(PolicyEntry { eta: t.eta, eta_bar: t.eta_bar, file: name });
    }
    out.csv("policies.csv", &entries)?;
    Ok(())
}

fn read_policies(dir: &Path) -> Result<Vec<(PolicyEntry, QTable)>> {
    let index = dir.join("policies.csv");
    let mut rdr = csv::Reader::from_path(&index).with_context(|| format!("reading {}; run `eqmm train` first", index.display()))?;
    let mut out = Vec::new();
    for e in rdr.deserialize() {
        let e: PolicyEntry = e?;
        let path = dir.join(&e.file);
        let q = QTable::read_csv(std::fs::File::open(&path).with_context(|| format!("opening {}", path.display()))?)?;
        out.push((e, q));
    }
    Ok(out)
}

fn stats_command(input: &Path, x: &str, y: &str) -> Result<()> {
    let mut rdr = csv::Reader::from_path(input).with_context(|| format!("reading {}", input.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).with_context(|| format!("no column `{name}` in {}", input.display()));
    let (ix, iy) = (col(x)?, col(y)?);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for rec in rdr.records() {
        let rec = rec?;
        let (Ok(a), Ok(b)) = (rec[ix].parse::<f64>(), rec[iy].parse::<f64>()) else { continue };
        xs.push(a);
        ys.push(b);
    }
    let f = stats(&xs, &ys)?;
    println!("n,pearson_r,slope,intercept");
    println!("{},{},{},{}", f.n, f.pearson_r, f.slope, f.intercept);
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let c = &cli.common;
    match &cli.command {
        Command::Stats { input, x, y } => return stats_command(input, x, y),
        Command::Run => {
            let cfg = load_config(c, 20)?;
            let res = run_episode(&cfg, cfg.seed)?;
            let mut out = OutputDir::create(&c.out)?;
            out.csv("episode.csv", &[res.row()])?;
            out.csv("steps.csv", &res.steps)?;
            out.csv("returns.csv", &res.samples)?;
            out.csv("quotes.csv", &res.quotes)?;
            out.manifest("run", &cfg, &[cfg.seed])?;
            let eq = res.equitability.map_or("undefined".into(), |e| format!("{e:.4}"));
            println!("seed={} profit=${:.2} equitability={eq} consumers={} trades={}", res.seed, res.profit / 100.0, res.samples.len(), res.trades);
        }
        Command::SweepMotivating => {
            let cfg = load_config(c, 20)?;
            let summary = motivating_sweep(&cfg, cfg.sweep.samples)?;
            let mut out = OutputDir::create(&c.out)?;
            write_sweep(&mut out, "motivating", &summary)?;
            out.manifest("sweep-motivating", &cfg, &sweep_seeds(&cfg, cfg.sweep.samples))?;
        }
        Command::SweepOrdersize => {
            let cfg = load_config(c, 200)?;
            let summary = order_size_sweep(&cfg, cfg.sweep.samples)?;
            let mut out = OutputDir::create(&c.out)?;
            write_sweep(&mut out, "ordersize", &summary)?;
            for (size, eq) in equitability_by_size(&cfg, &summary) {
                println!("size={size} mean equitability={}", eq.map_or("undefined".into(), |e| format!("{e:.4}")));
            }
            out.manifest("sweep-ordersize", &cfg, &sweep_seeds(&cfg, cfg.sweep.samples))?;
        }
        Command::SweepLiquidity => {
            let cfg = load_config(c, 200)?;
            let summary = liquidity_sweep(&cfg, cfg.sweep.samples)?;
            let mut out = OutputDir::create(&c.out)?;
            write_sweep(&mut out, "liquidity", &summary)?;
            out.manifest("sweep-liquidity", &cfg, &sweep_seeds(&cfg, cfg.sweep.samples))?;
        }
        Command::Train { grid } => {
            let mut cfg = load_config(c, 20)?;
            if cfg.mm.mode != MmMode::Competing {
                cfg.mm.mode = MmMode::Learning;
            }
            let trained = train_grid(&cfg, &pairs(&cfg, *grid))?;
            let mut out = OutputDir::create(&c.out)?;
            save_policies(&mut out, &trained)?;
            for t in &trained {
                let tail = &t.curve[t.curve.len().saturating_sub(10)..];
                let r = tail.iter().map(|r| r.total_reward).sum::<f64>() / tail.len().max(1) as f64;
                println!("eta={} eta_bar={}: {} episodes, mean reward over last 10 = {r:.3}", t.eta, t.eta_bar, t.curve.len());
            }
            let seeds: Vec<u64> = (0..cfg.rl.schedule().total_episodes() as u64).map(|e| cfg.seed + e).collect();
            out.manifest("train", &cfg, &seeds)?;
        }
        Command::Evaluate { policies } => {
            let mut cfg = load_config(c, 20)?;
            if cfg.mm.mode != MmMode::Competing {
                cfg.mm.mode = MmMode::Learning;
            }
            let dir = policies.clone().unwrap_or_else(|| c.out.clone());
            let loaded = read_policies(&dir)?;
            if loaded.is_empty() {
                bail!("no policies listed in {}", dir.join("policies.csv").display());
            }
            let (mut rows, mut returns, mut summaries, mut policy) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            for (e, q) in &loaded {
                let ev = evaluate(q, &with_weights(&cfg, e.eta, e.eta_bar), cfg.rl.eval_episodes)?;
                println!(
                    "eta={} eta_bar={}: equitability reward {:.4} ± {:.4}, PnL ${:.2}, PnL variance {:.1}, policy half-spread {:.3}",
                    e.eta,
                    e.eta_bar,
                    ev.summary.mean_equitability_reward,
                    ev.summary.se_equitability_reward,
                    ev.summary.mean_pnl_cents / 100.0,
                    ev.summary.pnl_variance,
                    ev.summary.policy_half_spread
                );
                policy.extend(policy_rows(e.eta, e.eta_bar, q, &ev.policy));
                rows.extend(ev.rows);
                returns.extend(ev.returns);
                summaries.push(ev.summary);
            }
            let mut out = OutputDir::create(&c.out)?;
            out.csv("eval_episodes.csv", &rows)?;
            out.csv("eval_returns.csv", &returns)?;
            out.csv("eval_summary.csv", &summaries)?;
            out.csv("policy.csv", &policy)?;
            out.manifest("evaluate", &cfg, &eval_seeds(&cfg, cfg.rl.eval_episodes))?;
        }
        Command::Compete { grid } => {
            let cfg = load_config(c, 20)?;
            let (rows, trained) = compete(&cfg, &pairs(&cfg, *grid))?;
            let mut out = OutputDir::create(&c.out)?;
            save_policies(&mut out, &trained)?;
            out.csv("compete.csv", &rows)?;
            for r in &rows {
                let show = |v: Option<f64>| v.map_or("undefined".into(), |v| format!("{v:+.4}"));
                println!("eta={} eta_bar={}: half-spread diff {} equitability diff {}", r.eta, r.eta_bar, show(r.half_spread_difference), show(r.equitability_difference));
            }
            out.manifest("compete", &cfg, &eval_seeds(&cfg, cfg.rl.eval_episodes))?;
        }
    }
    Ok(())
}
