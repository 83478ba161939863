use rayon::prelude::*;
use serde::Serialize;

use crate::agents::HalfSpread;

use super::config::{MmMode, ScenarioConfig};
use super::episode::{run_episode, HarnessError};
use super::sim::effective_value_config;
use super::stats::stats;

/// One grid point of a sweep.
#[derive(Debug, Clone)]
pub struct Cell {
    pub half_spread: HalfSpread,
    pub depth: i64,
    pub order_size: Option<u64>,
    pub liquidity_fraction: Option<f64>,
    pub cfg: ScenarioConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cell: usize,
    pub half_spread: String,
    pub depth: i64,
    pub order_size: Option<u64>,
    pub liquidity_fraction: Option<f64>,
    pub seed: u64,
    pub config_hash: String,
    pub profit_cents: f64,
    pub equitability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: usize,
    pub half_spread: String,
    pub depth: i64,
    pub order_size: Option<u64>,
    pub liquidity_fraction: Option<f64>,
    pub samples: usize,
    pub mean_profit_cents: f64,
    /// Mean over the samples where equitability is defined.
    pub mean_equitability: Option<f64>,
}

/// Regression of cell-mean profit (y) on cell-mean equitability (x) over a group of cells.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRow {
    pub group: String,
    pub order_size: Option<u64>,
    pub liquidity_fraction: Option<f64>,
    pub cells: usize,
    pub mean_equitability: Option<f64>,
    pub pearson_r: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<CellSummary>,
    pub fits: Vec<FitRow>,
}

/// Seeds used for `samples` repetitions of every cell.
pub fn sweep_seeds(cfg: &ScenarioConfig, samples: usize) -> Vec<u64> {
    (0..samples as u64).map(|i| cfg.seed + i).collect()
}

fn cell_cfg(base: &ScenarioConfig, half_spread: HalfSpread, depth: i64, size: Option<u64>) -> ScenarioConfig {
    let mut cfg = base.clone();
    cfg.mm.mode = MmMode::Fixed;
    cfg.mm.half_spread = half_spread;
    cfg.mm.depth = depth;
    if let Some(size) = size {
        cfg.consumer.agent.sizes = vec![size];
    }
    cfg
}

/// Run every (cell, seed) pair; rows come back ordered by cell, then seed.
pub fn run_cells(cells: &[Cell], seeds: &[u64]) -> Result<Vec<SweepRow>, HarnessError> {
    let jobs: Vec<(usize, u64)> = (0..cells.len()).flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    jobs.par_iter()
        .map(|&(c, seed)| {
            let cell = &cells[c];
            let res = run_episode(&cell.cfg, seed)?;
            Ok(SweepRow {
                cell: c,
                half_spread: cell.half_spread.to_string(),
                depth: cell.depth,
                order_size: cell.order_size,
                liquidity_fraction: cell.liquidity_fraction,
                seed,
                config_hash: res.config_hash,
                profit_cents: res.profit,
                equitability: res.equitability,
            })
        })
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (n, s) = values.fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    (n > 0).then(|| s / n as f64)
}

/// Per-cell means, in cell order.
pub fn summarize_cells(cells: &[Cell], rows: &[SweepRow]) -> Vec<CellSummary> {
    cells
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.cell == c).collect();
            CellSummary {
                cell: c,
                half_spread: cell.half_spread.to_string(),
                depth: cell.depth,
                order_size: cell.order_size,
                liquidity_fraction: cell.liquidity_fraction,
                samples: mine.len(),
                mean_profit_cents: mean(mine.iter().map(|r| r.profit_cents)).unwrap_or(f64::NAN),
                mean_equitability: mean(mine.iter().filter_map(|r| r.equitability)),
            }
        })
        .collect()
}

/// Fit profit on equitability over the cells accepted by `keep`.
pub fn fit_group(group: &str, cells: &[CellSummary], keep: impl Fn(&CellSummary) -> bool) -> FitRow {
    let pts: Vec<(f64, f64)> = cells.iter().filter(|c| keep(c)).filter_map(|c| c.mean_equitability.map(|e| (e, c.mean_profit_cents))).collect();
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let fit = stats(&xs, &ys).ok();
    let first = cells.iter().find(|c| keep(c));
    FitRow {
        group: group.to_owned(),
        order_size: first.and_then(|c| c.order_size).filter(|_| group != "pooled"),
        liquidity_fraction: first.and_then(|c| c.liquidity_fraction),
        cells: pts.len(),
        mean_equitability: mean(xs.iter().copied()),
        pearson_r: fit.map(|f| f.pearson_r),
        slope: fit.map(|f| f.slope),
        intercept: fit.map(|f| f.intercept),
    }
}

/// Half-spread × depth grid, 20 seeds per cell by default; one pooled fit.
pub fn motivating_sweep(cfg: &ScenarioConfig, samples: usize) -> Result<SweepSummary, HarnessError> {
    let mut cells = Vec::new();
    for &h in &cfg.sweep.motivating_half_spreads {
        for &d in &cfg.sweep.motivating_depths {
            cells.push(Cell { half_spread: h, depth: d, order_size: None, liquidity_fraction: None, cfg: cell_cfg(cfg, h, d, None) });
        }
    }
    let rows = run_cells(&cells, &sweep_seeds(cfg, samples))?;
    let summaries = summarize_cells(&cells, &rows);
    let fits = vec![fit_group("pooled", &summaries, |_| true)];
    Ok(SweepSummary { rows, cells: summaries, fits })
}

fn ordersize_cells(cfg: &ScenarioConfig, fraction: Option<f64>) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &size in &cfg.sweep.order_sizes {
        for &h in &cfg.sweep.ordersize_half_spreads {
            for &d in &cfg.sweep.ordersize_depths {
                cells.push(Cell { half_spread: h, depth: d, order_size: Some(size), liquidity_fraction: fraction, cfg: cell_cfg(cfg, h, d, Some(size)) });
            }
        }
    }
    cells
}

fn size_fits(cfg: &ScenarioConfig, summaries: &[CellSummary], fits: &mut Vec<FitRow>) {
    for &size in &cfg.sweep.order_sizes {
        fits.push(fit_group("order_size", summaries, |c| c.order_size == Some(size)));
    }
}

/// Half-spread × depth × consumer order size; pooled fit plus one fit per size.
pub fn order_size_sweep(cfg: &ScenarioConfig, samples: usize) -> Result<SweepSummary, HarnessError> {
    let cells = ordersize_cells(cfg, None);
    let rows = run_cells(&cells, &sweep_seeds(cfg, samples))?;
    let summaries = summarize_cells(&cells, &rows);
    let mut fits = vec![fit_group("pooled", &summaries, |_| true)];
    size_fits(cfg, &summaries, &mut fits);
    Ok(SweepSummary { rows, cells: summaries, fits })
}

/// Fix the value-agent population implied by `fraction` against the base MM spec.
pub fn with_liquidity_fraction(cfg: &ScenarioConfig, fraction: f64) -> ScenarioConfig {
    let mut out = cfg.clone();
    out.value.liquidity_fraction = Some(fraction);
    let (count, agent) = effective_value_config(&out);
    out.value.count = count;
    out.value.agent = agent;
    out.value.liquidity_fraction = None;
    out
}

/// The order-size sweep repeated per value-agent liquidity fraction, with per-(fraction, size) fits.
pub fn liquidity_sweep(cfg: &ScenarioConfig, samples: usize) -> Result<SweepSummary, HarnessError> {
    let mut cells = Vec::new();
    for &fraction in &cfg.sweep.liquidity_fractions {
        cells.extend(ordersize_cells(&with_liquidity_fraction(cfg, fraction), Some(fraction)));
    }
    let rows = run_cells(&cells, &sweep_seeds(cfg, samples))?;
    let summaries = summarize_cells(&cells, &rows);
    let mut fits = Vec::new();
    for &fraction in &cfg.sweep.liquidity_fractions {
        let mine: Vec<CellSummary> = summaries.iter().filter(|c| c.liquidity_fraction == Some(fraction)).cloned().collect();
        fits.push(fit_group("pooled", &mine, |_| true));
        size_fits(cfg, &mine, &mut fits);
    }
    Ok(SweepSummary { rows, cells: summaries, fits })
}

/// Mean equitability per order size over the cells of an order-size sweep, in size order.
pub fn equitability_by_size(cfg: &ScenarioConfig, summary: &SweepSummary) -> Vec<(u64, Option<f64>)> {
    cfg.sweep.order_sizes.iter().map(|&s| (s, mean(summary.cells.iter().filter(|c| c.order_size == Some(s)).filter_map(|c| c.mean_equitability)))).collect()
}
