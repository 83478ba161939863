use serde::Serialize;

use crate::agents::QuoteRecord;
use crate::kernel::AgentId;
use crate::metrics::{entropy_equitability, ReturnSample};

use super::accounting::{account_episode, profit_from_steps, StepRecord};
use super::config::{ConfigError, MmMode, ScenarioConfig};
use super::sim::{MarketSim, MmRole};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation invariant violated (seed {seed}): {detail}")]
    Invariant { seed: u64, detail: String },
    #[error("{0}")]
    Unsupported(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Everything recorded about one simulated trading day.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub seed: u64,
    pub config_hash: String,
    /// Profit of the primary MM in cents; zero with no MM.
    pub profit: f64,
    /// Absent when no consumer completed.
    pub equitability: Option<f64>,
    pub samples: Vec<ReturnSample>,
    pub bin_counts: Vec<u64>,
    pub steps: Vec<StepRecord>,
    pub quotes: Vec<QuoteRecord>,
    pub trades: usize,
    pub final_inventory: i64,
}

/// One row of the per-episode summary CSV.
#[derive(Debug, Clone, Serialize)]
pub struct EpisodeRow {
    pub seed: u64,
    pub config_hash: String,
    pub profit_cents: f64,
    pub equitability: Option<f64>,
    pub consumers_settled: usize,
    pub trades: usize,
    pub final_inventory: i64,
    pub mean_half_spread: Option<f64>,
}

impl EpisodeResult {
    pub fn row(&self) -> EpisodeRow {
        EpisodeRow {
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            profit_cents: self.profit,
            equitability: self.equitability,
            consumers_settled: self.samples.len(),
            trades: self.trades,
            final_inventory: self.final_inventory,
            mean_half_spread: mean_half_spread(&self.quotes),
        }
    }
}

/// Mean quoted half-spread in cents over a quote history.
pub fn mean_half_spread(quotes: &[QuoteRecord]) -> Option<f64> {
    (!quotes.is_empty()).then(|| quotes.iter().map(|q| q.half_spread as f64).sum::<f64>() / quotes.len() as f64)
}

/// Check the exchange and accounting invariants of a finished session.
pub fn audit(sim: &MarketSim, primary: Option<(AgentId, &[StepRecord])>) -> Result<(), HarnessError> {
    let fail = |detail: String| Err(HarnessError::Invariant { seed: sim.seed(), detail });
    if !sim.conservation_holds() {
        return fail("cash or shares not conserved across agents".into());
    }
    if let Some((id, steps)) = primary {
        let direct = sim.mm_profit(id);
        let rebuilt = profit_from_steps(steps);
        if (direct - rebuilt).abs() > 1e-6 * direct.abs().max(1.0) {
            return fail(format!("MM profit {direct} disagrees with step decomposition {rebuilt}"));
        }
    }
    Ok(())
}

/// Collect the result of a finished session for its first MM.
pub fn collect(sim: &MarketSim, cfg: &ScenarioConfig) -> Result<EpisodeResult, HarnessError> {
    let weights = cfg.rl.weights()?;
    let primary = sim.market_makers().first().copied();
    let (profit, steps, quotes, inventory) = match primary {
        Some(id) => {
            let mm = sim.market_maker(id);
            let steps = account_episode(mm.observations(), sim.ledger(), weights, cfg.rl.reward_interval);
            (sim.mm_profit(id), steps, mm.quotes().to_vec(), mm.inventory)
        }
        None => (0.0, Vec::new(), Vec::new(), 0),
    };
    audit(sim, primary.map(|id| (id, steps.as_slice())))?;
    let ledger = sim.ledger();
    Ok(EpisodeResult {
        seed: sim.seed(),
        config_hash: cfg.short_hash(),
        profit,
        equitability: entropy_equitability(ledger.counts()).ok(),
        samples: ledger.samples().to_vec(),
        bin_counts: ledger.counts().to_vec(),
        steps,
        quotes,
        trades: sim.trades().len(),
        final_inventory: inventory,
    })
}

/// Market-maker roles for a non-learning run of `cfg`.
pub fn fixed_roles(cfg: &ScenarioConfig) -> Result<Vec<MmRole>, HarnessError> {
    match cfg.mm.mode {
        MmMode::None => Ok(Vec::new()),
        MmMode::Fixed => Ok(vec![MmRole::Fixed(cfg.mm.spec())]),
        MmMode::Learning | MmMode::Competing => {
            Err(HarnessError::Unsupported("a learning MM needs a policy; use train, evaluate or compete".into()))
        }
    }
}

/// Simulate one trading day with fixed-parameter market makers.
pub fn run_episode(cfg: &ScenarioConfig, seed: u64) -> Result<EpisodeResult, HarnessError> {
    cfg.validate()?;
    let roles = fixed_roles(cfg)?;
    let mut sim = MarketSim::new(cfg, seed, &roles);
    sim.run();
    collect(&sim, cfg)
}
