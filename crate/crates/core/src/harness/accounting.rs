use serde::Serialize;

use crate::agents::Observation;
use crate::kernel::SimTime;
use crate::metrics::{equitability_reward, ReturnLedger};
use crate::rl::{combined_reward, pnl_reward, FifoMatcher, RewardWeights};

/// Reward decomposition of one MM decision interval (observation `step` to `step + 1`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: SimTime,
    pub inventory: i64,
    /// Mid change over the interval, half-cents.
    pub delta_mid: i64,
    /// Unweighted `inventory * delta_mid`, cents.
    pub inventory_pnl: f64,
    pub matched_pnl: i64,
    /// Mark-to-market of this interval's fills at the next mid, net of the matched part. Cents.
    pub mark_correction: f64,
    pub equitability_reward: f64,
    /// Scalarized reward in dollars.
    pub reward: f64,
}

/// Incremental reward bookkeeping over a stream of MM observations.
#[derive(Debug, Clone)]
pub struct StepAccountant {
    fifo: FifoMatcher,
    weights: RewardWeights,
    interval: usize,
    ledger_len: Vec<usize>,
}

impl StepAccountant {
    pub fn new(weights: RewardWeights, interval: usize) -> Self {
        Self { fifo: FifoMatcher::new(), weights, interval, ledger_len: Vec::new() }
    }

    /// Register observation `k`; must be called in order starting at 0.
    pub fn observe(&mut self, obs: &Observation) {
        self.ledger_len.push(obs.ledger_len);
    }

    /// Reward for the transition from `prev` (observation `k`) to `next`. Call after observing `next`.
    pub fn step(&mut self, k: usize, prev: &Observation, next: &Observation, ledger: &ReturnLedger) -> StepRecord {
        let delta_mid = next.mark.half_cents() - prev.mark.half_cents();
        let fills: Vec<_> = next.fills.iter().map(|f| (f.side, f.price, f.size)).collect();
        let matched = crate::rl::matched_pnl_step(&fills, &mut self.fifo);
        let marked: f64 = next.fills.iter().map(|f| (f.side.sign() * f.size as i64) as f64 * (next.mark.as_cents() - f.price as f64)).sum();
        let r_eq = equitability_reward(ledger, self.interval, k + 1, &self.ledger_len);
        let pnl_cents = pnl_reward(prev.inventory, delta_mid, matched as f64, self.weights.inventory);
        StepRecord {
            step: k,
            time: prev.time,
            inventory: prev.inventory,
            delta_mid,
            inventory_pnl: prev.inventory as f64 * delta_mid as f64 / 2.0 + 0.0,
            matched_pnl: matched,
            mark_correction: marked - matched as f64 + 0.0,
            equitability_reward: r_eq,
            reward: combined_reward(pnl_cents / 100.0, r_eq, self.weights.equitability),
        }
    }
}

/// Reward decomposition for a whole episode of observations.
pub fn account_episode(obs: &[Observation], ledger: &ReturnLedger, weights: RewardWeights, interval: usize) -> Vec<StepRecord> {
    let mut acc = StepAccountant::new(weights, interval);
    let mut out = Vec::with_capacity(obs.len().saturating_sub(1));
    for (k, o) in obs.iter().enumerate() {
        acc.observe(o);
        if k > 0 {
            out.push(acc.step(k - 1, &obs[k - 1], o, ledger));
        }
    }
    out
}

/// Profit rebuilt from the step decomposition: inventory PnL + matched PnL + mark correction, cents.
pub fn profit_from_steps(steps: &[StepRecord]) -> f64 {
    steps.iter().map(|s| s.inventory_pnl + s.matched_pnl as f64 + s.mark_correction).sum()
}
