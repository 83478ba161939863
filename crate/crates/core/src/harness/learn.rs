use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::agents::QuoteRecord;
use crate::kernel::AgentId;
use crate::metrics::entropy_equitability;
use crate::rl::{adaptive_half_spread, epsilon_greedy, greedy_policy_summary, DiscreteAction, DiscreteState, PolicySummary, QTable, RewardWeights};

use super::accounting::{StepAccountant, StepRecord};
use super::config::{MmMode, ScenarioConfig};
use super::episode::{audit, mean_half_spread, HarnessError};
use super::sim::{observation_state, MarketSim, MmRole};
use super::stats::{mean_se, sample_variance};

/// Evaluation seeds start here, clear of the training seeds.
pub const EVAL_SEED_OFFSET: u64 = 1_000_000;

/// How actions are chosen in a driven episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive {
    Learn { alpha: f64, epsilon: f64, gamma: f64 },
    Greedy,
}

/// Trace of one episode driven by a Q-table.
#[derive(Debug, Clone)]
pub struct DrivenEpisode {
    pub seed: u64,
    pub steps: Vec<StepRecord>,
    pub actions: Vec<usize>,
    pub profit: f64,
    pub equitability: Option<f64>,
    pub returns: Vec<f64>,
    pub quotes: Vec<QuoteRecord>,
    /// Adaptive half-spread seen in wide-spread states, per decision.
    pub wide_half_spreads: Vec<f64>,
    /// Per-MM equitability over consumers whose volume came mostly from that MM, in MM order.
    pub attributed_equitability: Vec<Option<f64>>,
    /// Per-MM mean quoted half-spread, in MM order.
    pub mm_half_spreads: Vec<Option<f64>>,
}

impl DrivenEpisode {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// Unweighted inventory plus matched PnL, cents.
    pub fn pnl(&self) -> f64 {
        self.steps.iter().map(|s| s.inventory_pnl + s.matched_pnl as f64).sum()
    }

    pub fn equitability_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.equitability_reward).sum()
    }
}

/// Market makers for a learning run: the learner first, then the fixed competitor if any.
pub fn learning_roles(cfg: &ScenarioConfig) -> Result<Vec<MmRole>, HarnessError> {
    let learner = MmRole::Learning { size: cfg.mm.size };
    match cfg.mm.mode {
        MmMode::Learning => Ok(vec![learner]),
        MmMode::Competing => {
            let spec = crate::agents::MMQuoteSpec { half_spread: cfg.competitor.half_spread, depth: cfg.competitor.depth, size: cfg.mm.size };
            Ok(vec![learner, MmRole::Fixed(spec)])
        }
        MmMode::None | MmMode::Fixed => Err(HarnessError::Unsupported("mm.mode must be learning or competing".into())),
    }
}

/// Run one session with the first MM controlled by `q`, updating `q` when learning.
pub fn drive_episode(cfg: &ScenarioConfig, seed: u64, weights: RewardWeights, q: &mut QTable, drive: Drive) -> Result<DrivenEpisode, HarnessError> {
    let roles = learning_roles(cfg)?;
    let mut sim = MarketSim::new(cfg, seed, &roles);
    let id = sim.market_makers()[0];
    let mut rng = sim.policy_rng();
    let mut acc = StepAccountant::new(weights, cfg.rl.reward_interval);
    let mut steps = Vec::new();
    let mut actions = Vec::new();
    let mut wide = Vec::new();
    let mut seen = 0;
    let mut pending: Option<(usize, usize, f64)> = None;
    loop {
        let next = sim.next_decision();
        let obs = sim.market_maker(id).observations();
        for k in seen..obs.len() {
            acc.observe(&obs[k]);
            if k > 0 {
                let rec = acc.step(k - 1, &obs[k - 1], &obs[k], sim.ledger());
                if let Some(p) = pending.as_mut() {
                    p.2 += rec.reward;
                }
                steps.push(rec);
            }
        }
        seen = obs.len();
        let Some(who) = next else { break };
        debug_assert_eq!(who, id);
        let obs = sim.observation(id);
        let state = observation_state(obs, cfg);
        if state.spread == 1 {
            if let Some(s) = obs.reference_spread {
                wide.push(adaptive_half_spread(s) as f64);
            }
        }
        let s = state.index();
        if let (Some((ps, pa, r)), Drive::Learn { alpha, gamma, .. }) = (pending.take(), drive) {
            q.update(ps, pa, r, Some(s), alpha, gamma);
        }
        let a = match drive {
            Drive::Learn { epsilon, .. } => epsilon_greedy(q, s, epsilon, &mut rng),
            Drive::Greedy => q.argmax(s),
        };
        actions.push(a);
        sim.act(id, DiscreteAction::from_index(a));
        pending = Some((s, a, 0.0));
    }
    if let (Some((ps, pa, r)), Drive::Learn { alpha, gamma, .. }) = (pending, drive) {
        q.update(ps, pa, r, None, alpha, gamma);
    }
    audit(&sim, Some((id, &steps)))?;
    let (attributed_equitability, mm_half_spreads) = per_mm(&sim);
    Ok(DrivenEpisode {
        seed,
        profit: sim.mm_profit(id),
        equitability: entropy_equitability(sim.ledger().counts()).ok(),
        returns: sim.ledger().returns_cents(),
        quotes: sim.market_maker(id).quotes().to_vec(),
        steps,
        actions,
        wide_half_spreads: wide,
        attributed_equitability,
        mm_half_spreads,
    })
}

fn per_mm(sim: &MarketSim) -> (Vec<Option<f64>>, Vec<Option<f64>>) {
    let owner = sim.consumer_counterparties();
    let spec = sim.ledger().spec();
    let mut counts: BTreeMap<AgentId, Vec<u64>> = sim.market_makers().iter().map(|&m| (m, vec![0; spec.bins()])).collect();
    for s in sim.samples() {
        if let Some(c) = owner.get(&s.agent).and_then(|m| counts.get_mut(m)) {
            c[spec.bin_index(s.binned_return_cents())] += 1;
        }
    }
    let eq = sim.market_makers().iter().map(|m| entropy_equitability(&counts[m]).ok()).collect();
    let spreads = sim.market_makers().iter().map(|&m| mean_half_spread(sim.market_maker(m).quotes())).collect();
    (eq, spreads)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingRow {
    pub eta: f64,
    pub eta_bar: f64,
    pub episode: usize,
    pub seed: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub total_reward: f64,
    pub equitability_reward: f64,
    pub profit_cents: f64,
    pub equitability: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainedPolicy {
    pub eta: f64,
    pub eta_bar: f64,
    pub q: QTable,
    pub curve: Vec<TrainingRow>,
}

/// `cfg` with the reward weights replaced.
pub fn with_weights(cfg: &ScenarioConfig, eta: f64, eta_bar: f64) -> ScenarioConfig {
    let mut out = cfg.clone();
    out.rl.eta = eta;
    out.rl.eta_bar = eta_bar;
    out
}

/// Tabular Q-learning over the configured schedule; training episode `e` uses seed `cfg.seed + e`.
pub fn train(cfg: &ScenarioConfig) -> Result<TrainedPolicy, HarnessError> {
    cfg.validate()?;
    let weights = cfg.rl.weights()?;
    let schedule = cfg.rl.schedule();
    let mut q = QTable::market_maker();
    let mut curve = Vec::with_capacity(schedule.total_episodes());
    for episode in 0..schedule.total_episodes() {
        let (alpha, epsilon) = schedule.value(episode);
        let seed = cfg.seed + episode as u64;
        let ep = drive_episode(cfg, seed, weights, &mut q, Drive::Learn { alpha, epsilon, gamma: schedule.gamma })?;
        curve.push(TrainingRow {
            eta: cfg.rl.eta,
            eta_bar: cfg.rl.eta_bar,
            episode,
            seed,
            alpha,
            epsilon,
            total_reward: ep.total_reward(),
            equitability_reward: ep.equitability_reward(),
            profit_cents: ep.profit,
            equitability: ep.equitability,
        });
    }
    Ok(TrainedPolicy { eta: cfg.rl.eta, eta_bar: cfg.rl.eta_bar, q, curve })
}

/// Train one policy per `(eta, eta_bar)` pair, in parallel, returned in input order.
pub fn train_grid(cfg: &ScenarioConfig, pairs: &[(f64, f64)]) -> Result<Vec<TrainedPolicy>, HarnessError> {
    pairs.par_iter().map(|&(e, b)| train(&with_weights(cfg, e, b))).collect()
}

/// Every `(eta, eta_bar)` pair of the configured grid.
pub fn grid_pairs(cfg: &ScenarioConfig) -> Vec<(f64, f64)> {
    cfg.rl.eta_grid.iter().flat_map(|&e| cfg.rl.eta_bar_grid.iter().map(move |&b| (e, b))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub eta: f64,
    pub eta_bar: f64,
    pub episode: usize,
    pub seed: u64,
    pub profit_cents: f64,
    /// Unweighted inventory plus matched PnL summed over steps, cents.
    pub pnl_cents: f64,
    pub equitability: Option<f64>,
    pub cumulative_equitability_reward: f64,
    pub total_reward: f64,
    pub mean_half_spread: Option<f64>,
    pub mean_depth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnRow {
    pub eta: f64,
    pub eta_bar: f64,
    pub episode: usize,
    pub return_cents: f64,
    pub bin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalSummary {
    pub eta: f64,
    pub eta_bar: f64,
    pub episodes: usize,
    pub mean_equitability_reward: f64,
    pub se_equitability_reward: f64,
    pub mean_profit_cents: f64,
    pub mean_pnl_cents: f64,
    pub pnl_variance: f64,
    pub return_variance: f64,
    pub policy_half_spread: f64,
    pub policy_depth: f64,
    pub mean_quoted_half_spread: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub rows: Vec<EvalRow>,
    pub returns: Vec<ReturnRow>,
    pub summary: EvalSummary,
    pub policy: PolicySummary,
    pub episodes: Vec<DrivenEpisode>,
}

/// Seeds of the `n` greedy evaluation episodes.
pub fn eval_seeds(cfg: &ScenarioConfig, n: usize) -> Vec<u64> {
    (0..n as u64).map(|i| cfg.seed + EVAL_SEED_OFFSET + i).collect()
}

/// Greedy (ε = 0) rollouts of `q` over `n` fresh seeds.
pub fn evaluate(q: &QTable, cfg: &ScenarioConfig, n: usize) -> Result<Evaluation, HarnessError> {
    cfg.validate()?;
    let weights = cfg.rl.weights()?;
    let episodes: Vec<DrivenEpisode> = eval_seeds(cfg, n)
        .par_iter()
        .map(|&seed| drive_episode(cfg, seed, weights, &mut q.clone(), Drive::Greedy))
        .collect::<Result<_, _>>()?;
    let (eta, eta_bar) = (cfg.rl.eta, cfg.rl.eta_bar);
    let spec = crate::metrics::BinSpec::default();
    let mut rows = Vec::new();
    let mut returns = Vec::new();
    for (i, ep) in episodes.iter().enumerate() {
        let depth = (!ep.quotes.is_empty()).then(|| ep.quotes.iter().map(|q| q.depth as f64).sum::<f64>() / ep.quotes.len() as f64);
        rows.push(EvalRow {
            eta,
            eta_bar,
            episode: i,
            seed: ep.seed,
            profit_cents: ep.profit,
            pnl_cents: ep.pnl(),
            equitability: ep.equitability,
            cumulative_equitability_reward: ep.equitability_reward(),
            total_reward: ep.total_reward(),
            mean_half_spread: mean_half_spread(&ep.quotes),
            mean_depth: depth,
        });
        returns.extend(ep.returns.iter().map(|&r| ReturnRow { eta, eta_bar, episode: i, return_cents: r, bin: spec.bin_index(r.trunc() as i64) }));
    }
    let wide: Vec<f64> = episodes.iter().flat_map(|e| e.wide_half_spreads.iter().copied()).collect();
    let wide_half = if wide.is_empty() { 1.0 } else { wide.iter().sum::<f64>() / wide.len() as f64 };
    let policy = greedy_policy_summary(q, wide_half);
    let eq: Vec<f64> = rows.iter().map(|r| r.cumulative_equitability_reward).collect();
    let profits: Vec<f64> = rows.iter().map(|r| r.profit_cents).collect();
    let pnls: Vec<f64> = rows.iter().map(|r| r.pnl_cents).collect();
    let all_returns: Vec<f64> = returns.iter().map(|r| r.return_cents).collect();
    let (mean_eq, se_eq) = mean_se(&eq);
    let quoted: Vec<f64> = rows.iter().filter_map(|r| r.mean_half_spread).collect();
    let summary = EvalSummary {
        eta,
        eta_bar,
        episodes: n,
        mean_equitability_reward: mean_eq,
        se_equitability_reward: se_eq,
        mean_profit_cents: mean_se(&profits).0,
        mean_pnl_cents: mean_se(&pnls).0,
        pnl_variance: if n > 1 { sample_variance(&pnls) } else { f64::NAN },
        return_variance: if all_returns.len() > 1 { sample_variance(&all_returns) } else { f64::NAN },
        policy_half_spread: policy.avg_half_spread,
        policy_depth: policy.avg_depth,
        mean_quoted_half_spread: (!quoted.is_empty()).then(|| quoted.iter().sum::<f64>() / quoted.len() as f64),
    };
    Ok(Evaluation { rows, returns, summary, policy, episodes })
}

/// One row per state of a greedy policy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolicyRow {
    pub eta: f64,
    pub eta_bar: f64,
    pub state: usize,
    pub inventory: u8,
    pub imbalance: u8,
    pub spread: u8,
    pub midprice: u8,
    pub action: usize,
    pub action_spread: u8,
    pub action_depth: u8,
    pub visits: u64,
}

pub fn policy_rows(eta: f64, eta_bar: f64, q: &QTable, policy: &PolicySummary) -> Vec<PolicyRow> {
    policy
        .policy
        .iter()
        .enumerate()
        .map(|(s, a)| {
            let st = DiscreteState::from_index(s);
            PolicyRow {
                eta,
                eta_bar,
                state: s,
                inventory: st.inventory,
                imbalance: st.imbalance,
                spread: st.spread,
                midprice: st.midprice,
                action: a.index(),
                action_spread: a.spread,
                action_depth: a.depth,
                visits: (0..q.actions()).map(|b| q.visits(s, b)).sum(),
            }
        })
        .collect()
}

/// Learner-minus-competitor differences for one `(eta, eta_bar)` pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompeteRow {
    pub eta: f64,
    pub eta_bar: f64,
    pub episodes: usize,
    pub learner_half_spread: Option<f64>,
    pub competitor_half_spread: Option<f64>,
    pub half_spread_difference: Option<f64>,
    pub learner_equitability: Option<f64>,
    pub competitor_equitability: Option<f64>,
    pub equitability_difference: Option<f64>,
    pub learner_profit_cents: f64,
}

fn mean_opt(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Train a learner next to a fixed competitor, then compare them over greedy evaluation episodes.
pub fn compete(cfg: &ScenarioConfig, pairs: &[(f64, f64)]) -> Result<(Vec<CompeteRow>, Vec<TrainedPolicy>), HarnessError> {
    let mut cfg = cfg.clone();
    cfg.mm.mode = MmMode::Competing;
    let trained = train_grid(&cfg, pairs)?;
    let rows = trained
        .iter()
        .map(|t| {
            let c = with_weights(&cfg, t.eta, t.eta_bar);
            let ev = evaluate(&t.q, &c, c.rl.eval_episodes)?;
            let side = |i: usize| {
                (mean_opt(ev.episodes.iter().map(|e| e.mm_half_spreads[i])), mean_opt(ev.episodes.iter().map(|e| e.attributed_equitability[i])))
            };
            let (ls, le) = side(0);
            let (cs, ce) = side(1);
            Ok(CompeteRow {
                eta: t.eta,
                eta_bar: t.eta_bar,
                episodes: ev.episodes.len(),
                learner_half_spread: ls,
                competitor_half_spread: cs,
                half_spread_difference: ls.zip(cs).map(|(a, b)| a - b),
                learner_equitability: le,
                competitor_equitability: ce,
                equitability_difference: le.zip(ce).map(|(a, b)| a - b),
                learner_profit_cents: ev.summary.mean_profit_cents,
            })
        })
        .collect::<Result<_, HarnessError>>()?;
    Ok((rows, trained))
}
