//! Tabular multi-objective Q-learning for the market maker.
//!
//! The MM observes `[inventory, imbalance, spread, midprice]`, discretized to
//! 96 states, and picks one of 6 `(half-spread, depth)` quoting actions. Its
//! reward is a linear scalarization of spread-capture PnL, down-weighted
//! inventory PnL and the change in consumer equitability.

mod qtable;
mod reward;
mod schedule;
mod space;

pub use qtable::{epsilon_greedy, greedy_policy_summary, PolicySummary, QTable};
pub use reward::{combined_reward, matched_pnl_step, pnl_reward, FifoMatcher, Lot, RewardWeights};
pub use schedule::TrainingSchedule;
pub use space::{action_to_quote, adaptive_half_spread, discretize_state, DiscreteAction, DiscreteState, StateBins};

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum RlError {
    #[error("no mid-price: the book is one-sided")]
    NoMidPrice,
    #[error("invalid reward weights: {0}")]
    InvalidWeights(&'static str),
    #[error("malformed Q-table checkpoint: {0}")]
    Checkpoint(String),
}
