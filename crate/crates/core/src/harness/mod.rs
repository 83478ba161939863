//! Scenario configuration, episode orchestration, experiment families and outputs.
//!
//! Sweeps and training runs fan episodes out over a rayon pool; each episode
//! owns its kernel and results are gathered in (cell, seed) order.

mod accounting;
mod config;
mod episode;
mod learn;
mod output;
mod sim;
mod stats;
mod sweep;

pub use accounting::{account_episode, profit_from_steps, StepAccountant, StepRecord};
pub use config::{
    read_series, CompetitorConfig, ConfigError, ConsumerPopulation, MarketConfig, MmConfig, MmMode, MomentumPopulation, RlConfig, ScenarioConfig, SweepConfig,
    ValuePopulation,
};
pub use episode::{audit, collect, fixed_roles, mean_half_spread, run_episode, EpisodeResult, EpisodeRow, HarnessError};
pub use learn::{
    compete, drive_episode, eval_seeds, evaluate, grid_pairs, learning_roles, policy_rows, train, train_grid, with_weights, CompeteRow, Drive, DrivenEpisode,
    EvalRow, EvalSummary, Evaluation, PolicyRow, ReturnRow, TrainedPolicy, TrainingRow, EVAL_SEED_OFFSET,
};
pub use output::OutputDir;
pub use sim::{effective_value_config, observation_state, MarketSim, MmRole};
pub use stats::{mean_se, sample_variance, stats, Fit, StatsError};
pub use sweep::{
    equitability_by_size, fit_group, liquidity_sweep, motivating_sweep, order_size_sweep, run_cells, summarize_cells, sweep_seeds, with_liquidity_fraction, Cell,
    CellSummary, FitRow, SweepRow, SweepSummary,
};
