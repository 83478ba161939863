use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{ConsumerAgentConfig, FundamentalModel, HalfSpread, MMQuoteSpec, MomentumAgentConfig, ValueAgentConfig};
use crate::kernel::{SimTime, NANOS_PER_SEC};
use crate::rl::{RewardWeights, StateBins, TrainingSchedule};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("could not read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("could not parse config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarketConfig {
    pub close_secs: u64,
    /// Opening reference price `m0`, in cents.
    pub reference_price: i64,
    /// Consumer return horizon.
    pub horizon_secs: u64,
    pub latency_ns: u64,
    /// Resting levels per side placed around `m0` before the open.
    pub seed_levels: u32,
    pub seed_size: u64,
    /// Grace period after the close for in-flight messages.
    pub grace_secs: u64,
}

impl Default for MarketConfig {
    fn default() -> Self {
        Self { close_secs: 25_200, reference_price: 100_000, horizon_secs: 60, latency_ns: 1_000, seed_levels: 5, seed_size: 100, grace_secs: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValuePopulation {
    pub count: usize,
    #[serde(flatten)]
    pub agent: ValueAgentConfig,
    /// Target ratio of value-agent posted volume to MM posted volume; scales
    /// arrival rate and order size together. Zero disables value agents.
    pub liquidity_fraction: Option<f64>,
}

impl Default for ValuePopulation {
    fn default() -> Self {
        Self { count: 100, agent: ValueAgentConfig::default(), liquidity_fraction: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentumPopulation {
    pub count: usize,
    #[serde(flatten)]
    pub agent: MomentumAgentConfig,
}

impl Default for MomentumPopulation {
    fn default() -> Self {
        Self { count: 25, agent: MomentumAgentConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsumerPopulation {
    pub count: usize,
    #[serde(flatten)]
    pub agent: ConsumerAgentConfig,
}

impl Default for ConsumerPopulation {
    fn default() -> Self {
        Self { count: 50, agent: ConsumerAgentConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MmMode {
    None,
    Fixed,
    Learning,
    Competing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MmConfig {
    pub mode: MmMode,
    pub half_spread: HalfSpread,
    pub depth: i64,
    pub size: u64,
    pub wake_secs: f64,
}

impl Default for MmConfig {
    fn default() -> Self {
        Self { mode: MmMode::Fixed, half_spread: HalfSpread::Fixed(1), depth: 1, size: 100, wake_secs: 5.0 }
    }
}

impl MmConfig {
    pub fn spec(&self) -> MMQuoteSpec {
        MMQuoteSpec { half_spread: self.half_spread, depth: self.depth, size: self.size }
    }
}

/// The non-learning competitor in competing mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompetitorConfig {
    pub half_spread: HalfSpread,
    pub depth: i64,
}

impl Default for CompetitorConfig {
    fn default() -> Self {
        Self { half_spread: HalfSpread::Fixed(1), depth: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlConfig {
    pub eta: f64,
    pub eta_bar: f64,
    /// Equitability reward interval `N`, in MM steps.
    pub reward_interval: usize,
    pub inventory_unit: i64,
    pub episodes: usize,
    pub eval_episodes: usize,
    pub eta_grid: Vec<f64>,
    pub eta_bar_grid: Vec<f64>,
    /// Overrides the schedule derived from `episodes`.
    pub schedule: Option<TrainingSchedule>,
}

impl Default for RlConfig {
    fn default() -> Self {
        Self {
            eta: 0.0,
            eta_bar: 0.3,
            reward_interval: 60,
            inventory_unit: 500,
            episodes: 100,
            eval_episodes: 20,
            eta_grid: vec![0.0, 3.0, 6.0, 10.0, 20.0, 50.0],
            eta_bar_grid: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.3],
            schedule: None,
        }
    }
}

impl RlConfig {
    pub fn weights(&self) -> Result<RewardWeights, ConfigError> {
        RewardWeights::new(self.eta, self.eta_bar).map_err(|e| invalid(e.to_string()))
    }

    pub fn schedule(&self) -> TrainingSchedule {
        self.schedule.clone().unwrap_or_else(|| TrainingSchedule::scaled(self.episodes))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub samples: usize,
    pub motivating_half_spreads: Vec<HalfSpread>,
    pub motivating_depths: Vec<i64>,
    pub ordersize_half_spreads: Vec<HalfSpread>,
    pub ordersize_depths: Vec<i64>,
    pub order_sizes: Vec<u64>,
    pub liquidity_fractions: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        use HalfSpread::*;
        Self {
            samples: 20,
            motivating_half_spreads: vec![Fixed(1), Fixed(2), Adaptive],
            motivating_depths: vec![1, 2],
            ordersize_half_spreads: vec![Fixed(2), Fixed(5), Fixed(10), Fixed(20), Adaptive],
            ordersize_depths: vec![1, 2, 5, 10, 15],
            order_sizes: vec![5, 10, 30, 50, 100],
            liquidity_fractions: vec![1.0, 0.5, 0.25, 0.1],
        }
    }
}

/// Full description of an experiment. Every field has a default, so an empty file is valid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub market: MarketConfig,
    pub fundamental: FundamentalModel,
    /// CSV of `seconds,cents` rows; replaces `fundamental` when set.
    pub fundamental_csv: Option<PathBuf>,
    pub value: ValuePopulation,
    pub momentum: MomentumPopulation,
    pub consumer: ConsumerPopulation,
    pub mm: MmConfig,
    pub competitor: CompetitorConfig,
    pub rl: RlConfig,
    pub sweep: SweepConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            market: MarketConfig::default(),
            fundamental: FundamentalModel::default(),
            fundamental_csv: None,
            value: ValuePopulation::default(),
            momentum: MomentumPopulation::default(),
            consumer: ConsumerPopulation::default(),
            mm: MmConfig::default(),
            competitor: CompetitorConfig::default(),
            rl: RlConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load, resolve a CSV fundamental if referenced, and validate.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
        let mut cfg: ScenarioConfig = toml::from_str(&text)?;
        if let Some(csv_path) = cfg.fundamental_csv.take() {
            let csv_path = if csv_path.is_relative() { path.parent().unwrap_or(Path::new(".")).join(csv_path) } else { csv_path };
            cfg.fundamental = read_series(&csv_path)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Short form of [`hash`](Self::hash) used in CSV rows.
    pub fn short_hash(&self) -> String {
        self.hash()[..12].to_string()
    }

    pub fn close(&self) -> SimTime {
        SimTime::from_secs(self.market.close_secs)
    }

    pub fn wake_ns(&self) -> u64 {
        (self.mm.wake_secs * NANOS_PER_SEC as f64).round() as u64
    }

    /// Number of MM decisions per episode.
    pub fn steps(&self) -> usize {
        (self.close().as_nanos() / self.wake_ns().max(1)) as usize
    }

    pub fn state_bins(&self) -> StateBins {
        StateBins { inventory_unit: self.rl.inventory_unit, reference_price: self.market.reference_price }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let m = &self.market;
        if m.close_secs == 0 || m.reference_price <= 0 || m.horizon_secs == 0 {
            return Err(invalid("market needs close_secs, reference_price and horizon_secs > 0"));
        }
        if m.seed_levels == 0 || m.seed_size == 0 {
            return Err(invalid("the opening book needs at least one seeded level of positive size"));
        }
        self.fundamental.validate().map_err(|e| invalid(e.to_string()))?;
        if self.fundamental_csv.as_ref().is_some_and(|p| !p.exists()) {
            return Err(invalid("fundamental_csv does not exist"));
        }
        self.value.agent.validate().map_err(|e| invalid(e.to_string()))?;
        if self.value.liquidity_fraction.is_some_and(|f| !(f >= 0.0 && f.is_finite())) {
            return Err(invalid("liquidity_fraction must be finite and non-negative"));
        }
        if self.momentum.count > 0 {
            self.momentum.agent.validate().map_err(|e| invalid(e.to_string()))?;
        }
        self.consumer.agent.validate().map_err(|e| invalid(e.to_string()))?;
        self.mm.spec().validate().map_err(|e| invalid(e.to_string()))?;
        if !(self.mm.wake_secs > 0.0) {
            return Err(invalid("mm.wake_secs must be positive"));
        }
        let wake = self.wake_ns();
        if !self.close().as_nanos().is_multiple_of(wake) {
            return Err(invalid("the close must be a whole number of MM wake intervals"));
        }
        if self.competitor.depth < 1 {
            return Err(invalid("competitor depth must be at least 1"));
        }
        self.rl.weights()?;
        if self.rl.reward_interval < 2 || self.rl.inventory_unit <= 0 {
            return Err(invalid("rl.reward_interval must exceed 1 and inventory_unit must be positive"));
        }
        if self.rl.eta_grid.iter().chain(&self.rl.eta_bar_grid).any(|w| !w.is_finite()) {
            return Err(invalid("weight grids must be finite"));
        }
        for &eta in &self.rl.eta_grid {
            for &eta_bar in &self.rl.eta_bar_grid {
                RewardWeights::new(eta, eta_bar).map_err(|e| invalid(format!("grid point ({eta}, {eta_bar}): {e}")))?;
            }
        }
        let s = &self.sweep;
        if s.motivating_depths.iter().chain(&s.ordersize_depths).any(|&d| d < 1) {
            return Err(invalid("sweep depths must be at least 1"));
        }
        if s.order_sizes.contains(&0) {
            return Err(invalid("sweep order sizes must be positive"));
        }
        if s.liquidity_fractions.iter().any(|f| !(*f >= 0.0 && f.is_finite())) {
            return Err(invalid("liquidity fractions must be finite and non-negative"));
        }
        if let Some(sched) = &self.rl.schedule {
            if sched.total_episodes() == 0 {
                return Err(invalid("training schedule has no episodes"));
            }
        }
        Ok(())
    }
}

/// Read a `seconds,cents` CSV (with header) into a series model.
pub fn read_series(path: &Path) -> Result<FundamentalModel, ConfigError> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for row in rdr.deserialize::<(f64, f64)>() {
        points.push(row.map_err(|e| invalid(format!("{}: {e}", path.display())))?);
    }
    let model = FundamentalModel::Series { points };
    model.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.steps(), 5040);
    }

    #[test]
    fn roundtrip_and_hash() {
        let mut cfg = ScenarioConfig::default();
        cfg.mm.half_spread = HalfSpread::Adaptive;
        let again = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        cfg.seed += 1;
        assert_ne!(again.hash(), cfg.hash());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ScenarioConfig::from_toml("[rl]\neta_bar = 1.5").is_err());
        assert!(ScenarioConfig::from_toml("[mm]\ndepth = 0").is_err());
        assert!(ScenarioConfig::from_toml("[momentum]\nshort_window = 9\nlong_window = 3").is_err());
        assert!(ScenarioConfig::from_toml("[market]\nbogus = 1").is_err());
        assert!(ScenarioConfig::from_toml("[mm]\nwake_secs = 11").is_err());
    }

    #[test]
    fn series_csv_is_loaded_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("f.csv"), "seconds,cents\n0,100000\n60,100010\n").unwrap();
        std::fs::write(dir.path().join("s.toml"), "fundamental_csv = \"f.csv\"\n").unwrap();
        let cfg = ScenarioConfig::load(&dir.path().join("s.toml")).unwrap();
        assert_eq!(cfg.fundamental, FundamentalModel::Series { points: vec![(0.0, 100_000.0), (60.0, 100_010.0)] });
    }
}
