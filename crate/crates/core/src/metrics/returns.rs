use serde::{Deserialize, Serialize};

use crate::exchange::{MidPrice, Side};
use crate::kernel::{AgentId, SimTime};

use super::MetricsError;

/// Signed T-period return in half-cents: `horizon - exec` for buys, `exec - horizon` for sells.
pub fn t_period_return(side: Side, exec_half_cents: f64, horizon: MidPrice) -> f64 {
    match side {
        Side::Bid => horizon.half_cents() as f64 - exec_half_cents,
        Side::Ask => exec_half_cents - horizon.half_cents() as f64,
    }
}

/// One consumer trade and its outcome `T` seconds later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSample {
    pub agent: AgentId,
    pub side: Side,
    /// Volume-weighted execution price, in half-cents.
    pub exec_price: f64,
    pub exec_time: SimTime,
    pub horizon_price: MidPrice,
    /// When the horizon price was observed and the sample entered the ledger.
    pub completed_at: SimTime,
    pub size: u64,
    /// Return in half-cents.
    pub r: f64,
}

impl ReturnSample {
    pub fn new(agent: AgentId, side: Side, exec_price: f64, exec_time: SimTime, horizon_price: MidPrice, completed_at: SimTime, size: u64) -> Self {
        let r = t_period_return(side, exec_price, horizon_price);
        Self { agent, side, exec_price, exec_time, horizon_price, completed_at, size, r }
    }

    pub fn return_cents(&self) -> f64 {
        self.r / 2.0
    }

    /// Return in whole cents, truncated toward zero, as used for binning.
    pub fn binned_return_cents(&self) -> i64 {
        (self.r / 2.0).trunc() as i64
    }
}

/// Bin edges for return histograms. `K = edges.len() + 1`; bin `k` is `[edges[k-1], edges[k])`
/// with open-ended outer bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinSpec {
    edges: Vec<i64>,
}

impl Default for BinSpec {
    /// Twelve bins on symmetric decade edges: ±10, ±10², …, ±10⁵ and 0.
    fn default() -> Self {
        let pos = [10, 100, 1_000, 10_000, 100_000];
        let mut edges: Vec<i64> = pos.iter().rev().map(|e| -e).collect();
        edges.push(0);
        edges.extend(pos);
        Self { edges }
    }
}

impl BinSpec {
    pub fn new(edges: Vec<i64>) -> Result<Self, MetricsError> {
        if edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MetricsError::InvalidBins);
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[i64] {
        &self.edges
    }

    pub fn bins(&self) -> usize {
        self.edges.len() + 1
    }

    pub fn bin_index(&self, r_cents: i64) -> usize {
        self.edges.partition_point(|&e| e <= r_cents)
    }

    /// Human-readable interval for bin `k`, e.g. `[-10,0)`.
    pub fn label(&self, k: usize) -> String {
        let lo = if k == 0 { "-inf".to_string() } else { self.edges[k - 1].to_string() };
        let hi = self.edges.get(k).map_or("inf".to_string(), |e| e.to_string());
        if k == 0 {
            format!("({lo},{hi})")
        } else {
            format!("[{lo},{hi})")
        }
    }
}

/// Append-only record of completed consumer samples with running bin counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnLedger {
    spec: BinSpec,
    samples: Vec<ReturnSample>,
    bins: Vec<usize>,
    counts: Vec<u64>,
}

impl ReturnLedger {
    pub fn new(spec: BinSpec) -> Self {
        let k = spec.bins();
        Self { spec, samples: Vec::new(), bins: Vec::new(), counts: vec![0; k] }
    }

    pub fn push(&mut self, sample: ReturnSample) {
        let k = self.spec.bin_index(sample.binned_return_cents());
        self.counts[k] += 1;
        self.bins.push(k);
        self.samples.push(sample);
    }

    pub fn spec(&self) -> &BinSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[ReturnSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Bin counts over the first `n` samples in completion order.
    pub fn prefix_counts(&self, n: usize) -> Vec<u64> {
        let mut c = vec![0; self.counts.len()];
        for &k in &self.bins[..n.min(self.bins.len())] {
            c[k] += 1;
        }
        c
    }

    pub fn returns_cents(&self) -> Vec<f64> {
        self.samples.iter().map(ReturnSample::return_cents).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_by_side() {
        let horizon = MidPrice::from_cents(10003);
        assert_eq!(t_period_return(Side::Bid, 20000.0, horizon), 6.0);
        assert_eq!(t_period_return(Side::Ask, 20000.0, horizon), -6.0);
        let flat = MidPrice::from_cents(10000);
        assert_eq!(t_period_return(Side::Bid, 20000.0, flat), 0.0);
        assert_eq!(t_period_return(Side::Ask, 20000.0, flat), 0.0);
    }

    #[test]
    fn default_bins() {
        let spec = BinSpec::default();
        assert_eq!(spec.bins(), 12);
        assert_eq!(spec.bin_index(-50_000), 1);
        assert_eq!(spec.bin_index(0), 6);
        assert_eq!(spec.bin_index(1_000_000), 11);
        assert_eq!(spec.bin_index(-100_001), 0);
        assert_eq!(spec.bin_index(-100_000), 1);
        assert_eq!(spec.bin_index(-1), 5);
        assert_eq!(spec.bin_index(9), 6);
        assert_eq!(spec.bin_index(10), 7);
        assert_eq!(spec.label(5), "[-10,0)");
        assert_eq!(spec.label(0), "(-inf,-100000)");
        assert_eq!(spec.label(11), "[100000,inf)");
    }

    #[test]
    fn rejects_unsorted_edges() {
        assert_eq!(BinSpec::new(vec![0, 0]), Err(MetricsError::InvalidBins));
        assert_eq!(BinSpec::new(vec![1, 2, 3]).unwrap().bins(), 4);
    }

    #[test]
    fn half_cent_returns_truncate_toward_zero() {
        let s = ReturnSample::new(AgentId(1), Side::Bid, 20001.0, SimTime(0), MidPrice(20000), SimTime(0), 1);
        assert_eq!(s.return_cents(), -0.5);
        assert_eq!(s.binned_return_cents(), 0);
        let s = ReturnSample::new(AgentId(1), Side::Bid, 20003.0, SimTime(0), MidPrice(20000), SimTime(0), 1);
        assert_eq!(s.binned_return_cents(), -1);
    }

    #[test]
    fn counts_track_samples() {
        let mut ledger = ReturnLedger::new(BinSpec::default());
        for r in [-30, 4, 4, 250, -2] {
            ledger.push(ReturnSample::new(AgentId(0), Side::Bid, 0.0, SimTime(0), MidPrice(2 * r), SimTime(0), 1));
        }
        assert_eq!(ledger.counts().iter().sum::<u64>(), 5);
        assert_eq!(ledger.prefix_counts(3)[6], 2);
        assert_eq!(ledger.prefix_counts(99), ledger.counts());
    }
}
