use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DiscreteAction, DiscreteState, RlError};

/// Dense action-value table with per-pair visit counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    states: usize,
    actions: usize,
    values: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    /// Zero-initialized table.
    pub fn new(states: usize, actions: usize) -> Self {
        Self { states, actions, values: vec![0.0; states * actions], visits: vec![0; states * actions] }
    }

    /// The 96 × 6 market-maker table.
    pub fn market_maker() -> Self {
        Self::new(DiscreteState::COUNT, DiscreteAction::COUNT)
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.actions + a] = v;
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.actions..(s + 1) * self.actions]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Greedy action, lowest index on ties.
    pub fn argmax(&self, s: usize) -> usize {
        let row = self.row(s);
        let mut best = 0;
        for (a, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s)[self.argmax(s)]
    }

    /// One Q-learning step on `(s, a)`:
    /// `Q ← (1−α)Q + α(r + γ max_a' Q(s', a'))`, with no bootstrap when `next` is `None` (terminal).
    pub fn update(&mut self, s: usize, a: usize, reward: f64, next: Option<usize>, alpha: f64, gamma: f64) {
        let bootstrap = next.map_or(0.0, |s2| gamma * self.max(s2));
        let i = s * self.actions + a;
        self.values[i] = (1.0 - alpha) * self.values[i] + alpha * (reward + bootstrap);
        self.visits[i] += 1;
    }

    /// Max-norm distance to another table of the same shape.
    pub fn max_abs_diff(&self, other: &QTable) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// CSV checkpoint: `state,action,value,visits`, values in round-trip precision.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["state", "action", "value", "visits"])?;
        for s in 0..self.states {
            for a in 0..self.actions {
                w.write_record([s.to_string(), a.to_string(), format!("{:?}", self.get(s, a)), self.visits(s, a).to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, RlError> {
        let mut rows = Vec::new();
        let mut r = csv::Reader::from_reader(input);
        for rec in r.records() {
            let rec = rec.map_err(|e| RlError::Checkpoint(e.to_string()))?;
            let field = |i: usize| rec.get(i).ok_or_else(|| RlError::Checkpoint(format!("missing column {i}")));
            let parse_err = |e: &dyn std::fmt::Display| RlError::Checkpoint(e.to_string());
            let s: usize = field(0)?.parse().map_err(|e| parse_err(&e))?;
            let a: usize = field(1)?.parse().map_err(|e| parse_err(&e))?;
            let v: f64 = field(2)?.parse().map_err(|e| parse_err(&e))?;
            let n: u64 = field(3)?.parse().map_err(|e| parse_err(&e))?;
            rows.push((s, a, v, n));
        }
        let states = rows.iter().map(|r| r.0).max().map_or(0, |m| m + 1);
        let actions = rows.iter().map(|r| r.1).max().map_or(0, |m| m + 1);
        if rows.len() != states * actions {
            return Err(RlError::Checkpoint(format!("expected {} rows, found {}", states * actions, rows.len())));
        }
        let mut q = QTable::new(states, actions);
        for (s, a, v, n) in rows {
            if !v.is_finite() {
                return Err(RlError::Checkpoint(format!("non-finite value at ({s},{a})")));
            }
            q.set(s, a, v);
            q.visits[s * actions + a] = n;
        }
        Ok(q)
    }
}

/// Greedy action with probability `1 − ε`, otherwise uniform over all actions.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.actions())
    } else {
        q.argmax(s)
    }
}

/// Greedy policy of a market-maker table and its quoting averages over a uniform state distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: Vec<DiscreteAction>,
    pub avg_half_spread: f64,
    pub avg_depth: f64,
}

/// Summarize the greedy policy. "Follow the market" actions are valued at one
/// cent in tight-spread states and at `wide_half_spread` in wide ones.
pub fn greedy_policy_summary(q: &QTable, wide_half_spread: f64) -> PolicySummary {
    assert_eq!((q.states(), q.actions()), (DiscreteState::COUNT, DiscreteAction::COUNT));
    let policy: Vec<DiscreteAction> = (0..q.states()).map(|s| DiscreteAction::from_index(q.argmax(s))).collect();
    let mut spread_sum = 0.0;
    let mut depth_sum = 0.0;
    for (s, a) in policy.iter().enumerate() {
        let state = DiscreteState::from_index(s);
        spread_sum += match a.spread {
            0 if state.spread == 0 => 1.0,
            0 => wide_half_spread,
            1 => 1.0,
            _ => 2.0,
        };
        depth_sum += a.depth_cents() as f64;
    }
    let n = policy.len() as f64;
    PolicySummary { policy, avg_half_spread: spread_sum / n, avg_depth: depth_sum / n }
}
