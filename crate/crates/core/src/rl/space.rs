use serde::{Deserialize, Serialize};

use crate::exchange::{Cents, MidPrice};

use super::RlError;

/// Discretization constants: inventory unit `I` and reference price `m₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBins {
    pub inventory_unit: i64,
    pub reference_price: Cents,
}

impl Default for StateBins {
    fn default() -> Self {
        Self { inventory_unit: 500, reference_price: 100_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteState {
    pub inventory: u8,
    pub imbalance: u8,
    pub spread: u8,
    pub midprice: u8,
}

impl DiscreteState {
    pub const COUNT: usize = 6 * 4 * 2 * 2;

    pub fn index(self) -> usize {
        ((self.inventory as usize * 4 + self.imbalance as usize) * 2 + self.spread as usize) * 2 + self.midprice as usize
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < Self::COUNT, "state index {i} out of range");
        DiscreteState {
            midprice: (i % 2) as u8,
            spread: (i / 2 % 2) as u8,
            imbalance: (i / 4 % 4) as u8,
            inventory: (i / 16) as u8,
        }
    }

    pub fn all() -> impl Iterator<Item = DiscreteState> {
        (0..Self::COUNT).map(Self::from_index)
    }
}

/// `spread`: 0 = follow the market spread, 1 = one cent, 2 = two cents.
/// `depth`: 0 = one extra level, 1 = two extra levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DiscreteAction {
    pub spread: u8,
    pub depth: u8,
}

impl DiscreteAction {
    pub const COUNT: usize = 3 * 2;

    pub fn index(self) -> usize {
        self.spread as usize * 2 + self.depth as usize
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < Self::COUNT, "action index {i} out of range");
        DiscreteAction { spread: (i / 2) as u8, depth: (i % 2) as u8 }
    }

    pub fn depth_cents(self) -> Cents {
        self.depth as Cents + 1
    }
}

/// Map raw observations to the 6×4×2×2 grid.
pub fn discretize_state(inventory: i64, imbalance: f64, spread: Cents, mid: MidPrice, bins: StateBins) -> DiscreteState {
    let unit = bins.inventory_unit;
    let inventory = match inventory {
        x if x < -10 * unit => 0,
        x if x < -5 * unit => 1,
        x if x < 0 => 2,
        x if x < 5 * unit => 3,
        x if x < 10 * unit => 4,
        _ => 5,
    };
    let imbalance = match imbalance {
        x if x < 0.25 => 0,
        x if x < 0.5 => 1,
        x if x < 0.75 => 2,
        _ => 3,
    };
    DiscreteState {
        inventory,
        imbalance,
        spread: u8::from(spread >= 2),
        midprice: u8::from(mid >= MidPrice::from_cents(bins.reference_price)),
    }
}

/// Half-spread that tracks the market: `floor(spread / 2)`, at least one cent.
pub fn adaptive_half_spread(market_spread: Cents) -> Cents {
    (market_spread / 2).max(1)
}

/// Resolve an action to `(half_spread, depth)` in cents.
pub fn action_to_quote(action: DiscreteAction, market_spread: Option<Cents>) -> Result<(Cents, Cents), RlError> {
    let half = match action.spread {
        0 => adaptive_half_spread(market_spread.ok_or(RlError::NoMidPrice)?),
        1 => 1,
        _ => 2,
    };
    Ok((half, action.depth_cents()))
}
