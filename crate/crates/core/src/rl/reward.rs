use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::exchange::{Cents, Side};

use super::RlError;

/// Scalarization weights: `η` prices equitability, `η̄` scales inventory PnL.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    /// Equitability weight, in dollars per unit of equitability.
    pub equitability: f64,
    /// Inventory weight in `[0, 1]`.
    pub inventory: f64,
}

impl RewardWeights {
    pub fn new(equitability: f64, inventory: f64) -> Result<Self, RlError> {
        if !(equitability >= 0.0 && equitability.is_finite()) {
            return Err(RlError::InvalidWeights("equitability weight must be finite and non-negative"));
        }
        if !(0.0..=1.0).contains(&inventory) {
            return Err(RlError::InvalidWeights("inventory weight must lie in [0, 1]"));
        }
        Ok(Self { equitability, inventory })
    }
}

/// `η̄ · inventory · Δmid + matched`, in cents. `delta_mid` is in half-cents.
pub fn pnl_reward(inventory: i64, delta_mid: i64, matched_pnl: f64, inventory_weight: f64) -> f64 {
    inventory_weight * inventory as f64 * delta_mid as f64 / 2.0 + matched_pnl
}

/// `pnl + η · r_equit`.
pub fn combined_reward(pnl: f64, equitability_reward: f64, eta: f64) -> f64 {
    pnl + eta * equitability_reward
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lot {
    pub price: Cents,
    pub qty: u64,
}

/// FIFO queues of executed but not yet offset buys and sells.
///
/// Each execution first offsets the oldest lots on the other side; the matched
/// volume realizes `qty · (sell − buy)`, the rest joins its own queue.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FifoMatcher {
    buys: VecDeque<Lot>,
    sells: VecDeque<Lot>,
}

impl FifoMatcher {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process one execution and return the matched PnL it realizes, in cents.
    pub fn on_fill(&mut self, side: Side, price: Cents, qty: u64) -> i64 {
        let (against, own) = match side {
            Side::Bid => (&mut self.sells, &mut self.buys),
            Side::Ask => (&mut self.buys, &mut self.sells),
        };
        let mut left = qty;
        let mut pnl = 0i64;
        while left > 0 {
            let Some(lot) = against.front_mut() else { break };
            let m = lot.qty.min(left);
            let (buy, sell) = match side {
                Side::Bid => (price, lot.price),
                Side::Ask => (lot.price, price),
            };
            pnl += m as i64 * (sell - buy);
            lot.qty -= m;
            left -= m;
            if lot.qty == 0 {
                against.pop_front();
            }
        }
        if left > 0 {
            own.push_back(Lot { price, qty: left });
        }
        pnl
    }

    /// Net position implied by the open lots.
    pub fn inventory(&self) -> i64 {
        let b: u64 = self.buys.iter().map(|l| l.qty).sum();
        let s: u64 = self.sells.iter().map(|l| l.qty).sum();
        b as i64 - s as i64
    }

    pub fn open_buys(&self) -> impl Iterator<Item = &Lot> {
        self.buys.iter()
    }

    pub fn open_sells(&self) -> impl Iterator<Item = &Lot> {
        self.sells.iter()
    }
}

/// Matched PnL over one step's executions, updating `state` in place.
pub fn matched_pnl_step(fills: &[(Side, Cents, u64)], state: &mut FifoMatcher) -> i64 {
    fills.iter().map(|&(side, price, qty)| state.on_fill(side, price, qty)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pnl_reward_cases() {
        assert_eq!(pnl_reward(100, 2, 0.0, 0.1), 10.0);
        assert_eq!(pnl_reward(0, 40, 7.0, 0.3), 7.0);
        assert_eq!(pnl_reward(250, -6, 7.0, 0.0), 7.0);
    }

    #[test]
    fn combined_reward_cases() {
        assert_eq!(combined_reward(12.5, 0.3, 0.0), 12.5);
        assert!((combined_reward(0.0, 0.1, 10.0) - 1.0).abs() < 1e-15);
        let (p, r, e1, e2) = (3.0, -0.2, 4.0, 6.0);
        assert!((combined_reward(p, r, e1 + e2) - (combined_reward(p, r, e1) + e2 * r)).abs() < 1e-12);
    }

    #[test]
    fn weights_validation() {
        assert!(RewardWeights::new(10.0, 0.3).is_ok());
        assert!(RewardWeights::new(-1.0, 0.3).is_err());
        assert!(RewardWeights::new(1.0, 1.5).is_err());
    }

    #[test]
    fn round_trip_same_step() {
        let mut m = FifoMatcher::new();
        assert_eq!(matched_pnl_step(&[(Side::Bid, 9998, 5), (Side::Ask, 10002, 5)], &mut m), 20);
        assert_eq!(m.inventory(), 0);
    }

    #[test]
    fn unmatched_buys_queue() {
        let mut m = FifoMatcher::new();
        assert_eq!(matched_pnl_step(&[(Side::Bid, 9998, 5)], &mut m), 0);
        assert_eq!(m.open_buys().copied().collect::<Vec<_>>(), vec![Lot { price: 9998, qty: 5 }]);
    }

    /// Oracle: expand every fill into unit shares and pair them in arrival order.
    fn unit_pairing(fills: &[(Side, Cents, u64)]) -> (i64, i64) {
        let mut buys = VecDeque::new();
        let mut sells = VecDeque::new();
        let mut pnl = 0;
        for &(side, price, qty) in fills {
            for _ in 0..qty {
                match side {
                    Side::Bid => match sells.pop_front() {
                        Some(s) => pnl += s - price,
                        None => buys.push_back(price),
                    },
                    Side::Ask => match buys.pop_front() {
                        Some(b) => pnl += price - b,
                        None => sells.push_back(price),
                    },
                }
            }
        }
        (pnl, buys.len() as i64 - sells.len() as i64)
    }

    #[test]
    fn fifo_across_steps() {
        let mut m = FifoMatcher::new();
        assert_eq!(matched_pnl_step(&[(Side::Bid, 9998, 5)], &mut m), 0);
        assert_eq!(matched_pnl_step(&[(Side::Ask, 10002, 3)], &mut m), 12);
        assert_eq!(m.open_buys().copied().collect::<Vec<_>>(), vec![Lot { price: 9998, qty: 2 }]);
        assert_eq!(unit_pairing(&[(Side::Bid, 9998, 5), (Side::Ask, 10002, 3)]), (12, 2));
    }

    proptest! {
        #[test]
        fn matches_unit_oracle(fills in prop::collection::vec((prop::bool::ANY, 9990i64..10010, 1u64..30), 0..40)) {
            let fills: Vec<_> = fills.into_iter().map(|(b, p, q)| (if b { Side::Bid } else { Side::Ask }, p, q)).collect();
            let mut m = FifoMatcher::new();
            let pnl = matched_pnl_step(&fills, &mut m);
            prop_assert_eq!((pnl, m.inventory()), unit_pairing(&fills));
        }
    }
}
