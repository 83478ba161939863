//! Single-security exchange with a price-then-FIFO limit order book.
//!
//! Prices are integer cents on a one-cent grid. The mid-price is carried in
//! half-cent units ([`MidPrice`]) so that `(bid + ask) / 2` is always exact.

mod agent;
mod book;

use serde::{Deserialize, Serialize};

use crate::kernel::{AgentId, SimTime};

pub use agent::{ExchangeAgent, L2Row};
pub use book::{LimitOutcome, MarketOutcome, OrderBook};

/// Integer price in cents.
pub type Cents = i64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OrderId(pub u64);

impl OrderId {
    /// Agents mint their own ids; the agent id in the high bits keeps them globally unique.
    pub fn compose(agent: AgentId, counter: u32) -> Self {
        OrderId((u64::from(agent.0) << 32) | u64::from(counter))
    }
}

impl std::fmt::Display for OrderId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }

    /// +1 for buys, -1 for sells.
    pub fn sign(self) -> i64 {
        match self {
            Side::Bid => 1,
            Side::Ask => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: OrderId,
    pub agent: AgentId,
    pub side: Side,
    /// Limit price; `None` for market orders.
    pub price: Option<Cents>,
    pub size: u64,
    pub timestamp: SimTime,
}

impl Order {
    pub fn limit(id: OrderId, agent: AgentId, side: Side, price: Cents, size: u64) -> Self {
        Order { id, agent, side, price: Some(price), size, timestamp: SimTime::ZERO }
    }

    pub fn market(id: OrderId, agent: AgentId, side: Side, size: u64) -> Self {
        Order { id, agent, side, price: None, size, timestamp: SimTime::ZERO }
    }
}

/// An execution between a resting order and an aggressor. Always at the resting price.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trade {
    pub buy_agent: AgentId,
    pub sell_agent: AgentId,
    pub buy_order: OrderId,
    pub sell_order: OrderId,
    pub price: Cents,
    pub size: u64,
    pub time: SimTime,
    pub aggressor: Side,
}

/// Twice the mid-price, in half-cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MidPrice(pub i64);

impl MidPrice {
    pub fn from_quotes(best_bid: Cents, best_ask: Cents) -> Self {
        MidPrice(best_bid + best_ask)
    }

    pub fn from_cents(cents: Cents) -> Self {
        MidPrice(2 * cents)
    }

    pub fn half_cents(self) -> i64 {
        self.0
    }

    pub fn as_cents(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Largest whole-cent price not above the mid.
    pub fn floor_cents(self) -> Cents {
        self.0.div_euclid(2)
    }

    /// Smallest whole-cent price not below the mid.
    pub fn ceil_cents(self) -> Cents {
        (self.0 + 1).div_euclid(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LastTrade {
    pub price: Cents,
    pub size: u64,
    pub time: SimTime,
}

/// Aggregated L2 view of the book, innermost level first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSnapshot {
    pub time: SimTime,
    pub bids: Vec<(Cents, u64)>,
    pub asks: Vec<(Cents, u64)>,
    pub mid: Option<MidPrice>,
    pub spread: Option<Cents>,
    /// Resting volume over the whole book, not only the returned levels.
    pub total_bid_volume: u64,
    pub total_ask_volume: u64,
    /// Most recent mid observed while both sides were populated.
    pub last_mid: Option<MidPrice>,
}

impl DepthSnapshot {
    pub fn best_bid(&self) -> Option<Cents> {
        self.bids.first().map(|l| l.0)
    }

    pub fn best_ask(&self) -> Option<Cents> {
        self.asks.first().map(|l| l.0)
    }

    /// Bid volume over total volume; `None` for an empty book.
    pub fn imbalance(&self) -> Option<f64> {
        let total = self.total_bid_volume + self.total_ask_volume;
        (total > 0).then(|| self.total_bid_volume as f64 / total as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fill {
    pub order_id: OrderId,
    pub side: Side,
    pub price: Cents,
    pub size: u64,
    /// Quantity of the order still open after this fill.
    pub leaves: u64,
    pub time: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecutionReport {
    Fill(Fill),
    /// Market-order remainder thrown away because the opposite side ran dry.
    Discarded { order_id: OrderId, side: Side, size: u64 },
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum ExchangeError {
    #[error("order id {0} was already used")]
    DuplicateOrderId(OrderId),
    #[error("no resting liquidity on the {0:?} side")]
    EmptyBookSide(Side),
    #[error("invalid order {id}: {reason}")]
    InvalidOrder { id: OrderId, reason: &'static str },
}

/// Net cash and share position of one agent, derived from executed trades.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Position {
    pub cash: i64,
    pub shares: i64,
}

/// Replay a trade list into per-agent positions.
pub fn positions_from_trades<'a>(trades: impl IntoIterator<Item = &'a Trade>) -> std::collections::BTreeMap<AgentId, Position> {
    let mut out = std::collections::BTreeMap::<AgentId, Position>::new();
    for t in trades {
        let notional = t.price * t.size as i64;
        let buyer = out.entry(t.buy_agent).or_default();
        buyer.cash -= notional;
        buyer.shares += t.size as i64;
        let seller = out.entry(t.sell_agent).or_default();
        seller.cash += notional;
        seller.shares -= t.size as i64;
    }
    out
}
