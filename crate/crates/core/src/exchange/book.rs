use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use crate::kernel::SimTime;

use super::{Cents, DepthSnapshot, ExchangeError, LastTrade, MidPrice, Order, OrderId, Side, Trade};

#[derive(Debug, Clone, PartialEq)]
pub struct LimitOutcome {
    pub trades: Vec<Trade>,
    /// What is left of the order on the book, if anything.
    pub resting: Option<Order>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketOutcome {
    pub trades: Vec<Trade>,
    /// Shares that found no liquidity and were dropped.
    pub unfilled: u64,
}

type Level = VecDeque<Order>;

/// Limit order book for one security.
///
/// Bids and asks are keyed by price; each level is a FIFO queue in arrival
/// order. `size` on a resting order is its remaining quantity.
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    bids: BTreeMap<Cents, Level>,
    asks: BTreeMap<Cents, Level>,
    index: HashMap<OrderId, (Side, Cents)>,
    used_ids: HashSet<OrderId>,
    bid_volume: u64,
    ask_volume: u64,
    last_trade: Option<LastTrade>,
    last_mid: Option<MidPrice>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn best_bid(&self) -> Option<Cents> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<Cents> {
        self.asks.keys().next().copied()
    }

    pub fn mid(&self) -> Option<MidPrice> {
        Some(MidPrice::from_quotes(self.best_bid()?, self.best_ask()?))
    }

    pub fn spread(&self) -> Option<Cents> {
        Some(self.best_ask()? - self.best_bid()?)
    }

    pub fn last_trade(&self) -> Option<LastTrade> {
        self.last_trade
    }

    pub fn last_mid(&self) -> Option<MidPrice> {
        self.last_mid
    }

    pub fn contains(&self, id: OrderId) -> bool {
        self.index.contains_key(&id)
    }

    pub fn volume(&self, side: Side) -> u64 {
        match side {
            Side::Bid => self.bid_volume,
            Side::Ask => self.ask_volume,
        }
    }

    /// Remaining quantity of a resting order.
    pub fn resting_size(&self, id: OrderId) -> Option<u64> {
        let (side, price) = self.index.get(&id)?;
        self.level(*side, *price).find(|o| o.id == id).map(|o| o.size)
    }

    pub fn resting_orders(&self) -> usize {
        self.index.len()
    }

    fn register_id(&mut self, order: &Order) -> Result<(), ExchangeError> {
        if order.size == 0 {
            return Err(ExchangeError::InvalidOrder { id: order.id, reason: "size must be positive" });
        }
        if !self.used_ids.insert(order.id) {
            return Err(ExchangeError::DuplicateOrderId(order.id));
        }
        Ok(())
    }

    /// Match `order` against the book and rest whatever is not marketable.
    pub fn submit_limit(&mut self, order: Order) -> Result<LimitOutcome, ExchangeError> {
        let limit = match order.price {
            Some(p) if p > 0 => p,
            _ => return Err(ExchangeError::InvalidOrder { id: order.id, reason: "limit price must be positive" }),
        };
        self.register_id(&order)?;
        let mut order = order;
        let trades = self.sweep(&mut order, Some(limit));
        let resting = if order.size > 0 {
            self.rest(order.clone());
            Some(order)
        } else {
            None
        };
        self.refresh_mid();
        Ok(LimitOutcome { trades, resting })
    }

    /// Walk the opposite side best-first; any remainder is discarded.
    pub fn submit_market(&mut self, order: Order) -> Result<MarketOutcome, ExchangeError> {
        self.register_id(&order)?;
        let opposite_empty = match order.side {
            Side::Bid => self.asks.is_empty(),
            Side::Ask => self.bids.is_empty(),
        };
        if opposite_empty {
            return Err(ExchangeError::EmptyBookSide(order.side.opposite()));
        }
        let mut order = Order { price: None, ..order };
        let trades = self.sweep(&mut order, None);
        self.refresh_mid();
        Ok(MarketOutcome { trades, unfilled: order.size })
    }

    /// Remove a resting order. Returns false for unknown, filled or already cancelled ids.
    pub fn cancel(&mut self, id: OrderId) -> bool {
        let Some((side, price)) = self.index.remove(&id) else {
            return false;
        };
        let (levels, volume) = match side {
            Side::Bid => (&mut self.bids, &mut self.bid_volume),
            Side::Ask => (&mut self.asks, &mut self.ask_volume),
        };
        let level = levels.get_mut(&price).expect("indexed order has a level");
        let pos = level.iter().position(|o| o.id == id).expect("indexed order is queued");
        let removed = level.remove(pos).expect("position is valid");
        *volume -= removed.size;
        if level.is_empty() {
            levels.remove(&price);
        }
        self.refresh_mid();
        true
    }

    /// Aggregated sizes for up to `levels` price levels per side.
    pub fn depth_snapshot(&self, levels: usize, time: SimTime) -> DepthSnapshot {
        let agg = |l: &Level| l.iter().map(|o| o.size).sum::<u64>();
        DepthSnapshot {
            time,
            bids: self.bids.iter().rev().take(levels).map(|(p, l)| (*p, agg(l))).collect(),
            asks: self.asks.iter().take(levels).map(|(p, l)| (*p, agg(l))).collect(),
            mid: self.mid(),
            spread: self.spread(),
            total_bid_volume: self.bid_volume,
            total_ask_volume: self.ask_volume,
            last_mid: self.last_mid,
        }
    }

    /// Orders resting at one price, front of the queue first.
    pub fn level(&self, side: Side, price: Cents) -> impl Iterator<Item = &Order> {
        let levels = match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        };
        levels.get(&price).into_iter().flatten()
    }

    fn rest(&mut self, order: Order) {
        let price = order.price.expect("only limit orders rest");
        self.index.insert(order.id, (order.side, price));
        match order.side {
            Side::Bid => {
                self.bid_volume += order.size;
                self.bids.entry(price).or_default().push_back(order);
            }
            Side::Ask => {
                self.ask_volume += order.size;
                self.asks.entry(price).or_default().push_back(order);
            }
        }
    }

    fn sweep(&mut self, aggressor: &mut Order, limit: Option<Cents>) -> Vec<Trade> {
        let mut trades = Vec::new();
        while aggressor.size > 0 {
            let (levels, volume) = match aggressor.side {
                Side::Bid => (&mut self.asks, &mut self.ask_volume),
                Side::Ask => (&mut self.bids, &mut self.bid_volume),
            };
            let best = match aggressor.side {
                Side::Bid => levels.first_entry(),
                Side::Ask => levels.last_entry(),
            };
            let Some(mut entry) = best else { break };
            let price = *entry.key();
            let crosses = match (aggressor.side, limit) {
                (_, None) => true,
                (Side::Bid, Some(l)) => price <= l,
                (Side::Ask, Some(l)) => price >= l,
            };
            if !crosses {
                break;
            }
            let level = entry.get_mut();
            let resting = level.front_mut().expect("levels are never empty");
            let qty = resting.size.min(aggressor.size);
            resting.size -= qty;
            aggressor.size -= qty;
            *volume -= qty;
            let (buy, sell) = match aggressor.side {
                Side::Bid => (&*aggressor, &*resting),
                Side::Ask => (&*resting, &*aggressor),
            };
            trades.push(Trade {
                buy_agent: buy.agent,
                sell_agent: sell.agent,
                buy_order: buy.id,
                sell_order: sell.id,
                price,
                size: qty,
                time: aggressor.timestamp,
                aggressor: aggressor.side,
            });
            if resting.size == 0 {
                let done = level.pop_front().expect("front exists");
                self.index.remove(&done.id);
                if level.is_empty() {
                    entry.remove();
                }
            }
            self.last_trade = Some(LastTrade { price, size: qty, time: aggressor.timestamp });
        }
        trades
    }

    fn refresh_mid(&mut self) {
        if let Some(m) = self.mid() {
            self.last_mid = Some(m);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::AgentId;

    fn lim(id: u64, side: Side, price: Cents, size: u64) -> Order {
        Order::limit(OrderId(id), AgentId(id as u32 % 7), side, price, size)
    }

    #[test]
    fn marketable_limit_fills_at_resting_price() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(1, Side::Ask, 10002, 5)).unwrap();
        let out = book.submit_limit(lim(2, Side::Bid, 10002, 3)).unwrap();
        assert_eq!(out.trades.len(), 1);
        assert_eq!((out.trades[0].price, out.trades[0].size), (10002, 3));
        assert!(out.resting.is_none());
        assert_eq!(book.level(Side::Ask, 10002).map(|o| o.size).collect::<Vec<_>>(), vec![2]);
    }

    #[test]
    fn fifo_within_level() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(10, Side::Ask, 10002, 5)).unwrap();
        book.submit_limit(lim(11, Side::Ask, 10002, 4)).unwrap();
        let out = book.submit_limit(lim(12, Side::Bid, 10003, 7)).unwrap();
        let fills: Vec<_> = out.trades.iter().map(|t| (t.sell_order.0, t.price, t.size)).collect();
        assert_eq!(fills, vec![(10, 10002, 5), (11, 10002, 2)]);
        assert!(out.resting.is_none());
    }

    #[test]
    fn non_marketable_limit_rests() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(1, Side::Ask, 10002, 5)).unwrap();
        let out = book.submit_limit(lim(2, Side::Bid, 9990, 10)).unwrap();
        assert!(out.trades.is_empty());
        assert_eq!(out.resting.unwrap().size, 10);
        assert_eq!(book.best_bid(), Some(9990));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(1, Side::Ask, 10002, 5)).unwrap();
        assert_eq!(book.submit_limit(lim(1, Side::Ask, 10003, 5)), Err(ExchangeError::DuplicateOrderId(OrderId(1))));
    }

    #[test]
    fn market_order_walks_levels() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(1, Side::Ask, 10002, 5)).unwrap();
        book.submit_limit(lim(2, Side::Ask, 10003, 10)).unwrap();
        let out = book.submit_market(Order::market(OrderId(3), AgentId(0), Side::Bid, 8)).unwrap();
        let fills: Vec<_> = out.trades.iter().map(|t| (t.price, t.size)).collect();
        assert_eq!(fills, vec![(10002, 5), (10003, 3)]);
        assert_eq!(out.unfilled, 0);
    }

    #[test]
    fn market_order_into_empty_side() {
        let mut book = OrderBook::new();
        let err = book.submit_market(Order::market(OrderId(1), AgentId(0), Side::Ask, 10)).unwrap_err();
        assert_eq!(err, ExchangeError::EmptyBookSide(Side::Bid));
    }

    #[test]
    fn market_order_empties_side_and_reports_remainder() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(1, Side::Ask, 10001, 1)).unwrap();
        let out = book.submit_market(Order::market(OrderId(2), AgentId(0), Side::Bid, 1)).unwrap();
        assert_eq!(out.trades[0].price, 10001);
        assert_eq!(book.best_ask(), None);

        book.submit_limit(lim(3, Side::Ask, 10001, 1)).unwrap();
        let out = book.submit_market(Order::market(OrderId(4), AgentId(0), Side::Bid, 5)).unwrap();
        assert_eq!(out.unfilled, 4);
    }

    #[test]
    fn cancel_is_idempotent() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(42, Side::Bid, 9990, 10)).unwrap();
        assert!(book.cancel(OrderId(42)));
        assert!(!book.contains(OrderId(42)));
        assert!(!book.cancel(OrderId(42)));
        assert_eq!(book.volume(Side::Bid), 0);

        book.submit_limit(lim(43, Side::Bid, 9990, 10)).unwrap();
        book.submit_market(Order::market(OrderId(44), AgentId(0), Side::Ask, 10)).unwrap();
        assert!(!book.cancel(OrderId(43)));
    }

    #[test]
    fn snapshot_mid_and_spread() {
        let mut book = OrderBook::new();
        book.submit_limit(lim(1, Side::Bid, 9999, 1)).unwrap();
        let one_sided = book.depth_snapshot(5, SimTime::ZERO);
        assert_eq!((one_sided.mid, one_sided.spread), (None, None));

        book.submit_limit(lim(2, Side::Ask, 10001, 1)).unwrap();
        let s = book.depth_snapshot(5, SimTime::ZERO);
        assert_eq!((s.mid, s.spread), (Some(MidPrice(20000)), Some(2)));

        book.cancel(OrderId(2));
        book.submit_limit(lim(3, Side::Ask, 10002, 1)).unwrap();
        book.submit_limit(lim(4, Side::Ask, 10002, 6)).unwrap();
        let s = book.depth_snapshot(5, SimTime::ZERO);
        assert_eq!((s.mid, s.spread), (Some(MidPrice(20001)), Some(3)));
        assert_eq!(s.asks, vec![(10002, 7)]);
        assert_eq!(s.imbalance(), Some(1.0 / 8.0));
    }
}
