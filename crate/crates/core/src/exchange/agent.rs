use std::io::Write;

use crate::kernel::{AgentId, Context, Message, Payload, SimTime};

use super::{Cents, ExchangeError, ExecutionReport, Fill, Order, OrderBook, OrderId, Side, Trade};

/// Wakeup tag the exchange uses for its own L2 recording timer.
const L2_TIMER: u64 = 0;

/// One line of the L2 dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L2Row {
    pub time: SimTime,
    pub level: usize,
    pub bid: Option<(Cents, u64)>,
    pub ask: Option<(Cents, u64)>,
}

/// The exchange as a kernel participant: turns order messages into book
/// operations and reports executions back to both counterparties.
#[derive(Debug, Default)]
pub struct ExchangeAgent {
    book: OrderBook,
    trades: Vec<Trade>,
    rejected: u64,
    l2_interval_ns: Option<u64>,
    l2_levels: usize,
    l2_rows: Vec<L2Row>,
    close: Option<SimTime>,
}

impl ExchangeAgent {
    pub fn new() -> Self {
        Self::default()
    }

    /// Record an L2 snapshot of `levels` levels every `interval_ns` until `close`.
    /// The caller must schedule the first `Wakeup(0)` for the exchange.
    pub fn with_l2_recording(mut self, interval_ns: u64, levels: usize, close: SimTime) -> Self {
        self.l2_interval_ns = Some(interval_ns.max(1));
        self.l2_levels = levels;
        self.close = Some(close);
        self
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    /// Place orders directly on the book before the simulation starts.
    pub fn seed_book(&mut self, orders: impl IntoIterator<Item = Order>) -> Result<(), ExchangeError> {
        for order in orders {
            let out = self.book.submit_limit(order)?;
            self.trades.extend(out.trades);
        }
        Ok(())
    }

    pub fn trades(&self) -> &[Trade] {
        &self.trades
    }

    /// Orders refused because of duplicate ids or invalid fields.
    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn l2_rows(&self) -> &[L2Row] {
        &self.l2_rows
    }

    pub fn handle(&mut self, msg: Message, ctx: &mut Context<'_>) {
        let now = ctx.now();
        match msg.payload {
            Payload::SubmitLimit(mut order) => {
                order.timestamp = now;
                let (id, side, size) = (order.id, order.side, order.size);
                match self.book.submit_limit(order) {
                    Ok(out) => self.report(ctx, msg.sender, id, side, size, out.trades),
                    Err(_) => self.rejected += 1,
                }
            }
            Payload::SubmitMarket(mut order) => {
                order.timestamp = now;
                let (id, side, size) = (order.id, order.side, order.size);
                match self.book.submit_market(order) {
                    Ok(out) => {
                        self.report(ctx, msg.sender, id, side, size, out.trades);
                        if out.unfilled > 0 {
                            let report = ExecutionReport::Discarded { order_id: id, side, size: out.unfilled };
                            ctx.send(msg.sender, Payload::ExecutionReport(report));
                        }
                    }
                    Err(ExchangeError::EmptyBookSide(_)) => {
                        let report = ExecutionReport::Discarded { order_id: id, side, size };
                        ctx.send(msg.sender, Payload::ExecutionReport(report));
                    }
                    Err(_) => self.rejected += 1,
                }
            }
            Payload::Cancel(order_id) => {
                let cancelled = self.book.cancel(order_id);
                ctx.send(msg.sender, Payload::CancelAck { order_id, cancelled });
            }
            Payload::QueryDepth { levels } => {
                let snap = self.book.depth_snapshot(levels, now);
                ctx.send(msg.sender, Payload::DepthReply(Box::new(snap)));
            }
            Payload::QueryLastTrade => {
                ctx.send(msg.sender, Payload::LastTradeReply(self.book.last_trade()));
            }
            Payload::Wakeup(L2_TIMER) => self.record_l2(ctx),
            _ => {}
        }
    }

    fn report(&mut self, ctx: &mut Context<'_>, aggressor: AgentId, order_id: OrderId, side: Side, size: u64, trades: Vec<Trade>) {
        let now = ctx.now();
        let mut aggressor_leaves = size;
        for t in &trades {
            let (resting_agent, resting_order) = match side {
                Side::Bid => (t.sell_agent, t.sell_order),
                Side::Ask => (t.buy_agent, t.buy_order),
            };
            // A resting order is hit at most once per sweep, so its current size is the post-fill leaves.
            let resting_leaves = self.book.resting_size(resting_order).unwrap_or(0);
            let fill = Fill { order_id: resting_order, side: side.opposite(), price: t.price, size: t.size, leaves: resting_leaves, time: now };
            ctx.send(resting_agent, Payload::ExecutionReport(ExecutionReport::Fill(fill)));
            aggressor_leaves -= t.size;
            let fill = Fill { order_id, side, price: t.price, size: t.size, leaves: aggressor_leaves, time: now };
            ctx.send(aggressor, Payload::ExecutionReport(ExecutionReport::Fill(fill)));
        }
        self.trades.extend(trades);
    }

    fn record_l2(&mut self, ctx: &mut Context<'_>) {
        let Some(interval) = self.l2_interval_ns else { return };
        let now = ctx.now();
        let snap = self.book.depth_snapshot(self.l2_levels, now);
        let n = snap.bids.len().max(snap.asks.len()).max(1);
        for level in 0..n {
            self.l2_rows.push(L2Row { time: now, level, bid: snap.bids.get(level).copied(), ask: snap.asks.get(level).copied() });
        }
        let next = now + interval;
        if self.close.is_none_or(|c| next <= c) {
            ctx.wakeup_at(next, L2_TIMER).expect("next tick is in the future");
        }
    }

    /// Write the recorded L2 rows as CSV: `time,level,bid_px,bid_sz,ask_px,ask_sz`.
    pub fn write_l2_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["time", "level", "bid_px", "bid_sz", "ask_px", "ask_sz"])?;
        let opt = |v: Option<i64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.l2_rows {
            w.write_record([
                r.time.to_string(),
                r.level.to_string(),
                opt(r.bid.map(|b| b.0)),
                opt(r.bid.map(|b| b.1 as i64)),
                opt(r.ask.map(|a| a.0)),
                opt(r.ask.map(|a| a.1 as i64)),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
