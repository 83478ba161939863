use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::exchange::{Cents, ExecutionReport, MidPrice, Order, OrderId, Side};
use crate::kernel::{AgentId, Context, Message, Payload, SimTime};
use crate::metrics::ReturnSample;

use super::{AgentError, MarketShared};

const FIRE: u64 = 0;
const PROBE: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsumerAgentConfig {
    /// Order sizes, drawn uniformly.
    pub sizes: Vec<u64>,
}

impl Default for ConsumerAgentConfig {
    fn default() -> Self {
        Self { sizes: vec![5, 10, 30, 50, 100] }
    }
}

impl ConsumerAgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(AgentError::InvalidConfig("consumer sizes must be a non-empty set of positive sizes".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConsumerState {
    Waiting,
    Working,
    /// Executed; the return horizon has not elapsed yet.
    Probing,
    /// Executed, with the horizon beyond the close.
    AwaitingClose,
    Done,
}

/// Demand-driven trader: one market order of random size and side per day.
#[derive(Debug, Clone)]
pub struct ConsumerAgent {
    pub arrival: SimTime,
    pub side: Side,
    pub size: u64,
    filled: u64,
    notional: Cents,
    exec_time: SimTime,
    state: ConsumerState,
}

impl ConsumerAgent {
    /// Draw arrival time, side and size from `rng`. Arrival is uniform over `[0, close)`.
    pub fn draw<R: Rng + ?Sized>(cfg: &ConsumerAgentConfig, close: SimTime, rng: &mut R) -> Self {
        let arrival = SimTime(rng.random_range(0..close.as_nanos().max(1)));
        let side = if rng.random_bool(0.5) { Side::Bid } else { Side::Ask };
        let size = cfg.sizes[rng.random_range(0..cfg.sizes.len())];
        Self { arrival, side, size, filled: 0, notional: 0, exec_time: SimTime::ZERO, state: ConsumerState::Waiting }
    }

    pub fn state(&self) -> ConsumerState {
        self.state
    }

    pub fn filled(&self) -> u64 {
        self.filled
    }

    /// Volume-weighted fill price in half-cents.
    pub fn vwap_half_cents(&self) -> Option<f64> {
        (self.filled > 0).then(|| 2.0 * self.notional as f64 / self.filled as f64)
    }

    pub fn start(&mut self, ctx: &mut Context<'_>, _shared: &MarketShared) {
        ctx.wakeup_at(self.arrival, FIRE).expect("arrival is not in the past");
    }

    pub fn handle(&mut self, msg: Message, ctx: &mut Context<'_>, shared: &mut MarketShared) {
        match msg.payload {
            Payload::Wakeup(FIRE) if self.state == ConsumerState::Waiting => {
                self.state = ConsumerState::Working;
                let order = Order::market(OrderId::compose(ctx.id(), 0), ctx.id(), self.side, self.size);
                ctx.send(shared.exchange, Payload::SubmitMarket(order));
            }
            Payload::ExecutionReport(ExecutionReport::Fill(f)) if self.state == ConsumerState::Working => {
                self.filled += f.size;
                self.notional += f.price * f.size as i64;
                if f.leaves == 0 {
                    self.executed(ctx, shared);
                }
            }
            Payload::ExecutionReport(ExecutionReport::Discarded { .. }) if self.state == ConsumerState::Working => {
                if self.filled > 0 {
                    self.executed(ctx, shared);
                } else {
                    self.state = ConsumerState::Done;
                }
            }
            Payload::Wakeup(PROBE) if self.state == ConsumerState::Probing => {
                ctx.send(shared.exchange, Payload::QueryDepth { levels: 1 });
            }
            Payload::DepthReply(book) if self.state == ConsumerState::Probing => {
                if let Some(mid) = book.mid.or(book.last_mid) {
                    self.settle(ctx.id(), mid, ctx.now(), shared);
                }
            }
            _ => {}
        }
    }

    fn executed(&mut self, ctx: &mut Context<'_>, shared: &MarketShared) {
        self.exec_time = ctx.now();
        let probe = ctx.now() + shared.horizon_ns;
        if probe <= shared.close {
            self.state = ConsumerState::Probing;
            ctx.wakeup_at(probe, PROBE).expect("future wakeup");
        } else {
            self.state = ConsumerState::AwaitingClose;
        }
    }

    /// Record the return against `horizon` and finish.
    pub fn settle(&mut self, me: AgentId, horizon: MidPrice, now: SimTime, shared: &mut MarketShared) {
        let Some(exec) = self.vwap_half_cents() else { return };
        let sample = ReturnSample::new(me, self.side, exec, self.exec_time, horizon, now, self.filled);
        shared.ledger.push(sample);
        self.state = ConsumerState::Done;
    }
}
