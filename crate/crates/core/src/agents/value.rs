use rand::Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::exchange::{Cents, DepthSnapshot, MidPrice, Order, OrderId, Side};
use crate::kernel::{Context, Message, Payload, SimTime, TRADING_DAY};

use super::{AgentError, MarketShared};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValueAgentConfig {
    /// Expected arrivals per agent per trading day.
    pub arrival_rate: f64,
    /// Standard deviation of the fundamental observation, in cents.
    pub sigma_obs: f64,
    pub order_size: u64,
    /// Deepest book level (0 = touch) a passive order may join.
    pub max_level: u32,
}

impl Default for ValueAgentConfig {
    fn default() -> Self {
        Self { arrival_rate: 50.0, sigma_obs: 2.0, order_size: 100, max_level: 1 }
    }
}

impl ValueAgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if !(self.arrival_rate > 0.0) || !(self.sigma_obs >= 0.0) || self.order_size == 0 {
            return Err(AgentError::InvalidConfig("value agents need arrival_rate > 0, sigma_obs >= 0, order_size > 0".into()));
        }
        Ok(())
    }
}

/// Where a passive order goes relative to the same-side touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Placement {
    /// One cent better than the touch. With a one-tick spread this is the opposite touch.
    Inside,
    /// Join level `n` (0 = touch).
    Level(u32),
}

impl Placement {
    pub fn draw<R: Rng + ?Sized>(max_level: u32, rng: &mut R) -> Self {
        match rng.random_range(0..=max_level + 1) {
            0 => Placement::Inside,
            k => Placement::Level(k - 1),
        }
    }

    pub fn price(self, side: Side, best_bid: Cents, best_ask: Cents) -> Cents {
        match (self, side) {
            (Placement::Inside, Side::Bid) => (best_bid + 1).min(best_ask),
            (Placement::Inside, Side::Ask) => (best_ask - 1).max(best_bid),
            (Placement::Level(n), Side::Bid) => best_bid - n as Cents,
            (Placement::Level(n), Side::Ask) => best_ask + n as Cents,
        }
    }
}

/// Side implied by a fundamental observation: buy when the stock looks cheap.
pub fn value_side(noisy_obs: f64, mid: MidPrice) -> Option<Side> {
    let twice = 2.0 * noisy_obs;
    let m = mid.half_cents() as f64;
    if twice > m {
        Some(Side::Bid)
    } else if twice < m {
        Some(Side::Ask)
    } else {
        None
    }
}

/// Limit price for a value order, or `None` when the book lacks a two-sided quote.
pub fn value_order_price(book: &DepthSnapshot, side: Side, placement: Placement) -> Option<Cents> {
    Some(placement.price(side, book.best_bid()?, book.best_ask()?))
}

/// Fundamental trader: arrives at Poisson times, compares a noisy view of the
/// fundamental with the mid and posts a passive limit order on that side.
#[derive(Debug, Clone)]
pub struct ValueAgent {
    cfg: ValueAgentConfig,
    counter: u32,
    live: Option<OrderId>,
    pub orders_sent: u64,
}

impl ValueAgent {
    pub fn new(cfg: ValueAgentConfig) -> Self {
        Self { cfg, counter: 0, live: None, orders_sent: 0 }
    }

    fn next_arrival(&self, ctx: &mut Context<'_>) -> SimTime {
        let rate_per_ns = self.cfg.arrival_rate / (TRADING_DAY.as_nanos() as f64);
        let gap: f64 = ctx.rng().sample(Exp::new(rate_per_ns).expect("positive rate"));
        ctx.now() + (gap.ceil() as u64).max(1)
    }

    pub fn start(&mut self, ctx: &mut Context<'_>, shared: &MarketShared) {
        let at = self.next_arrival(ctx);
        if at <= shared.close {
            ctx.wakeup_at(at, 0).expect("future wakeup");
        }
    }

    pub fn handle(&mut self, msg: Message, ctx: &mut Context<'_>, shared: &mut MarketShared) {
        match msg.payload {
            Payload::Wakeup(_) => {
                if let Some(id) = self.live.take() {
                    ctx.send(shared.exchange, Payload::Cancel(id));
                }
                ctx.send(shared.exchange, Payload::QueryDepth { levels: 1 });
                let next = self.next_arrival(ctx);
                if next <= shared.close {
                    ctx.wakeup_at(next, 0).expect("future wakeup");
                }
            }
            Payload::DepthReply(book) => {
                if ctx.now() > shared.close {
                    return;
                }
                let Some(mid) = book.mid else { return };
                let z: f64 = ctx.rng().sample(StandardNormal);
                let obs = shared.fundamental.at(ctx.now()) + self.cfg.sigma_obs * z;
                let Some(side) = value_side(obs, mid) else { return };
                let placement = Placement::draw(self.cfg.max_level, ctx.rng());
                let Some(price) = value_order_price(&book, side, placement) else { return };
                let id = OrderId::compose(ctx.id(), self.counter);
                self.counter += 1;
                self.live = Some(id);
                self.orders_sent += 1;
                ctx.send(shared.exchange, Payload::SubmitLimit(Order::limit(id, ctx.id(), side, price, self.cfg.order_size)));
            }
            _ => {}
        }
    }
}
