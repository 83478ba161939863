use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::exchange::{Order, OrderId, Side};
use crate::kernel::{Context, Message, Payload, NANOS_PER_SEC};

use super::{AgentError, MarketShared};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MomentumAgentConfig {
    pub wake_interval_secs: f64,
    pub short_window: usize,
    pub long_window: usize,
    pub order_size: u64,
}

impl Default for MomentumAgentConfig {
    fn default() -> Self {
        Self { wake_interval_secs: 60.0, short_window: 5, long_window: 20, order_size: 10 }
    }
}

impl MomentumAgentConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.short_window == 0 || self.short_window >= self.long_window {
            return Err(AgentError::InvalidConfig("momentum windows need 0 < short_window < long_window".into()));
        }
        if !(self.wake_interval_secs > 0.0) || self.order_size == 0 {
            return Err(AgentError::InvalidConfig("momentum agents need a positive wake interval and order size".into()));
        }
        Ok(())
    }

    pub fn wake_interval_ns(&self) -> u64 {
        ((self.wake_interval_secs * NANOS_PER_SEC as f64).round() as u64).max(1)
    }
}

/// Buy when the short average of the most recent observations exceeds the long one.
pub fn momentum_side(history: &[i64], short: usize, long: usize) -> Option<Side> {
    if history.len() < long {
        return None;
    }
    let mean = |n: usize| history[history.len() - n..].iter().map(|&x| x as f64).sum::<f64>() / n as f64;
    let (s, l) = (mean(short), mean(long));
    if s > l {
        Some(Side::Bid)
    } else if s < l {
        Some(Side::Ask)
    } else {
        None
    }
}

/// Trend follower sampling the mid at a fixed rate and sending market orders.
#[derive(Debug, Clone)]
pub struct MomentumAgent {
    cfg: MomentumAgentConfig,
    history: VecDeque<i64>,
    counter: u32,
    pub orders_sent: u64,
}

impl MomentumAgent {
    pub fn new(cfg: MomentumAgentConfig) -> Self {
        Self { history: VecDeque::with_capacity(cfg.long_window + 1), cfg, counter: 0, orders_sent: 0 }
    }

    pub fn start(&mut self, ctx: &mut Context<'_>, _shared: &MarketShared) {
        // Stagger first wakeups so the population does not fire in lockstep.
        let offset = rand::Rng::random_range(ctx.rng(), 0..self.cfg.wake_interval_ns());
        ctx.wakeup_at(ctx.now() + offset, 0).expect("future wakeup");
    }

    pub fn handle(&mut self, msg: Message, ctx: &mut Context<'_>, shared: &mut MarketShared) {
        match msg.payload {
            Payload::Wakeup(_) => {
                ctx.send(shared.exchange, Payload::QueryDepth { levels: 1 });
                let next = ctx.now() + self.cfg.wake_interval_ns();
                if next <= shared.close {
                    ctx.wakeup_at(next, 0).expect("future wakeup");
                }
            }
            Payload::DepthReply(book) => {
                if ctx.now() > shared.close {
                    return;
                }
                let Some(mid) = book.mid else { return };
                self.history.push_back(mid.half_cents());
                if self.history.len() > self.cfg.long_window {
                    self.history.pop_front();
                }
                let hist = self.history.make_contiguous();
                if let Some(side) = momentum_side(hist, self.cfg.short_window, self.cfg.long_window) {
                    let id = OrderId::compose(ctx.id(), self.counter);
                    self.counter += 1;
                    self.orders_sent += 1;
                    ctx.send(shared.exchange, Payload::SubmitMarket(Order::market(id, ctx.id(), side, self.cfg.order_size)));
                }
            }
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decisions() {
        assert_eq!(momentum_side(&[100, 100, 100, 110], 2, 4), Some(Side::Bid));
        assert_eq!(momentum_side(&[110, 110, 100, 100], 2, 4), Some(Side::Ask));
        assert_eq!(momentum_side(&[100; 4], 2, 4), None);
        assert_eq!(momentum_side(&[100, 120, 130], 2, 4), None);
    }

    #[test]
    fn windows_validated() {
        let cfg = MomentumAgentConfig { short_window: 4, long_window: 4, ..Default::default() };
        assert!(cfg.validate().is_err());
        assert!(MomentumAgentConfig::default().validate().is_ok());
    }
}
