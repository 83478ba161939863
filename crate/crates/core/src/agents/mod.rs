//! Background traders and the stylized market maker.
//!
//! All agents talk to the exchange only through kernel messages. State that
//! is global to a run (the fundamental path, the consumer return ledger) lives
//! in [`MarketShared`].

mod consumer;
mod fundamental;
mod market_maker;
mod momentum;
mod value;

pub use consumer::{ConsumerAgent, ConsumerAgentConfig, ConsumerState};
pub use fundamental::{ou_step, FundamentalModel, FundamentalPath};
pub use market_maker::{mm_quotes, HalfSpread, MMQuoteSpec, MarketMaker, MmControl, MmFill, Observation, Quote, QuoteRecord};
pub use momentum::{momentum_side, MomentumAgent, MomentumAgentConfig};
pub use value::{value_order_price, value_side, Placement, ValueAgent, ValueAgentConfig};

use crate::exchange::ExchangeAgent;
use crate::kernel::{Agent, AgentId, Context, Message, SimTime};
use crate::metrics::ReturnLedger;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum AgentError {
    #[error("the book is one-sided; no mid-price")]
    NoMidPrice,
    #[error("invalid agent configuration: {0}")]
    InvalidConfig(String),
}

/// Run-wide state visible to every agent.
#[derive(Debug)]
pub struct MarketShared {
    pub exchange: AgentId,
    pub fundamental: FundamentalPath,
    pub ledger: ReturnLedger,
    /// Consumer return horizon.
    pub horizon_ns: u64,
    /// No agent initiates activity after this time.
    pub close: SimTime,
}

/// Every participant of a market simulation.
#[derive(Debug)]
pub enum Trader {
    Exchange(ExchangeAgent),
    Value(ValueAgent),
    Momentum(MomentumAgent),
    Consumer(ConsumerAgent),
    MarketMaker(Box<MarketMaker>),
    /// Owns the initial book orders and otherwise does nothing.
    Passive,
}

impl Trader {
    /// Schedule the agent's first wakeup.
    pub fn start(&mut self, ctx: &mut Context<'_>, shared: &mut MarketShared) {
        match self {
            Trader::Value(a) => a.start(ctx, shared),
            Trader::Momentum(a) => a.start(ctx, shared),
            Trader::Consumer(a) => a.start(ctx, shared),
            Trader::MarketMaker(a) => a.start(ctx, shared),
            Trader::Exchange(_) | Trader::Passive => {}
        }
    }

    pub fn as_exchange(&self) -> Option<&ExchangeAgent> {
        match self {
            Trader::Exchange(e) => Some(e),
            _ => None,
        }
    }

    pub fn as_market_maker(&self) -> Option<&MarketMaker> {
        match self {
            Trader::MarketMaker(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_market_maker_mut(&mut self) -> Option<&mut MarketMaker> {
        match self {
            Trader::MarketMaker(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_consumer_mut(&mut self) -> Option<&mut ConsumerAgent> {
        match self {
            Trader::Consumer(c) => Some(c),
            _ => None,
        }
    }
}

impl Agent for Trader {
    type Shared = MarketShared;

    fn on_message(&mut self, msg: Message, ctx: &mut Context<'_>, shared: &mut MarketShared) {
        match self {
            Trader::Exchange(e) => e.handle(msg, ctx),
            Trader::Value(a) => a.handle(msg, ctx, shared),
            Trader::Momentum(a) => a.handle(msg, ctx, shared),
            Trader::Consumer(a) => a.handle(msg, ctx, shared),
            Trader::MarketMaker(a) => a.handle(msg, ctx, shared),
            Trader::Passive => {}
        }
    }
}
