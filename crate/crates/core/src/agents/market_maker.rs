use serde::{Deserialize, Serialize};

use crate::exchange::{Cents, DepthSnapshot, ExecutionReport, MidPrice, Order, OrderId, Side};
use crate::kernel::{Context, Message, Payload, SimTime, NANOS_PER_SEC};

use super::{AgentError, MarketShared};

const MM_TIMER: u64 = 1;

/// Half-spread rule: a constant offset, or half the current market spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HalfSpreadRepr", into = "HalfSpreadRepr")]
pub enum HalfSpread {
    Fixed(Cents),
    Adaptive,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum HalfSpreadRepr {
    Cents(Cents),
    Name(String),
}

impl TryFrom<HalfSpreadRepr> for HalfSpread {
    type Error = String;
    fn try_from(r: HalfSpreadRepr) -> Result<Self, String> {
        match r {
            HalfSpreadRepr::Cents(c) if c >= 1 => Ok(HalfSpread::Fixed(c)),
            HalfSpreadRepr::Cents(c) => Err(format!("half-spread must be at least 1 cent, got {c}")),
            HalfSpreadRepr::Name(s) if s == "adaptive" => Ok(HalfSpread::Adaptive),
            HalfSpreadRepr::Name(s) => Err(format!("unknown half-spread {s:?}; use a number of cents or \"adaptive\"")),
        }
    }
}

impl From<HalfSpread> for HalfSpreadRepr {
    fn from(h: HalfSpread) -> Self {
        match h {
            HalfSpread::Fixed(c) => HalfSpreadRepr::Cents(c),
            HalfSpread::Adaptive => HalfSpreadRepr::Name("adaptive".into()),
        }
    }
}

impl std::fmt::Display for HalfSpread {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HalfSpread::Fixed(c) => write!(f, "{c}"),
            HalfSpread::Adaptive => f.write_str("adaptive"),
        }
    }
}

impl HalfSpread {
    /// Concrete half-spread in cents; the adaptive rule is `max(floor(spread / 2), 1)`.
    pub fn resolve(self, market_spread: Option<Cents>) -> Result<Cents, AgentError> {
        match self {
            HalfSpread::Fixed(c) => Ok(c),
            HalfSpread::Adaptive => market_spread.map(|s| (s / 2).max(1)).ok_or(AgentError::NoMidPrice),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MMQuoteSpec {
    pub half_spread: HalfSpread,
    pub depth: Cents,
    /// Shares per price level.
    pub size: u64,
}

impl Default for MMQuoteSpec {
    fn default() -> Self {
        Self { half_spread: HalfSpread::Fixed(1), depth: 1, size: 100 }
    }
}

impl MMQuoteSpec {
    pub fn validate(&self) -> Result<(), AgentError> {
        if self.depth < 1 || self.size == 0 || matches!(self.half_spread, HalfSpread::Fixed(c) if c < 1) {
            return Err(AgentError::InvalidConfig("MM quotes need half-spread >= 1, depth >= 1 and size > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quote {
    pub side: Side,
    pub price: Cents,
    pub size: u64,
}

/// Ladder of `d + 1` bids from `floor(m) - s - d` to `floor(m) - s` and asks from
/// `ceil(m) + s` to `ceil(m) + s + d`, each of `size` shares, innermost first.
pub fn mm_quotes(mid: Option<MidPrice>, half_spread: Cents, depth: Cents, size: u64) -> Result<Vec<Quote>, AgentError> {
    let mid = mid.ok_or(AgentError::NoMidPrice)?;
    let (lo, hi) = (mid.floor_cents(), mid.ceil_cents());
    let mut out = Vec::with_capacity(2 * (depth as usize + 1));
    for k in 0..=depth {
        out.push(Quote { side: Side::Bid, price: lo - half_spread - k, size });
        out.push(Quote { side: Side::Ask, price: hi + half_spread + k, size });
    }
    Ok(out)
}

/// How the market maker picks its quotes at each wakeup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MmControl {
    /// Quote a fixed spec by itself.
    Fixed(MMQuoteSpec),
    /// Yield to the driver after each observation and wait for [`MarketMaker::requote`].
    External { size: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmFill {
    pub side: Side,
    pub price: Cents,
    pub size: u64,
}

/// What the market maker saw at one wakeup.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub time: SimTime,
    /// Mid used for marking: the live mid, or the last two-sided mid if the book is one-sided.
    pub mark: MidPrice,
    pub two_sided: bool,
    pub spread: Option<Cents>,
    /// Spread of the last two-sided book seen, used to size adaptive quotes.
    pub reference_spread: Option<Cents>,
    pub imbalance: Option<f64>,
    pub inventory: i64,
    pub cash: i64,
    /// Fills received since the previous observation.
    pub fills: Vec<MmFill>,
    /// Completed consumer samples at this time.
    pub ledger_len: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuoteRecord {
    pub time: SimTime,
    pub half_spread: Cents,
    pub depth: Cents,
}

/// Stylized market maker: cancels everything and re-posts a symmetric ladder every wakeup.
#[derive(Debug, Clone)]
pub struct MarketMaker {
    control: MmControl,
    wake_ns: u64,
    counter: u32,
    live: Vec<OrderId>,
    pub cash: i64,
    pub inventory: i64,
    pending_fills: Vec<MmFill>,
    observations: Vec<Observation>,
    quotes: Vec<QuoteRecord>,
    last_book: Option<Box<DepthSnapshot>>,
    last_spread: Option<Cents>,
    query_time: SimTime,
    skipped: u64,
}

impl MarketMaker {
    pub fn new(control: MmControl, wake_interval_secs: f64) -> Self {
        Self {
            control,
            wake_ns: ((wake_interval_secs * NANOS_PER_SEC as f64).round() as u64).max(1),
            counter: 0,
            live: Vec::new(),
            cash: 0,
            inventory: 0,
            pending_fills: Vec::new(),
            observations: Vec::new(),
            quotes: Vec::new(),
            last_book: None,
            last_spread: None,
            query_time: SimTime::ZERO,
            skipped: 0,
        }
    }

    pub fn control(&self) -> MmControl {
        self.control
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn quotes(&self) -> &[QuoteRecord] {
        &self.quotes
    }

    pub fn last_book(&self) -> Option<&DepthSnapshot> {
        self.last_book.as_deref()
    }

    /// Wakeups at which no quote could be placed (one-sided book).
    pub fn skipped(&self) -> u64 {
        self.skipped
    }

    pub fn start(&mut self, ctx: &mut Context<'_>, _shared: &MarketShared) {
        ctx.wakeup_at(ctx.now(), MM_TIMER).expect("wakeup now");
    }

    pub fn handle(&mut self, msg: Message, ctx: &mut Context<'_>, shared: &mut MarketShared) {
        match msg.payload {
            Payload::Wakeup(MM_TIMER) => {
                self.query_time = ctx.now();
                ctx.send(shared.exchange, Payload::QueryDepth { levels: 1 });
                let next = ctx.now() + self.wake_ns;
                if next <= shared.close {
                    ctx.wakeup_at(next, MM_TIMER).expect("future wakeup");
                }
            }
            Payload::DepthReply(book) => {
                let Some(mark) = book.mid.or(book.last_mid) else { return };
                self.last_spread = book.spread.or(self.last_spread);
                self.observations.push(Observation {
                    time: self.query_time,
                    mark,
                    two_sided: book.mid.is_some(),
                    spread: book.spread,
                    reference_spread: self.last_spread,
                    imbalance: book.imbalance(),
                    inventory: self.inventory,
                    cash: self.cash,
                    fills: std::mem::take(&mut self.pending_fills),
                    ledger_len: shared.ledger.len(),
                });
                self.last_book = Some(book);
                if self.query_time >= shared.close {
                    return;
                }
                match self.control {
                    MmControl::Fixed(spec) => {
                        match spec.half_spread.resolve(self.last_spread) {
                            Ok(s) => self.requote(ctx, shared, s, spec.depth, spec.size),
                            Err(_) => self.skipped += 1,
                        }
                    }
                    MmControl::External { .. } => ctx.request_yield(),
                }
            }
            Payload::ExecutionReport(ExecutionReport::Fill(f)) => {
                let signed = f.side.sign() * f.size as i64;
                self.inventory += signed;
                self.cash -= signed * f.price;
                self.pending_fills.push(MmFill { side: f.side, price: f.price, size: f.size });
            }
            _ => {}
        }
    }

    /// Cancel every resting order and post a fresh ladder around the last observed mid.
    /// A one-sided book is quoted around the most recent two-sided mid.
    pub fn requote(&mut self, ctx: &mut Context<'_>, shared: &MarketShared, half_spread: Cents, depth: Cents, size: u64) {
        let mid = self.last_book.as_ref().and_then(|b| b.mid.or(b.last_mid));
        let Ok(quotes) = mm_quotes(mid, half_spread, depth, size) else {
            self.skipped += 1;
            return;
        };
        for id in self.live.drain(..) {
            ctx.send(shared.exchange, Payload::Cancel(id));
        }
        for q in quotes {
            let id = OrderId::compose(ctx.id(), self.counter);
            self.counter += 1;
            self.live.push(id);
            ctx.send(shared.exchange, Payload::SubmitLimit(Order::limit(id, ctx.id(), q.side, q.price, q.size)));
        }
        self.quotes.push(QuoteRecord { time: ctx.now(), half_spread, depth });
    }

    /// Record a wakeup at which the driver could not quote.
    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Size per level for externally controlled quoting.
    pub fn external_size(&self) -> Option<u64> {
        match self.control {
            MmControl::External { size } => Some(size),
            MmControl::Fixed(_) => None,
        }
    }

    /// Attribute fills that arrived after the final observation to the last interval.
    pub fn finish(&mut self) {
        if let Some(last) = self.observations.last_mut() {
            last.fills.append(&mut self.pending_fills);
        }
    }

    /// Cash plus inventory marked at `mark`, in cents.
    pub fn marked_value(&self, mark: MidPrice) -> f64 {
        self.cash as f64 + self.inventory as f64 * mark.as_cents()
    }
}
