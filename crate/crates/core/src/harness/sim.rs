use std::collections::BTreeMap;

use rand_chacha::ChaCha8Rng;

use crate::agents::{
    ConsumerAgent, ConsumerState, FundamentalPath, MMQuoteSpec, MarketMaker, MarketShared, MmControl, MomentumAgent, Observation, Trader, ValueAgent, ValueAgentConfig,
};
use crate::exchange::{positions_from_trades, ExchangeAgent, MidPrice, Order, OrderId, Side, Trade};
use crate::kernel::{AgentId, Kernel, KernelConfig, RunOutcome, SimTime, NANOS_PER_SEC};
use crate::metrics::{BinSpec, ReturnLedger, ReturnSample};
use crate::rl::{action_to_quote, discretize_state, DiscreteAction, DiscreteState};

use super::config::ScenarioConfig;

/// Auxiliary rng stream tags.
const FUNDAMENTAL_STREAM: u32 = 0;
pub(crate) const POLICY_STREAM: u32 = 1;

/// Market makers in a run, in id order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MmRole {
    Fixed(MMQuoteSpec),
    Learning { size: u64 },
}

/// Value-agent parameters after applying a liquidity fraction.
pub fn effective_value_config(cfg: &ScenarioConfig) -> (usize, ValueAgentConfig) {
    let pop = &cfg.value;
    let Some(fraction) = pop.liquidity_fraction else { return (pop.count, pop.agent.clone()) };
    if fraction == 0.0 || pop.count == 0 {
        return (0, pop.agent.clone());
    }
    let day_share = cfg.market.close_secs as f64 / crate::kernel::TRADING_DAY.as_nanos() as f64 * NANOS_PER_SEC as f64;
    let value_volume = pop.count as f64 * pop.agent.arrival_rate * day_share * pop.agent.order_size as f64;
    let mm_volume = cfg.steps() as f64 * 2.0 * (cfg.mm.depth as f64 + 1.0) * cfg.mm.size as f64;
    let scale = (fraction * mm_volume / value_volume).sqrt();
    let mut agent = pop.agent.clone();
    agent.order_size = ((agent.order_size as f64 * scale).round() as u64).max(1);
    // Put the rounding of the size back into the rate so the target ratio is met exactly.
    let size_scale = agent.order_size as f64 / pop.agent.order_size as f64;
    agent.arrival_rate = pop.agent.arrival_rate * scale * scale / size_scale;
    (pop.count, agent)
}

/// One configured market, ready to run.
pub struct MarketSim {
    kernel: Kernel<Trader>,
    exchange: AgentId,
    mms: Vec<AgentId>,
    consumers: Vec<AgentId>,
    close: SimTime,
    session_end: SimTime,
    seed: u64,
    finished: bool,
}

impl MarketSim {
    pub fn new(cfg: &ScenarioConfig, seed: u64, roles: &[MmRole]) -> Self {
        let close = cfg.close();
        let kcfg = KernelConfig { default_latency_ns: cfg.market.latency_ns, ..KernelConfig::default() };
        let registry = crate::kernel::RngRegistry::new(seed);
        let mut fund_rng: ChaCha8Rng = registry.auxiliary(FUNDAMENTAL_STREAM);
        let fundamental: FundamentalPath = cfg.fundamental.realize(close, NANOS_PER_SEC, &mut fund_rng);
        let shared = MarketShared {
            exchange: AgentId(0),
            fundamental,
            ledger: ReturnLedger::new(BinSpec::default()),
            horizon_ns: cfg.market.horizon_secs * NANOS_PER_SEC,
            close,
        };
        let mut kernel = Kernel::new(seed, kcfg, shared);
        let exchange = kernel.add_agent(Trader::Exchange(ExchangeAgent::new()), None);
        let seeder = kernel.add_agent(Trader::Passive, None);

        let mut mms = Vec::new();
        for role in roles {
            let control = match *role {
                MmRole::Fixed(spec) => MmControl::Fixed(spec),
                MmRole::Learning { size } => MmControl::External { size },
            };
            mms.push(kernel.add_agent(Trader::MarketMaker(Box::new(MarketMaker::new(control, cfg.mm.wake_secs))), None));
        }
        let (value_count, value_cfg) = effective_value_config(cfg);
        for _ in 0..value_count {
            kernel.add_agent(Trader::Value(ValueAgent::new(value_cfg.clone())), None);
        }
        for _ in 0..cfg.momentum.count {
            kernel.add_agent(Trader::Momentum(MomentumAgent::new(cfg.momentum.agent.clone())), None);
        }
        let mut consumers = Vec::new();
        for _ in 0..cfg.consumer.count {
            let id = kernel.add_agent(Trader::Passive, None);
            let rng = kernel.rng_stream(id).expect("just registered");
            let agent = ConsumerAgent::draw(&cfg.consumer.agent, close, rng);
            *kernel.agent_mut(id).expect("just registered") = Trader::Consumer(agent);
            consumers.push(id);
        }

        let m0 = cfg.market.reference_price;
        let mut seed_orders = Vec::new();
        for k in 1..=cfg.market.seed_levels {
            for side in [Side::Bid, Side::Ask] {
                let price = m0 - side.sign() * k as i64;
                let id = OrderId::compose(seeder, seed_orders.len() as u32);
                seed_orders.push(Order::limit(id, seeder, side, price, cfg.market.seed_size));
            }
        }
        if let Trader::Exchange(ex) = kernel.agent_mut(exchange).expect("exchange exists") {
            ex.seed_book(seed_orders).expect("seed orders do not cross");
        }

        let n = kernel.agents().len();
        for i in 0..n {
            kernel.invoke(AgentId(i as u32), |a, ctx, sh| a.start(ctx, sh)).expect("registered agent");
        }
        Self {
            kernel,
            exchange,
            mms,
            consumers,
            close,
            session_end: close + cfg.market.grace_secs * NANOS_PER_SEC,
            seed,
            finished: false,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn close(&self) -> SimTime {
        self.close
    }

    pub fn market_makers(&self) -> &[AgentId] {
        &self.mms
    }

    pub fn consumers(&self) -> &[AgentId] {
        &self.consumers
    }

    pub fn kernel(&self) -> &Kernel<Trader> {
        &self.kernel
    }

    pub fn exchange(&self) -> &ExchangeAgent {
        self.kernel.agent(self.exchange).and_then(Trader::as_exchange).expect("exchange exists")
    }

    pub fn market_maker(&self, id: AgentId) -> &MarketMaker {
        self.kernel.agent(id).and_then(Trader::as_market_maker).expect("id is a market maker")
    }

    pub fn ledger(&self) -> &ReturnLedger {
        &self.kernel.shared().ledger
    }

    pub fn policy_rng(&self) -> ChaCha8Rng {
        self.kernel.rng_registry().auxiliary(POLICY_STREAM)
    }

    /// Run until a learning MM asks for a decision; `None` once the session is over.
    pub fn next_decision(&mut self) -> Option<AgentId> {
        match self.kernel.run_until_yield(self.session_end) {
            RunOutcome::Yielded(id) => Some(id),
            RunOutcome::Reached(_) => {
                self.finish();
                None
            }
        }
    }

    /// Latest observation of MM `id`.
    pub fn observation(&self, id: AgentId) -> &Observation {
        self.market_maker(id).observations().last().expect("MM has observed the book")
    }

    /// Discretized state of MM `id` at its latest observation.
    pub fn state(&self, id: AgentId, cfg: &ScenarioConfig) -> DiscreteState {
        observation_state(self.observation(id), cfg)
    }

    /// Quote according to `action` for MM `id`; skips when the action needs a mid that is missing.
    pub fn act(&mut self, id: AgentId, action: DiscreteAction) {
        let spread = self.observation(id).reference_spread;
        let Ok((half, depth)) = action_to_quote(action, spread) else {
            self.kernel.agent_mut(id).and_then(Trader::as_market_maker_mut).expect("MM").skip();
            return;
        };
        self.kernel
            .invoke(id, |a, ctx, sh| {
                let mm = a.as_market_maker_mut().expect("MM");
                let size = mm.external_size().expect("learning MM");
                mm.requote(ctx, sh, half, depth, size);
            })
            .expect("registered MM");
    }

    /// Run a session with no learning MM to completion.
    pub fn run(&mut self) {
        if let Some(id) = self.next_decision() {
            panic!("MM {id} is externally controlled; drive it with next_decision/act");
        }
    }

    /// Settle consumers whose horizon ran past the close and close MM books.
    fn finish(&mut self) {
        if self.finished {
            return;
        }
        self.finished = true;
        let book = self.exchange().book();
        let closing = book.mid().or(book.last_mid());
        let close = self.close;
        for &id in &self.consumers {
            let pending = matches!(self.kernel.agent(id), Some(Trader::Consumer(c)) if c.state() == ConsumerState::AwaitingClose);
            if let (true, Some(mid)) = (pending, closing) {
                self.kernel
                    .invoke(id, |a, _, sh| a.as_consumer_mut().expect("consumer").settle(id, mid, close, sh))
                    .expect("registered consumer");
            }
        }
        for &id in &self.mms.clone() {
            self.kernel.agent_mut(id).and_then(Trader::as_market_maker_mut).expect("MM").finish();
        }
    }

    /// Closing mark of MM `id`: the mid at its last observation.
    pub fn closing_mark(&self, id: AgentId) -> Option<MidPrice> {
        self.market_maker(id).observations().last().map(|o| o.mark)
    }

    /// MM profit in cents: closing cash plus inventory at the closing mark.
    pub fn mm_profit(&self, id: AgentId) -> f64 {
        let mm = self.market_maker(id);
        self.closing_mark(id).map_or(mm.cash as f64, |m| mm.marked_value(m))
    }

    pub fn trades(&self) -> &[Trade] {
        self.exchange().trades()
    }

    /// Cash and shares sum to zero over all agents.
    pub fn conservation_holds(&self) -> bool {
        let pos = positions_from_trades(self.trades());
        pos.values().map(|p| p.cash).sum::<i64>() == 0 && pos.values().map(|p| p.shares).sum::<i64>() == 0
    }

    /// Consumer id -> MM id providing the largest share of its executed volume (ties to the lower id).
    pub fn consumer_counterparties(&self) -> BTreeMap<AgentId, AgentId> {
        let mut vol: BTreeMap<(AgentId, AgentId), u64> = BTreeMap::new();
        let consumers: std::collections::BTreeSet<_> = self.consumers.iter().copied().collect();
        for t in self.trades() {
            let (consumer, other) = if consumers.contains(&t.buy_agent) { (t.buy_agent, t.sell_agent) } else if consumers.contains(&t.sell_agent) { (t.sell_agent, t.buy_agent) } else { continue };
            if self.mms.contains(&other) {
                *vol.entry((consumer, other)).or_default() += t.size;
            }
        }
        let mut best: BTreeMap<AgentId, (u64, AgentId)> = BTreeMap::new();
        for ((c, m), v) in vol {
            let e = best.entry(c).or_insert((v, m));
            if v > e.0 {
                *e = (v, m);
            }
        }
        best.into_iter().map(|(c, (_, m))| (c, m)).collect()
    }

    pub fn samples(&self) -> &[ReturnSample] {
        self.ledger().samples()
    }
}

/// Discretize an MM observation. A one-sided book counts as a wide spread with balanced imbalance.
pub fn observation_state(obs: &Observation, cfg: &ScenarioConfig) -> DiscreteState {
    discretize_state(obs.inventory, obs.imbalance.unwrap_or(0.5), obs.spread.unwrap_or(i64::MAX), obs.mark, cfg.state_bins())
}
