//! Discrete-event simulation kernel.
//!
//! The kernel owns the global event queue and the simulated clock. Agents
//! never call each other directly: every interaction is a [`Message`] that the
//! kernel delivers at `deliver_at`, after applying link latency and any
//! per-message computation delay. Periods with no pending events cost nothing,
//! the clock jumps straight to the next delivery time.
//!
//! Dispatch order is total: events are keyed by `(deliver_at, sequence)` where
//! `sequence` is a kernel-wide insertion counter, so replaying a scenario with
//! the same master seed produces the same dispatch log bit for bit.

mod message;
mod queue;
mod rng;
mod time;

use std::io::Write;
use std::time::{Duration, Instant};

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use message::{Message, Payload, PayloadKind};
pub use queue::EventQueue;
pub use rng::RngRegistry;
pub use time::{SimTime, NANOS_PER_SEC, TRADING_DAY};

/// Identifier of an agent registered with a kernel. Ids are dense and start at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
pub struct AgentId(pub u32);

impl AgentId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KernelError {
    #[error("cannot schedule at {at} ns, clock is already at {clock} ns")]
    SchedulingInPast { at: SimTime, clock: SimTime },
    #[error("unknown agent {0}")]
    UnknownAgent(AgentId),
}

/// Default one-way latency between an agent and anything it talks to.
pub const DEFAULT_LATENCY_NS: u64 = 1_000;

/// Timing parameters applied to every outbound message.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelConfig {
    pub default_latency_ns: u64,
    /// Extra delay charged before the messages an agent emits while handling a
    /// message of a given kind, indexed by [`PayloadKind::index`].
    pub computation_delay_ns: [u64; PayloadKind::COUNT],
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            default_latency_ns: DEFAULT_LATENCY_NS,
            computation_delay_ns: [0; PayloadKind::COUNT],
        }
    }
}

/// A message handler driven by the kernel.
pub trait Agent {
    /// State shared by every agent of an episode (ledgers, exogenous paths).
    type Shared;

    fn on_message(&mut self, msg: Message, ctx: &mut Context<'_>, shared: &mut Self::Shared);
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KernelStats {
    pub dispatched: u64,
    pub wall_time: Duration,
}

/// Why a call to [`Kernel::run_until_yield`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunOutcome {
    /// An agent asked for control to be handed back to the driver.
    Yielded(AgentId),
    /// Every event up to the end time was dispatched.
    Reached(SimTime),
}

/// One line of the optional dispatch log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispatchRecord {
    pub time: SimTime,
    pub sequence: u64,
    pub sender: AgentId,
    pub recipient: AgentId,
    pub kind: PayloadKind,
}

/// Everything the kernel owns apart from the agents themselves.
struct Core {
    clock: SimTime,
    queue: EventQueue,
    next_sequence: u64,
    rngs: RngRegistry,
    latency: Vec<u64>,
    config: KernelConfig,
    scheduled: u64,
    delivered: u64,
    yield_to_driver: Option<AgentId>,
    log: Option<Vec<DispatchRecord>>,
}

impl Core {
    fn link_latency(&self, from: AgentId, to: AgentId) -> u64 {
        if from == to {
            return 0;
        }
        let a = self.latency.get(from.index()).copied().unwrap_or(self.config.default_latency_ns);
        let b = self.latency.get(to.index()).copied().unwrap_or(self.config.default_latency_ns);
        a.max(b)
    }

    fn push(&mut self, sender: AgentId, recipient: AgentId, deliver_at: SimTime, payload: Payload) -> Result<u64, KernelError> {
        if deliver_at < self.clock {
            return Err(KernelError::SchedulingInPast { at: deliver_at, clock: self.clock });
        }
        if recipient.index() >= self.latency.len() {
            return Err(KernelError::UnknownAgent(recipient));
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.scheduled += 1;
        self.queue.push(Message { sender, recipient, payload, deliver_at, sequence });
        Ok(sequence)
    }
}

/// Handle given to an agent while it handles a message (or is invoked by the driver).
pub struct Context<'a> {
    core: &'a mut Core,
    me: AgentId,
    handling: Option<PayloadKind>,
}

impl Context<'_> {
    pub fn now(&self) -> SimTime {
        self.core.clock
    }

    pub fn id(&self) -> AgentId {
        self.me
    }

    fn outbound_delay(&self) -> u64 {
        self.handling.map_or(0, |k| self.core.config.computation_delay_ns[k.index()])
    }

    /// Send `payload` to `to`; it arrives after computation delay plus link latency.
    pub fn send(&mut self, to: AgentId, payload: Payload) -> u64 {
        let at = self.core.clock + self.outbound_delay() + self.core.link_latency(self.me, to);
        // deliver_at >= clock by construction; only an unknown recipient can fail.
        self.core
            .push(self.me, to, at, payload)
            .unwrap_or_else(|e| panic!("agent {} sent to {to}: {e}", self.me))
    }

    /// Schedule a wakeup for this agent at absolute time `at`.
    pub fn wakeup_at(&mut self, at: SimTime, tag: u64) -> Result<u64, KernelError> {
        self.core.push(self.me, self.me, at, Payload::Wakeup(tag))
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        self.core
            .rngs
            .stream(self.me)
            .expect("agents are registered with the rng registry on creation")
    }

    /// Stop the current run after this dispatch and return control to the driver.
    pub fn request_yield(&mut self) {
        self.core.yield_to_driver = Some(self.me);
    }
}

pub struct Kernel<A: Agent> {
    agents: Vec<A>,
    shared: A::Shared,
    core: Core,
}

impl<A: Agent> Kernel<A> {
    pub fn new(master_seed: u64, config: KernelConfig, shared: A::Shared) -> Self {
        Self {
            agents: Vec::new(),
            shared,
            core: Core {
                clock: SimTime::ZERO,
                queue: EventQueue::default(),
                next_sequence: 0,
                rngs: RngRegistry::new(master_seed),
                latency: Vec::new(),
                config,
                scheduled: 0,
                delivered: 0,
                yield_to_driver: None,
                log: None,
            },
        }
    }

    /// Register an agent. `latency_ns` overrides the default link latency for its class.
    pub fn add_agent(&mut self, agent: A, latency_ns: Option<u64>) -> AgentId {
        let id = AgentId(self.agents.len() as u32);
        self.agents.push(agent);
        self.core.latency.push(latency_ns.unwrap_or(self.core.config.default_latency_ns));
        self.core.rngs.register(id);
        id
    }

    /// Enqueue a message built outside any handler. The kernel assigns its sequence number.
    pub fn schedule(&mut self, sender: AgentId, recipient: AgentId, deliver_at: SimTime, payload: Payload) -> Result<u64, KernelError> {
        if sender.index() >= self.agents.len() {
            return Err(KernelError::UnknownAgent(sender));
        }
        self.core.push(sender, recipient, deliver_at, payload)
    }

    /// Dispatch every event with `deliver_at <= end`, then set the clock to `end`.
    pub fn run_until(&mut self, end: SimTime) -> KernelStats {
        let start = Instant::now();
        let mut dispatched = 0;
        while self.dispatch_next(end) {
            dispatched += 1;
            // Yields are meaningful only to run_until_yield.
            self.core.yield_to_driver = None;
        }
        self.core.clock = self.core.clock.max(end);
        KernelStats { dispatched, wall_time: start.elapsed() }
    }

    /// Like [`run_until`](Self::run_until) but returns early when an agent requests a yield.
    /// The clock stays at the yielding event's time in that case.
    pub fn run_until_yield(&mut self, end: SimTime) -> RunOutcome {
        while self.dispatch_next(end) {
            if let Some(id) = self.core.yield_to_driver.take() {
                return RunOutcome::Yielded(id);
            }
        }
        self.core.clock = self.core.clock.max(end);
        RunOutcome::Reached(self.core.clock)
    }

    fn dispatch_next(&mut self, end: SimTime) -> bool {
        match self.core.queue.peek_time() {
            Some(t) if t <= end => {}
            _ => return false,
        }
        let msg = self.core.queue.pop().expect("peeked");
        self.core.clock = msg.deliver_at;
        self.core.delivered += 1;
        let kind = msg.payload.kind();
        if let Some(log) = self.core.log.as_mut() {
            log.push(DispatchRecord {
                time: msg.deliver_at,
                sequence: msg.sequence,
                sender: msg.sender,
                recipient: msg.recipient,
                kind,
            });
        }
        let me = msg.recipient;
        let mut ctx = Context { core: &mut self.core, me, handling: Some(kind) };
        self.agents[me.index()].on_message(msg, &mut ctx, &mut self.shared);
        true
    }

    /// Call into an agent from outside the event loop, with a context that can send messages.
    pub fn invoke<R>(&mut self, id: AgentId, f: impl FnOnce(&mut A, &mut Context<'_>, &mut A::Shared) -> R) -> Result<R, KernelError> {
        let agent = self.agents.get_mut(id.index()).ok_or(KernelError::UnknownAgent(id))?;
        let mut ctx = Context { core: &mut self.core, me: id, handling: None };
        Ok(f(agent, &mut ctx, &mut self.shared))
    }

    pub fn rng_stream(&mut self, id: AgentId) -> Result<&mut ChaCha8Rng, KernelError> {
        self.core.rngs.stream(id)
    }

    pub fn rng_registry(&self) -> &RngRegistry {
        &self.core.rngs
    }

    pub fn clock(&self) -> SimTime {
        self.core.clock
    }

    pub fn agent(&self, id: AgentId) -> Option<&A> {
        self.agents.get(id.index())
    }

    pub fn agent_mut(&mut self, id: AgentId) -> Option<&mut A> {
        self.agents.get_mut(id.index())
    }

    pub fn agents(&self) -> &[A] {
        &self.agents
    }

    pub fn shared(&self) -> &A::Shared {
        &self.shared
    }

    pub fn shared_mut(&mut self) -> &mut A::Shared {
        &mut self.shared
    }

    pub fn into_parts(self) -> (Vec<A>, A::Shared) {
        (self.agents, self.shared)
    }

    pub fn pending(&self) -> usize {
        self.core.queue.len()
    }

    pub fn scheduled_count(&self) -> u64 {
        self.core.scheduled
    }

    pub fn delivered_count(&self) -> u64 {
        self.core.delivered
    }

    /// Start recording one [`DispatchRecord`] per delivered message.
    pub fn enable_event_log(&mut self) {
        self.core.log.get_or_insert_with(Vec::new);
    }

    pub fn event_log(&self) -> &[DispatchRecord] {
        self.core.log.as_deref().unwrap_or(&[])
    }

    /// Write the dispatch log as CSV: `time,sequence,sender,recipient,kind`.
    pub fn write_event_log_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_event_log(self.event_log(), out)
    }
}

pub fn write_event_log<W: Write>(records: &[DispatchRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["time", "sequence", "sender", "recipient", "kind"])?;
    for r in records {
        w.write_record([
            r.time.as_nanos().to_string(),
            r.sequence.to_string(),
            r.sender.to_string(),
            r.recipient.to_string(),
            r.kind.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
