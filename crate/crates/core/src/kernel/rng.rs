use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AgentId, KernelError};

/// Per-agent random streams derived from one master seed.
///
/// Every stream shares the key expanded from the master seed and differs only
/// in the ChaCha stream id, which is the agent id. A stream therefore depends
/// on `(master_seed, agent)` alone, not on how many other agents exist or how
/// their events interleave.
#[derive(Debug, Clone)]
pub struct RngRegistry {
    master_seed: u64,
    streams: Vec<ChaCha8Rng>,
}

/// Auxiliary (non-agent) streams live above the agent id range.
const AUX_STREAM_BASE: u64 = 1 << 32;

impl RngRegistry {
    pub fn new(master_seed: u64) -> Self {
        Self { master_seed, streams: Vec::new() }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn register(&mut self, agent: AgentId) {
        while self.streams.len() <= agent.index() {
            let id = self.streams.len() as u64;
            self.streams.push(derive_stream(self.master_seed, id));
        }
    }

    pub fn stream(&mut self, agent: AgentId) -> Result<&mut ChaCha8Rng, KernelError> {
        self.streams.get_mut(agent.index()).ok_or(KernelError::UnknownAgent(agent))
    }

    /// A stream for an exogenous process (e.g. the fundamental), disjoint from every agent stream.
    pub fn auxiliary(&self, tag: u32) -> ChaCha8Rng {
        derive_stream(self.master_seed, AUX_STREAM_BASE + u64::from(tag))
    }
}

fn derive_stream(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
