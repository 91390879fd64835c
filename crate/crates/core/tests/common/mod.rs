#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use timely_ck::random;
use timely_ck::{AgentId, Event, SyncMode, TimingSpec, Universe};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn universe(rng: &mut ChaCha8Rng, max_bits: usize, perfect_recall: bool) -> Universe {
    let shape = random::shape(rng, 3, max_bits);
    let sync = if rng.gen_bool(0.5) {
        SyncMode::Synchronous
    } else {
        SyncMode::Asynchronous
    };
    random::universe(rng, shape, perfect_recall, sync)
}

pub fn event(rng: &mut ChaCha8Rng, u: &Universe) -> Event {
    random::event(rng, u, 0.6)
}

pub fn spec(rng: &mut ChaCha8Rng, u: &Universe) -> TimingSpec {
    random::spec(rng, u, u.horizon() as i64 + 1, 0.2)
}

pub fn agents(u: &Universe) -> Vec<AgentId> {
    u.agent_ids().collect()
}

pub fn points(u: &Universe, pts: &[(usize, usize)]) -> Event {
    u.event_from_points(pts.iter().copied()).unwrap()
}
