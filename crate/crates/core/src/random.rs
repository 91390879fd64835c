//! Seeded generators of small universes, events and timing specs.

use rand::Rng;

use crate::event::{Delta, Event};
use crate::fixed_point::TimingSpec;
use crate::universe::{AgentId, SyncMode, Universe, UniverseBuilder};

/// Shape of a random universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub agents: usize,
    pub runs: usize,
    pub horizon: usize,
}

impl Shape {
    pub fn points(&self) -> usize {
        self.runs * (self.horizon + 1)
    }

    /// `|Ω|·|I|`.
    pub fn bits(&self) -> usize {
        self.points() * self.agents
    }
}

/// A random shape with `agents ∈ 1..=max_agents` and `|Ω|·|I| ≤ max_bits`.
pub fn shape<R: Rng>(rng: &mut R, max_agents: usize, max_bits: usize) -> Shape {
    loop {
        let agents = rng.gen_range(1..=max_agents.max(1));
        let budget = max_bits / agents;
        if budget == 0 {
            continue;
        }
        let runs = rng.gen_range(1..=budget.min(4));
        let times = budget / runs;
        if times == 0 {
            continue;
        }
        let horizon = rng.gen_range(0..times.min(5));
        return Shape {
            agents,
            runs,
            horizon,
        };
    }
}

/// A universe of the given shape whose labels are random observations.
///
/// With `perfect_recall`, each label is the agent's whole observation
/// history, so equal states imply equal pasts.
pub fn universe<R: Rng>(rng: &mut R, shape: Shape, perfect_recall: bool, sync: SyncMode) -> Universe {
    let names: Vec<String> = (0..shape.agents).map(|a| format!("a{a}")).collect();
    let alphabet = rng.gen_range(2..=3u8);
    let mut b = UniverseBuilder::new(names, shape.horizon).sync_mode(sync);
    for r in 0..shape.runs {
        let mut rows = Vec::with_capacity(shape.agents);
        for _ in 0..shape.agents {
            let mut row = Vec::with_capacity(shape.horizon + 1);
            let mut history = String::new();
            for _ in 0..=shape.horizon {
                let obs = (b'a' + rng.gen_range(0..alphabet)) as char;
                if perfect_recall {
                    history.push(obs);
                    row.push(history.clone());
                } else {
                    row.push(obs.to_string());
                }
            }
            rows.push(row);
        }
        b = b.run(format!("r{r}"), rows);
    }
    b.build().expect("random universe is well formed")
}

pub fn event<R: Rng>(rng: &mut R, u: &Universe, density: f64) -> Event {
    u.event_from_fn(|_, _| rng.gen_bool(density))
}

/// A random stable event: each run starts holding at a random time, or never.
pub fn stable_event<R: Rng>(rng: &mut R, u: &Universe) -> Event {
    let starts: Vec<Option<usize>> = (0..u.num_runs())
        .map(|_| {
            if rng.gen_bool(0.25) {
                None
            } else {
                Some(rng.gen_range(0..=u.horizon()))
            }
        })
        .collect();
    u.event_from_fn(|r, t| starts[r].is_some_and(|s| t >= s))
}

/// A random bound in `[-max_mag, max_mag]`, infinite with probability `p_inf`.
pub fn delta<R: Rng>(rng: &mut R, max_mag: i64, p_inf: f64) -> Delta {
    if rng.gen_bool(p_inf) {
        Delta::Infinite
    } else {
        Delta::Finite(rng.gen_range(-max_mag..=max_mag))
    }
}

/// A spec over all agents of `u`.
pub fn spec<R: Rng>(rng: &mut R, u: &Universe, max_mag: i64, p_inf: f64) -> TimingSpec {
    let agents: Vec<AgentId> = u.agent_ids().collect();
    TimingSpec::new(agents, |_, _| delta(rng, max_mag, p_inf)).expect("agents are distinct")
}

/// A spec with only finite bounds.
pub fn finite_spec<R: Rng>(rng: &mut R, u: &Universe, max_mag: i64) -> TimingSpec {
    spec(rng, u, max_mag, 0.0)
}
