//! Agent-indexed event tuples, the vectorial functions `f` and `g`, and
//! their greatest fixed points.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Delta, Event};
use crate::universe::{AgentId, Universe};

/// Default limit on `|Ω|·|I|` for the exhaustive fixed-point oracle.
pub const ORACLE_GUARD_BITS: usize = 16;

/// A group of agents together with a time bound `δ(i, j)` for every ordered
/// pair of distinct members.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimingSpec {
    agents: Vec<AgentId>,
    // row-major |I|×|I|, diagonal unused
    delta: Vec<Delta>,
}

/// A finite bound moved into the canonical range by [`TimingSpec::normalized`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Normalization {
    pub from: AgentId,
    pub to: AgentId,
    pub original: i64,
    pub normalized: i64,
}

impl TimingSpec {
    pub fn new(
        agents: Vec<AgentId>,
        mut delta: impl FnMut(AgentId, AgentId) -> Delta,
    ) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyAgentSet);
        }
        let distinct: BTreeSet<_> = agents.iter().collect();
        if distinct.len() != agents.len() {
            return Err(Error::InvalidSpec("duplicate agent".into()));
        }
        let mut table = Vec::with_capacity(agents.len() * agents.len());
        for &i in &agents {
            for &j in &agents {
                table.push(if i == j { Delta::Finite(0) } else { delta(i, j) });
            }
        }
        Ok(TimingSpec {
            agents,
            delta: table,
        })
    }

    /// `δ ≡ d` off the diagonal.
    pub fn constant(agents: Vec<AgentId>, d: Delta) -> Result<Self> {
        Self::new(agents, |_, _| d)
    }

    /// Builds a spec from explicit entries; every ordered pair of distinct
    /// agents must appear exactly once.
    pub fn from_pairs(
        agents: Vec<AgentId>,
        pairs: impl IntoIterator<Item = (AgentId, AgentId, Delta)>,
    ) -> Result<Self> {
        let mut given = BTreeMap::new();
        for (i, j, d) in pairs {
            if i == j {
                return Err(Error::InvalidSpec(format!("diagonal entry {i}->{j}")));
            }
            if !agents.contains(&i) || !agents.contains(&j) {
                return Err(Error::InvalidSpec(format!("entry {i}->{j} outside agent set")));
            }
            if given.insert((i, j), d).is_some() {
                return Err(Error::InvalidSpec(format!("entry {i}->{j} given twice")));
            }
        }
        let mut missing = None;
        let spec = Self::new(agents, |i, j| match given.get(&(i, j)) {
            Some(&d) => d,
            None => {
                missing.get_or_insert((i, j));
                Delta::Infinite
            }
        })?;
        match missing {
            Some((i, j)) => Err(Error::InvalidSpec(format!("missing entry {i}->{j}"))),
            None => Ok(spec),
        }
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn position(&self, agent: AgentId) -> Option<usize> {
        self.agents.iter().position(|&a| a == agent)
    }

    /// `δ(agents[k], agents[l])`.
    pub fn delta_at(&self, k: usize, l: usize) -> Delta {
        self.delta[k * self.agents.len() + l]
    }

    /// `δ(i, j)`. Panics if either agent is outside the spec.
    pub fn delta(&self, i: AgentId, j: AgentId) -> Delta {
        let k = self.position(i).expect("agent outside timing spec");
        let l = self.position(j).expect("agent outside timing spec");
        self.delta_at(k, l)
    }

    /// Ordered pairs of distinct agents with their bound.
    pub fn pairs(&self) -> impl Iterator<Item = (AgentId, AgentId, Delta)> + '_ {
        let n = self.agents.len();
        (0..n).flat_map(move |k| {
            (0..n)
                .filter(move |&l| l != k)
                .map(move |l| (self.agents[k], self.agents[l], self.delta_at(k, l)))
        })
    }

    pub fn all_finite(&self) -> bool {
        self.pairs().all(|(_, _, d)| d.is_finite())
    }

    /// Clamps finite bounds into `[-(H+1), H]`. Bounds outside that range
    /// behave exactly like its end points in a universe of horizon `H`.
    pub fn normalized(&self, horizon: usize) -> (TimingSpec, Vec<Normalization>) {
        let hi = horizon as i64;
        let lo = -(horizon as i64) - 1;
        let mut notes = Vec::new();
        let mut out = self.clone();
        let n = self.agents.len();
        for k in 0..n {
            for l in 0..n {
                if let Delta::Finite(v) = self.delta_at(k, l) {
                    let c = v.clamp(lo, hi);
                    if c != v {
                        out.delta[k * n + l] = Delta::Finite(c);
                        notes.push(Normalization {
                            from: self.agents[k],
                            to: self.agents[l],
                            original: v,
                            normalized: c,
                        });
                    }
                }
            }
        }
        (out, notes)
    }

    /// Checks that every agent of the spec exists in `u`.
    pub fn check_in(&self, u: &Universe) -> Result<()> {
        match self.agents.iter().find(|a| a.0 >= u.num_agents()) {
            Some(a) => Err(Error::UnknownAgent(a.to_string())),
            None => Ok(()),
        }
    }
}

/// A tuple of events indexed by an ordered set of agents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EventTuple {
    agents: Vec<AgentId>,
    coords: Vec<Event>,
}

impl EventTuple {
    pub fn new(agents: Vec<AgentId>, coords: Vec<Event>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyAgentSet);
        }
        if agents.len() != coords.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} agents, {} coordinates",
                agents.len(),
                coords.len()
            )));
        }
        if coords.windows(2).any(|w| !w[0].same_universe(&w[1])) {
            return Err(Error::UniverseMismatch);
        }
        Ok(EventTuple { agents, coords })
    }

    /// The same event in every coordinate.
    pub fn constant(agents: &[AgentId], e: &Event) -> Self {
        assert!(!agents.is_empty(), "empty agent set");
        EventTuple {
            agents: agents.to_vec(),
            coords: vec![e.clone(); agents.len()],
        }
    }

    /// `⊤ = (Ω)_i`.
    pub fn top(u: &Universe, agents: &[AgentId]) -> Self {
        Self::constant(agents, &u.full())
    }

    /// `⊥ = (∅)_i`.
    pub fn bottom(u: &Universe, agents: &[AgentId]) -> Self {
        Self::constant(agents, &u.empty())
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn coords(&self) -> &[Event] {
        &self.coords
    }

    pub fn coord(&self, k: usize) -> &Event {
        &self.coords[k]
    }

    pub fn get(&self, agent: AgentId) -> Option<&Event> {
        self.agents
            .iter()
            .position(|&a| a == agent)
            .map(|k| &self.coords[k])
    }

    pub fn iter(&self) -> impl Iterator<Item = (AgentId, &Event)> {
        self.agents.iter().copied().zip(&self.coords)
    }

    pub fn into_coords(self) -> Vec<Event> {
        self.coords
    }

    fn check_shape(&self, other: &EventTuple) -> Result<()> {
        if self.agents != other.agents {
            return Err(Error::ShapeMismatch("agent sets differ".into()));
        }
        if !self.coords[0].same_universe(&other.coords[0]) {
            return Err(Error::UniverseMismatch);
        }
        Ok(())
    }

    /// Coordinatewise `⊆`.
    pub fn leq(&self, other: &EventTuple) -> Result<bool> {
        self.check_shape(other)?;
        Ok(self
            .coords
            .iter()
            .zip(&other.coords)
            .all(|(a, b)| a.is_subset(b)))
    }

    pub fn join(&self, other: &EventTuple) -> Result<EventTuple> {
        self.zip_with(other, Event::union)
    }

    pub fn meet(&self, other: &EventTuple) -> Result<EventTuple> {
        self.zip_with(other, Event::intersection)
    }

    fn zip_with(&self, other: &EventTuple, f: impl Fn(&Event, &Event) -> Event) -> Result<EventTuple> {
        self.check_shape(other)?;
        Ok(EventTuple {
            agents: self.agents.clone(),
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    /// `∪x̄`, the union of all coordinates.
    pub fn union(&self) -> Event {
        let mut out = self.coords[0].cleared();
        for c in &self.coords {
            out.union_with(c);
        }
        out
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.coords.iter().map(Event::len).collect()
    }

    /// Agent name → sorted `[run, time]` pairs.
    pub fn to_map(&self, u: &Universe) -> BTreeMap<String, Vec<[usize; 2]>> {
        self.iter()
            .map(|(a, e)| (u.agent_name(a).to_string(), u.event_to_pairs(e)))
            .collect()
    }
}

fn check_inputs(u: &Universe, psi: &Event, spec: &TimingSpec, x: &EventTuple) -> Result<()> {
    spec.check_in(u)?;
    if psi.universe() != u.id() || x.coords[0].universe() != u.id() {
        return Err(Error::UniverseMismatch);
    }
    if x.agents != spec.agents {
        return Err(Error::ShapeMismatch(
            "tuple agents differ from timing spec agents".into(),
        ));
    }
    Ok(())
}

/// `f_ψ^δ(x̄)`: coordinate `i` is `K_i(ψ ∩ ⋂_{j≠i} ⊙^{≤δ(i,j)} x_j)`.
pub fn apply_f(u: &Universe, psi: &Event, spec: &TimingSpec, x: &EventTuple) -> Result<EventTuple> {
    check_inputs(u, psi, spec, x)?;
    let n = spec.len();
    let coords = (0..n)
        .map(|k| {
            let mut body = psi.clone();
            for l in (0..n).filter(|&l| l != k) {
                body.intersect_with(&x.coords[l].within(spec.delta_at(k, l)));
            }
            u.knows(spec.agents[k], &body)
        })
        .collect();
    Ok(EventTuple {
        agents: spec.agents.clone(),
        coords,
    })
}

/// `g_ψ^δ(x̄)`: coordinate `i` is `K_i(ψ ∩ ⋂_{j: δ(i,j)<∞} ⊙^{δ(i,j)} x_j)`.
///
/// The shift reads times past the horizon as the horizon
/// ([`Event::shift_saturating`]), so that for stable coordinates
/// `⊙^δ x = ⊙^{≤δ} x` holds at every point of the truncated universe.
pub fn apply_g(u: &Universe, psi: &Event, spec: &TimingSpec, x: &EventTuple) -> Result<EventTuple> {
    check_inputs(u, psi, spec, x)?;
    let n = spec.len();
    let coords = (0..n)
        .map(|k| {
            let mut body = psi.clone();
            for l in (0..n).filter(|&l| l != k) {
                if let Delta::Finite(d) = spec.delta_at(k, l) {
                    body.intersect_with(&x.coords[l].shift_saturating(d));
                }
            }
            u.knows(spec.agents[k], &body)
        })
        .collect();
    Ok(EventTuple {
        agents: spec.agents.clone(),
        coords,
    })
}

/// Result of a descending fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GfpOutcome {
    pub value: EventTuple,
    /// Number of applications of the function until a repeat.
    pub iterations: usize,
    /// Coordinate sizes of every iterate, starting with the seed.
    pub trace: Vec<Vec<usize>>,
}

/// Iterates `f` from `start` until two consecutive iterates agree.
///
/// Started at `⊤` with a monotone `f`, the result is the greatest fixed
/// point. More than `|Ω|·|I| + 1` steps means `f` is not monotone.
pub fn gfp_from<F>(start: EventTuple, mut f: F) -> Result<GfpOutcome>
where
    F: FnMut(&EventTuple) -> Result<EventTuple>,
{
    let bound = start.coords[0].capacity() * start.agents.len() + 1;
    let mut x = start;
    let mut trace = vec![x.sizes()];
    for iterations in 1..=bound {
        let next = f(&x)?;
        next.check_shape(&x)?;
        if next == x {
            return Ok(GfpOutcome {
                value: x,
                iterations,
                trace,
            });
        }
        trace.push(next.sizes());
        x = next;
    }
    Err(Error::NotStabilized { bound })
}

/// Greatest fixed point of a monotone `f` on tuples over `agents`.
pub fn gfp<F>(u: &Universe, agents: &[AgentId], f: F) -> Result<GfpOutcome>
where
    F: FnMut(&EventTuple) -> Result<EventTuple>,
{
    gfp_from(EventTuple::top(u, agents), f)
}

/// Join of all post-fixed points `x̄ ≤ f(x̄)`, by enumerating every tuple.
///
/// Refuses when `|Ω|·|I|` exceeds `guard_bits`.
pub fn gfp_bruteforce_oracle<F>(
    u: &Universe,
    agents: &[AgentId],
    f: F,
    guard_bits: usize,
) -> Result<EventTuple>
where
    F: Fn(&EventTuple) -> Result<EventTuple> + Sync,
{
    if agents.is_empty() {
        return Err(Error::EmptyAgentSet);
    }
    let n = u.num_points();
    let bits = n * agents.len();
    if bits > guard_bits || bits > 40 {
        return Err(Error::SizeGuard {
            what: "fixed-point oracle",
            size: 1u128 << bits.min(127),
            limit: 1u128 << guard_bits.min(127),
        });
    }
    let template = u.empty();
    let coord_mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let tuple_of = |mask: u64| EventTuple {
        agents: agents.to_vec(),
        coords: (0..agents.len())
            .map(|k| template.from_word((mask >> (k * n)) & coord_mask))
            .collect(),
    };
    let joined = (0..1u64 << bits)
        .into_par_iter()
        .map(|mask| -> Result<u64> {
            let x = tuple_of(mask);
            Ok(if x.leq(&f(&x)?)? { mask } else { 0 })
        })
        .try_reduce(|| 0, |a, b| Ok(a | b))?;
    Ok(tuple_of(joined))
}

/// `C_I^δψ` with iteration diagnostics.
pub fn timely_ck_traced(u: &Universe, psi: &Event, spec: &TimingSpec) -> Result<GfpOutcome> {
    gfp(u, spec.agents(), |x| apply_f(u, psi, spec, x))
}

/// `C_I^δψ`, the greatest fixed point of `f_ψ^δ`.
pub fn timely_ck(u: &Universe, psi: &Event, spec: &TimingSpec) -> Result<EventTuple> {
    timely_ck_traced(u, psi, spec).map(|o| o.value)
}

pub fn timely_ck_g_traced(u: &Universe, psi: &Event, spec: &TimingSpec) -> Result<GfpOutcome> {
    gfp(u, spec.agents(), |x| apply_g(u, psi, spec, x))
}

/// `C̃_I^δψ`, the greatest fixed point of `g_ψ^δ`.
pub fn timely_ck_g(u: &Universe, psi: &Event, spec: &TimingSpec) -> Result<EventTuple> {
    timely_ck_g_traced(u, psi, spec).map(|o| o.value)
}

/// Whether `ξ̄ ≤ f_ψ^δ(ξ̄)`. When it is, also confirms `ξ̄ ≤ C_I^δψ` and
/// reports an inconsistency otherwise.
pub fn check_induction_rule(u: &Universe, psi: &Event, spec: &TimingSpec, xi: &EventTuple) -> Result<bool> {
    if !xi.leq(&apply_f(u, psi, spec, xi)?)? {
        return Ok(false);
    }
    let ck = timely_ck(u, psi, spec)?;
    if !xi.leq(&ck)? {
        return Err(Error::Inconsistency(
            "post-fixed point not below the greatest fixed point".into(),
        ));
    }
    Ok(true)
}

fn scalar_gfp(u: &Universe, mut f: impl FnMut(&Event) -> Result<Event>) -> Result<Event> {
    let bound = u.num_points() + 1;
    let mut x = u.full();
    for _ in 0..=bound {
        let next = f(&x)?;
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(Error::NotStabilized { bound })
}

/// `C_I^◇ψ`, the greatest fixed point of `x ↦ ⋂_i ◇K_i(ψ ∩ x)`.
pub fn eventual_ck(u: &Universe, group: &[AgentId], psi: &Event) -> Result<Event> {
    if group.is_empty() {
        return Err(Error::EmptyAgentSet);
    }
    scalar_gfp(u, |x| {
        let body = psi.intersection(x);
        let mut out = u.full();
        for &a in group {
            out.intersect_with(&u.knows(a, &body).eventually());
        }
        Ok(out)
    })
}

/// `E_I^ε e`: holds at `(r, t)` iff some interval of length at most `ε`
/// containing `t` holds, for each agent, a time at which it knows `e`.
pub fn everyone_knows_within(u: &Universe, group: &[AgentId], e: &Event, epsilon: usize) -> Result<Event> {
    if group.is_empty() {
        return Err(Error::EmptyAgentSet);
    }
    let known: Vec<Event> = group.iter().map(|&a| u.knows(a, e)).collect();
    let h = u.horizon();
    Ok(u.event_from_fn(|r, t| {
        (t.saturating_sub(epsilon)..=t).any(|a| {
            let end = (a + epsilon).min(h);
            known.iter().all(|k| (a..=end).any(|s| k.contains(r, s)))
        })
    }))
}

/// `C_I^εψ`, the greatest fixed point of `x ↦ E_I^ε(ψ ∩ x)`.
pub fn epsilon_ck(u: &Universe, group: &[AgentId], psi: &Event, epsilon: usize) -> Result<Event> {
    everyone_knows_within(u, group, psi, epsilon)?;
    scalar_gfp(u, |x| everyone_knows_within(u, group, &psi.intersection(x), epsilon))
}
