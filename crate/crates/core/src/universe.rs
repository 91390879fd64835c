//! Finite systems of runs and the knowledge operators over them.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, Point, UniverseId};

/// Index of an agent within its universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId(pub usize);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyncMode {
    /// The current time is part of every local state.
    #[default]
    Synchronous,
    /// Local states are exactly the given labels.
    Asynchronous,
}

/// A finite set of runs over times `0..=H` with a local state for every
/// agent at every point.
///
/// States are interned per agent; two points are indistinguishable to an
/// agent iff their interned ids agree. In synchronous mode the id folds in
/// the time, so equal labels at different times stay distinguishable.
#[derive(Clone)]
pub struct Universe {
    id: UniverseId,
    agents: Vec<String>,
    run_names: Vec<String>,
    horizon: usize,
    sync: SyncMode,
    labels: Vec<Vec<String>>,
    state_ids: Vec<Vec<u32>>,
    classes: Vec<Vec<Vec<u32>>>,
}

impl fmt::Debug for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Universe")
            .field("agents", &self.agents)
            .field("runs", &self.run_names.len())
            .field("horizon", &self.horizon)
            .field("sync", &self.sync)
            .finish()
    }
}

/// Incremental construction of a [`Universe`].
#[derive(Debug, Clone)]
pub struct UniverseBuilder {
    agents: Vec<String>,
    horizon: usize,
    sync: SyncMode,
    runs: Vec<(String, Vec<Vec<String>>)>,
}

impl UniverseBuilder {
    pub fn new<S: Into<String>>(agents: impl IntoIterator<Item = S>, horizon: usize) -> Self {
        UniverseBuilder {
            agents: agents.into_iter().map(Into::into).collect(),
            horizon,
            sync: SyncMode::Synchronous,
            runs: Vec::new(),
        }
    }

    pub fn sync_mode(mut self, sync: SyncMode) -> Self {
        self.sync = sync;
        self
    }

    /// Adds a run whose label for `(agent, time)` comes from `state`.
    pub fn run_with<L: ToString>(
        mut self,
        name: impl Into<String>,
        mut state: impl FnMut(AgentId, usize) -> L,
    ) -> Self {
        let labels = (0..self.agents.len())
            .map(|a| {
                (0..=self.horizon)
                    .map(|t| state(AgentId(a), t).to_string())
                    .collect()
            })
            .collect();
        self.runs.push((name.into(), labels));
        self
    }

    /// Adds a run from per-agent label rows, each of length `H + 1`.
    pub fn run(mut self, name: impl Into<String>, labels: Vec<Vec<String>>) -> Self {
        self.runs.push((name.into(), labels));
        self
    }

    pub fn build(self) -> Result<Universe> {
        let UniverseBuilder {
            agents,
            horizon,
            sync,
            runs,
        } = self;
        if agents.is_empty() {
            return Err(Error::InvalidUniverse("no agents".into()));
        }
        if runs.is_empty() {
            return Err(Error::InvalidUniverse("no runs".into()));
        }
        let distinct: BTreeSet<_> = agents.iter().collect();
        if distinct.len() != agents.len() {
            return Err(Error::InvalidUniverse("duplicate agent name".into()));
        }
        let names: BTreeSet<_> = runs.iter().map(|(n, _)| n).collect();
        if names.len() != runs.len() {
            return Err(Error::InvalidUniverse("duplicate run name".into()));
        }
        let times = horizon + 1;
        let n_points = runs.len() * times;
        let mut labels = vec![Vec::with_capacity(n_points); agents.len()];
        for (name, rows) in &runs {
            if rows.len() != agents.len() {
                return Err(Error::InvalidUniverse(format!(
                    "run `{name}` has {} state rows for {} agents",
                    rows.len(),
                    agents.len()
                )));
            }
            for (a, row) in rows.iter().enumerate() {
                if row.len() != times {
                    return Err(Error::InvalidUniverse(format!(
                        "run `{name}`, agent `{}`: {} states for horizon {horizon}",
                        agents[a],
                        row.len()
                    )));
                }
                labels[a].extend(row.iter().cloned());
            }
        }

        let mut state_ids = Vec::with_capacity(agents.len());
        let mut classes = Vec::with_capacity(agents.len());
        for agent_labels in &labels {
            let mut intern: HashMap<(Option<usize>, &str), u32> = HashMap::new();
            let mut ids = Vec::with_capacity(n_points);
            let mut agent_classes: Vec<Vec<u32>> = Vec::new();
            for (idx, label) in agent_labels.iter().enumerate() {
                let key = match sync {
                    SyncMode::Synchronous => (Some(idx % times), label.as_str()),
                    SyncMode::Asynchronous => (None, label.as_str()),
                };
                let next = intern.len() as u32;
                let id = *intern.entry(key).or_insert(next);
                if id as usize == agent_classes.len() {
                    agent_classes.push(Vec::new());
                }
                agent_classes[id as usize].push(idx as u32);
                ids.push(id);
            }
            state_ids.push(ids);
            classes.push(agent_classes);
        }

        Ok(Universe {
            id: UniverseId::fresh(),
            agents,
            run_names: runs.into_iter().map(|(n, _)| n).collect(),
            horizon,
            sync,
            labels,
            state_ids,
            classes,
        })
    }
}

impl Universe {
    pub fn id(&self) -> UniverseId {
        self.id
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn times(&self) -> usize {
        self.horizon + 1
    }

    pub fn sync_mode(&self) -> SyncMode {
        self.sync
    }

    pub fn num_runs(&self) -> usize {
        self.run_names.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    /// `|Ω|`.
    pub fn num_points(&self) -> usize {
        self.num_runs() * self.times()
    }

    pub fn agent_names(&self) -> &[String] {
        &self.agents
    }

    pub fn agent_ids(&self) -> impl Iterator<Item = AgentId> {
        (0..self.agents.len()).map(AgentId)
    }

    pub fn agent_name(&self, a: AgentId) -> &str {
        &self.agents[a.0]
    }

    pub fn agent(&self, name: &str) -> Result<AgentId> {
        self.agents
            .iter()
            .position(|n| n == name)
            .map(AgentId)
            .ok_or_else(|| Error::UnknownAgent(name.to_string()))
    }

    pub fn run_names(&self) -> &[String] {
        &self.run_names
    }

    pub fn run_index(&self, name: &str) -> Option<usize> {
        self.run_names.iter().position(|n| n == name)
    }

    fn idx(&self, run: usize, time: usize) -> usize {
        run * self.times() + time
    }

    /// The label given for `agent` at `(run, time)`.
    pub fn state_label(&self, agent: AgentId, run: usize, time: usize) -> &str {
        &self.labels[agent.0][self.idx(run, time)]
    }

    /// Interned local state; equal ids mean indistinguishable points.
    pub fn state_id(&self, agent: AgentId, run: usize, time: usize) -> u32 {
        self.state_ids[agent.0][self.idx(run, time)]
    }

    /// The indistinguishability classes of `agent`, each a non-empty list
    /// of points in `(run, time)` order.
    pub fn classes(&self, agent: AgentId) -> impl Iterator<Item = Vec<Point>> + '_ {
        let times = self.times();
        self.classes[agent.0].iter().map(move |c| {
            c.iter()
                .map(|&i| Point::new(i as usize / times, i as usize % times))
                .collect()
        })
    }

    pub fn num_classes(&self, agent: AgentId) -> usize {
        self.classes[agent.0].len()
    }

    /// Event consisting of one class of `agent`.
    pub fn class_event(&self, agent: AgentId, class: usize) -> Event {
        let mut e = self.empty();
        for &i in &self.classes[agent.0][class] {
            e.set_index(i as usize);
        }
        e
    }

    pub fn empty(&self) -> Event {
        Event::empty_in(self.id, self.num_runs(), self.times())
    }

    /// `Ω`.
    pub fn full(&self) -> Event {
        Event::full_in(self.id, self.num_runs(), self.times())
    }

    pub fn event_from_fn(&self, mut f: impl FnMut(usize, usize) -> bool) -> Event {
        let mut e = self.empty();
        for r in 0..self.num_runs() {
            for t in 0..self.times() {
                if f(r, t) {
                    e.insert(r, t);
                }
            }
        }
        e
    }

    pub fn event_from_points(&self, points: impl IntoIterator<Item = (usize, usize)>) -> Result<Event> {
        let mut e = self.empty();
        for (r, t) in points {
            if r >= self.num_runs() || t > self.horizon {
                return Err(Error::InvalidUniverse(format!(
                    "point ({r}, {t}) outside universe"
                )));
            }
            e.insert(r, t);
        }
        Ok(e)
    }

    /// All points of one run.
    pub fn run_event(&self, run: usize) -> Event {
        self.event_from_fn(|r, _| r == run)
    }

    fn check(&self, e: &Event) -> Result<()> {
        if e.universe() == self.id {
            Ok(())
        } else {
            Err(Error::UniverseMismatch)
        }
    }

    /// `K_i e`: the union of `i`'s classes contained in `e`.
    ///
    /// Panics if `e` belongs to another universe.
    pub fn knows(&self, agent: AgentId, e: &Event) -> Event {
        self.check(e).expect("event from another universe");
        let mut out = self.empty();
        for class in &self.classes[agent.0] {
            if class.iter().all(|&i| e.get_index(i as usize)) {
                for &i in class {
                    out.set_index(i as usize);
                }
            }
        }
        out
    }

    /// `E_I e`.
    pub fn everyone_knows(&self, group: &[AgentId], e: &Event) -> Result<Event> {
        if group.is_empty() {
            return Err(Error::EmptyAgentSet);
        }
        self.check(e)?;
        let mut out = self.full();
        for &a in group {
            out.intersect_with(&self.knows(a, e));
        }
        Ok(out)
    }

    /// `C_I e`, computed both as the limit of `E_I^n e` and as the greatest
    /// fixed point of `x ↦ E_I(e ∩ x)`; disagreement is reported as
    /// [`Error::Inconsistency`].
    pub fn common_knowledge(&self, group: &[AgentId], e: &Event) -> Result<Event> {
        let chain = {
            let mut x = self.everyone_knows(group, e)?;
            loop {
                let next = self.everyone_knows(group, &x)?;
                if next == x {
                    break x;
                }
                x = next;
            }
        };
        let bound = self.num_points() + 1;
        let mut x = self.full();
        let mut steps = 0;
        let gfp = loop {
            let next = self.everyone_knows(group, &e.intersection(&x))?;
            if next == x {
                break x;
            }
            steps += 1;
            if steps > bound {
                return Err(Error::NotStabilized { bound });
            }
            x = next;
        };
        if chain != gfp {
            return Err(Error::Inconsistency(
                "iterated everyone-knows and fixed point disagree on common knowledge".into(),
            ));
        }
        Ok(chain)
    }

    /// Whether `e = K_i e`.
    pub fn is_local(&self, agent: AgentId, e: &Event) -> bool {
        self.knows(agent, e) == *e
    }

    /// Whether each agent's current state determines the set of its
    /// earlier states.
    pub fn exhibits_perfect_recall(&self) -> bool {
        let times = self.times();
        for ids in &self.state_ids {
            let mut seen: HashMap<u32, BTreeSet<u32>> = HashMap::new();
            for r in 0..self.num_runs() {
                let mut prior = BTreeSet::new();
                for t in 0..times {
                    let s = ids[r * times + t];
                    match seen.get(&s) {
                        Some(p) if *p != prior => return false,
                        Some(_) => {}
                        None => {
                            seen.insert(s, prior.clone());
                        }
                    }
                    prior.insert(s);
                }
            }
        }
        true
    }

    /// Sorted `[run, time]` pairs.
    pub fn event_to_pairs(&self, e: &Event) -> Vec<[usize; 2]> {
        e.points().map(|p| [p.run, p.time]).collect()
    }

    pub fn to_doc(&self) -> UniverseDoc {
        let runs = (0..self.num_runs())
            .map(|r| RunDoc {
                name: self.run_names[r].clone(),
                states: self
                    .agent_ids()
                    .map(|a| {
                        let row = (0..self.times())
                            .map(|t| self.state_label(a, r, t).to_string())
                            .collect();
                        (self.agent_name(a).to_string(), row)
                    })
                    .collect(),
            })
            .collect();
        UniverseDoc {
            agents: self.agents.clone(),
            horizon: self.horizon,
            sync_mode: self.sync,
            runs,
        }
    }

    pub fn from_doc(doc: &UniverseDoc) -> Result<Universe> {
        let mut b = UniverseBuilder::new(doc.agents.iter().cloned(), doc.horizon).sync_mode(doc.sync_mode);
        for run in &doc.runs {
            let mut rows = Vec::with_capacity(doc.agents.len());
            for a in &doc.agents {
                let row = run.states.get(a).ok_or_else(|| {
                    Error::InvalidUniverse(format!("run `{}` has no states for `{a}`", run.name))
                })?;
                rows.push(row.clone());
            }
            if run.states.len() != doc.agents.len() {
                return Err(Error::InvalidUniverse(format!(
                    "run `{}` lists states for undeclared agents",
                    run.name
                )));
            }
            b = b.run(run.name.clone(), rows);
        }
        b.build()
    }
}

/// Serialized form of a [`Universe`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseDoc {
    pub agents: Vec<String>,
    pub horizon: usize,
    #[serde(default)]
    pub sync_mode: SyncMode,
    pub runs: Vec<RunDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunDoc {
    pub name: String,
    pub states: BTreeMap<String, Vec<String>>,
}
