//! Bounded-delay observation contexts and the coordinated-response problems
//! posed over them.
//!
//! A [`ScenarioSpec`] describes a trigger that fires at one of a few known
//! times (or never) and agents that each observe it privately after a
//! bounded delay. [`TcrInstance::generate`] unfolds it into one run per
//! combination of trigger time and per-agent delays, with full-information
//! local states, and attaches the timing constraints on the responses.

mod bundled;
mod enumerate;
mod reduction;
mod solve;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Delta, Event};
use crate::fixed_point::{Normalization, TimingSpec};
use crate::universe::{AgentId, SyncMode, Universe, UniverseBuilder};

pub use bundled::{asymmetric_simultaneous, car_wash, joint, ordered, simultaneous, unsatisfiable};
pub use enumerate::{enumerate_solutions, verify_optimal, OptimalityReport, DEFAULT_SOLUTION_GUARD};
pub use reduction::{reduction_delta, verify_reductions, ReductionKind, ReductionReport};
pub use solve::{
    solvability, synthesize_optimal, verify_solution, Check, Solvability, SolutionReport,
};

/// Default cap on the number of generated runs.
pub const DEFAULT_RUN_CAP: usize = 100_000;

fn yes() -> bool {
    true
}

/// File form of a scenario.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub agents: Vec<String>,
    /// Sized automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    pub trigger_times: Vec<usize>,
    #[serde(default = "yes")]
    pub include_never_run: bool,
    /// Agent → `[lo, hi]` observation delay after the trigger.
    pub obs_delay: BTreeMap<String, [usize; 2]>,
    /// `"i->j"` → bound, for every ordered pair of distinct agents.
    pub delta: BTreeMap<String, Delta>,
    #[serde(default)]
    pub actions: BTreeMap<String, String>,
}

impl ScenarioSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidScenario(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Sets `δ(from, to)`.
    pub fn with_delta(mut self, from: &str, to: &str, d: Delta) -> Self {
        self.delta.insert(format!("{from}->{to}"), d);
        self
    }

    fn agent_index(&self, name: &str) -> Result<usize> {
        self.agents
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| Error::UnknownAgent(name.to_string()))
    }

    fn delays(&self) -> Result<Vec<(usize, usize)>> {
        for name in self.obs_delay.keys() {
            self.agent_index(name)?;
        }
        self.agents
            .iter()
            .map(|a| {
                let [lo, hi] = *self
                    .obs_delay
                    .get(a)
                    .ok_or_else(|| Error::InvalidScenario(format!("no obs_delay for `{a}`")))?;
                if lo > hi {
                    return Err(Error::InvalidScenario(format!(
                        "obs_delay for `{a}` has lo {lo} > hi {hi}"
                    )));
                }
                Ok((lo, hi))
            })
            .collect()
    }

    fn timing(&self) -> Result<TimingSpec> {
        let mut pairs = Vec::new();
        for (key, &d) in &self.delta {
            let (from, to) = key
                .split_once("->")
                .ok_or_else(|| Error::InvalidScenario(format!("delta key `{key}` is not `i->j`")))?;
            let i = self.agent_index(from.trim())?;
            let j = self.agent_index(to.trim())?;
            pairs.push((AgentId(i), AgentId(j), d));
        }
        let agents = (0..self.agents.len()).map(AgentId).collect();
        TimingSpec::from_pairs(agents, pairs).map_err(|e| match e {
            Error::InvalidSpec(m) => Error::InvalidScenario(format!("delta: {m}")),
            other => other,
        })
    }

    /// The horizon used when none is given: latest trigger time, plus the
    /// longest observation delay, plus the largest finite bound magnitude,
    /// plus one.
    pub fn auto_horizon(&self) -> Result<usize> {
        let delays = self.delays()?;
        let spec = self.timing()?;
        let trig = self.trigger_times.iter().copied().max().unwrap_or(0);
        let hi = delays.iter().map(|d| d.1).max().unwrap_or(0);
        let mag = spec
            .pairs()
            .filter_map(|(_, _, d)| d.finite())
            .map(i64::unsigned_abs)
            .max()
            .unwrap_or(0);
        Ok(trig + hi + mag as usize + 1)
    }
}

/// Overrides applied when generating a system from a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenerateOptions {
    pub run_cap: usize,
    /// When set, replaces the scenario's `include_never_run`.
    pub include_never_run: Option<bool>,
    pub sync: SyncMode,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            run_cap: DEFAULT_RUN_CAP,
            include_never_run: None,
            sync: SyncMode::Synchronous,
        }
    }
}

/// How one generated run unfolds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunInfo {
    pub name: String,
    pub trigger_time: Option<usize>,
    /// Absolute observation time per agent; empty when never triggered.
    pub obs_times: Vec<usize>,
}

/// A coordinated-response problem over a generated system.
#[derive(Debug, Clone)]
pub struct TcrInstance {
    pub name: String,
    pub universe: Universe,
    /// First occurrence of the trigger, one point per triggered run.
    pub trigger: Event,
    pub spec: TimingSpec,
    pub normalizations: Vec<Normalization>,
    pub runs: Vec<RunInfo>,
    pub actions: Vec<String>,
    pub horizon_auto: bool,
}

fn state_label(sync: SyncMode, t: usize, seen: Option<usize>) -> String {
    let obs = match seen {
        Some(s) if s <= t => format!("seen@{s}"),
        _ => "none".to_string(),
    };
    match sync {
        SyncMode::Synchronous => format!("t{t}:{obs}"),
        SyncMode::Asynchronous => obs,
    }
}

impl TcrInstance {
    pub fn generate(s: &ScenarioSpec, opts: &GenerateOptions) -> Result<TcrInstance> {
        if s.agents.is_empty() {
            return Err(Error::InvalidScenario("no agents".into()));
        }
        if s.agents.iter().collect::<BTreeSet<_>>().len() != s.agents.len() {
            return Err(Error::InvalidScenario("duplicate agent".into()));
        }
        let delays = s.delays()?;
        let raw_spec = s.timing()?;
        for name in s.actions.keys() {
            s.agent_index(name)?;
        }
        let triggers: BTreeSet<usize> = s.trigger_times.iter().copied().collect();
        let never = opts.include_never_run.unwrap_or(s.include_never_run);
        let (horizon, horizon_auto) = match s.horizon {
            Some(h) => (h, false),
            None => (s.auto_horizon()?, true),
        };
        for &t in &triggers {
            for (a, d) in s.agents.iter().zip(&delays) {
                if t + d.1 > horizon {
                    return Err(Error::InvalidScenario(format!(
                        "trigger at {t} observed by `{a}` as late as {} beyond horizon {horizon}",
                        t + d.1
                    )));
                }
            }
        }

        let combos: u128 = delays.iter().map(|d| (d.1 - d.0 + 1) as u128).product();
        let total = combos * triggers.len() as u128 + never as u128;
        if total == 0 {
            return Err(Error::InvalidScenario("scenario has no runs".into()));
        }
        if total > opts.run_cap as u128 {
            return Err(Error::SizeGuard {
                what: "run generation",
                size: total,
                limit: opts.run_cap as u128,
            });
        }

        let mut runs = Vec::with_capacity(total as usize);
        for &t in &triggers {
            for idx in 0..combos {
                // mixed radix, last agent fastest
                let mut rest = idx;
                let mut offset = vec![0; delays.len()];
                for (k, d) in delays.iter().enumerate().rev() {
                    let width = (d.1 - d.0 + 1) as u128;
                    offset[k] = d.0 + (rest % width) as usize;
                    rest /= width;
                }
                let name = format!(
                    "t{t}:{}",
                    s.agents
                        .iter()
                        .zip(&offset)
                        .map(|(a, d)| format!("{a}+{d}"))
                        .collect::<Vec<_>>()
                        .join(",")
                );
                runs.push(RunInfo {
                    name,
                    trigger_time: Some(t),
                    obs_times: offset.iter().map(|d| t + d).collect(),
                });
            }
        }
        if never {
            runs.push(RunInfo {
                name: "never".into(),
                trigger_time: None,
                obs_times: Vec::new(),
            });
        }

        let mut b = UniverseBuilder::new(s.agents.iter().cloned(), horizon).sync_mode(opts.sync);
        for run in &runs {
            b = b.run_with(run.name.clone(), |a, t| {
                state_label(opts.sync, t, run.obs_times.get(a.0).copied())
            });
        }
        let universe = b.build()?;
        let trigger = universe.event_from_fn(|r, t| runs[r].trigger_time == Some(t));
        let (spec, normalizations) = raw_spec.normalized(horizon);
        let actions = s
            .agents
            .iter()
            .map(|a| s.actions.get(a).cloned().unwrap_or_else(|| format!("respond_{a}")))
            .collect();
        Ok(TcrInstance {
            name: s.name.clone().unwrap_or_else(|| "scenario".into()),
            universe,
            trigger,
            spec,
            normalizations,
            runs,
            actions,
            horizon_auto,
        })
    }

    pub fn horizon(&self) -> usize {
        self.universe.horizon()
    }

    pub fn agents(&self) -> Vec<AgentId> {
        self.spec.agents().to_vec()
    }

    /// `⊙^{≤0}ϕ`: the trigger has occurred.
    pub fn occurred(&self) -> Event {
        self.trigger.within(Delta::Finite(0))
    }

    pub fn triggered_runs(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.runs.len()).filter(|&r| self.runs[r].trigger_time.is_some())
    }
}

/// Response time per run and agent (agent order of the instance).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolResult {
    pub responses: Vec<Vec<Option<usize>>>,
}

impl ProtocolResult {
    pub fn get(&self, run: usize, agent: usize) -> Option<usize> {
        self.responses[run][agent]
    }

    fn check_shape(&self, inst: &TcrInstance) -> Result<()> {
        if self.responses.len() != inst.runs.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} runs in result, {} in instance",
                self.responses.len(),
                inst.runs.len()
            )));
        }
        for row in &self.responses {
            if row.len() != inst.spec.len() {
                return Err(Error::ShapeMismatch("agent count differs".into()));
            }
            if row.iter().flatten().any(|&t| t > inst.horizon()) {
                return Err(Error::ShapeMismatch("response time beyond horizon".into()));
            }
        }
        Ok(())
    }

    /// The response ensemble `e_i = {(r, t) | i responds at t in r}`.
    pub fn response_events(&self, inst: &TcrInstance) -> Result<Vec<Event>> {
        self.check_shape(inst)?;
        Ok((0..inst.spec.len())
            .map(|k| inst.universe.event_from_fn(|r, t| self.responses[r][k] == Some(t)))
            .collect())
    }

    pub fn to_doc(&self, inst: &TcrInstance, verdict: Option<serde_json::Value>) -> ResultDoc {
        let names = inst.universe.agent_names();
        ResultDoc {
            scenario: inst.name.clone(),
            horizon: inst.horizon(),
            horizon_auto: inst.horizon_auto,
            normalizations: inst
                .normalizations
                .iter()
                .map(|n| NormalizationDoc {
                    from: names[n.from.0].clone(),
                    to: names[n.to.0].clone(),
                    original: n.original,
                    normalized: n.normalized,
                })
                .collect(),
            agents: names.to_vec(),
            actions: names.iter().cloned().zip(inst.actions.iter().cloned()).collect(),
            runs: inst
                .runs
                .iter()
                .zip(&self.responses)
                .map(|(info, row)| RunResultDoc {
                    run: info.name.clone(),
                    trigger_time: info.trigger_time,
                    obs_times: names.iter().cloned().zip(info.obs_times.iter().copied()).collect(),
                    responses: names.iter().cloned().zip(row.iter().copied()).collect(),
                })
                .collect(),
            verdict,
        }
    }

    /// Reads responses back from a result document, matching runs by name.
    pub fn from_doc(inst: &TcrInstance, doc: &ResultDoc) -> Result<ProtocolResult> {
        let names = inst.universe.agent_names();
        let by_name: BTreeMap<&str, &RunResultDoc> = doc.runs.iter().map(|r| (r.run.as_str(), r)).collect();
        if by_name.len() != doc.runs.len() {
            return Err(Error::InvalidScenario("result lists a run twice".into()));
        }
        if doc.runs.len() != inst.runs.len() {
            return Err(Error::InvalidScenario(format!(
                "result has {} runs, scenario generates {}",
                doc.runs.len(),
                inst.runs.len()
            )));
        }
        let mut responses = Vec::with_capacity(inst.runs.len());
        for info in &inst.runs {
            let run = by_name
                .get(info.name.as_str())
                .ok_or_else(|| Error::InvalidScenario(format!("result lacks run `{}`", info.name)))?;
            for a in run.responses.keys() {
                if !names.contains(a) {
                    return Err(Error::UnknownAgent(a.clone()));
                }
            }
            let row: Vec<Option<usize>> = names
                .iter()
                .map(|a| run.responses.get(a).copied().flatten())
                .collect();
            if row.iter().flatten().any(|&t| t > inst.horizon()) {
                return Err(Error::InvalidScenario(format!(
                    "run `{}` responds beyond horizon {}",
                    info.name,
                    inst.horizon()
                )));
            }
            responses.push(row);
        }
        Ok(ProtocolResult { responses })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationDoc {
    pub from: String,
    pub to: String,
    pub original: i64,
    pub normalized: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResultDoc {
    pub run: String,
    pub trigger_time: Option<usize>,
    #[serde(default)]
    pub obs_times: BTreeMap<String, usize>,
    pub responses: BTreeMap<String, Option<usize>>,
}

/// File form of a protocol result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDoc {
    pub scenario: String,
    pub horizon: usize,
    pub horizon_auto: bool,
    #[serde(default)]
    pub normalizations: Vec<NormalizationDoc>,
    pub agents: Vec<String>,
    #[serde(default)]
    pub actions: BTreeMap<String, String>,
    pub runs: Vec<RunResultDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<serde_json::Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(agents: &[&str], triggers: &[usize], never: bool, delay: [usize; 2]) -> ScenarioSpec {
        let mut s = ScenarioSpec {
            name: None,
            agents: agents.iter().map(|a| a.to_string()).collect(),
            horizon: None,
            trigger_times: triggers.to_vec(),
            include_never_run: never,
            obs_delay: agents.iter().map(|a| (a.to_string(), delay)).collect(),
            delta: BTreeMap::new(),
            actions: BTreeMap::new(),
        };
        for a in agents {
            for b in agents {
                if a != b {
                    s = s.with_delta(a, b, Delta::Finite(0));
                }
            }
        }
        s
    }

    #[test]
    fn run_counts() {
        let one = TcrInstance::generate(&spec(&["x"], &[0], false, [0, 0]), &Default::default()).unwrap();
        assert_eq!(one.runs.len(), 1);
        let x = AgentId(0);
        assert!(one.universe.knows(x, &one.trigger).contains(0, 0));

        let two = TcrInstance::generate(&spec(&["a", "b"], &[0], true, [0, 1]), &Default::default()).unwrap();
        assert_eq!(two.runs.len(), 5);
        assert_eq!(two.runs[4].trigger_time, None);
        assert_eq!(two.runs[1].obs_times, vec![0, 1]);
        assert_eq!(two.trigger.len(), 4);
        assert!(two.universe.exhibits_perfect_recall());
        assert!(two.occurred().is_stable());

        assert_eq!(car_wash().agents.len(), 3);
        let cw = TcrInstance::generate(&car_wash(), &Default::default()).unwrap();
        assert_eq!(cw.runs.len(), 28);
        assert_eq!(cw.horizon(), 14);
        assert!(cw.horizon_auto);
    }

    #[test]
    fn generation_rejects_bad_specs() {
        let s = spec(&["a", "b"], &[0], true, [0, 1]);
        let mut missing = s.clone();
        missing.delta.remove("a->b");
        assert!(matches!(
            TcrInstance::generate(&missing, &Default::default()),
            Err(Error::InvalidScenario(_))
        ));
        let mut late = s.clone();
        late.horizon = Some(0);
        assert!(TcrInstance::generate(&late, &Default::default()).is_err());
        let mut unknown = s.clone();
        unknown.obs_delay.insert("z".into(), [0, 0]);
        assert!(matches!(
            TcrInstance::generate(&unknown, &Default::default()),
            Err(Error::UnknownAgent(_))
        ));
        let cap = GenerateOptions {
            run_cap: 3,
            ..Default::default()
        };
        assert!(matches!(
            TcrInstance::generate(&s, &cap),
            Err(Error::SizeGuard { .. })
        ));
    }

    #[test]
    fn never_run_override_and_async() {
        let s = spec(&["a", "b"], &[0, 1], true, [0, 1]);
        let opts = GenerateOptions {
            include_never_run: Some(false),
            sync: SyncMode::Asynchronous,
            ..Default::default()
        };
        let inst = TcrInstance::generate(&s, &opts).unwrap();
        assert_eq!(inst.runs.len(), 8);
        assert_eq!(inst.universe.sync_mode(), SyncMode::Asynchronous);
    }

    #[test]
    fn scenario_json_round_trip() {
        let s = car_wash();
        let back = ScenarioSpec::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        assert!(ScenarioSpec::from_json(r#"{"agents": []}"#).is_err());
    }
}
