//! Exhaustive enumeration of the solutions of an instance.
//!
//! Solutions share the generated system; they differ only in when each
//! agent responds. A response event of agent `i` must be a union of `i`'s
//! knowledge classes, so the search picks classes rather than times: agents
//! are placed one after another, and for each agent its classes are visited
//! in order of time, each either responding or not. A class may respond only
//! when none of its runs has a response yet and every one of its points
//! meets the bounds imposed by the agents already placed. A branch dies as
//! soon as some triggered run has passed its last usable class without a
//! response.

use serde::Serialize;

use crate::coordination::Counterexample;
use crate::error::{Error, Result};
use crate::event::Delta;
use crate::universe::AgentId;

use super::solve::{solvability, verify_solution};
use super::{ProtocolResult, TcrInstance};

/// Default cap on the number of enumerated solutions.
pub const DEFAULT_SOLUTION_GUARD: u64 = 1_000_000;

struct AgentPlan {
    // usable classes, ascending by first time; each a list of (run, time)
    classes: Vec<Vec<(usize, usize)>>,
    // index of the last usable class per run
    last: Vec<Option<usize>>,
}

struct Search<'a, F> {
    inst: &'a TcrInstance,
    plans: Vec<AgentPlan>,
    current: ProtocolResult,
    count: u64,
    guard: u64,
    visit: F,
}

impl<F> Search<'_, F>
where
    F: FnMut(&ProtocolResult) -> Result<()>,
{
    fn bounds(&self, run: usize, k: usize) -> (i64, i64) {
        let trigger = self.inst.runs[run].trigger_time.expect("triggered run") as i64;
        let mut lo = trigger;
        let mut hi = self.inst.horizon() as i64;
        let row = &self.current.responses[run];
        for j in 0..k {
            let tj = row[j].expect("earlier agents respond in triggered runs") as i64;
            if let Delta::Finite(d) = self.inst.spec.delta_at(j, k) {
                hi = hi.min(tj + d);
            }
            if let Delta::Finite(d) = self.inst.spec.delta_at(k, j) {
                lo = lo.max(tj - d);
            }
        }
        (lo, hi)
    }

    fn agent(&mut self, k: usize) -> Result<()> {
        if k == self.plans.len() {
            self.count += 1;
            if self.count > self.guard {
                return Err(Error::SizeGuard {
                    what: "solution enumeration",
                    size: self.count as u128,
                    limit: self.guard as u128,
                });
            }
            return (self.visit)(&self.current);
        }
        self.class(k, 0)
    }

    fn class(&mut self, k: usize, pos: usize) -> Result<()> {
        let plan = &self.plans[k];
        if pos == plan.classes.len() {
            return self.agent(k + 1);
        }
        let class = plan.classes[pos].clone();
        let usable = class.iter().all(|&(r, t)| {
            let (lo, hi) = self.bounds(r, k);
            self.current.responses[r][k].is_none() && lo <= t as i64 && t as i64 <= hi
        });
        if usable {
            for &(r, t) in &class {
                self.current.responses[r][k] = Some(t);
            }
            let out = self.class(k, pos + 1);
            for &(r, _) in &class {
                self.current.responses[r][k] = None;
            }
            out?;
        }
        let stranded = class
            .iter()
            .any(|&(r, _)| self.plans[k].last[r] == Some(pos) && self.current.responses[r][k].is_none());
        if stranded {
            return Ok(());
        }
        self.class(k, pos + 1)
    }
}

/// Calls `visit` on every solution of the instance and returns how many
/// there are. Fails once more than `guard` solutions have been found.
pub fn enumerate_solutions<F>(inst: &TcrInstance, guard: u64, visit: F) -> Result<u64>
where
    F: FnMut(&ProtocolResult) -> Result<()>,
{
    let u = &inst.universe;
    let n_runs = inst.runs.len();
    let mut plans = Vec::new();
    for &a in inst.spec.agents() {
        let mut classes: Vec<Vec<(usize, usize)>> = u
            .classes(a)
            .filter(|c| {
                let mut runs: Vec<usize> = c.iter().map(|p| p.run).collect();
                runs.sort_unstable();
                runs.dedup();
                runs.len() == c.len()
                    && c.iter()
                        .all(|p| inst.runs[p.run].trigger_time.is_some_and(|tt| p.time >= tt))
            })
            .map(|c| c.iter().map(|p| (p.run, p.time)).collect())
            .collect();
        classes.sort_by_key(|c: &Vec<(usize, usize)>| (c.iter().map(|p| p.1).min(), c.clone()));
        let mut last = vec![None; n_runs];
        for (i, c) in classes.iter().enumerate() {
            for &(r, _) in c {
                last[r] = Some(i);
            }
        }
        if inst.triggered_runs().any(|r| last[r].is_none()) {
            return Ok(0);
        }
        plans.push(AgentPlan { classes, last });
    }
    let mut search = Search {
        inst,
        plans,
        current: ProtocolResult {
            responses: vec![vec![None; inst.spec.len()]; n_runs],
        },
        count: 0,
        guard,
        visit,
    };
    search.agent(0)?;
    Ok(search.count)
}

/// A solution responding earlier than the checked result.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EarlierResponse {
    pub run: usize,
    pub agent: String,
    pub result_time: usize,
    pub earlier_time: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OptimalityReport {
    pub solutions: u64,
    /// The checked result is itself among the enumerated solutions.
    pub result_enumerated: bool,
    /// No solution responds earlier at any run and agent.
    pub optimal: bool,
    pub earlier: Option<EarlierResponse>,
    /// Every response of every solution lies in its agent's coordinate of
    /// timely common knowledge that the trigger occurred.
    pub necessity: bool,
    pub necessity_counterexample: Option<Counterexample>,
}

impl OptimalityReport {
    pub fn passed(&self) -> bool {
        self.result_enumerated && self.optimal && self.necessity
    }
}

/// Compares `result` with every solution of the instance.
pub fn verify_optimal(inst: &TcrInstance, result: &ProtocolResult, guard: u64) -> Result<OptimalityReport> {
    let check = verify_solution(inst, result)?;
    if let Some(fail) = check.first_failure() {
        return Err(Error::NotASolution(fail.name.clone()));
    }
    let xi = solvability(inst)?.xi;
    let agents: Vec<AgentId> = inst.agents();
    let mut result_enumerated = false;
    let mut earlier = None;
    let mut necessity_counterexample = None;
    let solutions = enumerate_solutions(inst, guard, |s| {
        if s == result {
            result_enumerated = true;
        }
        for (r, row) in s.responses.iter().enumerate() {
            for (k, t) in row.iter().enumerate() {
                let Some(t) = *t else { continue };
                if earlier.is_none() {
                    if let Some(mine) = result.responses[r][k] {
                        if t < mine {
                            earlier = Some(EarlierResponse {
                                run: r,
                                agent: inst.universe.agent_name(agents[k]).to_string(),
                                result_time: mine,
                                earlier_time: t,
                            });
                        }
                    }
                }
                if necessity_counterexample.is_none() && !xi.coord(k).contains(r, t) {
                    necessity_counterexample = Some(Counterexample {
                        run: r,
                        time: t,
                        agent: inst.universe.agent_name(agents[k]).to_string(),
                    });
                }
            }
        }
        Ok(())
    })?;
    Ok(OptimalityReport {
        solutions,
        result_enumerated,
        optimal: earlier.is_none(),
        earlier,
        necessity: necessity_counterexample.is_none(),
        necessity_counterexample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{asymmetric_simultaneous, car_wash, ordered, synthesize_optimal, unsatisfiable};

    fn generate(s: &crate::scenario::ScenarioSpec) -> TcrInstance {
        TcrInstance::generate(s, &Default::default()).unwrap()
    }

    #[test]
    fn every_enumerated_solution_verifies() {
        let inst = generate(&ordered(2, [0, 1]));
        let mut seen = Vec::new();
        let n = enumerate_solutions(&inst, 10_000, |s| {
            seen.push(s.clone());
            Ok(())
        })
        .unwrap();
        assert!(n > 1);
        assert_eq!(n as usize, seen.len());
        for s in &seen {
            assert!(verify_solution(&inst, s).unwrap().passed());
        }
        let mut dedup = seen.clone();
        dedup.sort_by(|a, b| a.responses.cmp(&b.responses));
        dedup.dedup();
        assert_eq!(dedup.len(), seen.len());
    }

    #[test]
    fn synthesized_result_is_optimal() {
        for s in [ordered(2, [0, 1]), asymmetric_simultaneous()] {
            let inst = generate(&s);
            let r = synthesize_optimal(&inst).unwrap();
            let report = verify_optimal(&inst, &r, DEFAULT_SOLUTION_GUARD).unwrap();
            assert!(report.passed(), "{report:?}");
        }
    }

    #[test]
    fn delayed_solution_is_dominated() {
        let inst = generate(&ordered(2, [0, 1]));
        let best = synthesize_optimal(&inst).unwrap();
        let mut found = None;
        enumerate_solutions(&inst, 10_000, |s| {
            if found.is_none() && *s != best {
                found = Some(s.clone());
            }
            Ok(())
        })
        .unwrap();
        let other = found.expect("more than one solution");
        let report = verify_optimal(&inst, &other, 10_000).unwrap();
        assert!(!report.optimal && report.result_enumerated && report.necessity);
    }

    #[test]
    fn unsatisfiable_has_no_solutions() {
        let inst = generate(&unsatisfiable());
        assert_eq!(enumerate_solutions(&inst, 10, |_| Ok(())).unwrap(), 0);
    }

    #[test]
    fn guard_stops_enumeration() {
        let inst = generate(&car_wash());
        assert!(matches!(
            enumerate_solutions(&inst, 1000, |_| Ok(())),
            Err(Error::SizeGuard { .. })
        ));
    }
}
