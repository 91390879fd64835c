use serde::Serialize;

use crate::coordination::{delta_violation, non_local, Counterexample};
use crate::error::{Error, Result};
use crate::event::Point;
use crate::fixed_point::{timely_ck, EventTuple};
use crate::universe::AgentId;

use super::{ProtocolResult, TcrInstance};

/// Timely common knowledge of "the trigger has occurred" and whether it is
/// eventually attained in every triggered run.
#[derive(Debug, Clone)]
pub struct Solvability {
    pub xi: EventTuple,
    pub solvable: bool,
}

/// Whether `ϕ ⊆ ◇ξ_i` for the agents of the instance, where
/// `ξ̄ = C_I^δ(⊙^{≤0}ϕ)`. The condition must hold for all agents or for
/// none; a split verdict is an [`Error::Inconsistency`].
pub fn solvability(inst: &TcrInstance) -> Result<Solvability> {
    let xi = timely_ck(&inst.universe, &inst.occurred(), &inst.spec)?;
    let per_agent: Vec<bool> = xi
        .coords()
        .iter()
        .map(|c| inst.trigger.is_subset(&c.eventually()))
        .collect();
    let solvable = per_agent.iter().all(|&b| b);
    if !solvable && per_agent.iter().any(|&b| b) {
        return Err(Error::Inconsistency(
            "trigger is eventually followed by timely common knowledge for some agents only".into(),
        ));
    }
    Ok(Solvability { xi, solvable })
}

/// Every agent responds at the first time its coordinate of `ξ̄` holds.
pub fn synthesize_optimal(inst: &TcrInstance) -> Result<ProtocolResult> {
    let s = solvability(inst)?;
    if !s.solvable {
        return Err(Error::Unsolvable);
    }
    let responses = (0..inst.runs.len())
        .map(|r| s.xi.coords().iter().map(|c| c.first_time(r)).collect())
        .collect();
    Ok(ProtocolResult { responses })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub counterexample: Option<Counterexample>,
}

/// The conditions under which a result solves an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolutionReport {
    pub checks: Vec<Check>,
}

impl SolutionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// Checks that responses happen at most once per run, are timely
/// coordinated, never precede the trigger, happen in every triggered run,
/// and are determined by each agent's local state.
pub fn verify_solution(inst: &TcrInstance, result: &ProtocolResult) -> Result<SolutionReport> {
    let u = &inst.universe;
    let events = result.response_events(inst)?;
    let agents = inst.agents();
    let ensemble = EventTuple::new(agents.clone(), events)?;
    let at = |a: AgentId, p: Point| Counterexample {
        run: p.run,
        time: p.time,
        agent: u.agent_name(a).to_string(),
    };
    let mut checks = Vec::new();

    // one slot per run and agent
    checks.push(Check {
        name: "at-most-once".into(),
        passed: true,
        counterexample: None,
    });

    let v = delta_violation(&ensemble, &inst.spec)?;
    checks.push(Check {
        name: "timely-coordinated".into(),
        passed: v.is_none(),
        counterexample: v.map(|v| at(v.agent, v.point)),
    });

    let occurred = inst.occurred();
    let early = ensemble
        .iter()
        .find_map(|(a, e)| e.witness_outside(&occurred).map(|p| at(a, p)));
    checks.push(Check {
        name: "after-trigger".into(),
        passed: early.is_none(),
        counterexample: early,
    });

    let missing = ensemble.iter().find_map(|(a, e)| {
        inst.trigger
            .witness_outside(&e.eventually())
            .map(|p| at(a, p))
    });
    checks.push(Check {
        name: "responds-when-triggered".into(),
        passed: missing.is_none(),
        counterexample: missing,
    });

    let nl = non_local(u, &ensemble).map(|(a, p)| at(a, p));
    checks.push(Check {
        name: "local".into(),
        passed: nl.is_none(),
        counterexample: nl,
    });

    Ok(SolutionReport { checks })
}
