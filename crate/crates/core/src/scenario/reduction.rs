//! Ordered, simultaneous and joint response as special timing specs, and
//! the closed forms their timely common knowledge takes.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Delta, Event};
use crate::fixed_point::{timely_ck, TimingSpec};
use crate::universe::AgentId;

use super::TcrInstance;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ReductionKind {
    /// Agents respond in the given order `i_1, …, i_n`, each no later than
    /// the one after it.
    Ordered(Vec<AgentId>),
    /// All agents respond at the same time.
    Simultaneous(Vec<AgentId>),
    /// Blocks `I_1, …, I_m` respond in order, simultaneously within a block.
    Joint(Vec<Vec<AgentId>>),
}

impl ReductionKind {
    fn blocks(&self) -> Vec<Vec<AgentId>> {
        match self {
            ReductionKind::Ordered(a) => a.iter().map(|&x| vec![x]).collect(),
            ReductionKind::Simultaneous(a) => vec![a.clone()],
            ReductionKind::Joint(b) => b.clone(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ReductionKind::Ordered(_) => "ordered",
            ReductionKind::Simultaneous(_) => "simultaneous",
            ReductionKind::Joint(_) => "joint",
        }
    }
}

/// The timing spec of a reduction: `δ(i, j) = 0` when `i` and `j` share a
/// block or `j`'s block immediately precedes `i`'s, and `∞` otherwise.
/// Agents are listed block by block.
pub fn reduction_delta(kind: &ReductionKind) -> Result<TimingSpec> {
    let blocks = kind.blocks();
    if blocks.iter().any(Vec::is_empty) {
        return Err(Error::InvalidSpec("empty block".into()));
    }
    let agents: Vec<AgentId> = blocks.iter().flatten().copied().collect();
    let block_of = |a: AgentId| blocks.iter().position(|b| b.contains(&a)).expect("listed");
    TimingSpec::new(agents, |i, j| {
        let (bi, bj) = (block_of(i), block_of(j));
        if bi == bj || bi == bj + 1 {
            Delta::Finite(0)
        } else {
            Delta::Infinite
        }
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoordinateCheck {
    pub agent: String,
    pub block: usize,
    pub fixed_point_size: usize,
    pub closed_form_size: usize,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionReport {
    pub kind: String,
    pub perfect_recall: bool,
    pub solvable: bool,
    pub coordinates: Vec<CoordinateCheck>,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.coordinates.iter().all(|c| c.equal)
    }
}

/// Compares `C_I^δ(⊙^{≤0}ϕ)` under the reduction's spec with its closed
/// form `C_{I_m} ⋯ C_{I_1} ⊙^{≤0}ϕ` for agents of block `m`; a singleton
/// block contributes plain knowledge.
pub fn verify_reductions(inst: &TcrInstance, kind: &ReductionKind) -> Result<ReductionReport> {
    let u = &inst.universe;
    let spec = reduction_delta(kind)?;
    spec.check_in(u)?;
    let psi = inst.occurred();
    let xi = timely_ck(u, &psi, &spec)?;
    let blocks = kind.blocks();

    let mut closed: Vec<Event> = Vec::with_capacity(blocks.len());
    let mut cur = psi.clone();
    for b in &blocks {
        cur = u.common_knowledge(b, &cur)?;
        closed.push(cur.clone());
    }

    let solvable = xi.coords().iter().all(|c| inst.trigger.is_subset(&c.eventually()));
    let mut coordinates = Vec::new();
    for (m, b) in blocks.iter().enumerate() {
        for &a in b {
            let fp = xi.get(a).expect("agent in spec");
            coordinates.push(CoordinateCheck {
                agent: u.agent_name(a).to_string(),
                block: m + 1,
                fixed_point_size: fp.len(),
                closed_form_size: closed[m].len(),
                equal: *fp == closed[m],
            });
        }
    }
    Ok(ReductionReport {
        kind: kind.name().to_string(),
        perfect_recall: u.exhibits_perfect_recall(),
        solvable,
        coordinates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{joint, ordered, simultaneous};

    fn a(i: usize) -> AgentId {
        AgentId(i)
    }

    #[test]
    fn spec_shapes() {
        let o = reduction_delta(&ReductionKind::Ordered(vec![a(0), a(1)])).unwrap();
        assert_eq!(o.delta(a(1), a(0)), Delta::Finite(0));
        assert_eq!(o.delta(a(0), a(1)), Delta::Infinite);

        let s = reduction_delta(&ReductionKind::Simultaneous(vec![a(0), a(1)])).unwrap();
        assert!(s.pairs().all(|(_, _, d)| d == Delta::Finite(0)));

        let j = reduction_delta(&ReductionKind::Joint(vec![vec![a(0)], vec![a(1), a(2)]])).unwrap();
        assert_eq!(j.delta(a(1), a(2)), Delta::Finite(0));
        assert_eq!(j.delta(a(2), a(1)), Delta::Finite(0));
        assert_eq!(j.delta(a(1), a(0)), Delta::Finite(0));
        assert_eq!(j.delta(a(2), a(0)), Delta::Finite(0));
        assert_eq!(j.delta(a(0), a(1)), Delta::Infinite);
        assert_eq!(j.delta(a(0), a(2)), Delta::Infinite);

        let as_joint = reduction_delta(&ReductionKind::Joint(vec![vec![a(0)], vec![a(1)]])).unwrap();
        assert_eq!(as_joint, o);
        assert!(reduction_delta(&ReductionKind::Joint(vec![vec![], vec![a(0)]])).is_err());
    }

    #[test]
    fn closed_forms_hold() {
        let cases = [
            (ordered(3, [0, 1]), ReductionKind::Ordered(vec![a(0), a(1), a(2)])),
            (simultaneous(2, [0, 0]), ReductionKind::Simultaneous(vec![a(0), a(1)])),
            (simultaneous(2, [0, 1]), ReductionKind::Simultaneous(vec![a(0), a(1)])),
            (joint([0, 1]), ReductionKind::Joint(vec![vec![a(0)], vec![a(1), a(2)]])),
        ];
        for (s, kind) in cases {
            let inst = TcrInstance::generate(&s, &Default::default()).unwrap();
            let report = verify_reductions(&inst, &kind).unwrap();
            assert!(report.perfect_recall && report.passed(), "{report:?}");
        }
    }
}
