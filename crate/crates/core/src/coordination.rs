//! Coordination predicates on ensembles and the fixed-point
//! characterisations they are checked against.

use std::collections::HashMap;
use std::ops::Deref;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Delta, Event, Point};
use crate::fixed_point::{apply_f, epsilon_ck, eventual_ck, timely_ck, EventTuple, TimingSpec};
use crate::universe::{AgentId, Universe};

/// Default limit on the number of ensembles enumerated by the oracles.
pub const ENSEMBLE_GUARD: u128 = 1 << 20;

/// An event tuple whose coordinate `i` is `i`-local.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ensemble(EventTuple);

impl Ensemble {
    pub fn new(u: &Universe, tuple: EventTuple) -> Result<Self> {
        if let Some((a, _)) = non_local(u, &tuple) {
            return Err(Error::NotLocal {
                agent: u.agent_name(a).to_string(),
            });
        }
        Ok(Ensemble(tuple))
    }

    pub fn into_inner(self) -> EventTuple {
        self.0
    }
}

impl Deref for Ensemble {
    type Target = EventTuple;

    fn deref(&self) -> &EventTuple {
        &self.0
    }
}

/// First coordinate that is not local to its agent, with a witness point
/// at which the agent cannot tell the event holds.
pub fn non_local(u: &Universe, tuple: &EventTuple) -> Option<(AgentId, Point)> {
    tuple.iter().find_map(|(a, e)| {
        e.witness_outside(&u.knows(a, e)).map(|p| (a, p))
    })
}

/// A point of `e_i` at which the bound towards `j` is missed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub agent: AgentId,
    pub other: AgentId,
    pub point: Point,
}

fn check_spec_shape(tuple: &EventTuple, spec: &TimingSpec) -> Result<()> {
    if tuple.agents() != spec.agents() {
        return Err(Error::ShapeMismatch(
            "ensemble agents differ from timing spec agents".into(),
        ));
    }
    Ok(())
}

fn delta_violation_pointwise(tuple: &EventTuple, spec: &TimingSpec) -> Option<Violation> {
    let n = spec.len();
    for k in 0..n {
        for l in (0..n).filter(|&l| l != k) {
            let d = spec.delta_at(k, l);
            let ej = tuple.coord(l);
            for p in tuple.coord(k).points() {
                let ok = match d {
                    Delta::Infinite => ej.holds_in_run(p.run),
                    Delta::Finite(d) => ej
                        .first_time(p.run)
                        .is_some_and(|f| f as i64 <= p.time as i64 + d),
                };
                if !ok {
                    return Some(Violation {
                        agent: spec.agents()[k],
                        other: spec.agents()[l],
                        point: p,
                    });
                }
            }
        }
    }
    None
}

fn delta_violation_within(tuple: &EventTuple, spec: &TimingSpec) -> Option<Violation> {
    let n = spec.len();
    for k in 0..n {
        for l in (0..n).filter(|&l| l != k) {
            let bound = tuple.coord(l).within(spec.delta_at(k, l));
            if let Some(p) = tuple.coord(k).witness_outside(&bound) {
                return Some(Violation {
                    agent: spec.agents()[k],
                    other: spec.agents()[l],
                    point: p,
                });
            }
        }
    }
    None
}

/// The first missed bound of a tuple, if any; the pointwise reading and
/// the `e_i ⊆ ⊙^{≤δ(i,j)} e_j` reading are both evaluated and must agree.
pub fn delta_violation(tuple: &EventTuple, spec: &TimingSpec) -> Result<Option<Violation>> {
    check_spec_shape(tuple, spec)?;
    let a = delta_violation_pointwise(tuple, spec);
    let b = delta_violation_within(tuple, spec);
    if a.is_some() != b.is_some() {
        return Err(Error::Inconsistency(
            "pointwise and containment forms of timely coordination disagree".into(),
        ));
    }
    Ok(a)
}

/// Whether every `(r, t) ∈ e_i` is followed in `r` by `e_j` at some
/// `t' ≤ t + δ(i, j)`, for all ordered pairs.
pub fn is_delta_coordinated(tuple: &EventTuple, spec: &TimingSpec) -> Result<bool> {
    delta_violation(tuple, spec).map(|v| v.is_none())
}

/// All coordinates equal.
pub fn is_perfectly_coordinated(tuple: &EventTuple) -> bool {
    tuple.coords().windows(2).all(|w| w[0] == w[1])
}

/// `e_i ⊆ ◇e_j` for all pairs.
pub fn is_eventually_coordinated(tuple: &EventTuple) -> bool {
    let eventually: Vec<Event> = tuple.coords().iter().map(Event::eventually).collect();
    tuple
        .coords()
        .iter()
        .all(|e| eventually.iter().all(|ev| e.is_subset(ev)))
}

/// Whether every `(r, t) ∈ e_i` lies in an interval of length at most `ε`
/// in which every coordinate holds at some time.
pub fn is_epsilon_coordinated(tuple: &EventTuple, epsilon: usize) -> bool {
    epsilon_violation(tuple, epsilon).is_none()
}

fn epsilon_violation(tuple: &EventTuple, epsilon: usize) -> Option<(AgentId, Point)> {
    let h = tuple.coord(0).horizon();
    tuple.iter().find_map(|(a, e)| {
        e.points()
            .find(|p| {
                !(p.time.saturating_sub(epsilon)..=p.time).any(|start| {
                    let end = (start + epsilon).min(h);
                    tuple
                        .coords()
                        .iter()
                        .all(|ej| (start..=end).any(|s| ej.contains(p.run, s)))
                })
            })
            .map(|p| (a, p))
    })
}

/// `∪ē`.
pub fn tuple_union(tuple: &EventTuple) -> Event {
    tuple.union()
}

/// Every ensemble over `agents`: per agent, every union of its
/// indistinguishability classes. Indexed in mixed radix, first agent
/// fastest.
pub struct EnsembleSpace {
    agents: Vec<AgentId>,
    local: Vec<Vec<Event>>,
}

impl EnsembleSpace {
    pub fn new(u: &Universe, agents: &[AgentId], guard: u128) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::EmptyAgentSet);
        }
        let exp: u32 = agents.iter().map(|&a| u.num_classes(a) as u32).sum();
        let size = if exp >= 127 { u128::MAX } else { 1u128 << exp };
        if size > guard {
            return Err(Error::SizeGuard {
                what: "ensemble enumeration",
                size,
                limit: guard,
            });
        }
        let local = agents
            .iter()
            .map(|&a| {
                let classes: Vec<Event> = (0..u.num_classes(a)).map(|c| u.class_event(a, c)).collect();
                let mut events = vec![u.empty()];
                for c in &classes {
                    let with: Vec<Event> = events.iter().map(|e| e.union(c)).collect();
                    events.extend(with);
                }
                events
            })
            .collect();
        Ok(EnsembleSpace {
            agents: agents.to_vec(),
            local,
        })
    }

    pub fn len(&self) -> u64 {
        self.local.iter().map(|l| l.len() as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, mut index: u64) -> EventTuple {
        let coords = self
            .local
            .iter()
            .map(|l| {
                let k = (index % l.len() as u64) as usize;
                index /= l.len() as u64;
                l[k].clone()
            })
            .collect();
        EventTuple::new(self.agents.clone(), coords).expect("shape is fixed")
    }

    /// All ensembles satisfying `keep`, in index order.
    pub fn filter<F>(&self, keep: F) -> Vec<EventTuple>
    where
        F: Fn(&EventTuple) -> bool + Sync,
    {
        (0..self.len())
            .into_par_iter()
            .filter_map(|i| {
                let e = self.get(i);
                keep(&e).then_some(e)
            })
            .collect()
    }
}

/// A counterexample `(run, time, agent)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub run: usize,
    pub time: usize,
    pub agent: String,
}

impl Counterexample {
    fn at(u: &Universe, agent: AgentId, p: Point) -> Self {
        Counterexample {
            run: p.run,
            time: p.time,
            agent: u.agent_name(agent).to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartVerdict {
    pub part: String,
    pub passed: bool,
    /// Number of instances the part was checked on.
    pub checked: u64,
    pub counterexample: Option<Counterexample>,
}

impl PartVerdict {
    fn single(part: &str, failure: Option<Counterexample>) -> Self {
        PartVerdict {
            part: part.to_string(),
            passed: failure.is_none(),
            checked: 1,
            counterexample: failure,
        }
    }

    fn over(part: &str, checked: u64, failure: Option<Counterexample>) -> Self {
        PartVerdict {
            checked,
            ..Self::single(part, failure)
        }
    }
}

/// Per-part verdicts of one characterisation check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CharacterisationReport {
    pub subject: String,
    /// Ensembles enumerated by the oracle.
    pub ensembles: u64,
    pub parts: Vec<PartVerdict>,
}

impl CharacterisationReport {
    pub fn passed(&self) -> bool {
        self.parts.iter().all(|p| p.passed)
    }

    pub fn part(&self, name: &str) -> Option<&PartVerdict> {
        self.parts.iter().find(|p| p.part == name)
    }
}

fn first_excess(u: &Universe, lhs: &EventTuple, rhs: &EventTuple) -> Option<Counterexample> {
    lhs.iter()
        .zip(rhs.coords())
        .find_map(|((a, l), r)| l.witness_outside(r).map(|p| Counterexample::at(u, a, p)))
}

fn outside(u: &Universe, tuple: &EventTuple, bound: &Event) -> Option<Counterexample> {
    tuple
        .iter()
        .find_map(|(a, e)| e.witness_outside(bound).map(|p| Counterexample::at(u, a, p)))
}

/// Checks the characterisation of timely common knowledge as the greatest
/// timely-coordinated ensemble inside `ψ`, against `C_I^δψ` as computed by
/// the engine.
pub fn verify_characterisation(u: &Universe, psi: &Event, spec: &TimingSpec, guard: u128) -> Result<CharacterisationReport> {
    let ck = timely_ck(u, psi, spec)?;
    verify_characterisation_with(u, psi, spec, &ck, guard)
}

/// As [`verify_characterisation`], with `candidate` standing in for `C_I^δψ` in
/// parts 1 to 3. Used to confirm the check rejects wrong fixed points.
pub fn verify_characterisation_with(
    u: &Universe,
    psi: &Event,
    spec: &TimingSpec,
    candidate: &EventTuple,
    guard: u128,
) -> Result<CharacterisationReport> {
    let agents = spec.agents();
    let space = EnsembleSpace::new(u, agents, guard)?;
    let mut parts = Vec::new();

    let image = apply_f(u, psi, spec, candidate)?;
    parts.push(PartVerdict::single(
        "fixed-point",
        first_excess(u, candidate, &image).or_else(|| first_excess(u, &image, candidate)),
    ));

    let part1 = non_local(u, candidate)
        .map(|(a, p)| Counterexample::at(u, a, p))
        .or(delta_violation(candidate, spec)?.map(|v| Counterexample::at(u, v.agent, v.point)));
    parts.push(PartVerdict::single("1", part1));
    parts.push(PartVerdict::single("2", outside(u, candidate, psi)));

    let coordinated = space.filter(|e| delta_violation_within(e, spec).is_none());
    let n = coordinated.len() as u64;

    let part3 = coordinated
        .iter()
        .filter(|e| e.union().is_subset(psi))
        .find_map(|e| first_excess(u, e, candidate));
    parts.push(PartVerdict::over("3", n, part3));

    let mut by_union: HashMap<Event, Vec<&EventTuple>> = HashMap::new();
    for e in &coordinated {
        by_union.entry(e.union()).or_default().push(e);
    }
    let groups: Vec<_> = by_union.into_iter().collect();
    let checked: Vec<(Option<Counterexample>, Option<Counterexample>)> = groups
        .par_iter()
        .map(|(union, members)| -> Result<_> {
            let ck_union = timely_ck(u, union, spec)?;
            let p4 = members.iter().find_map(|e| first_excess(u, e, &ck_union));
            let cu = ck_union.union();
            let p5 = union
                .witness_outside(&cu)
                .or_else(|| cu.witness_outside(union))
                .map(|p| Counterexample::at(u, agents[0], p));
            Ok((p4, p5))
        })
        .collect::<Result<_>>()?;
    let p4 = checked.iter().find_map(|c| c.0.clone());
    let p5 = checked.iter().find_map(|c| c.1.clone());
    parts.push(PartVerdict::over("4", n, p4));
    parts.push(PartVerdict::over("5", n, p5));

    Ok(CharacterisationReport {
        subject: "timely common knowledge".into(),
        ensembles: space.len(),
        parts,
    })
}

/// Perfect coordination against `C_I`: `(C_Iψ)_i` is perfectly
/// coordinated, and every perfectly coordinated `ē` has
/// `e_i ⊆ C_I(∪ē)` and `∪ē = C_I(∪ē)`.
pub fn verify_perfect_coordination(u: &Universe, group: &[AgentId], psi: &Event, guard: u128) -> Result<CharacterisationReport> {
    let space = EnsembleSpace::new(u, group, guard)?;
    let ck = u.common_knowledge(group, psi)?;
    let own = EventTuple::constant(group, &ck);
    let p1 = non_local(u, &own)
        .map(|(a, p)| Counterexample::at(u, a, p))
        .or_else(|| outside(u, &own, psi));
    let mut parts = vec![PartVerdict::single("1", p1)];
    let coordinated = space.filter(is_perfectly_coordinated);
    let n = coordinated.len() as u64;
    let mut p2 = None;
    let mut p3 = None;
    for e in &coordinated {
        let union = e.union();
        let c = u.common_knowledge(group, &union)?;
        p2 = p2.or_else(|| outside(u, e, &c));
        if p3.is_none() && union != c {
            p3 = union
                .witness_outside(&c)
                .or_else(|| c.witness_outside(&union))
                .map(|p| Counterexample::at(u, group[0], p));
        }
    }
    parts.push(PartVerdict::over("2", n, p2));
    parts.push(PartVerdict::over("3", n, p3));
    Ok(CharacterisationReport {
        subject: "perfect coordination".into(),
        ensembles: space.len(),
        parts,
    })
}

fn verify_variant(
    u: &Universe,
    group: &[AgentId],
    psi: &Event,
    guard: u128,
    subject: &str,
    ck: impl Fn(&Event) -> Result<Event> + Sync,
    coordinated: impl Fn(&EventTuple) -> bool + Sync,
) -> Result<CharacterisationReport> {
    let space = EnsembleSpace::new(u, group, guard)?;
    let known = |x: &Event| -> EventTuple {
        EventTuple::new(group.to_vec(), group.iter().map(|&a| u.knows(a, x)).collect())
            .expect("shape is fixed")
    };
    let own = known(&ck(psi)?);
    let p2 = non_local(u, &own)
        .map(|(a, p)| Counterexample::at(u, a, p))
        .or_else(|| {
            (!coordinated(&own)).then(|| {
                let (a, e) = own.iter().find(|(_, e)| !e.is_empty()).expect("non-empty");
                Counterexample::at(u, a, e.points().next().expect("non-empty"))
            })
        });
    let mut parts = vec![PartVerdict::single("2", p2)];
    let members = space.filter(&coordinated);
    let n = members.len() as u64;
    let mut p3 = None;
    let mut p4 = None;
    let mut memo: HashMap<Event, Event> = HashMap::new();
    for e in &members {
        let union = e.union();
        if !memo.contains_key(&union) {
            let v = ck(&union)?;
            memo.insert(union.clone(), v);
        }
        let c = &memo[&union];
        p3 = p3.or_else(|| first_excess(u, e, &known(c)));
        p4 = p4.or_else(|| {
            union
                .witness_outside(c)
                .map(|p| Counterexample::at(u, group[0], p))
        });
    }
    parts.push(PartVerdict::over("3", n, p3));
    parts.push(PartVerdict::over("4", n, p4));
    Ok(CharacterisationReport {
        subject: subject.into(),
        ensembles: space.len(),
        parts,
    })
}

/// Eventual coordination against eventual common knowledge.
pub fn verify_eventual_coordination(u: &Universe, group: &[AgentId], psi: &Event, guard: u128) -> Result<CharacterisationReport> {
    verify_variant(
        u,
        group,
        psi,
        guard,
        "eventual coordination",
        |x| eventual_ck(u, group, x),
        is_eventually_coordinated,
    )
}

/// ε-coordination against ε-common knowledge.
pub fn verify_epsilon_coordination(
    u: &Universe,
    group: &[AgentId],
    psi: &Event,
    epsilon: usize,
    guard: u128,
) -> Result<CharacterisationReport> {
    verify_variant(
        u,
        group,
        psi,
        guard,
        "epsilon coordination",
        |x| epsilon_ck(u, group, x, epsilon),
        |e| is_epsilon_coordinated(e, epsilon),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy;

    fn ab() -> [AgentId; 2] {
        [AgentId(0), AgentId(1)]
    }

    fn spec(ab_: i64, ba: i64) -> TimingSpec {
        TimingSpec::new(ab().to_vec(), |i, _| Delta::Finite(if i.0 == 0 { ab_ } else { ba })).unwrap()
    }

    fn tuple(u: &Universe, a: &[(usize, usize)], b: &[(usize, usize)]) -> EventTuple {
        EventTuple::new(
            ab().to_vec(),
            vec![
                u.event_from_points(a.iter().copied()).unwrap(),
                u.event_from_points(b.iter().copied()).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn delta_coordination_examples() {
        let u = toy::u2();
        let e = tuple(&u, &[(1, 1)], &[(1, 2)]);
        assert!(is_delta_coordinated(&EventTuple::bottom(&u, &ab()), &spec(0, 0)).unwrap());
        assert!(is_delta_coordinated(&e, &spec(1, 0)).unwrap());
        let v = delta_violation(&e, &spec(0, 0)).unwrap().unwrap();
        assert_eq!((v.agent, v.other, v.point), (AgentId(0), AgentId(1), Point::new(1, 1)));
    }

    #[test]
    fn symmetric_coordination_examples() {
        let u = toy::u2();
        let bot = EventTuple::bottom(&u, &ab());
        assert!(is_perfectly_coordinated(&bot));
        assert!(is_perfectly_coordinated(&EventTuple::constant(&ab(), &u.run_event(1))));
        assert!(!is_perfectly_coordinated(&tuple(&u, &[(1, 1)], &[(1, 2)])));
        assert!(is_eventually_coordinated(&bot));
        assert!(!is_eventually_coordinated(&tuple(&u, &[(0, 0)], &[])));
        assert!(is_epsilon_coordinated(&bot, 0));
        assert!(!is_epsilon_coordinated(&tuple(&u, &[(0, 0)], &[(0, 3)]), 1));
        assert!(is_epsilon_coordinated(&tuple(&u, &[(0, 0)], &[(0, 3)]), 3));
        assert!(is_epsilon_coordinated(&tuple(&u, &[(0, 2)], &[(0, 2)]), 0));
        assert!(!is_epsilon_coordinated(&tuple(&u, &[(0, 2)], &[(0, 3)]), 0));
    }

    #[test]
    fn unions() {
        let u = toy::u2();
        assert!(tuple_union(&EventTuple::bottom(&u, &ab())).is_empty());
        let e = u.run_event(0);
        assert_eq!(tuple_union(&EventTuple::constant(&ab(), &e)), e);
        assert_eq!(
            tuple_union(&tuple(&u, &[(1, 1)], &[(1, 2)])),
            u.event_from_points([(1, 1), (1, 2)]).unwrap()
        );
    }

    #[test]
    fn ensembles_require_locality() {
        let u = toy::u2();
        assert!(matches!(
            Ensemble::new(&u, tuple(&u, &[(1, 0)], &[])),
            Err(Error::NotLocal { .. })
        ));
        let ok = Ensemble::new(&u, tuple(&u, &[(1, 1)], &[(1, 2)])).unwrap();
        assert_eq!(ok.union().len(), 2);
    }

    #[test]
    fn ensemble_space_counts_local_tuples() {
        let u = toy::u2();
        let space = EnsembleSpace::new(&u, &ab(), ENSEMBLE_GUARD).unwrap();
        assert_eq!(space.len(), 1 << (7 + 6));
        for i in [0, 1, 77, space.len() - 1] {
            assert!(non_local(&u, &space.get(i)).is_none());
        }
        assert!(EnsembleSpace::new(&u, &ab(), 1 << 12).is_err());
    }

    #[test]
    fn characterisation_on_toy() {
        let u = toy::u2();
        let psi = u.event_from_fn(|r, t| r == 1 && t >= 1 || t == 3);
        for s in [spec(1, 0), spec(-1, 2), spec(0, 0)] {
            let report = verify_characterisation(&u, &psi, &s, ENSEMBLE_GUARD).unwrap();
            assert!(report.passed(), "{report:?}");
            assert!(verify_characterisation(&u, &u.empty(), &s, ENSEMBLE_GUARD).unwrap().passed());
        }
    }

    #[test]
    fn corrupted_fixed_point_is_rejected() {
        let u = toy::u2();
        let psi = u.run_event(1);
        let s = spec(1, 0);
        let ck = timely_ck(&u, &psi, &s).unwrap();
        let mut coords = ck.clone().into_coords();
        let p = coords[0].points().next().unwrap();
        coords[0].remove(p.run, p.time);
        let bad = EventTuple::new(ab().to_vec(), coords).unwrap();
        let report = verify_characterisation_with(&u, &psi, &s, &bad, ENSEMBLE_GUARD).unwrap();
        assert!(!report.part("fixed-point").unwrap().passed);
        assert!(!report.part("3").unwrap().passed);
    }

    #[test]
    fn symmetric_characterisations_on_toy() {
        let u = toy::u2();
        let g = ab();
        let psi = u.event_from_fn(|r, t| r == 1 || t == 0);
        assert!(verify_perfect_coordination(&u, &g, &psi, ENSEMBLE_GUARD).unwrap().passed());
        assert!(verify_eventual_coordination(&u, &g, &psi, ENSEMBLE_GUARD).unwrap().passed());
        for eps in 0..3 {
            assert!(verify_epsilon_coordination(&u, &g, &psi, eps, ENSEMBLE_GUARD).unwrap().passed());
        }
    }
}
