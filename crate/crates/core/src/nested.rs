//! Timely common knowledge as a conjunction of nested knowledge formulas
//! `K_{i_1} ⊙^{δ(i_1,i_2)} K_{i_2} ⋯ K_{i_n} ψ`, indexed by agent paths
//! whose consecutive bounds are finite.
//!
//! The conjunction is computed two ways at every depth: by a memoized
//! recurrence over path tails, and by iterating `g` from `(K_iψ)_i`. The
//! two must agree exactly; for small depths the paths can also be
//! enumerated and evaluated one by one.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{Delta, Event};
use crate::fixed_point::{apply_g, timely_ck, timely_ck_g, EventTuple, TimingSpec};
use crate::universe::{AgentId, Universe};

/// Default cap on the number of explicitly evaluated paths.
pub const EXPLICIT_PATH_CAP: u128 = 50_000;

/// A non-stuttering sequence of agents with finite consecutive bounds.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DeltaPath(Vec<AgentId>);

impl DeltaPath {
    pub fn new(spec: &TimingSpec, agents: Vec<AgentId>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidPath("empty path".into()));
        }
        for &a in &agents {
            if spec.position(a).is_none() {
                return Err(Error::InvalidPath(format!("agent {a} outside timing spec")));
            }
        }
        for w in agents.windows(2) {
            if w[0] == w[1] {
                return Err(Error::InvalidPath(format!("agent {} repeated", w[0])));
            }
            if !spec.delta(w[0], w[1]).is_finite() {
                return Err(Error::InvalidPath(format!(
                    "infinite bound on edge {}->{}",
                    w[0], w[1]
                )));
            }
        }
        Ok(DeltaPath(agents))
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn start(&self) -> AgentId {
        self.0[0]
    }
}

fn successors(spec: &TimingSpec, k: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
    (0..spec.len())
        .filter(move |&l| l != k)
        .filter_map(move |l| spec.delta_at(k, l).finite().map(|d| (l, d)))
}

/// All paths from `start` of length at most `max_len`, shortest first and
/// in spec order among equal lengths.
pub fn enumerate_paths(spec: &TimingSpec, start: AgentId, max_len: usize) -> Result<Vec<DeltaPath>> {
    let s = spec
        .position(start)
        .ok_or_else(|| Error::InvalidPath(format!("agent {start} outside timing spec")))?;
    let mut out = Vec::new();
    let mut layer: Vec<Vec<usize>> = if max_len == 0 { vec![] } else { vec![vec![s]] };
    while !layer.is_empty() {
        let mut next = Vec::new();
        for p in &layer {
            if p.len() < max_len {
                for (l, _) in successors(spec, *p.last().expect("non-empty")) {
                    let mut q = p.clone();
                    q.push(l);
                    next.push(q);
                }
            }
        }
        out.extend(
            layer
                .drain(..)
                .map(|p| DeltaPath(p.into_iter().map(|k| spec.agents()[k]).collect())),
        );
        layer = next;
    }
    Ok(out)
}

/// `K_{i_1} ⊙^{δ(i_1,i_2)} K_{i_2} ⋯ ⊙^{δ(i_{n-1},i_n)} K_{i_n} ψ`,
/// evaluated right to left with the horizon-saturating shift.
pub fn nested_formula(u: &Universe, path: &DeltaPath, psi: &Event, spec: &TimingSpec) -> Result<Event> {
    let agents = path.agents();
    let last = *agents.last().expect("non-empty");
    let mut v = u.knows(last, psi);
    for w in agents.windows(2).rev() {
        let d = match spec.delta(w[0], w[1]) {
            Delta::Finite(d) => d,
            Delta::Infinite => return Err(Error::InfiniteShift),
        };
        v = u.knows(w[0], &v.shift_saturating(d));
    }
    Ok(v)
}

/// Whether the finite-bound graph has no cycles, i.e. finitely many paths.
pub fn has_finite_paths(spec: &TimingSpec) -> bool {
    // Kahn's algorithm on the finite edges
    let n = spec.len();
    let mut indeg = vec![0usize; n];
    for k in 0..n {
        for (l, _) in successors(spec, k) {
            indeg[l] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&k| indeg[k] == 0).collect();
    let mut seen = 0;
    while let Some(k) = queue.pop() {
        seen += 1;
        for (l, _) in successors(spec, k) {
            indeg[l] -= 1;
            if indeg[l] == 0 {
                queue.push(l);
            }
        }
    }
    seen == n
}

/// How paths are handled at each depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathMode {
    /// Only the tail recurrence.
    #[default]
    Memoized,
    /// Also evaluate every path separately while the running path count
    /// stays under the cap.
    Explicit { cap: u128 },
}

/// One depth of the nested conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DepthRecord {
    pub depth: usize,
    /// Size of the conjunction over paths of length at most `depth`, per agent.
    pub sizes: Vec<usize>,
    /// Number of paths of length at most `depth`, over all start agents.
    pub paths: u128,
    /// Whether the paths of this depth were also evaluated one by one.
    pub explicit: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedOutcome {
    /// Coordinate `i`: conjunction over all paths from `i`.
    pub value: EventTuple,
    /// Depth at which the conjunction stopped changing.
    pub depth: usize,
    pub records: Vec<DepthRecord>,
    pub finite_paths: bool,
}

/// The nested conjunction for every agent of `spec`.
pub fn nested_conjunction_all(u: &Universe, psi: &Event, spec: &TimingSpec, mode: PathMode) -> Result<NestedOutcome> {
    spec.check_in(u)?;
    let n = spec.len();
    let agents = spec.agents().to_vec();
    let bound = u.num_points() * n + 1;

    // exact-length conjunctions, None when no path of that length exists
    let mut exact: Vec<Option<Event>> = agents.iter().map(|&a| Some(u.knows(a, psi))).collect();
    let mut acc: Vec<Event> = exact.iter().map(|e| e.clone().expect("depth 1")).collect();
    let mut counts: Vec<u128> = vec![1; n];
    let mut total_paths: u128 = n as u128;
    let mut iterate = EventTuple::new(agents.clone(), acc.clone())?;
    let mut records = Vec::new();

    let explicit_cap = match mode {
        PathMode::Memoized => None,
        PathMode::Explicit { cap } => Some(cap),
    };
    let mut explicit_paths: Vec<Vec<DeltaPath>> = Vec::new();
    if explicit_cap.is_some() {
        for &a in &agents {
            explicit_paths.push(enumerate_paths(spec, a, 1)?);
        }
    }

    let mut depth = 1;
    loop {
        let explicit = match explicit_cap {
            Some(cap) if total_paths <= cap => {
                for k in 0..n {
                    let mut v = u.full();
                    for p in &explicit_paths[k] {
                        v.intersect_with(&nested_formula(u, p, psi, spec)?);
                    }
                    if v != acc[k] {
                        return Err(Error::Inconsistency(format!(
                            "explicit path conjunction differs from recurrence at depth {depth}"
                        )));
                    }
                }
                true
            }
            _ => false,
        };
        if acc != iterate.coords() {
            return Err(Error::Inconsistency(format!(
                "path conjunction differs from g-iterate at depth {depth}"
            )));
        }
        records.push(DepthRecord {
            depth,
            sizes: acc.iter().map(Event::len).collect(),
            paths: total_paths,
            explicit,
        });

        let next_iterate = apply_g(u, psi, spec, &iterate)?;
        if next_iterate == iterate {
            break;
        }
        if depth > bound {
            return Err(Error::NotStabilized { bound });
        }

        let mut next_exact = Vec::with_capacity(n);
        let mut next_counts = vec![0u128; n];
        for k in 0..n {
            let mut v: Option<Event> = None;
            for (l, d) in successors(spec, k) {
                if let Some(x) = &exact[l] {
                    let term = u.knows(agents[k], &x.shift_saturating(d));
                    v = Some(match v {
                        Some(acc) => acc.intersection(&term),
                        None => term,
                    });
                    next_counts[k] = next_counts[k].saturating_add(counts[l]);
                }
            }
            next_exact.push(v);
        }
        for k in 0..n {
            if let Some(x) = &next_exact[k] {
                acc[k].intersect_with(x);
            }
        }
        exact = next_exact;
        counts = next_counts;
        total_paths = total_paths.saturating_add(counts.iter().fold(0u128, |s, c| s.saturating_add(*c)));
        iterate = next_iterate;
        depth += 1;

        if let Some(cap) = explicit_cap {
            if total_paths <= cap {
                for (k, &a) in agents.iter().enumerate() {
                    explicit_paths[k] = enumerate_paths(spec, a, depth)?;
                }
            }
        }
    }

    Ok(NestedOutcome {
        value: iterate,
        depth,
        records,
        finite_paths: has_finite_paths(spec),
    })
}

/// The conjunction of [`nested_formula`] over all paths from `start`.
pub fn nested_conjunction(u: &Universe, start: AgentId, psi: &Event, spec: &TimingSpec) -> Result<Event> {
    let k = spec
        .position(start)
        .ok_or_else(|| Error::InvalidPath(format!("agent {start} outside timing spec")))?;
    let out = nested_conjunction_all(u, psi, spec, PathMode::Memoized)?;
    Ok(out.value.coord(k).clone())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Preconditions {
    pub perfect_recall: bool,
    pub stable: bool,
    pub all_finite: bool,
    /// `ψ ⊆ ◇(C_I^δψ)_i` for every agent.
    pub eventually_known: bool,
}

impl Preconditions {
    pub fn hold(&self) -> bool {
        self.perfect_recall && self.stable && (self.all_finite || self.eventually_known)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AgentVerdict {
    pub agent: String,
    pub fixed_point_size: usize,
    pub nested_size: usize,
    pub equal: bool,
}

/// Comparison of the fixed point with the nested conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NestedReport {
    pub preconditions: Preconditions,
    /// Whether equality is required (preconditions hold).
    pub asserted: bool,
    pub depth: usize,
    pub finite_paths: bool,
    pub depths: Vec<DepthRecord>,
    pub agents: Vec<AgentVerdict>,
}

impl NestedReport {
    /// Equality holds for every agent, or was not required.
    pub fn passed(&self) -> bool {
        !self.asserted || self.agents.iter().all(|a| a.equal)
    }

    pub fn all_equal(&self) -> bool {
        self.agents.iter().all(|a| a.equal)
    }
}

/// Compares `(C_I^δψ)_i` with the nested conjunction for every agent.
pub fn verify_nested_equivalence(u: &Universe, psi: &Event, spec: &TimingSpec, mode: PathMode) -> Result<NestedReport> {
    let ck = timely_ck(u, psi, spec)?;
    let preconditions = Preconditions {
        perfect_recall: u.exhibits_perfect_recall(),
        stable: psi.is_stable(),
        all_finite: spec.all_finite(),
        eventually_known: ck.coords().iter().all(|c| psi.is_subset(&c.eventually())),
    };
    let nested = nested_conjunction_all(u, psi, spec, mode)?;
    if nested.value != timely_ck_g(u, psi, spec)? {
        return Err(Error::Inconsistency(
            "nested conjunction limit differs from the greatest fixed point of g".into(),
        ));
    }
    let agents = ck
        .iter()
        .zip(nested.value.coords())
        .map(|((a, c), v)| AgentVerdict {
            agent: u.agent_name(a).to_string(),
            fixed_point_size: c.len(),
            nested_size: v.len(),
            equal: c == v,
        })
        .collect();
    Ok(NestedReport {
        asserted: preconditions.hold(),
        preconditions,
        depth: nested.depth,
        finite_paths: nested.finite_paths,
        depths: nested.records,
        agents,
    })
}
