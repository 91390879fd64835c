//! Seeded randomized property groups.
//!
//! Each group draws small random universes, events and timing specs and
//! checks one family of laws on them. Case `k` of group `g` under seed `s`
//! always sees the same inputs, so reports are reproducible and cases can
//! run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::coordination::{
    delta_violation, is_delta_coordinated, is_epsilon_coordinated, is_eventually_coordinated,
    is_perfectly_coordinated, verify_epsilon_coordination, verify_eventual_coordination,
    verify_perfect_coordination, verify_characterisation, EnsembleSpace,
};
use crate::event::{Delta, Event};
use crate::fixed_point::{
    apply_f, apply_g, check_induction_rule, epsilon_ck, eventual_ck, gfp_bruteforce_oracle, timely_ck,
    timely_ck_g, EventTuple, TimingSpec, ORACLE_GUARD_BITS,
};
use crate::nested::{nested_conjunction_all, verify_nested_equivalence, PathMode};
use crate::random;
use crate::scenario::{
    enumerate_solutions, solvability, synthesize_optimal, verify_optimal, verify_solution, GenerateOptions,
    ScenarioSpec, TcrInstance,
};
use crate::universe::{AgentId, SyncMode, Universe};
use crate::Error;

/// Cases per group used when none are requested.
pub const DEFAULT_CASES: usize = 500;

type Case = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T>(r: crate::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// Outcome of one group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupReport {
    pub name: String,
    /// Failures make the group fail only when asserted; otherwise they
    /// are disagreements being counted.
    pub asserted: bool,
    pub cases: usize,
    pub failures: usize,
    pub first_failure: Option<String>,
}

impl GroupReport {
    pub fn passed(&self) -> bool {
        !self.asserted || self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub groups: Vec<GroupReport>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(GroupReport::passed)
    }
}

struct Group {
    name: &'static str,
    asserted: bool,
    /// The suite runs `cases / cost` cases of this group.
    cost: usize,
    case: fn(&mut ChaCha8Rng) -> Case,
}

const GROUPS: &[Group] = &[
    Group { name: "knowledge", asserted: true, cost: 1, case: knowledge },
    Group { name: "within", asserted: true, cost: 1, case: within },
    Group { name: "shift", asserted: true, cost: 1, case: shift },
    Group { name: "stability", asserted: true, cost: 1, case: stability },
    Group { name: "perfect-recall", asserted: true, cost: 1, case: perfect_recall },
    Group { name: "stable-coordinates", asserted: true, cost: 1, case: stable_coordinates },
    Group { name: "gfp-oracle", asserted: true, cost: 5, case: gfp_oracle },
    Group { name: "fixed-point", asserted: true, cost: 1, case: fixed_point },
    Group { name: "g-function", asserted: true, cost: 1, case: g_function },
    Group { name: "degeneration", asserted: true, cost: 1, case: degeneration },
    Group { name: "coordination", asserted: true, cost: 1, case: coordination },
    Group { name: "characterisation", asserted: true, cost: 5, case: characterisation },
    Group { name: "symmetric-coordination", asserted: true, cost: 5, case: symmetric_coordination },
    Group { name: "nested", asserted: true, cost: 1, case: nested },
    Group { name: "scenario", asserted: true, cost: 5, case: scenario },
    Group { name: "epsilon-agreement", asserted: false, cost: 1, case: epsilon_agreement },
];

/// Names of all groups, in suite order.
pub fn group_names() -> impl Iterator<Item = &'static str> {
    GROUPS.iter().map(|g| g.name)
}

fn case_seed(seed: u64, group: usize, case: usize) -> u64 {
    // splitmix64 finaliser over the three inputs
    let mut z = seed
        .wrapping_add((group as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((case as u64).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `cases` cases of the named group, or `None` for an unknown name.
pub fn run_group(name: &str, seed: u64, cases: usize) -> Option<GroupReport> {
    let idx = GROUPS.iter().position(|g| g.name == name)?;
    let g = &GROUPS[idx];
    let failures: Vec<(usize, String)> = (0..cases)
        .into_par_iter()
        .filter_map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(case_seed(seed, idx, k));
            (g.case)(&mut rng).err().map(|m| (k, m))
        })
        .collect();
    Some(GroupReport {
        name: g.name.to_string(),
        asserted: g.asserted,
        cases,
        failures: failures.len(),
        first_failure: failures.into_iter().min_by_key(|f| f.0).map(|(k, m)| format!("case {k}: {m}")),
    })
}

/// Runs every group; expensive groups get a fraction of `cases`.
pub fn run_suite(seed: u64, cases: usize) -> SuiteReport {
    let groups = GROUPS
        .iter()
        .map(|g| run_group(g.name, seed, (cases / g.cost).max(1)).expect("listed group"))
        .collect();
    SuiteReport { seed, groups }
}

fn sync_mode(rng: &mut ChaCha8Rng) -> SyncMode {
    if rng.gen_bool(0.5) {
        SyncMode::Synchronous
    } else {
        SyncMode::Asynchronous
    }
}

fn any_universe(rng: &mut ChaCha8Rng, max_bits: usize) -> Universe {
    let s = random::shape(rng, 3, max_bits);
    let pr = rng.gen_bool(0.5);
    let sync = sync_mode(rng);
    random::universe(rng, s, pr, sync)
}

fn recall_universe(rng: &mut ChaCha8Rng, max_bits: usize) -> Universe {
    let s = random::shape(rng, 3, max_bits);
    let sync = sync_mode(rng);
    random::universe(rng, s, true, sync)
}

fn any_agent(rng: &mut ChaCha8Rng, u: &Universe) -> AgentId {
    AgentId(rng.gen_range(0..u.num_agents()))
}

fn any_event(rng: &mut ChaCha8Rng, u: &Universe) -> Event {
    let d = rng.gen_range(0.2..0.9);
    random::event(rng, u, d)
}

/// A bound reaching a little past the horizon on either side.
fn any_delta(rng: &mut ChaCha8Rng, u: &Universe, p_inf: f64) -> Delta {
    random::delta(rng, u.horizon() as i64 + 1, p_inf)
}

fn any_spec(rng: &mut ChaCha8Rng, u: &Universe) -> TimingSpec {
    random::spec(rng, u, u.horizon() as i64 + 1, 0.2)
}

fn any_tuple(rng: &mut ChaCha8Rng, u: &Universe, agents: &[AgentId]) -> EventTuple {
    let coords = agents.iter().map(|_| any_event(rng, u)).collect();
    EventTuple::new(agents.to_vec(), coords).expect("fixed shape")
}

fn all_agents(u: &Universe) -> Vec<AgentId> {
    u.agent_ids().collect()
}

fn knowledge(rng: &mut ChaCha8Rng) -> Case {
    let u = any_universe(rng, 48);
    let a = any_agent(rng, &u);
    let (e, f) = (any_event(rng, &u), any_event(rng, &u));
    let ke = u.knows(a, &e);
    ensure!(ke.is_subset(&e), "K e ⊄ e");
    ensure!(u.knows(a, &ke) == ke, "K K e ≠ K e");
    let ef = e.union(&f);
    ensure!(ke.is_subset(&u.knows(a, &ef)), "K not monotone");
    let kf = u.knows(a, &f);
    ensure!(u.knows(a, &e.intersection(&f)) == ke.intersection(&kf), "K does not commute with ∩");
    ensure!(u.is_local(a, &ke), "K e not local");
    Ok(())
}

fn within(rng: &mut ChaCha8Rng) -> Case {
    let u = any_universe(rng, 48);
    let h = u.horizon() as i64;
    let (e, f) = (any_event(rng, &u), any_event(rng, &u));
    ensure!(e.within(Delta::Infinite) == e.eventually(), "⊙^≤∞ ≠ ◇");

    let (a, b) = (any_delta(rng, &u, 0.15), any_delta(rng, &u, 0.15));
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    ensure!(e.within(lo).is_subset(&f.union(&e).within(hi)), "⊙^≤ not monotone ({lo}, {hi})");
    ensure!(
        e.intersection(&f).within(a).is_subset(&e.within(a).intersection(&f.within(a))),
        "⊙^≤{a} of ∩ exceeds ∩ of ⊙^≤{a}"
    );

    // ⊙^≤b ⊙^≤a e = ⊙^≤(a+b) e, where the intermediate time stays inside
    // the horizon: e restricted to t ≤ H + a, compared at t ≥ -b
    let lhs_support = match a {
        Delta::Finite(a) => u.event_from_fn(|_, t| t as i64 <= h + a),
        Delta::Infinite => u.full(),
    };
    let g = e.intersection(&lhs_support);
    let lhs = g.within(a).within(b);
    let rhs = g.within(a.plus(b));
    let interior = match b {
        Delta::Finite(b) => u.event_from_fn(|_, t| t as i64 + b >= 0),
        Delta::Infinite => u.full(),
    };
    ensure!(
        lhs.intersection(&interior) == rhs.intersection(&interior),
        "additivity fails for ({a}, {b})"
    );
    Ok(())
}

fn shift(rng: &mut ChaCha8Rng) -> Case {
    let u = any_universe(rng, 48);
    let h = u.horizon() as i64;
    let (e, f) = (any_event(rng, &u), any_event(rng, &u));
    let a = rng.gen_range(-(h + 1)..=h + 1);
    let b = rng.gen_range(-(h + 1)..=h + 1);
    let sum = Delta::Finite(a + b);

    // ⊙^a ⊙^≤b e = ⊙^≤(a+b) e wherever t + a is a time
    let inside = u.event_from_fn(|_, t| (0..=h).contains(&(t as i64 + a)));
    let lhs = e.within(Delta::Finite(b)).shift_exact(a);
    ensure!(
        lhs.intersection(&inside) == e.within(sum).intersection(&inside),
        "⊙^{a} ⊙^≤{b} ≠ ⊙^≤{} in the interior",
        a + b
    );

    // ⊙^≤a ⊙^b e = ⊙^≤(a+b) e for e supported where t - b is a time
    let support = u.event_from_fn(|_, t| (0..=h).contains(&(t as i64 - b)));
    let g = e.intersection(&support);
    ensure!(
        g.shift_exact(b).within(Delta::Finite(a)) == g.within(sum),
        "⊙^≤{a} ⊙^{b} ≠ ⊙^≤{} on interior support",
        a + b
    );

    ensure!(e.shift_exact(a).is_subset(&e.within(Delta::Finite(a))), "⊙^{a} ⊄ ⊙^≤{a}");
    ensure!(
        e.intersection(&f).shift_exact(a) == e.shift_exact(a).intersection(&f.shift_exact(a)),
        "⊙^{a} does not commute with ∩"
    );
    ensure!(
        e.intersection(&f).shift_saturating(a) == e.shift_saturating(a).intersection(&f.shift_saturating(a)),
        "saturating shift by {a} does not commute with ∩"
    );
    let past = e.within(Delta::Finite(0));
    ensure!(
        past.shift_saturating(a) == e.within(Delta::Finite(a)),
        "saturating ⊙^{a} ⊙^≤0 ≠ ⊙^≤{a}"
    );
    Ok(())
}

fn stability(rng: &mut ChaCha8Rng) -> Case {
    let u = any_universe(rng, 48);
    let e = any_event(rng, &u);
    let past = e.within(Delta::Finite(0));
    ensure!(past.is_stable(), "⊙^≤0 e not stable");
    ensure!(past.within(Delta::Finite(0)) == past, "⊙^≤0 not idempotent");
    ensure!(e.is_subset(&past), "e ⊄ ⊙^≤0 e");
    let (s1, s2) = (random::stable_event(rng, &u), random::stable_event(rng, &u));
    ensure!(s1.intersection(&s2).is_stable(), "∩ of stable events not stable");
    ensure!(s1.within(Delta::Finite(0)) == s1, "stable event moved by ⊙^≤0");
    Ok(())
}

fn perfect_recall(rng: &mut ChaCha8Rng) -> Case {
    let u = recall_universe(rng, 48);
    ensure!(u.exhibits_perfect_recall(), "generator lost perfect recall");
    let a = any_agent(rng, &u);
    let s = random::stable_event(rng, &u);
    ensure!(u.knows(a, &s).is_stable(), "K of a stable event not stable");
    let e = any_event(rng, &u);
    let zero = Delta::Finite(0);
    ensure!(
        u.knows(a, &e).within(zero).is_subset(&u.knows(a, &e.within(zero))),
        "⊙^≤0 K e ⊄ K ⊙^≤0 e"
    );
    Ok(())
}

fn stable_coordinates(rng: &mut ChaCha8Rng) -> Case {
    let u = recall_universe(rng, 36);
    let psi = random::stable_event(rng, &u);
    let spec = any_spec(rng, &u);
    let ck = ok(timely_ck(&u, &psi, &spec))?;
    for (a, c) in ck.iter() {
        ensure!(c.is_stable(), "coordinate of {a} not stable");
    }
    Ok(())
}

/// Compares the iterated fixed points of `f` and `g` with the brute-force
/// oracle.
fn gfp_oracle(rng: &mut ChaCha8Rng) -> Case {
    let max_bits = ORACLE_GUARD_BITS;
    let u = any_universe(rng, max_bits);
    let psi = any_event(rng, &u);
    let spec = any_spec(rng, &u);
    let agents = spec.agents().to_vec();
    let iterated = ok(timely_ck(&u, &psi, &spec))?;
    let oracle = ok(gfp_bruteforce_oracle(&u, &agents, |x| apply_f(&u, &psi, &spec, x), max_bits))?;
    ensure!(iterated == oracle, "gfp of f differs from the oracle: {iterated:?} vs {oracle:?}");
    if spec.all_finite() {
        let iterated = ok(timely_ck_g(&u, &psi, &spec))?;
        let oracle = ok(gfp_bruteforce_oracle(&u, &agents, |x| apply_g(&u, &psi, &spec, x), max_bits))?;
        ensure!(iterated == oracle, "gfp of g differs from the oracle");
    }
    Ok(())
}

fn fixed_point(rng: &mut ChaCha8Rng) -> Case {
    let u = any_universe(rng, 36);
    let psi = any_event(rng, &u);
    let spec = any_spec(rng, &u);
    let agents = spec.agents().to_vec();
    let ck = ok(timely_ck(&u, &psi, &spec))?;
    ensure!(ok(apply_f(&u, &psi, &spec, &ck))? == ck, "not a fixed point");
    for (a, c) in ck.iter() {
        ensure!(c.is_subset(&psi), "coordinate of {a} outside ψ");
        ensure!(u.is_local(a, c), "coordinate of {a} not local");
    }
    ensure!(ok(is_delta_coordinated(&ck, &spec))?, "C^δψ not δ-coordinated");

    let x = any_tuple(rng, &u, &agents);
    let y = ok(x.join(&any_tuple(rng, &u, &agents)))?;
    let (fx, fy) = (ok(apply_f(&u, &psi, &spec, &x))?, ok(apply_f(&u, &psi, &spec, &y))?);
    ensure!(ok(fx.leq(&fy))?, "f not monotone");

    let smaller = psi.intersection(&any_event(rng, &u));
    let ck_small = ok(timely_ck(&u, &smaller, &spec))?;
    ensure!(ok(ck_small.leq(&ck))?, "C^δ not monotone in ψ");
    ensure!(
        ok(check_induction_rule(&u, &psi, &spec, &ck_small))?,
        "C^δ of a smaller event is not post-fixed"
    );
    // a random tuple is rarely post-fixed; the rule must not misfire
    ok(check_induction_rule(&u, &psi, &spec, &x))?;

    let ck_plain = ok(u.common_knowledge(&agents, &psi))?;
    ensure!(ck_plain.is_subset(&psi), "C_I ψ outside ψ");
    Ok(())
}

fn g_function(rng: &mut ChaCha8Rng) -> Case {
    let u = any_universe(rng, 36);
    let psi = any_event(rng, &u);
    let spec = random::finite_spec(rng, &u, u.horizon() as i64 + 1);
    let agents = spec.agents().to_vec();
    let (x, y) = (any_tuple(rng, &u, &agents), any_tuple(rng, &u, &agents));
    let g = |t: &EventTuple| apply_g(&u, &psi, &spec, t);
    ensure!(ok(g(&ok(x.meet(&y))?))? == ok(ok(g(&x))?.meet(&ok(g(&y))?))?, "g does not commute with ∧");
    ensure!(ok(ok(g(&x))?.leq(&ok(apply_f(&u, &psi, &spec, &x))?))?, "g exceeds f");
    let (ck, ckg) = (ok(timely_ck(&u, &psi, &spec))?, ok(timely_ck_g(&u, &psi, &spec))?);
    ensure!(ok(ckg.leq(&ck))?, "gfp of g exceeds gfp of f");

    // equal under perfect recall and a stable ψ
    let u = recall_universe(rng, 36);
    let psi = random::stable_event(rng, &u);
    let spec = random::finite_spec(rng, &u, u.horizon() as i64 + 1);
    let (ck, ckg) = (ok(timely_ck(&u, &psi, &spec))?, ok(timely_ck_g(&u, &psi, &spec))?);
    ensure!(ck == ckg, "gfp of f and g differ under perfect recall: {ck:?} vs {ckg:?}");
    Ok(())
}

fn degeneration(rng: &mut ChaCha8Rng) -> Case {
    let u = recall_universe(rng, 36);
    let psi = random::stable_event(rng, &u);
    let agents = all_agents(&u);
    let zero = ok(timely_ck(&u, &psi, &ok(TimingSpec::constant(agents.clone(), Delta::Finite(0)))?))?;
    let ck = ok(u.common_knowledge(&agents, &psi))?;
    for (a, c) in zero.iter() {
        ensure!(*c == ck, "δ≡0: coordinate of {a} differs from C_I ψ");
    }
    check_infinite(&u, &psi, &agents)?;

    // δ ≡ ∞ needs neither recall nor stability
    let u = any_universe(rng, 36);
    let psi = any_event(rng, &u);
    check_infinite(&u, &psi, &all_agents(&u))?;
    ensure!(
        ok(epsilon_ck(&u, &all_agents(&u), &psi, 0))? == ok(u.common_knowledge(&all_agents(&u), &psi))?,
        "0-common knowledge differs from C_I"
    );
    Ok(())
}

fn check_infinite(u: &Universe, psi: &Event, agents: &[AgentId]) -> Case {
    let inf = ok(timely_ck(u, psi, &ok(TimingSpec::constant(agents.to_vec(), Delta::Infinite))?))?;
    let body = psi.intersection(&ok(eventual_ck(u, agents, psi))?);
    for (a, c) in inf.iter() {
        ensure!(*c == u.knows(a, &body), "δ≡∞: coordinate of {a} differs from K(ψ ∩ C^◇ψ)");
    }
    Ok(())
}

fn coordination(rng: &mut ChaCha8Rng) -> Case {
    let u = any_universe(rng, 48);
    let agents = all_agents(&u);
    let spec = any_spec(rng, &u);
    let x = any_tuple(rng, &u, &agents);
    // both formulations are evaluated; a disagreement is an error
    ok(delta_violation(&x, &spec))?;

    // one point per run and agent, at a random time or not at all
    let mut coords = Vec::new();
    for _ in &agents {
        let mut e = u.empty();
        for r in 0..u.num_runs() {
            if rng.gen_bool(0.8) {
                e.insert(r, rng.gen_range(0..=u.horizon()));
            }
        }
        coords.push(e);
    }
    let single = ok(EventTuple::new(agents.clone(), coords))?;
    let eps = rng.gen_range(0..=u.horizon() + 1);
    let eps_spec = ok(TimingSpec::constant(agents.clone(), Delta::Finite(eps as i64)))?;
    ensure!(
        ok(is_delta_coordinated(&single, &eps_spec))? == is_epsilon_coordinated(&single, eps),
        "δ≡{eps} and {eps}-coordination disagree on single responses"
    );

    for t in [&x, &single] {
        if is_perfectly_coordinated(t) {
            ensure!(is_epsilon_coordinated(t, 0), "perfect but not 0-coordinated");
        }
        if is_epsilon_coordinated(t, eps) {
            ensure!(is_epsilon_coordinated(t, eps + 1), "{eps}- but not {}-coordinated", eps + 1);
            ensure!(is_eventually_coordinated(t), "{eps}-coordinated but not eventually");
        }
        if ok(is_delta_coordinated(t, &spec))? {
            ensure!(is_eventually_coordinated(t), "δ-coordinated but not eventually");
        }
    }
    Ok(())
}

/// A universe whose local ensembles over all agents number at most
/// `max_ensembles`.
fn enumerable_universe(rng: &mut ChaCha8Rng, max_ensembles: u128) -> Universe {
    loop {
        let u = any_universe(rng, 12);
        if EnsembleSpace::new(&u, &all_agents(&u), max_ensembles).is_ok() {
            return u;
        }
    }
}

fn characterisation(rng: &mut ChaCha8Rng) -> Case {
    let u = enumerable_universe(rng, 1 << 12);
    let psi = any_event(rng, &u);
    let spec = any_spec(rng, &u);
    let report = ok(verify_characterisation(&u, &psi, &spec, 1 << 12))?;
    ensure!(report.passed(), "{report:?}");
    Ok(())
}

fn symmetric_coordination(rng: &mut ChaCha8Rng) -> Case {
    let u = enumerable_universe(rng, 1 << 12);
    let psi = any_event(rng, &u);
    let agents = all_agents(&u);
    let eps = rng.gen_range(0..=u.horizon());
    for report in [
        ok(verify_perfect_coordination(&u, &agents, &psi, 1 << 12))?,
        ok(verify_eventual_coordination(&u, &agents, &psi, 1 << 12))?,
        ok(verify_epsilon_coordination(&u, &agents, &psi, eps, 1 << 12))?,
    ] {
        ensure!(report.passed(), "{report:?}");
    }
    Ok(())
}

fn nested(rng: &mut ChaCha8Rng) -> Case {
    // the per-depth cross-checks run inside; any mismatch is an error
    let u = any_universe(rng, 24);
    let psi = any_event(rng, &u);
    let spec = any_spec(rng, &u);
    let mode = if rng.gen_bool(0.2) {
        PathMode::Explicit { cap: 5_000 }
    } else {
        PathMode::Memoized
    };
    match nested_conjunction_all(&u, &psi, &spec, mode) {
        Ok(_) | Err(Error::SizeGuard { .. }) => {}
        Err(e) => return Err(e.to_string()),
    }

    let u = recall_universe(rng, 36);
    let psi = random::stable_event(rng, &u);
    let spec = random::finite_spec(rng, &u, u.horizon() as i64 + 1);
    let report = ok(verify_nested_equivalence(&u, &psi, &spec, PathMode::Memoized))?;
    ensure!(report.asserted && report.passed(), "{report:?}");
    Ok(())
}

fn random_scenario(rng: &mut ChaCha8Rng) -> ScenarioSpec {
    let n = rng.gen_range(1..=3);
    let agents: Vec<String> = (0..n).map(|k| ((b'a' + k as u8) as char).to_string()).collect();
    let mut triggers: Vec<usize> = (0..3).filter(|_| rng.gen_bool(0.5)).collect();
    if triggers.is_empty() {
        triggers.push(0);
    }
    let mut s = ScenarioSpec {
        name: None,
        agents: agents.clone(),
        horizon: None,
        trigger_times: triggers,
        include_never_run: rng.gen_bool(0.7),
        obs_delay: agents
            .iter()
            .map(|a| {
                let lo = rng.gen_range(0..=1);
                (a.clone(), [lo, lo + rng.gen_range(0..=1)])
            })
            .collect(),
        delta: Default::default(),
        actions: Default::default(),
    };
    for a in &agents {
        for b in &agents {
            if a != b {
                let d = random::delta(rng, 2, 0.25);
                s = s.with_delta(a, b, d);
            }
        }
    }
    s
}

fn scenario(rng: &mut ChaCha8Rng) -> Case {
    let s = random_scenario(rng);
    let inst = ok(TcrInstance::generate(&s, &GenerateOptions::default()))?;
    ensure!(inst.universe.exhibits_perfect_recall(), "generated system lacks perfect recall");
    ensure!(inst.occurred().is_stable(), "occurrence not stable");
    let verdict = ok(solvability(&inst))?;
    let count = match enumerate_solutions(&inst, 20_000, |_| Ok(())) {
        Ok(n) => Some(n),
        Err(Error::SizeGuard { .. }) => None,
        Err(e) => return Err(e.to_string()),
    };
    if !verdict.solvable {
        ensure!(count.is_none_or(|n| n == 0), "unsolvable, yet {count:?} solutions enumerated");
        return Ok(());
    }
    let best = ok(synthesize_optimal(&inst))?;
    let check = ok(verify_solution(&inst, &best))?;
    ensure!(check.passed(), "synthesized result fails: {check:?}");
    if count.is_some() {
        let opt = ok(verify_optimal(&inst, &best, 20_000))?;
        ensure!(opt.passed(), "{opt:?}");
    }
    let nested = ok(verify_nested_equivalence(&inst.universe, &inst.occurred(), &inst.spec, PathMode::Memoized))?;
    ensure!(nested.all_equal(), "nested conjunction differs on a solvable instance: {nested:?}");

    // observing within a narrower window keeps the instance solvable
    let mut narrow = s.clone();
    narrow.horizon = Some(inst.horizon());
    let agent = &s.agents[rng.gen_range(0..s.agents.len())];
    let [lo, hi] = s.obs_delay[agent];
    let new_lo = rng.gen_range(lo..=hi);
    let new_hi = rng.gen_range(new_lo..=hi);
    narrow.obs_delay.insert(agent.clone(), [new_lo, new_hi]);
    let narrow = ok(TcrInstance::generate(&narrow, &GenerateOptions::default()))?;
    ensure!(ok(solvability(&narrow))?.solvable, "narrowing {agent}'s delay to [{new_lo}, {new_hi}] made it unsolvable");
    Ok(())
}

/// Compares `(C^δψ)_i` for constant `δ ≡ ε` with `K_i(ψ ∩ C^εψ)`. Not a
/// law: disagreements are counted, not treated as failures.
fn epsilon_agreement(rng: &mut ChaCha8Rng) -> Case {
    let u = recall_universe(rng, 36);
    let psi = random::stable_event(rng, &u);
    let agents = all_agents(&u);
    let eps = rng.gen_range(1..=u.horizon().max(1));
    let timely = ok(timely_ck(&u, &psi, &ok(TimingSpec::constant(agents.clone(), Delta::Finite(eps as i64)))?))?;
    let body = psi.intersection(&ok(epsilon_ck(&u, &agents, &psi, eps))?);
    for (a, c) in timely.iter() {
        ensure!(*c == u.knows(a, &body), "ε = {eps}: coordinate of {a} differs");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_seeds_differ() {
        assert_ne!(case_seed(0, 0, 0), case_seed(0, 0, 1));
        assert_ne!(case_seed(0, 0, 0), case_seed(0, 1, 0));
        assert_ne!(case_seed(0, 0, 0), case_seed(1, 0, 0));
    }

    #[test]
    fn unknown_group() {
        assert!(run_group("nope", 0, 1).is_none());
    }

    #[test]
    fn reports_repeat() {
        let a = run_group("within", 3, 40).unwrap();
        assert_eq!(a, run_group("within", 3, 40).unwrap());
        assert!(a.passed());
    }
}
