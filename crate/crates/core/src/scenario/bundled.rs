//! Reference scenarios.

use std::collections::BTreeMap;

use crate::event::Delta;

use super::ScenarioSpec;

fn letters(n: usize) -> Vec<String> {
    (0..n).map(|k| ((b'a' + k as u8) as char).to_string()).collect()
}

fn base(name: &str, agents: Vec<String>, triggers: Vec<usize>, delay: [usize; 2]) -> ScenarioSpec {
    ScenarioSpec {
        name: Some(name.to_string()),
        obs_delay: agents.iter().map(|a| (a.clone(), delay)).collect(),
        agents,
        horizon: None,
        trigger_times: triggers,
        include_never_run: true,
        delta: BTreeMap::new(),
        actions: BTreeMap::new(),
    }
}

fn fill(mut s: ScenarioSpec, delta: impl Fn(usize, usize) -> Delta) -> ScenarioSpec {
    let agents = s.agents.clone();
    for (i, a) in agents.iter().enumerate() {
        for (j, b) in agents.iter().enumerate() {
            if i != j {
                s = s.with_delta(a, b, delta(i, j));
            }
        }
    }
    s
}

/// Two washing robots `L`, `R` and a dryer `D` answering a car's arrival at
/// time 0, each seeing it within two steps.
pub fn car_wash() -> ScenarioSpec {
    let agents: Vec<String> = ["L", "R", "D"].iter().map(|s| s.to_string()).collect();
    let mut s = base("car-wash", agents, vec![0], [0, 2]);
    let table = [
        ("L", "R", 3),
        ("L", "D", 9),
        ("R", "L", 7),
        ("R", "D", 11),
        ("D", "L", -4),
        ("D", "R", -6),
    ];
    for (i, j, d) in table {
        s = s.with_delta(i, j, Delta::Finite(d));
    }
    s.actions = BTreeMap::from([
        ("L".into(), "wash_left".into()),
        ("R".into(), "wash_right".into()),
        ("D".into(), "dry".into()),
    ]);
    s
}

/// Agents `a, b, …` respond in order, each no later than its successor.
pub fn ordered(n: usize, delay: [usize; 2]) -> ScenarioSpec {
    let s = base(&format!("ordered-{n}"), letters(n), vec![0, 1], delay);
    fill(s, |i, j| if i == j + 1 { Delta::Finite(0) } else { Delta::Infinite })
}

/// All agents respond at the same instant.
pub fn simultaneous(n: usize, delay: [usize; 2]) -> ScenarioSpec {
    let s = base(&format!("simultaneous-{n}"), letters(n), vec![0, 1], delay);
    fill(s, |_, _| Delta::Finite(0))
}

/// `a` responds first, then `b` and `c` together.
pub fn joint(delay: [usize; 2]) -> ScenarioSpec {
    let block = |k: usize| if k == 0 { 0 } else { 1 };
    let s = base("joint", letters(3), vec![0, 1], delay);
    fill(s, |i, j| {
        if block(i) == block(j) || block(i) == block(j) + 1 {
            Delta::Finite(0)
        } else {
            Delta::Infinite
        }
    })
}

/// Simultaneous response where `a` sees the trigger at once and `b` within
/// two steps.
pub fn asymmetric_simultaneous() -> ScenarioSpec {
    let mut s = base("asymmetric-simultaneous", letters(2), vec![0], [0, 0]);
    s.obs_delay.insert("b".into(), [0, 2]);
    fill(s, |_, _| Delta::Finite(0))
}

/// Each of two agents must respond strictly before the other.
pub fn unsatisfiable() -> ScenarioSpec {
    let s = base("unsatisfiable", letters(2), vec![0], [0, 1]);
    fill(s, |_, _| Delta::Finite(-1))
}
