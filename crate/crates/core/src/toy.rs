//! Small hand-checkable universes.
//!
//! `u2` has agents `a`, `b`, runs `r0`, `r1` and horizon 3. A bit is 0 in
//! `r0` and 1 in `r1`; `a` sees it from time 1, `b` from time 2.

use crate::universe::{AgentId, Universe, UniverseBuilder};

fn bit_seen(run_bit: u8, from: usize, t: usize) -> String {
    if t >= from {
        run_bit.to_string()
    } else {
        "-".to_string()
    }
}

fn build(forget: bool) -> Universe {
    let state = |bit: u8| {
        move |agent: AgentId, t: usize| match agent.0 {
            0 if forget && t >= 2 => "-".to_string(),
            0 => bit_seen(bit, 1, t),
            _ => bit_seen(bit, 2, t),
        }
    };
    UniverseBuilder::new(["a", "b"], 3)
        .run_with("r0", state(0))
        .run_with("r1", state(1))
        .build()
        .expect("toy universe is well formed")
}

pub fn u2() -> Universe {
    build(false)
}

/// `u2` where `a` loses its observation again from time 2 on.
pub fn u2_forgetting() -> Universe {
    build(true)
}
