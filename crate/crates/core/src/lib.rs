//! Timely common knowledge over finite systems of runs.
//!
//! The crate evaluates temporal and epistemic operators over a finite
//! [`Universe`], computes timely common knowledge as the greatest fixed
//! point of a vectorial function on agent-indexed event tuples, and uses it
//! to decide, synthesize and verify time-optimal coordinated responses.
//!
//! ```
//! use timely_ck::toy;
//!
//! let u = toy::u2();
//! let group: Vec<_> = u.agent_ids().collect();
//! let psi = u.run_event(1);
//! let ck = u.common_knowledge(&group, &psi).unwrap();
//! assert_eq!(ck, u.event_from_fn(|r, t| r == 1 && t >= 2));
//! ```

pub mod coordination;
pub mod error;
pub mod event;
pub mod fixed_point;
pub mod nested;
pub mod props;
pub mod random;
pub mod scenario;
pub mod toy;
pub mod universe;

pub use error::{Error, Result};
pub use event::{Delta, Event, Point, UniverseId};
pub use fixed_point::{EventTuple, TimingSpec};
pub use universe::{AgentId, SyncMode, Universe, UniverseBuilder, UniverseDoc};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    struct Introduction;
    #[doc = include_str!("../../../book/src/events.md")]
    struct Events;
    #[doc = include_str!("../../../book/src/fixed-points.md")]
    struct FixedPoints;
    #[doc = include_str!("../../../book/src/coordination.md")]
    struct Coordination;
    #[doc = include_str!("../../../book/src/nested.md")]
    struct Nested;
    #[doc = include_str!("../../../book/src/response.md")]
    struct Response;
    #[doc = include_str!("../../../book/src/properties.md")]
    struct Properties;
    #[doc = include_str!("../../../book/src/cli.md")]
    struct Cli;
}
