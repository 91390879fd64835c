//! Events as dense point sets and the temporal operators over them.
//!
//! An [`Event`] is a membership table over `runs × {0..=H}` stored one bit per
//! point, row-major by run. Every event remembers the universe it was cut
//! from; mixing events of different universes is a programming error and
//! panics.
//!
//! Times outside `{0..=H}` are never members. For the exact shift this means
//! a point whose shifted time leaves the horizon is dropped, so algebraic laws
//! that move points across the boundary only hold on interior points.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

static NEXT_UNIVERSE: AtomicU64 = AtomicU64::new(1);

/// Identity of a universe; events are comparable only within one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UniverseId(u64);

impl UniverseId {
    pub(crate) fn fresh() -> Self {
        UniverseId(NEXT_UNIVERSE.fetch_add(1, Ordering::Relaxed))
    }
}

/// A `(run, time)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub run: usize,
    pub time: usize,
}

impl Point {
    pub fn new(run: usize, time: usize) -> Self {
        Point { run, time }
    }
}

/// A time difference: an integer or `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Delta {
    Finite(i64),
    Infinite,
}

impl Delta {
    pub fn is_finite(self) -> bool {
        matches!(self, Delta::Finite(_))
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            Delta::Finite(v) => Some(v),
            Delta::Infinite => None,
        }
    }

    /// Sum in `ℤ ∪ {∞}`.
    pub fn plus(self, other: Delta) -> Delta {
        match (self, other) {
            (Delta::Finite(a), Delta::Finite(b)) => Delta::Finite(a + b),
            _ => Delta::Infinite,
        }
    }
}

impl PartialOrd for Delta {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Delta {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Delta::Finite(a), Delta::Finite(b)) => a.cmp(b),
            (Delta::Finite(_), Delta::Infinite) => Less,
            (Delta::Infinite, Delta::Finite(_)) => Greater,
            (Delta::Infinite, Delta::Infinite) => Equal,
        }
    }
}

impl From<i64> for Delta {
    fn from(v: i64) -> Self {
        Delta::Finite(v)
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Delta::Finite(v) => write!(f, "{v}"),
            Delta::Infinite => f.write_str("inf"),
        }
    }
}

// Serialized as an integer or the string "inf".
impl Serialize for Delta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Delta::Finite(v) => s.serialize_i64(*v),
            Delta::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Delta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct DeltaVisitor;

        impl Visitor<'_> for DeltaVisitor {
            type Value = Delta;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or \"inf\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Delta, E> {
                Ok(Delta::Finite(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Delta, E> {
                i64::try_from(v)
                    .map(Delta::Finite)
                    .map_err(|_| E::custom("delta out of range"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Delta, E> {
                match v {
                    "inf" | "∞" | "infinity" => Ok(Delta::Infinite),
                    other => Err(E::custom(format!("expected \"inf\", got {other:?}"))),
                }
            }
        }

        d.deserialize_any(DeltaVisitor)
    }
}

/// A set of points of one universe.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Event {
    universe: UniverseId,
    runs: usize,
    times: usize,
    words: Vec<u64>,
}

impl Event {
    pub(crate) fn empty_in(universe: UniverseId, runs: usize, times: usize) -> Self {
        let words = vec![0; (runs * times).div_ceil(64)];
        Event {
            universe,
            runs,
            times,
            words,
        }
    }

    pub(crate) fn full_in(universe: UniverseId, runs: usize, times: usize) -> Self {
        let mut e = Self::empty_in(universe, runs, times);
        for w in e.words.iter_mut() {
            *w = u64::MAX;
        }
        e.trim();
        e
    }

    fn trim(&mut self) {
        let n = self.runs * self.times;
        let rem = n % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    /// An event of the same universe whose members are the set bits of
    /// `bits`, by point index. Only for carriers of at most 64 points.
    pub(crate) fn from_word(&self, bits: u64) -> Self {
        assert!(self.capacity() <= 64);
        let mut e = self.cleared();
        if let Some(w) = e.words.first_mut() {
            *w = bits;
        }
        e.trim();
        e
    }

    /// An event of the same universe with no members.
    pub fn cleared(&self) -> Self {
        Self::empty_in(self.universe, self.runs, self.times)
    }

    /// The whole carrier `Ω` of this event's universe.
    pub fn whole(&self) -> Self {
        Self::full_in(self.universe, self.runs, self.times)
    }

    pub fn universe(&self) -> UniverseId {
        self.universe
    }

    pub fn runs(&self) -> usize {
        self.runs
    }

    pub fn horizon(&self) -> usize {
        self.times - 1
    }

    /// Number of points of the carrier.
    pub fn capacity(&self) -> usize {
        self.runs * self.times
    }

    #[inline]
    pub(crate) fn index(&self, run: usize, time: usize) -> usize {
        debug_assert!(run < self.runs && time < self.times);
        run * self.times + time
    }

    #[inline]
    pub(crate) fn get_index(&self, idx: usize) -> bool {
        self.words[idx / 64] >> (idx % 64) & 1 == 1
    }

    #[inline]
    pub(crate) fn set_index(&mut self, idx: usize) {
        self.words[idx / 64] |= 1 << (idx % 64);
    }

    pub(crate) fn point_of(&self, idx: usize) -> Point {
        Point::new(idx / self.times, idx % self.times)
    }

    pub fn contains(&self, run: usize, time: usize) -> bool {
        run < self.runs && time < self.times && self.get_index(self.index(run, time))
    }

    pub fn contains_point(&self, p: Point) -> bool {
        self.contains(p.run, p.time)
    }

    /// Adds a point. Panics when the point lies outside the universe.
    pub fn insert(&mut self, run: usize, time: usize) {
        assert!(
            run < self.runs && time < self.times,
            "point ({run}, {time}) outside universe"
        );
        let idx = self.index(run, time);
        self.set_index(idx);
    }

    pub fn remove(&mut self, run: usize, time: usize) {
        if run < self.runs && time < self.times {
            let idx = self.index(run, time);
            self.words[idx / 64] &= !(1 << (idx % 64));
        }
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.len() == self.capacity()
    }

    /// Member points in `(run, time)` order.
    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + b)
            })
            .map(move |idx| self.point_of(idx))
        })
    }

    /// Member times of one run, ascending.
    pub fn times_in_run(&self, run: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.times).filter(move |&t| self.contains(run, t))
    }

    /// First time at which the event holds in `run`.
    pub fn first_time(&self, run: usize) -> Option<usize> {
        self.times_in_run(run).next()
    }

    pub fn holds_in_run(&self, run: usize) -> bool {
        self.first_time(run).is_some()
    }

    fn check_same(&self, other: &Event) {
        assert!(
            self.universe == other.universe,
            "events belong to different universes"
        );
    }

    pub fn same_universe(&self, other: &Event) -> bool {
        self.universe == other.universe
    }

    pub fn union(&self, other: &Event) -> Event {
        self.check_same(other);
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        out
    }

    pub fn intersection(&self, other: &Event) -> Event {
        self.check_same(other);
        let mut out = self.clone();
        out.intersect_with(other);
        out
    }

    pub fn intersect_with(&mut self, other: &Event) {
        self.check_same(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    pub fn union_with(&mut self, other: &Event) {
        self.check_same(other);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn difference(&self, other: &Event) -> Event {
        self.check_same(other);
        let mut out = self.clone();
        for (a, b) in out.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        out
    }

    pub fn complement(&self) -> Event {
        let mut out = self.clone();
        for w in out.words.iter_mut() {
            *w = !*w;
        }
        out.trim();
        out
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.check_same(other);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    /// Some member of `self` that is not in `other`.
    pub fn witness_outside(&self, other: &Event) -> Option<Point> {
        self.difference(other).points().next()
    }

    fn map_runs(&self, mut f: impl FnMut(usize, &mut Event)) -> Event {
        let mut out = self.cleared();
        for run in 0..self.runs {
            f(run, &mut out);
        }
        out
    }

    /// `◇e`: the run-constant event holding throughout every run in which
    /// `e` ever holds.
    pub fn eventually(&self) -> Event {
        self.map_runs(|run, out| {
            if self.holds_in_run(run) {
                for t in 0..self.times {
                    out.insert(run, t);
                }
            }
        })
    }

    /// `⊙^ε e`: holds at `(r, t)` iff `e` holds at `(r, t + ε)`, with
    /// `t + ε` inside the horizon.
    pub fn shift_exact(&self, offset: i64) -> Event {
        let h = self.horizon() as i64;
        self.map_runs(|run, out| {
            for t in 0..self.times {
                let target = t as i64 + offset;
                if (0..=h).contains(&target) && self.contains(run, target as usize) {
                    out.insert(run, t);
                }
            }
        })
    }

    /// [`shift_exact`](Self::shift_exact) taking a [`Delta`]; `∞` is rejected.
    pub fn shift_exact_by(&self, offset: Delta) -> Result<Event> {
        match offset {
            Delta::Finite(v) => Ok(self.shift_exact(v)),
            Delta::Infinite => Err(Error::InfiniteShift),
        }
    }

    /// Exact shift that reads past the horizon as the horizon itself.
    ///
    /// Holds at `(r, t)` iff `t + ε ≥ 0` and `e` holds at
    /// `(r, min(t + ε, H))`. For a stable `e` this is the exact shift in the
    /// extension of the universe that stays quiescent after `H`, and
    /// `shift_saturating(within(e, 0), ε) = within(e, ε)` at every point.
    pub fn shift_saturating(&self, offset: i64) -> Event {
        let h = self.horizon() as i64;
        self.map_runs(|run, out| {
            for t in 0..self.times {
                let target = t as i64 + offset;
                if target >= 0 && self.contains(run, target.min(h) as usize) {
                    out.insert(run, t);
                }
            }
        })
    }

    /// `⊙^{≤ε} e`: holds at `(r, t)` iff `e` holds in `r` at some
    /// `t' ≤ t + ε`. With `ε = ∞` this is [`eventually`](Self::eventually).
    pub fn within(&self, bound: Delta) -> Event {
        let offset = match bound {
            Delta::Infinite => return self.eventually(),
            Delta::Finite(v) => v,
        };
        self.map_runs(|run, out| {
            if let Some(first) = self.first_time(run) {
                // t + ε ≥ first
                let from = (first as i64 - offset).max(0);
                for t in (from as usize)..self.times {
                    out.insert(run, t);
                }
            }
        })
    }

    /// Stable events hold forever once they hold: `e = within(e, 0)`.
    pub fn is_stable(&self) -> bool {
        *self == self.within(Delta::Finite(0))
    }
}

impl fmt::Debug for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.points().map(|p| (p.run, p.time)))
            .finish()
    }
}
