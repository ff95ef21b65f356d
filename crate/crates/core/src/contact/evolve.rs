use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::Serialize;

use super::{GraphicalSample, VertexRange};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Infected,
    Recovered,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Infected => "infected",
            EventKind::Recovered => "recovered",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub vertex: i64,
    pub kind: EventKind,
}

/// Event log of `ξ_t^A` on a box; infected sets are rebuilt on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    range: VertexRange,
    horizon: f64,
    initial: Vec<i64>,
    events: Vec<TrajectoryEvent>,
    boundary_hit: Option<f64>,
}

impl Trajectory {
    pub fn initial(&self) -> &[i64] {
        &self.initial
    }

    pub fn events(&self) -> &[TrajectoryEvent] {
        &self.events
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// First time an end vertex of the box was infected.
    pub fn boundary_hit(&self) -> Option<f64> {
        self.boundary_hit
    }

    /// `ξ_t` including every event at times `≤ t`, sorted.
    pub fn state_at(&self, t: f64) -> Vec<i64> {
        self.replay(|e| e.time <= t)
    }

    /// `ξ_{t−}`: events strictly before `t`.
    pub fn state_before(&self, t: f64) -> Vec<i64> {
        self.replay(|e| e.time < t)
    }

    pub fn final_state(&self) -> Vec<i64> {
        self.state_at(f64::INFINITY)
    }

    /// `ξ_t` at each of the increasing `times`, in one pass.
    pub fn states_at(&self, times: &[f64]) -> Vec<Vec<i64>> {
        let mut infected = self.initial_mask();
        let mut out = Vec::with_capacity(times.len());
        let mut next = 0;
        for &t in times {
            while next < self.events.len() && self.events[next].time <= t {
                self.apply(&mut infected, &self.events[next]);
                next += 1;
            }
            out.push(self.collect(&infected));
        }
        out
    }

    /// Time at which the infected set first became empty.
    pub fn extinction_time(&self) -> Option<f64> {
        let mut infected = self.initial_mask();
        let mut count = self.initial.len();
        if count == 0 {
            return Some(0.0);
        }
        for e in &self.events {
            let i = self.range.index(e.vertex);
            match e.kind {
                EventKind::Infected if !infected[i] => count += 1,
                EventKind::Recovered if infected[i] => count -= 1,
                _ => {}
            }
            self.apply(&mut infected, e);
            if count == 0 {
                return Some(e.time);
            }
        }
        None
    }

    fn initial_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.range.len()];
        for &x in &self.initial {
            mask[self.range.index(x)] = true;
        }
        mask
    }

    fn apply(&self, infected: &mut [bool], e: &TrajectoryEvent) {
        infected[self.range.index(e.vertex)] = e.kind == EventKind::Infected;
    }

    fn collect(&self, infected: &[bool]) -> Vec<i64> {
        self.range.iter().zip(infected).filter(|(_, &on)| on).map(|(x, _)| x).collect()
    }

    fn replay(&self, keep: impl Fn(&TrajectoryEvent) -> bool) -> Vec<i64> {
        let mut infected = self.initial_mask();
        for e in self.events.iter().take_while(|e| keep(e)) {
            self.apply(&mut infected, e);
        }
        self.collect(&infected)
    }
}

/// One pending event source: a sorted slice and a cursor into it.
#[derive(Clone, Copy)]
struct Source<'a> {
    times: &'a [f64],
    pos: usize,
    /// 0 = recovery at `from`, 1 = arrow `from → to`.
    rank: u8,
    from: i64,
    to: i64,
}

struct Head<'a>(Source<'a>);

impl Head<'_> {
    fn key(&self) -> (f64, u8) {
        (self.0.times[self.0.pos], self.0.rank)
    }
}

impl PartialEq for Head<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Head<'_> {}
impl PartialOrd for Head<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Head<'_> {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        let (ta, ra) = self.key();
        let (tb, rb) = other.key();
        tb.total_cmp(&ta).then(rb.cmp(&ra))
    }
}

/// k-way merge of the mark and arrow lists restricted to `range` and `(start, end)`,
/// or `(start, end]` when `inclusive`. Ties: recoveries before arrows.
struct EventMerge<'a> {
    heap: BinaryHeap<Head<'a>>,
    end: f64,
    inclusive: bool,
}

impl<'a> EventMerge<'a> {
    fn new(sample: &'a GraphicalSample, range: VertexRange, start: f64, end: f64, inclusive: bool) -> Self {
        let mut heap = BinaryHeap::new();
        let mut push = |times: &'a [f64], rank, from, to| {
            let pos = times.partition_point(|&t| t <= start);
            if pos < times.len() {
                heap.push(Head(Source { times, pos, rank, from, to }));
            }
        };
        for x in range.iter() {
            push(sample.marks(x), 0, x, x);
            if x < range.hi {
                push(sample.right_arrows(x), 1, x, x + 1);
            }
            if x > range.lo {
                push(sample.left_arrows(x), 1, x, x - 1);
            }
        }
        Self { heap, end, inclusive }
    }
}

impl Iterator for EventMerge<'_> {
    /// `(time, rank, from, to)`
    type Item = (f64, u8, i64, i64);

    fn next(&mut self) -> Option<Self::Item> {
        let mut head = self.heap.pop()?;
        let t = head.0.times[head.0.pos];
        if t > self.end || (!self.inclusive && t == self.end) {
            self.heap.clear();
            return None;
        }
        let item = (t, head.0.rank, head.0.from, head.0.to);
        head.0.pos += 1;
        if head.0.pos < head.0.times.len() {
            self.heap.push(head);
        }
        Some(item)
    }
}

/// Replays the merged event stream. Marks at equal times are applied
/// before arrows, and arrows at a common time all read the post-recovery
/// state, so infection never chains within one instant.
fn run(
    sample: &GraphicalSample,
    range: VertexRange,
    initial: &[i64],
    start: f64,
    end: f64,
    inclusive: bool,
    mut log: Option<&mut Vec<TrajectoryEvent>>,
) -> Vec<bool> {
    let mut infected = vec![false; range.len()];
    let mut since = vec![f64::NEG_INFINITY; range.len()];
    for &x in initial {
        infected[range.index(x)] = true;
    }
    for (t, rank, from, to) in EventMerge::new(sample, range, start, end, inclusive) {
        let i = range.index(from);
        if rank == 0 {
            if infected[i] && since[i] < t {
                infected[i] = false;
                if let Some(log) = log.as_deref_mut() {
                    log.push(TrajectoryEvent { time: t, vertex: from, kind: EventKind::Recovered });
                }
            }
        } else if infected[i] && since[i] < t {
            let j = range.index(to);
            if !infected[j] {
                infected[j] = true;
                since[j] = t;
                if let Some(log) = log.as_deref_mut() {
                    log.push(TrajectoryEvent { time: t, vertex: to, kind: EventKind::Infected });
                }
            }
        }
    }
    infected
}

fn check_initial(range: VertexRange, initial: &[i64]) -> Result<Vec<i64>> {
    if let Some(&x) = initial.iter().find(|&&x| !range.contains(x)) {
        return Err(Error::invalid("initial", format!("vertex {x} outside the box")));
    }
    let mut v = initial.to_vec();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// Runs the process on the whole sample from `ξ_0 = initial` up to the horizon.
pub fn evolve(sample: &GraphicalSample, initial: &[i64]) -> Result<Trajectory> {
    let range = sample.range();
    let initial = check_initial(range, initial)?;
    let mut events = Vec::new();
    run(sample, range, &initial, 0.0, sample.horizon(), true, Some(&mut events));
    let is_end = |x: i64| x == range.lo || x == range.hi;
    let boundary_hit = if initial.iter().any(|&x| is_end(x)) {
        Some(0.0)
    } else {
        events
            .iter()
            .find(|e| e.kind == EventKind::Infected && is_end(e.vertex))
            .map(|e| e.time)
    };
    Ok(Trajectory { range, horizon: sample.horizon(), initial, events, boundary_hit })
}

/// Sites infected just before `t` when `initial` is infected at `s` and only
/// events of `range × (s, t)` are used.
pub fn evolve_window(
    sample: &GraphicalSample,
    range: VertexRange,
    initial: &[i64],
    s: f64,
    t: f64,
) -> Result<Vec<i64>> {
    if !sample.range().covers(&range) {
        return Err(Error::invalid("range", "window range is not inside the sample box"));
    }
    if !(s < t) {
        return Err(Error::invalid("interval", "need s < t"));
    }
    let initial = check_initial(range, initial)?;
    let infected = run(sample, range, &initial, s, t, false, None);
    Ok(range.iter().zip(infected).filter(|(_, on)| *on).map(|(x, _)| x).collect())
}

/// Whether an infection path leads from `(x, s)` to `(y, t)` through the
/// events strictly inside `(s, t)`.
pub fn has_infection_path(sample: &GraphicalSample, from: (i64, f64), to: (i64, f64)) -> Result<bool> {
    has_infection_path_within(sample, sample.range(), from, to)
}

/// As [`has_infection_path`], with the path confined to `range`.
pub fn has_infection_path_within(
    sample: &GraphicalSample,
    range: VertexRange,
    from: (i64, f64),
    to: (i64, f64),
) -> Result<bool> {
    if !range.contains(to.0) {
        return Err(Error::invalid("to", format!("vertex {} outside the range", to.0)));
    }
    Ok(evolve_window(sample, range, &[from.0], from.1, to.1)?.binary_search(&to.0).is_ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contact::build_graphical_sample;
    use crate::distributions::InterarrivalSpec;
    use proptest::prelude::*;

    fn empty(lo: i64, hi: i64, horizon: f64) -> GraphicalSample {
        GraphicalSample::empty(VertexRange::new(lo, hi).unwrap(), horizon).unwrap()
    }

    #[test]
    fn empty_initial_stays_empty() {
        let spec = InterarrivalSpec::exponential(1.0).unwrap();
        let s = build_graphical_sample(&spec, 2.0, 5, 5.0, 1).unwrap();
        let tr = evolve(&s, &[]).unwrap();
        assert!(tr.events().is_empty());
        assert!(tr.state_at(3.0).is_empty());
    }

    #[test]
    fn degenerate_law_dies_at_its_atom() {
        let spec = InterarrivalSpec::degenerate(1.5).unwrap();
        let s = build_graphical_sample(&spec, 0.0, 3, 4.0, 2).unwrap();
        let tr = evolve(&s, &[0]).unwrap();
        assert_eq!(tr.extinction_time(), Some(1.5));
        assert_eq!(tr.state_before(1.5), vec![0]);
        assert!(tr.state_at(1.5).is_empty());
    }

    #[test]
    fn single_arrow_spreads() {
        let s = empty(-2, 2, 2.0)
            .with_marks(0, vec![])
            .unwrap()
            .with_arrows(0, 1, vec![0.5])
            .unwrap();
        let tr = evolve(&s, &[0]).unwrap();
        assert_eq!(tr.state_at(2.0), vec![0, 1]);
        assert_eq!(tr.state_before(0.5), vec![0]);
        assert_eq!(tr.state_at(0.5), vec![0, 1]);
    }

    #[test]
    fn marks_outside_horizon_are_rejected_but_late_marks_do_nothing() {
        let s = empty(-1, 1, 4.0).with_marks(0, vec![3.0]).unwrap().with_arrows(0, 1, vec![0.5]).unwrap();
        let tr = evolve(&s, &[0]).unwrap();
        assert_eq!(tr.state_at(2.0), vec![0, 1]);
        assert_eq!(tr.state_at(3.0), vec![1]);
    }

    #[test]
    fn recovery_before_arrow_at_equal_times() {
        // 0 recovers at 1 and the arrow 0 → 1 at 1 reads the post-recovery state
        let s = empty(-2, 2, 2.0).with_marks(0, vec![1.0]).unwrap().with_arrows(0, 1, vec![1.0]).unwrap();
        assert!(evolve(&s, &[0]).unwrap().final_state().is_empty());
        // 1 is reinfected at the instant of its own mark and survives it
        let s = empty(-2, 2, 2.0).with_marks(1, vec![1.0]).unwrap().with_arrows(0, 1, vec![1.0]).unwrap();
        assert_eq!(evolve(&s, &[0, 1]).unwrap().final_state(), vec![0, 1]);
    }

    #[test]
    fn no_chaining_within_an_instant() {
        let s = empty(-1, 3, 2.0)
            .with_arrows(0, 1, vec![1.0])
            .unwrap()
            .with_arrows(1, 2, vec![1.0])
            .unwrap();
        assert_eq!(evolve(&s, &[0]).unwrap().final_state(), vec![0, 1]);
    }

    #[test]
    fn path_examples() {
        let s = empty(-1, 1, 5.0);
        assert!(has_infection_path(&s, (0, 1.0), (0, 3.0)).unwrap());
        let s = s.with_marks(0, vec![2.0]).unwrap();
        assert!(!has_infection_path(&s, (0, 1.0), (0, 3.0)).unwrap());
        // marks on the window ends do not count
        assert!(has_infection_path(&s, (0, 2.0), (0, 3.0)).unwrap());
        assert!(has_infection_path(&s, (0, 1.0), (0, 2.0)).unwrap());
    }

    #[test]
    fn rightward_staircase() {
        // M = 3: arrows along 0 → 1 → … → 5 at increasing times inside (0, 1)
        let mut s = empty(-1, 7, 2.0);
        for x in 0..5 {
            s = s.with_arrows(x, x + 1, vec![0.1 + 0.15 * x as f64]).unwrap();
        }
        assert!(has_infection_path(&s, (0, 0.0), (5, 1.0)).unwrap());
        assert!(!has_infection_path(&s, (0, 0.0), (6, 1.0)).unwrap());
        // out of order arrows do not make a path
        let s = empty(-1, 7, 2.0)
            .with_arrows(0, 1, vec![0.6])
            .unwrap()
            .with_arrows(1, 2, vec![0.3])
            .unwrap();
        assert!(!has_infection_path(&s, (0, 0.0), (2, 1.0)).unwrap());
    }

    #[test]
    fn within_restricts_the_path() {
        // 0 → -1 → 0 → 1 detour needed since 0 holds a mark at 0.5
        let s = empty(-2, 2, 2.0)
            .with_arrows(0, -1, vec![0.2])
            .unwrap()
            .with_marks(0, vec![0.5])
            .unwrap()
            .with_arrows(-1, 0, vec![0.7])
            .unwrap()
            .with_arrows(0, 1, vec![0.8])
            .unwrap();
        assert!(has_infection_path(&s, (0, 0.0), (1, 1.0)).unwrap());
        let r = VertexRange::new(0, 1).unwrap();
        assert!(!has_infection_path_within(&s, r, (0, 0.0), (1, 1.0)).unwrap());
    }

    #[test]
    fn states_at_matches_state_at() {
        let spec = InterarrivalSpec::exponential(1.0).unwrap();
        let s = build_graphical_sample(&spec, 2.5, 10, 6.0, 8).unwrap();
        let tr = evolve(&s, &[0]).unwrap();
        let times: Vec<f64> = (0..=12).map(|i| i as f64 * 0.5).collect();
        let batch = tr.states_at(&times);
        for (t, st) in times.iter().zip(batch) {
            assert_eq!(tr.state_at(*t), st);
        }
    }

    /// Reachability by explicit search over space-time segments.
    fn brute_force_path(s: &GraphicalSample, x: i64, s0: f64, y: i64, t0: f64) -> bool {
        // state: (vertex, entry time); from there stay until the next mark in (entry, t0)
        let mut stack = vec![(x, s0)];
        let mut seen: Vec<(i64, f64)> = Vec::new();
        while let Some((v, u)) = stack.pop() {
            // an earlier entry with no mark in (r, u] already covers this one
            let dominated = seen
                .iter()
                .any(|&(w, r)| w == v && r <= u && !s.marks(v).iter().any(|&m| m > r && m <= u));
            if dominated {
                continue;
            }
            seen.push((v, u));
            let death = s.marks(v).iter().copied().find(|&m| m > u && m < t0).unwrap_or(t0);
            if v == y && death == t0 {
                return true;
            }
            for w in [v - 1, v + 1] {
                if !s.range().contains(w) {
                    continue;
                }
                for &a in s.arrows(v, w) {
                    // leave strictly after entering, before dying (marks first at ties)
                    if a > u && a < death && a < t0 {
                        stack.push((w, a));
                    }
                }
            }
        }
        false
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn path_search_agrees_with_evolution(seed in any::<u64>(), lambda in 0.5f64..4.0, s0 in 0.0f64..1.0, len in 0.2f64..2.5) {
            let spec = InterarrivalSpec::exponential(1.0).unwrap();
            let sample = build_graphical_sample(&spec, lambda, 3, 4.0, seed).unwrap();
            let t0 = s0 + len;
            for y in -3..=3 {
                let fast = has_infection_path(&sample, (0, s0), (y, t0)).unwrap();
                prop_assert_eq!(fast, brute_force_path(&sample, 0, s0, y, t0), "y = {}", y);
                // and against ξ_{t0−} of the forward run from {0} at s0
                let state = evolve_window(&sample, sample.range(), &[0], s0, t0).unwrap();
                prop_assert_eq!(fast, state.contains(&y));
            }
        }

        #[test]
        fn attractive_in_initial_set(seed in any::<u64>(), a in proptest::collection::btree_set(-4i64..=4, 0..4), extra in proptest::collection::btree_set(-4i64..=4, 0..4)) {
            let spec = InterarrivalSpec::uniform(0.2, 1.8).unwrap();
            let sample = build_graphical_sample(&spec, 2.0, 4, 5.0, seed).unwrap();
            let small: Vec<i64> = a.iter().copied().collect();
            let big: Vec<i64> = a.union(&extra).copied().collect();
            let ta = evolve(&sample, &small).unwrap();
            let tb = evolve(&sample, &big).unwrap();
            let mut times: Vec<f64> = ta.events().iter().chain(tb.events()).map(|e| e.time).collect();
            times.sort_by(f64::total_cmp);
            for (sa, sb) in ta.states_at(&times).iter().zip(tb.states_at(&times)) {
                prop_assert!(sa.iter().all(|x| sb.contains(x)));
            }
        }
    }
}
