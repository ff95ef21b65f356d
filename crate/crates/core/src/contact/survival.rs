//! Survival trials that draw marks and arrows only where the infection goes.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::Serialize;

use super::sample::{arrow_stream, mark_stream, PoissonClock};
use crate::distributions::{InterarrivalSpec, RenewalClock};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, Stream};
use crate::stats::Estimate;

pub const DEFAULT_MAX_EVENTS: u64 = 50_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialOutcome {
    /// `ξ_T ≠ ∅`, or the infection reached the end of the box first.
    pub survived: bool,
    pub boundary_hit: bool,
    pub extinction_time: Option<f64>,
    pub events: u64,
}

struct Lazy<'a> {
    rng: Stream,
    clock: RenewalClock<'a>,
    next_mark: f64,
    right_rng: Stream,
    right: PoissonClock,
    next_right: f64,
    left_rng: Stream,
    left: PoissonClock,
    next_left: f64,
}

impl<'a> Lazy<'a> {
    fn new(spec: &'a InterarrivalSpec, lambda: f64, seed: u64, x: i64) -> Self {
        let mut rng = mark_stream(seed, x);
        let mut clock = RenewalClock::new(spec);
        let next_mark = clock.next_epoch(&mut rng);
        let mut right_rng = arrow_stream(seed, x, true);
        let mut right = PoissonClock::new(lambda);
        let next_right = right.next(&mut right_rng);
        let mut left_rng = arrow_stream(seed, x, false);
        let mut left = PoissonClock::new(lambda);
        let next_left = left.next(&mut left_rng);
        Self { rng, clock, next_mark, right_rng, right, next_right, left_rng, left, next_left }
    }

    fn mark_after(&mut self, t: f64) -> f64 {
        while self.next_mark <= t {
            self.next_mark = self.clock.next_epoch(&mut self.rng);
        }
        self.next_mark
    }

    fn arrow_after(&mut self, t: f64, rightward: bool) -> f64 {
        let (rng, clock, next) = if rightward {
            (&mut self.right_rng, &mut self.right, &mut self.next_right)
        } else {
            (&mut self.left_rng, &mut self.left, &mut self.next_left)
        };
        while *next <= t {
            *next = clock.next(rng);
        }
        *next
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Pending {
    time: f64,
    /// 0 recovery, 1 rightward arrow, 2 leftward arrow; recoveries sort first.
    kind: u8,
    vertex: usize,
    generation: u32,
}

impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then((self.kind == 0).cmp(&(other.kind == 0)).reverse())
            .then(self.vertex.cmp(&other.vertex))
            .then(self.kind.cmp(&other.kind))
    }
}

struct Engine<'a> {
    spec: &'a InterarrivalSpec,
    lambda: f64,
    seed: u64,
    half_width: i64,
    horizon: f64,
    sites: Vec<Option<Lazy<'a>>>,
    infected: Vec<bool>,
    generation: Vec<u32>,
    heap: BinaryHeap<Reverse<Pending>>,
}

impl<'a> Engine<'a> {
    fn schedule(&mut self, time: f64, kind: u8, vertex: usize) {
        if time <= self.horizon {
            let generation = self.generation[vertex];
            self.heap.push(Reverse(Pending { time, kind, vertex, generation }));
        }
    }

    /// Infects site `i` at `t`; its mark and arrows at `t` itself are ignored.
    fn infect(&mut self, i: usize, t: f64) {
        self.infected[i] = true;
        self.generation[i] += 1;
        let l = self.half_width;
        let x = i as i64 - l;
        let (spec, lambda, seed) = (self.spec, self.lambda, self.seed);
        let site = self.sites[i].get_or_insert_with(|| Lazy::new(spec, lambda, seed, x));
        let m = site.mark_after(t);
        let right = (x < l).then(|| site.arrow_after(t, true));
        let left = (x > -l).then(|| site.arrow_after(t, false));
        self.schedule(m, 0, i);
        if let Some(a) = right {
            self.schedule(a, 1, i);
        }
        if let Some(a) = left {
            self.schedule(a, 2, i);
        }
    }
}

/// One trial from `ξ_0 = {0}` on `[−L, L]`, with the same event semantics as
/// [`super::evolve`] run on the sample built from `trial_seed`.
pub fn simulate_trial(
    spec: &InterarrivalSpec,
    lambda: f64,
    half_width: u32,
    horizon: f64,
    trial_seed: u64,
    max_events: u64,
) -> Result<TrialOutcome> {
    validate(lambda, half_width, horizon)?;
    let l = half_width as i64;
    let n = (2 * l + 1) as usize;
    let mut engine = Engine {
        spec,
        lambda,
        seed: trial_seed,
        half_width: l,
        horizon,
        sites: (0..n).map(|_| None).collect(),
        infected: vec![false; n],
        generation: vec![0; n],
        heap: BinaryHeap::new(),
    };
    let mut count = 1usize;
    let mut events = 0u64;
    let mut last_time = 0.0;
    engine.infect(l as usize, 0.0);
    while let Some(Reverse(ev)) = engine.heap.pop() {
        let i = ev.vertex;
        if ev.generation != engine.generation[i] || !engine.infected[i] {
            continue;
        }
        events += 1;
        if events > max_events {
            return Err(Error::Resource(format!("more than {max_events} events in one trial")));
        }
        if ev.kind == 0 {
            engine.infected[i] = false;
            engine.generation[i] += 1;
            count -= 1;
            last_time = ev.time;
            if count == 0 {
                break;
            }
            continue;
        }
        let j = if ev.kind == 1 { i + 1 } else { i - 1 };
        if !engine.infected[j] {
            engine.infect(j, ev.time);
            count += 1;
            if j == 0 || j == n - 1 {
                return Ok(TrialOutcome { survived: true, boundary_hit: true, extinction_time: None, events });
            }
        }
        let site = engine.sites[i].as_mut().expect("infected site is initialised");
        let a = site.arrow_after(ev.time, ev.kind == 1);
        engine.schedule(a, ev.kind, i);
    }
    Ok(TrialOutcome {
        survived: count > 0,
        boundary_hit: false,
        extinction_time: (count == 0).then_some(last_time),
        events,
    })
}

fn validate(lambda: f64, half_width: u32, horizon: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", "must be non-negative and finite"));
    }
    if half_width == 0 {
        return Err(Error::invalid("box_half_width", "must be at least 1"));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::invalid("horizon", "must be positive and finite"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub lambda: f64,
    pub survival: Estimate,
    pub boundary_hits: u64,
    pub boundary_fraction: f64,
}

/// Fraction of `trials` with `ξ_T^{{0}} ≠ ∅` (boundary hits counted as survival and
/// reported separately). Trial `i` uses seed `derive_seed(seed, i)`.
pub fn survival_probability(
    spec: &InterarrivalSpec,
    lambda: f64,
    half_width: u32,
    horizon: f64,
    trials: u64,
    seed: u64,
) -> Result<SurvivalEstimate> {
    validate(lambda, half_width, horizon)?;
    if trials == 0 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let (survived, hits) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let o = simulate_trial(spec, lambda, half_width, horizon, derive_seed(seed, i), DEFAULT_MAX_EVENTS)?;
            Ok((o.survived as u64, o.boundary_hit as u64))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    Ok(SurvivalEstimate {
        lambda,
        survival: Estimate::from_counts(survived, trials),
        boundary_hits: hits,
        boundary_fraction: hits as f64 / trials as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LambdaCEstimate {
    pub lambda_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub survival_lo: SurvivalEstimate,
    pub survival_hi: SurvivalEstimate,
    /// Every `(λ, survival)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
}

/// Bisection for the finite-box pseudo-critical rate at which the survival
/// estimate crosses `threshold`, to a bracket width of 5% of the initial one.
/// All evaluations share the same trial seeds.
#[allow(clippy::too_many_arguments)]
pub fn estimate_lambda_c(
    spec: &InterarrivalSpec,
    half_width: u32,
    horizon: f64,
    trials: u64,
    bracket: (f64, f64),
    threshold: f64,
    seed: u64,
) -> Result<LambdaCEstimate> {
    let (mut lo, mut hi) = bracket;
    if !(0.0 <= lo && lo < hi) {
        return Err(Error::invalid("bracket", "need 0 <= lo < hi"));
    }
    if !(0.0 < threshold && threshold < 1.0) {
        return Err(Error::invalid("survival_threshold", "must lie in (0, 1)"));
    }
    let eval = |lambda| survival_probability(spec, lambda, half_width, horizon, trials, seed);
    let mut s_lo = eval(lo)?;
    let mut s_hi = eval(hi)?;
    let mut evaluations = vec![(lo, s_lo.survival.mean), (hi, s_hi.survival.mean)];
    if !(s_lo.survival.mean < threshold && s_hi.survival.mean >= threshold) {
        return Err(Error::Bracket {
            lo,
            hi,
            threshold,
            survival_lo: s_lo.survival.mean,
            survival_hi: s_hi.survival.mean,
        });
    }
    let target = 0.05 * (hi - lo);
    while hi - lo > target {
        let mid = 0.5 * (lo + hi);
        let s = eval(mid)?;
        evaluations.push((mid, s.survival.mean));
        if s.survival.mean < threshold {
            lo = mid;
            s_lo = s;
        } else {
            hi = mid;
            s_hi = s;
        }
    }
    Ok(LambdaCEstimate {
        lambda_hat: 0.5 * (lo + hi),
        lo,
        hi,
        survival_lo: s_lo,
        survival_hi: s_hi,
        evaluations,
    })
}
