//! Graphical construction of the renewal contact process on a finite box.
//!
//! Every vertex `x` carries its own renewal process of recovery marks and two
//! Poisson(λ) arrow processes (towards `x+1` and `x−1`). Each of these sources
//! draws from its own stream, indexed by the absolute vertex, so the sample
//! on a sub-range is exactly the restriction of the sample on a larger range.

mod evolve;
mod sample;
mod survival;

pub use evolve::{
    evolve, evolve_window, has_infection_path, has_infection_path_within, EventKind, Trajectory,
    TrajectoryEvent,
};
pub use sample::{build_graphical_sample, GraphicalSample};
pub use survival::{
    estimate_lambda_c, simulate_trial, survival_probability, LambdaCEstimate, SurvivalEstimate,
    TrialOutcome, DEFAULT_MAX_EVENTS,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Closed integer interval `[lo, hi]` of sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct VertexRange {
    pub lo: i64,
    pub hi: i64,
}

impl VertexRange {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid("range", format!("empty range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// `[−L, L]`.
    pub fn symmetric(half_width: u32) -> Self {
        Self { lo: -(half_width as i64), hi: half_width as i64 }
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn len(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn covers(&self, other: &VertexRange) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub(crate) fn index(&self, x: i64) -> usize {
        (x - self.lo) as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> {
        self.lo..=self.hi
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Source {
    Marks = 0,
    Right = 1,
    Left = 2,
}

pub(crate) fn source_id(x: i64, source: Source) -> u64 {
    let zigzag = ((x << 1) ^ (x >> 63)) as u64;
    3 * zigzag + source as u64
}
