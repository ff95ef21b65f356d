use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::{source_id, Source, VertexRange};
use crate::distributions::{sample_renewal_marks_capped, InterarrivalSpec, DEFAULT_MARK_CAP};
use crate::error::{Error, Result};
use crate::rng::{derive_stream, Stream};

/// One realisation of recovery marks and infection arrows on `range × (0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphicalSample {
    range: VertexRange,
    horizon: f64,
    lambda: f64,
    seed: Option<u64>,
    marks: Vec<Vec<f64>>,
    /// `right[i]`: arrows from `lo + i` to `lo + i + 1`.
    right: Vec<Vec<f64>>,
    /// `left[i]`: arrows from `lo + i` to `lo + i − 1`.
    left: Vec<Vec<f64>>,
}

/// Arrival times of a rate-`λ` Poisson process, one exponential gap per call.
pub(crate) struct PoissonClock {
    exp: Option<Exp<f64>>,
    time: f64,
}

impl PoissonClock {
    pub(crate) fn new(rate: f64) -> Self {
        Self { exp: (rate > 0.0).then(|| Exp::new(rate).expect("positive rate")), time: 0.0 }
    }

    pub(crate) fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> f64 {
        match &self.exp {
            Some(exp) => {
                self.time += exp.sample(rng);
                self.time
            }
            None => f64::INFINITY,
        }
    }
}

pub(crate) fn mark_stream(seed: u64, x: i64) -> Stream {
    derive_stream(seed, source_id(x, Source::Marks))
}

pub(crate) fn arrow_stream(seed: u64, x: i64, rightward: bool) -> Stream {
    derive_stream(seed, source_id(x, if rightward { Source::Right } else { Source::Left }))
}

fn poisson_times(seed: u64, x: i64, rightward: bool, lambda: f64, horizon: f64) -> Vec<f64> {
    let mut rng = arrow_stream(seed, x, rightward);
    let mut clock = PoissonClock::new(lambda);
    let mut out = Vec::new();
    loop {
        let t = clock.next(&mut rng);
        if t > horizon {
            return out;
        }
        out.push(t);
    }
}

fn check_times(times: &[f64], horizon: f64, what: &str) -> Result<()> {
    if times.iter().any(|&t| !(t > 0.0 && t <= horizon)) {
        return Err(Error::invalid(what, format!("times must lie in (0, {horizon}]")));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(what, "times must be strictly increasing"));
    }
    Ok(())
}

impl GraphicalSample {
    pub fn build(
        spec: &InterarrivalSpec,
        lambda: f64,
        range: VertexRange,
        horizon: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda", "must be non-negative and finite"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive and finite"));
        }
        let n = range.len();
        let expected_arrows = 2.0 * n as f64 * lambda * horizon;
        if expected_arrows > DEFAULT_MARK_CAP as f64 {
            return Err(Error::Resource(format!(
                "expected {expected_arrows:.3e} arrows exceeds cap {DEFAULT_MARK_CAP}"
            )));
        }
        let mut total = 0usize;
        let mut marks = Vec::with_capacity(n);
        for x in range.iter() {
            let m = sample_renewal_marks_capped(spec, horizon, &mut mark_stream(seed, x), DEFAULT_MARK_CAP - total)?;
            total += m.len();
            marks.push(m);
        }
        let right = range
            .iter()
            .map(|x| if x < range.hi { poisson_times(seed, x, true, lambda, horizon) } else { Vec::new() })
            .collect();
        let left = range
            .iter()
            .map(|x| if x > range.lo { poisson_times(seed, x, false, lambda, horizon) } else { Vec::new() })
            .collect();
        Ok(Self { range, horizon, lambda, seed: Some(seed), marks, right, left })
    }

    /// A sample with no marks and no arrows, to be filled in by hand.
    pub fn empty(range: VertexRange, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("horizon", "must be positive and finite"));
        }
        let n = range.len();
        Ok(Self {
            range,
            horizon,
            lambda: 0.0,
            seed: None,
            marks: vec![Vec::new(); n],
            right: vec![Vec::new(); n],
            left: vec![Vec::new(); n],
        })
    }

    pub fn with_marks(mut self, x: i64, times: Vec<f64>) -> Result<Self> {
        if !self.range.contains(x) {
            return Err(Error::invalid("vertex", format!("{x} outside the box")));
        }
        check_times(&times, self.horizon, "recovery_marks")?;
        let i = self.range.index(x);
        self.marks[i] = times;
        Ok(self)
    }

    /// Sets the arrows from `from` to its neighbour `to`.
    pub fn with_arrows(mut self, from: i64, to: i64, times: Vec<f64>) -> Result<Self> {
        if !(self.range.contains(from) && self.range.contains(to) && (from - to).abs() == 1) {
            return Err(Error::invalid("arrow", format!("{from} -> {to} is not an edge of the box")));
        }
        check_times(&times, self.horizon, "arrows")?;
        let i = self.range.index(from);
        if to > from {
            self.right[i] = times;
        } else {
            self.left[i] = times;
        }
        Ok(self)
    }

    pub fn range(&self) -> VertexRange {
        self.range
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn marks(&self, x: i64) -> &[f64] {
        &self.marks[self.range.index(x)]
    }

    /// Arrows `x → x+1`.
    pub fn right_arrows(&self, x: i64) -> &[f64] {
        &self.right[self.range.index(x)]
    }

    /// Arrows `x → x−1`.
    pub fn left_arrows(&self, x: i64) -> &[f64] {
        &self.left[self.range.index(x)]
    }

    pub fn arrows(&self, from: i64, to: i64) -> &[f64] {
        if to > from {
            self.right_arrows(from)
        } else {
            self.left_arrows(from)
        }
    }

    /// Independent thinning of every arrow to rate `lambda` (≤ the current rate).
    pub fn thinned(&self, lambda: f64, seed: u64) -> Result<Self> {
        if !(0.0..=self.lambda).contains(&lambda) {
            return Err(Error::invalid("lambda", format!("thinned rate must lie in [0, {}]", self.lambda)));
        }
        let keep = if self.lambda > 0.0 { lambda / self.lambda } else { 0.0 };
        let thin = |arrows: &Vec<Vec<f64>>, rightward: bool| -> Vec<Vec<f64>> {
            self.range
                .iter()
                .zip(arrows)
                .map(|(x, times)| {
                    let mut rng = arrow_stream(seed, x, rightward);
                    times.iter().copied().filter(|_| rng.random::<f64>() < keep).collect()
                })
                .collect()
        };
        Ok(Self {
            right: thin(&self.right, true),
            left: thin(&self.left, false),
            lambda,
            ..self.clone()
        })
    }

    pub fn total_events(&self) -> usize {
        [&self.marks, &self.right, &self.left].iter().flat_map(|v| v.iter()).map(Vec::len).sum()
    }
}

/// Sample on the box `[−L, L]` up to time `T`.
pub fn build_graphical_sample(
    spec: &InterarrivalSpec,
    lambda: f64,
    half_width: u32,
    horizon: f64,
    seed: u64,
) -> Result<GraphicalSample> {
    GraphicalSample::build(spec, lambda, VertexRange::symmetric(half_width), horizon, seed)
}
