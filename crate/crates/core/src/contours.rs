//! Admissible contour paths on the quadrant `ℤ²_{≥0}` and the Peierls series
//! `S(ε) = Σ_{n≥2} (n−1)·3^{n−2}·ε^{n/4}`.
//!
//! An admissible path of length `n` starts at `(0, k)` with `1 ≤ k ≤ n−1`,
//! steps right first, keeps every intermediate vertex at height `≥ 1`, ends
//! with a downward step `(ℓ, 1) → (ℓ, 0)` with `ℓ ≥ 1`, and is self-avoiding.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest `n` accepted by the exhaustive enumerators.
pub const MAX_CONTOUR_LENGTH: usize = 14;

/// Grid side for the visited bitmap; coordinates stay below `n ≤ 14`.
const GRID: usize = 16;

const MOVES: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AdmissiblePath {
    vertices: Vec<(i64, i64)>,
}

impl AdmissiblePath {
    /// Checks all five admissibility conditions.
    pub fn new(vertices: Vec<(i64, i64)>) -> Result<Self> {
        let bad = |r: &str| Err(Error::invalid("path", r.to_string()));
        let n = vertices.len().saturating_sub(1);
        if n < 2 {
            return bad("needs at least two steps");
        }
        let (x0, k) = vertices[0];
        if x0 != 0 || !(1..n as i64).contains(&k) {
            return bad("must start at (0, k) with 1 <= k <= n-1");
        }
        if vertices[1] != (1, k) {
            return bad("first step must be (1, 0)");
        }
        if vertices.iter().any(|&(x, y)| x < 0 || y < 0) {
            return bad("leaves the quadrant");
        }
        if vertices.windows(2).any(|w| (w[1].0 - w[0].0).abs() + (w[1].1 - w[0].1).abs() != 1) {
            return bad("consecutive vertices are not lattice neighbours");
        }
        if vertices[1..n].iter().any(|&(_, y)| y < 1) {
            return bad("an intermediate vertex touches y = 0");
        }
        let (l, y) = vertices[n - 1];
        if y != 1 || l < 1 || vertices[n] != (l, 0) {
            return bad("last step must be (l, 1) -> (l, 0) with l >= 1");
        }
        let mut sorted = vertices.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("not self-avoiding");
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[(i64, i64)] {
        &self.vertices
    }

    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The starting height `k`.
    pub fn start_height(&self) -> i64 {
        self.vertices[0].1
    }
}

fn check_n(n: usize) -> Result<()> {
    if !(2..=MAX_CONTOUR_LENGTH).contains(&n) {
        return Err(Error::invalid("n", format!("must lie in [2, {MAX_CONTOUR_LENGTH}]")));
    }
    Ok(())
}

struct Dfs<'a, F: FnMut(&[(i64, i64)])> {
    n: usize,
    path: Vec<(i64, i64)>,
    visited: [bool; GRID * GRID],
    visit: &'a mut F,
}

impl<F: FnMut(&[(i64, i64)])> Dfs<'_, F> {
    fn slot(x: i64, y: i64) -> usize {
        x as usize * GRID + y as usize
    }

    fn push(&mut self, v: (i64, i64)) {
        self.visited[Self::slot(v.0, v.1)] = true;
        self.path.push(v);
    }

    fn pop(&mut self) {
        let v = self.path.pop().unwrap();
        self.visited[Self::slot(v.0, v.1)] = false;
    }

    /// Extends an intermediate prefix ending at height `≥ 1`.
    fn extend(&mut self) {
        let (x, y) = *self.path.last().unwrap();
        let left = self.n + 1 - self.path.len();
        if left == 1 {
            if y == 1 && x >= 1 {
                self.path.push((x, 0));
                (self.visit)(&self.path);
                self.path.pop();
            }
            return;
        }
        // Descending to y = 1 takes y − 1 steps, then the final step.
        if y > left as i64 {
            return;
        }
        for (dx, dy) in MOVES {
            let (nx, ny) = (x + dx, y + dy);
            if nx < 0 || ny < 1 || self.visited[Self::slot(nx, ny)] {
                continue;
            }
            self.push((nx, ny));
            self.extend();
            self.pop();
        }
    }
}

fn dfs_from_height(n: usize, k: i64, visit: &mut impl FnMut(&[(i64, i64)])) {
    let mut dfs = Dfs { n, path: Vec::with_capacity(n + 1), visited: [false; GRID * GRID], visit };
    dfs.push((0, k));
    dfs.push((1, k));
    dfs.extend();
}

/// Calls `visit` on every admissible path of length `n`, ordered by `k`.
pub fn for_each_contour(n: usize, mut visit: impl FnMut(&[(i64, i64)])) -> Result<()> {
    check_n(n)?;
    for k in 1..n as i64 {
        dfs_from_height(n, k, &mut visit);
    }
    Ok(())
}

/// Every admissible path of length `n`.
pub fn enumerate_contours(n: usize) -> Result<Vec<AdmissiblePath>> {
    let mut out = Vec::new();
    for_each_contour(n, |p| out.push(AdmissiblePath { vertices: p.to_vec() }))?;
    Ok(out)
}

/// `c_n`, in parallel over the starting height.
pub fn count_contours(n: usize) -> Result<u64> {
    check_n(n)?;
    Ok((1..n as i64)
        .into_par_iter()
        .map(|k| {
            let mut c = 0u64;
            dfs_from_height(n, k, &mut |_| c += 1);
            c
        })
        .sum())
}

/// Walks with the admissible endpoints and height constraints, where only
/// immediate backtracking is forbidden. Memoized on `(x, y, last move, steps left)`.
pub fn count_relaxed(n: usize) -> Result<u64> {
    check_n(n)?;
    let mut memo = HashMap::new();
    Ok((1..n as i64).map(|k| relaxed_from((1, k), 0, n - 1, &mut memo)).sum())
}

fn relaxed_from(at: (i64, i64), last: usize, left: usize, memo: &mut HashMap<((i64, i64), usize, usize), u64>) -> u64 {
    let (x, y) = at;
    if left == 1 {
        return u64::from(y == 1 && x >= 1);
    }
    if y > left as i64 {
        return 0;
    }
    if let Some(&c) = memo.get(&(at, last, left)) {
        return c;
    }
    let back = (last + 2) % 4;
    let mut total = 0;
    for (m, (dx, dy)) in MOVES.into_iter().enumerate() {
        let (nx, ny) = (x + dx, y + dy);
        if m == back || nx < 0 || ny < 1 {
            continue;
        }
        total += relaxed_from((nx, ny), m, left - 1, memo);
    }
    memo.insert((at, last, left), total);
    total
}

/// `(n−1)·3^{n−2}`.
pub fn contour_bound(n: usize) -> u64 {
    (n as u64 - 1) * 3u64.pow(n as u32 - 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BoundCheck {
    pub n: usize,
    pub count: u64,
    pub bound: u64,
    /// Non-backtracking relaxation of the count; sits between the two.
    pub relaxed: u64,
    pub ok: bool,
}

pub fn count_bound_check(n: usize) -> Result<BoundCheck> {
    let count = count_contours(n)?;
    let bound = contour_bound(n);
    Ok(BoundCheck { n, count, bound, relaxed: count_relaxed(n)?, ok: count <= bound })
}

/// `r = ε^{1/4}`, rejecting `3r ≥ 1`.
fn fourth_root(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid("epsilon", "must be a non-negative finite number"));
    }
    let r = epsilon.powf(0.25);
    if 3.0 * r >= 1.0 {
        return Err(Error::Divergent { epsilon });
    }
    Ok(r)
}

/// Exact `ε^{1/4}` when `ε` is the fourth power of a rational (every `2^{−4m}` is).
pub fn exact_fourth_root(epsilon: f64) -> Option<BigRational> {
    let e = BigRational::from_float(epsilon)?;
    if e.is_negative() {
        return None;
    }
    let root = |v: &BigInt| {
        let r = v.nth_root(4);
        (r.pow(4u32) == *v).then_some(r)
    };
    Some(BigRational::new(root(e.numer())?, root(e.denom())?))
}

/// `r² / (1 − 3r)²`.
fn closed_form_exact(r: &BigRational) -> BigRational {
    let three = BigRational::from_integer(BigInt::from(3));
    let d = BigRational::one() - three * r;
    (r * r) / (&d * &d)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedForm {
    pub epsilon: f64,
    pub r: f64,
    pub value: f64,
    /// `value` as an exact fraction when `r` is rational.
    pub exact: Option<String>,
    /// Exact comparison when available, otherwise `value < 1 − 1e−12`.
    pub below_one: bool,
}

pub fn peierls_closed_form(epsilon: f64) -> Result<ClosedForm> {
    let r = fourth_root(epsilon)?;
    let value = r * r / ((1.0 - 3.0 * r) * (1.0 - 3.0 * r));
    let exact = exact_fourth_root(epsilon).map(|r| closed_form_exact(&r));
    let below_one = match &exact {
        Some(s) => *s < BigRational::one(),
        None => value < 1.0 - 1e-12,
    };
    Ok(ClosedForm { epsilon, r, value, exact: exact.map(|s| s.to_string()), below_one })
}

/// Whether `S(ε) < 1`; a divergent series is not below one.
pub fn threshold_check(epsilon: f64) -> Result<bool> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    match peierls_closed_form(epsilon) {
        Ok(c) => Ok(c.below_one),
        Err(Error::Divergent { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesReport {
    pub epsilon: f64,
    pub n_max: usize,
    pub partial_sum: f64,
    /// `Σ_{n > n_max}` of the series, in closed form.
    pub tail_bound: f64,
    pub closed_form: f64,
    pub below_one: bool,
    /// Exact partial sum when `r` is rational; `partial_sum` may round to 1.
    pub exact_partial_sum: Option<String>,
    pub exact_partial_below_one: Option<bool>,
}

/// Partial sum `Σ_{n=2}^{n_max} (n−1)·3^{n−2}·ε^{n/4}` with the exact remainder
/// `s^{N+1}(N − (N−1)s) / (9(1−s)²)`, `s = 3r`.
pub fn peierls_series(epsilon: f64, n_max: usize) -> Result<SeriesReport> {
    if n_max < 2 {
        return Err(Error::invalid("nmax", "must be at least 2"));
    }
    let r = fourth_root(epsilon)?;
    let s = 3.0 * r;
    let mut term = r * r;
    let mut partial = 0.0;
    for n in 2..=n_max {
        partial += term;
        term *= s * n as f64 / (n - 1) as f64;
    }
    let big_n = n_max as f64;
    let tail_bound = if s == 0.0 { 0.0 } else { s.powi(n_max as i32 + 1) * (big_n - (big_n - 1.0) * s) / (9.0 * (1.0 - s) * (1.0 - s)) };
    let closed = peierls_closed_form(epsilon)?;
    let exact = exact_fourth_root(epsilon).map(|r| {
        let three = BigRational::from_integer(BigInt::from(3));
        let s = &three * &r;
        let mut term = &r * &r;
        let mut sum = BigRational::zero();
        for n in 2..=n_max {
            sum += &term;
            term = term * &s * BigRational::new(BigInt::from(n), BigInt::from(n - 1));
        }
        sum
    });
    Ok(SeriesReport {
        epsilon,
        n_max,
        partial_sum: partial,
        tail_bound,
        closed_form: closed.value,
        below_one: closed.below_one,
        exact_partial_below_one: exact.as_ref().map(|s| *s < BigRational::one()),
        exact_partial_sum: exact.map(|s| s.to_f64().map_or_else(|| s.to_string(), |f| format!("{f:e}"))),
    })
}
