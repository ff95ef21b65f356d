//! Dual lattice of the wedge and contour extraction.
//!
//! The wedge site `(x, y)` is drawn as the unit cell `[i, i+1] × [j, j+1]`
//! with `i = (y−x)/2`, `j = (y+x)/2`; an edge `↗` is then a step `+j` and an
//! edge `↖` a step `+i`. The dual vertex `(x, y−1)` is the lower corner
//! `(i, j)` of that cell, so dual vertices are the lattice corners `(P, Q)`
//! other than the origin, with `(x, y) = (Q−P, P+Q−1)`. The left side is the
//! line `Q = 0` and the right side the line `P = 0`.

use std::collections::{HashMap, HashSet};

use serde::Serialize;

use super::cluster::explore_cluster;
use super::wedge::{WedgeBondConfig, WedgeEdge};
use crate::error::{Error, Result};

/// Dual site `(x, y)`: `y ≥ 0`, `|x| ≤ y+1`, `x+y` odd.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DualVertex {
    pub x: i64,
    pub y: i64,
}

impl DualVertex {
    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn in_dual(&self) -> bool {
        self.y >= 0 && self.x.abs() <= self.y + 1 && (self.x + self.y).rem_euclid(2) == 1
    }

    /// On `ℒ = {(−y−1, y)}`.
    pub fn on_left(&self) -> bool {
        self.y >= 0 && self.x == -self.y - 1
    }

    /// On `ℛ = {(y+1, y)}`.
    pub fn on_right(&self) -> bool {
        self.y >= 0 && self.x == self.y + 1
    }

    fn corner(&self) -> (i64, i64) {
        ((self.y + 1 - self.x) / 2, (self.y + 1 + self.x) / 2)
    }

    fn from_corner(p: i64, q: i64) -> Self {
        Self::new(q - p, p + q - 1)
    }

    pub fn step(&self, s: DualStep) -> DualVertex {
        let (dx, dy) = s.delta();
        DualVertex::new(self.x + dx, self.y + dy)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DualStep {
    NorthEast,
    SouthEast,
    SouthWest,
    NorthWest,
}

impl DualStep {
    pub const ALL: [DualStep; 4] = [DualStep::NorthEast, DualStep::SouthEast, DualStep::SouthWest, DualStep::NorthWest];

    pub fn delta(self) -> (i64, i64) {
        match self {
            DualStep::NorthEast => (1, 1),
            DualStep::SouthEast => (1, -1),
            DualStep::SouthWest => (-1, -1),
            DualStep::NorthWest => (-1, 1),
        }
    }

    fn from_delta(d: (i64, i64)) -> Option<Self> {
        DualStep::ALL.into_iter().find(|s| s.delta() == d)
    }

    /// `↗` and `↘` steps cross a primal edge that must be closed; `↙` and
    /// `↖` are always open.
    pub fn is_crossing(self) -> bool {
        matches!(self, DualStep::NorthEast | DualStep::SouthEast)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            DualStep::NorthEast => "NE",
            DualStep::SouthEast => "SE",
            DualStep::SouthWest => "SW",
            DualStep::NorthWest => "NW",
        }
    }
}

/// The primal edge crossed by a `↗`/`↘` step out of `v`: `↗` crosses the
/// `↖` edge out of `(x+1, y)`, `↘` the `↗` edge out of `(x, y−1)`.
pub fn crossed_edge(v: DualVertex, step: DualStep) -> Option<WedgeEdge> {
    match step {
        DualStep::NorthEast => Some(WedgeEdge::north_west(v.x + 1, v.y)),
        DualStep::SouthEast => Some(WedgeEdge::north_east(v.x, v.y - 1)),
        _ => None,
    }
}

/// Self-avoiding dual path from `ℒ` to `ℛ`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DualContour {
    vertices: Vec<DualVertex>,
    steps: Vec<DualStep>,
}

impl DualContour {
    /// Checks only that consecutive vertices are dual neighbours.
    pub fn from_vertices(vertices: Vec<DualVertex>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid("contour", "needs at least one step"));
        }
        let steps = vertices
            .windows(2)
            .map(|w| {
                DualStep::from_delta((w[1].x - w[0].x, w[1].y - w[0].y))
                    .ok_or_else(|| Error::invalid("contour", format!("{:?} -> {:?} is not a dual step", w[0], w[1])))
            })
            .collect::<Result<_>>()?;
        Ok(Self { vertices, steps })
    }

    pub fn vertices(&self) -> &[DualVertex] {
        &self.vertices
    }

    pub fn steps(&self) -> &[DualStep] {
        &self.steps
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `(edge, column)` for every `↗`/`↘` step.
    pub fn crossings(&self) -> impl Iterator<Item = (WedgeEdge, i64)> + '_ {
        self.vertices.iter().zip(&self.steps).filter_map(|(&v, &s)| crossed_edge(v, s).map(|e| (e, e.column())))
    }

    /// Vertices as quadrant points `(Q, P)`: the left side becomes the
    /// vertical axis and the right side the horizontal one.
    pub fn to_quadrant(&self) -> Vec<(i64, i64)> {
        self.vertices
            .iter()
            .map(|v| {
                let (p, q) = v.corner();
                (q, p)
            })
            .collect()
    }

    pub fn parity(&self) -> ParityCounts {
        parity_of(&self.vertices, &self.steps)
    }
}

/// Split of the `↗`/`↘` steps of a dual path by column parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ParityCounts {
    pub length: usize,
    pub crossing: usize,
    pub even: usize,
    pub odd: usize,
}

impl ParityCounts {
    /// `crossing ≥ n/2` and `max(even, odd) ≥ n/4`.
    pub fn holds(&self) -> bool {
        2 * self.crossing >= self.length && 4 * self.even.max(self.odd) >= self.length
    }
}

/// The column of a `↗`/`↘` step out of `(x, y)` is `x`.
fn parity_of(vertices: &[DualVertex], steps: &[DualStep]) -> ParityCounts {
    let mut c = ParityCounts { length: steps.len(), crossing: 0, even: 0, odd: 0 };
    for (v, s) in vertices.iter().zip(steps) {
        if s.is_crossing() {
            c.crossing += 1;
            if v.x.rem_euclid(2) == 0 {
                c.even += 1;
            } else {
                c.odd += 1;
            }
        }
    }
    c
}

/// Walks the outer boundary of the origin's cluster, keeping the cluster
/// on the left, from the left side to the right side, then erases loops.
pub fn find_dual_contour(config: &WedgeBondConfig) -> Result<DualContour> {
    let h = config.height();
    let cluster = explore_cluster(config);
    if cluster.reached_top {
        return Err(Error::Undecidable { height: h, reason: "the origin's cluster reaches the top row".into() });
    }
    let graph = config.graph();
    let mut inside = vec![false; graph.vertex_count()];
    for v in &cluster.vertices {
        inside[graph.vertex_index(*v).expect("cluster lies in the graph")] = true;
    }
    let in_c = |i: i64, j: i64| -> bool {
        i >= 0 && j >= 0 && graph.vertex_index(super::WedgeVertex::new(j - i, i + j)).is_some_and(|k| inside[k])
    };

    let mut run = 0;
    while in_c(run, 0) {
        run += 1;
    }
    let mut pos = (run, 0i64);
    let mut dir = (0i64, 1i64);
    let mut path = vec![pos];
    let mut seen = HashMap::from([(pos, 0usize)]);
    let cap = 4 * cluster.size() + 8;
    for _ in 0..cap {
        let left = (-dir.1, dir.0);
        let right = (dir.1, -dir.0);
        let cell = |side: (i64, i64)| {
            ((2 * pos.0 + dir.0 + side.0).div_euclid(2), (2 * pos.1 + dir.1 + side.1).div_euclid(2))
        };
        let (al, ar) = (cell(left), cell(right));
        dir = if !in_c(al.0, al.1) {
            left
        } else if !in_c(ar.0, ar.1) {
            dir
        } else {
            right
        };
        pos = (pos.0 + dir.0, pos.1 + dir.1);
        if let Some(&k) = seen.get(&pos) {
            for q in path.drain(k + 1..) {
                seen.remove(&q);
            }
        } else {
            seen.insert(pos, path.len());
            path.push(pos);
        }
        if pos.0 == 0 {
            let vertices = path.into_iter().map(|(p, q)| DualVertex::from_corner(p, q)).collect();
            return DualContour::from_vertices(vertices);
        }
    }
    unreachable!("boundary walk of a finite cluster returns to the right side")
}

/// Whether `contour` separates the origin from row `H` in `config`.
pub fn validate_contour(config: &WedgeBondConfig, contour: &DualContour) -> Result<()> {
    let graph = config.graph();
    let h = graph.height() as i64;
    let bad = |reason: String| Err(Error::invalid("contour", reason));
    let vs = contour.vertices();
    if let Some(v) = vs.iter().find(|v| !v.in_dual() || v.y > h) {
        return bad(format!("{v:?} is not a dual vertex below height {h}"));
    }
    if !vs[0].on_left() {
        return bad(format!("starts at {:?}, off the left side", vs[0]));
    }
    if !vs[vs.len() - 1].on_right() {
        return bad(format!("ends at {:?}, off the right side", vs[vs.len() - 1]));
    }
    let mut seen = HashSet::new();
    if let Some(v) = vs.iter().find(|v| !seen.insert(**v)) {
        return bad(format!("revisits {v:?}"));
    }
    for (&v, &s) in vs.iter().zip(contour.steps()) {
        if let Some(e) = crossed_edge(v, s) {
            if !graph.contains_edge(&e) {
                return bad(format!("{} step from {v:?} crosses no primal edge", s.symbol()));
            }
            if config.is_open(&e) {
                return bad(format!("{} step from {v:?} crosses open edge {e:?}", s.symbol()));
            }
        }
    }
    Ok(())
}

/// Calls `visit` on every self-avoiding dual path with `n` steps from `ℒ`
/// to `ℛ` (any edge between two dual vertices is allowed).
pub fn for_each_dual_path(n: usize, mut visit: impl FnMut(&[DualVertex], &[DualStep])) {
    if n < 1 {
        return;
    }
    let mut vs = Vec::with_capacity(n + 1);
    let mut ss = Vec::with_capacity(n);
    let mut on_path = HashSet::new();
    // Reaching ℛ from (−b−1, b) takes at least b + 2 steps.
    for b in 0..=(n as i64 - 2).max(0) {
        let start = DualVertex::new(-b - 1, b);
        vs.push(start);
        on_path.insert(start);
        extend(n, &mut vs, &mut ss, &mut on_path, &mut visit);
        on_path.remove(&start);
        vs.pop();
    }
}

fn extend(
    n: usize,
    vs: &mut Vec<DualVertex>,
    ss: &mut Vec<DualStep>,
    on_path: &mut HashSet<DualVertex>,
    visit: &mut impl FnMut(&[DualVertex], &[DualStep]),
) {
    let here = *vs.last().unwrap();
    let left = n - ss.len();
    if left == 0 {
        if here.on_right() {
            visit(vs, ss);
        }
        return;
    }
    // `x − y` must climb to 1 and moves by at most 2 per step.
    if ((1 - (here.x - here.y)) + 1) / 2 > left as i64 {
        return;
    }
    for s in DualStep::ALL {
        let next = here.step(s);
        if !next.in_dual() || on_path.contains(&next) {
            continue;
        }
        vs.push(next);
        ss.push(s);
        on_path.insert(next);
        extend(n, vs, ss, on_path, visit);
        on_path.remove(&next);
        ss.pop();
        vs.pop();
    }
}

/// Parity counts for every path of [`for_each_dual_path`]; returns the
/// number of paths and the first failure, if any.
pub fn check_parity(n: usize) -> (u64, Option<ParityCounts>) {
    let mut count = 0;
    let mut failure = None;
    for_each_dual_path(n, |vs, ss| {
        count += 1;
        let p = parity_of(vs, ss);
        if failure.is_none() && !p.holds() {
            failure = Some(p);
        }
    });
    (count, failure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::models::sample_iid_bonds;
    use crate::percolation::wedge::build_wedge;
    use proptest::prelude::*;

    #[test]
    fn corner_round_trip() {
        for p in 0..6 {
            for q in 0..6 {
                if (p, q) == (0, 0) {
                    continue;
                }
                let v = DualVertex::from_corner(p, q);
                assert!(v.in_dual(), "{v:?}");
                assert_eq!(v.corner(), (p, q));
                assert_eq!(v.on_left(), q == 0);
                assert_eq!(v.on_right(), p == 0);
            }
        }
        assert!(!DualVertex::new(0, -1).in_dual());
    }

    #[test]
    fn crossing_matches_primal_dual_pairing() {
        // A ↗ edge out of v is crossed by the dual edge v+(0,1) → v+(1,0).
        let v = DualVertex::new(2, 5);
        assert_eq!(crossed_edge(v, DualStep::SouthEast), Some(WedgeEdge::north_east(2, 4)));
        // A ↖ edge out of v is crossed by the dual edge v+(−1,0) → v+(0,1).
        assert_eq!(crossed_edge(DualVertex::new(1, 4), DualStep::NorthEast), Some(WedgeEdge::north_west(2, 4)));
        assert_eq!(crossed_edge(v, DualStep::NorthWest), None);
    }

    #[test]
    fn all_closed_gives_length_two() {
        for h in 1..5 {
            let c = WedgeBondConfig::all_closed(build_wedge(h).unwrap());
            let contour = find_dual_contour(&c).unwrap();
            assert_eq!(contour.vertices(), &[DualVertex::new(-1, 0), DualVertex::new(0, 1), DualVertex::new(1, 0)]);
            assert_eq!(contour.to_quadrant(), vec![(0, 1), (1, 1), (1, 0)]);
            validate_contour(&c, &contour).unwrap();
        }
    }

    #[test]
    fn all_open_is_undecidable() {
        let c = WedgeBondConfig::all_open(build_wedge(4).unwrap());
        assert!(matches!(find_dual_contour(&c), Err(Error::Undecidable { height: 4, .. })));
    }

    #[test]
    fn validation_rejects_open_crossings() {
        let mut c = WedgeBondConfig::all_closed(build_wedge(3).unwrap());
        let contour = find_dual_contour(&c).unwrap();
        c.set(&WedgeEdge::north_east(0, 0), true).unwrap();
        assert!(validate_contour(&c, &contour).is_err());
        assert!(DualContour::from_vertices(vec![DualVertex::new(-1, 0), DualVertex::new(1, 0)]).is_err());
    }

    #[test]
    fn shortest_dual_paths() {
        let mut paths = Vec::new();
        for_each_dual_path(2, |vs, _| paths.push(vs.to_vec()));
        // Only the path around the origin; the boundary segment from (−1,0)
        // along ℒ cannot reach ℛ in two steps.
        assert_eq!(paths, vec![vec![DualVertex::new(-1, 0), DualVertex::new(0, 1), DualVertex::new(1, 0)]]);
    }

    #[test]
    fn parity_up_to_ten() {
        for n in 1..=10 {
            let (count, failure) = check_parity(n);
            assert_eq!(failure, None, "n = {n}");
            assert_eq!(count > 0, n >= 2);
        }
    }

    proptest! {
        #[test]
        fn extracted_contours_are_valid(h in 2u32..=12, p in 0.2f64..0.75, seed in any::<u64>()) {
            let c = sample_iid_bonds(p, h, seed).unwrap();
            match find_dual_contour(&c) {
                Ok(contour) => {
                    prop_assert!(!explore_cluster(&c).reached_top);
                    prop_assert!(validate_contour(&c, &contour).is_ok(), "{:?}", validate_contour(&c, &contour));
                    prop_assert!(contour.parity().holds());
                }
                Err(Error::Undecidable { .. }) => prop_assert!(explore_cluster(&c).reached_top),
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}
