use serde::Serialize;

use crate::error::{Error, Result};

/// Site `(x, y)` of the oriented wedge: `|x| ≤ y`, `x + y` even.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WedgeVertex {
    pub x: i64,
    pub y: i64,
}

impl WedgeVertex {
    pub const ORIGIN: WedgeVertex = WedgeVertex { x: 0, y: 0 };

    pub fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }

    pub fn in_wedge(&self) -> bool {
        self.y >= 0 && self.x.abs() <= self.y && (self.x + self.y) % 2 == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Step {
    /// `(−1, 1)`
    NorthWest,
    /// `(1, 1)`
    NorthEast,
}

impl Step {
    pub fn dx(self) -> i64 {
        match self {
            Step::NorthWest => -1,
            Step::NorthEast => 1,
        }
    }
}

/// Oriented edge from `from` to `from + (±1, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct WedgeEdge {
    pub from: WedgeVertex,
    pub step: Step,
}

impl WedgeEdge {
    pub fn new(from: WedgeVertex, step: Step) -> Self {
        Self { from, step }
    }

    pub fn north_east(x: i64, y: i64) -> Self {
        Self::new(WedgeVertex::new(x, y), Step::NorthEast)
    }

    pub fn north_west(x: i64, y: i64) -> Self {
        Self::new(WedgeVertex::new(x, y), Step::NorthWest)
    }

    pub fn to(&self) -> WedgeVertex {
        WedgeVertex::new(self.from.x + self.step.dx(), self.from.y + 1)
    }

    /// `min(x, x')` over the two endpoints.
    pub fn column(&self) -> i64 {
        self.from.x.min(self.to().x)
    }
}

/// The wedge truncated at height `H`: rows `0..=H`, edges out of rows `0..H`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct WedgeGraph {
    height: u32,
}

pub fn build_wedge(height: u32) -> Result<WedgeGraph> {
    if height < 1 {
        return Err(Error::invalid("H", "height must be at least 1"));
    }
    Ok(WedgeGraph { height })
}

impl WedgeGraph {
    pub fn height(&self) -> u32 {
        self.height
    }

    /// `(H+1)(H+2)/2`.
    pub fn vertex_count(&self) -> usize {
        let h = self.height as usize;
        (h + 1) * (h + 2) / 2
    }

    /// `H(H+1)`.
    pub fn edge_count(&self) -> usize {
        let h = self.height as usize;
        h * (h + 1)
    }

    pub fn contains(&self, v: WedgeVertex) -> bool {
        v.in_wedge() && v.y <= self.height as i64
    }

    pub fn contains_edge(&self, e: &WedgeEdge) -> bool {
        self.contains(e.from) && e.from.y < self.height as i64
    }

    /// Row-major index: row `y` starts at `y(y+1)/2`.
    pub fn vertex_index(&self, v: WedgeVertex) -> Option<usize> {
        self.contains(v).then(|| vertex_slot(v))
    }

    pub fn edge_index(&self, e: &WedgeEdge) -> Option<usize> {
        self.contains_edge(e).then(|| edge_slot(e))
    }

    pub fn vertex_at(&self, index: usize) -> WedgeVertex {
        // Largest y with y(y+1)/2 ≤ index.
        let mut y = (((8 * index + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        while (y + 1) * (y + 2) / 2 <= index {
            y += 1;
        }
        while y * (y + 1) / 2 > index {
            y -= 1;
        }
        let offset = index - y * (y + 1) / 2;
        WedgeVertex::new(2 * offset as i64 - y as i64, y as i64)
    }

    pub fn edge_at(&self, index: usize) -> WedgeEdge {
        let step = if index % 2 == 1 { Step::NorthEast } else { Step::NorthWest };
        WedgeEdge::new(self.vertex_at(index / 2), step)
    }

    pub fn vertices(&self) -> impl Iterator<Item = WedgeVertex> {
        let h = self.height as i64;
        (0..=h).flat_map(|y| (0..=y).map(move |o| WedgeVertex::new(2 * o - y, y)))
    }

    /// Edges in index order.
    pub fn edges(&self) -> impl Iterator<Item = WedgeEdge> {
        let h = self.height as i64;
        (0..h).flat_map(|y| {
            (0..=y).flat_map(move |o| {
                let v = WedgeVertex::new(2 * o - y, y);
                [WedgeEdge::new(v, Step::NorthWest), WedgeEdge::new(v, Step::NorthEast)]
            })
        })
    }

    pub fn row(&self, y: u32) -> impl Iterator<Item = WedgeVertex> {
        let y = y as i64;
        (0..=y).map(move |o| WedgeVertex::new(2 * o - y, y))
    }
}

fn vertex_slot(v: WedgeVertex) -> usize {
    let y = v.y as usize;
    y * (y + 1) / 2 + ((v.x + v.y) / 2) as usize
}

fn edge_slot(e: &WedgeEdge) -> usize {
    2 * vertex_slot(e.from) + usize::from(e.step == Step::NorthEast)
}

/// Open/closed status `X_e` of every edge of a [`WedgeGraph`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WedgeBondConfig {
    graph: WedgeGraph,
    open: Vec<bool>,
}

impl WedgeBondConfig {
    pub fn all_open(graph: WedgeGraph) -> Self {
        Self { graph, open: vec![true; graph.edge_count()] }
    }

    pub fn all_closed(graph: WedgeGraph) -> Self {
        Self { graph, open: vec![false; graph.edge_count()] }
    }

    pub fn from_states(graph: WedgeGraph, open: Vec<bool>) -> Result<Self> {
        if open.len() != graph.edge_count() {
            return Err(Error::invalid(
                "config",
                format!("expected {} edge states, got {}", graph.edge_count(), open.len()),
            ));
        }
        Ok(Self { graph, open })
    }

    /// Bit `i` of `bits` is the state of edge index `i`; needs `H(H+1) ≤ 64`.
    pub fn from_bits(graph: WedgeGraph, bits: u64) -> Result<Self> {
        let n = graph.edge_count();
        if n > 64 {
            return Err(Error::invalid("H", "bit encoding needs at most 64 edges"));
        }
        Ok(Self { graph, open: (0..n).map(|i| bits >> i & 1 == 1).collect() })
    }

    pub fn graph(&self) -> WedgeGraph {
        self.graph
    }

    pub fn height(&self) -> u32 {
        self.graph.height
    }

    /// Edges outside the graph count as closed.
    pub fn is_open(&self, e: &WedgeEdge) -> bool {
        self.graph.edge_index(e).is_some_and(|i| self.open[i])
    }

    pub fn set(&mut self, e: &WedgeEdge, open: bool) -> Result<()> {
        let i = self
            .graph
            .edge_index(e)
            .ok_or_else(|| Error::invalid("edge", format!("{e:?} is not an edge of the graph")))?;
        self.open[i] = open;
        Ok(())
    }

    pub fn states(&self) -> &[bool] {
        &self.open
    }

    pub fn open_count(&self) -> usize {
        self.open.iter().filter(|&&o| o).count()
    }

    /// `(edge, column, open)` in index order.
    pub fn tagged(&self) -> impl Iterator<Item = (WedgeEdge, i64, bool)> + '_ {
        self.graph.edges().zip(&self.open).map(|(e, &o)| (e, e.column(), o))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn height_one() {
        let g = build_wedge(1).unwrap();
        let vs: Vec<_> = g.vertices().collect();
        assert_eq!(vs, vec![WedgeVertex::new(0, 0), WedgeVertex::new(-1, 1), WedgeVertex::new(1, 1)]);
        let cols: HashSet<_> = g.edges().map(|e| e.column()).collect();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(cols, HashSet::from([-1, 0]));
    }

    #[test]
    fn counts() {
        for (h, v, e) in [(2, 6, 6), (100, 5151, 10100)] {
            let g = build_wedge(h).unwrap();
            assert_eq!((g.vertex_count(), g.edge_count()), (v, e));
            assert_eq!(g.vertices().count(), v);
            assert_eq!(g.edges().count(), e);
        }
        assert!(build_wedge(0).is_err());
    }

    #[test]
    fn rows_and_edges() {
        let g = build_wedge(12).unwrap();
        for y in 0..=12u32 {
            assert_eq!(g.row(y).count(), y as usize + 1);
        }
        for e in g.edges() {
            assert_eq!(e.to().y, e.from.y + 1);
            assert!(g.contains(e.to()));
        }
    }

    #[test]
    fn indices_round_trip() {
        let g = build_wedge(30).unwrap();
        for (i, v) in g.vertices().enumerate() {
            assert_eq!(g.vertex_index(v), Some(i));
            assert_eq!(g.vertex_at(i), v);
        }
        for (i, e) in g.edges().enumerate() {
            assert_eq!(g.edge_index(&e), Some(i));
            assert_eq!(g.edge_at(i), e);
        }
        assert_eq!(g.vertex_index(WedgeVertex::new(1, 0)), None);
        assert_eq!(g.edge_index(&WedgeEdge::north_east(0, 30)), None);
    }

    #[test]
    fn bits_and_set() {
        let g = build_wedge(3).unwrap();
        let c = WedgeBondConfig::from_bits(g, 0b10).unwrap();
        assert!(c.is_open(&WedgeEdge::north_east(0, 0)));
        assert!(!c.is_open(&WedgeEdge::north_west(0, 0)));
        let mut c = WedgeBondConfig::all_closed(g);
        c.set(&WedgeEdge::north_west(1, 1), true).unwrap();
        assert_eq!(c.open_count(), 1);
        assert!(c.set(&WedgeEdge::north_west(1, 0), true).is_err());
        assert!(WedgeBondConfig::from_bits(build_wedge(8).unwrap(), 0).is_err());
    }
}
