use rayon::prelude::*;
use serde::Serialize;

use super::models::BondModel;
use super::wedge::{Step, WedgeBondConfig, WedgeEdge, WedgeVertex};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::stats::Estimate;

/// Forward cluster of the origin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Cluster {
    /// Sorted by row, then by `x`.
    pub vertices: Vec<WedgeVertex>,
    pub reached_top: bool,
}

impl Cluster {
    pub fn contains(&self, v: WedgeVertex) -> bool {
        self.vertices.binary_search_by_key(&(v.y, v.x), |w| (w.y, w.x)).is_ok()
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

/// Sites reachable from `(0,0)` along open edges. Row by row, since every
/// edge goes up exactly one row.
pub fn explore_cluster(config: &WedgeBondConfig) -> Cluster {
    let graph = config.graph();
    let h = graph.height() as i64;
    let mut vertices = vec![WedgeVertex::ORIGIN];
    let mut row = vec![WedgeVertex::ORIGIN];
    for y in 0..h {
        let mut next: Vec<WedgeVertex> = Vec::new();
        for &v in &row {
            for step in [Step::NorthWest, Step::NorthEast] {
                let e = WedgeEdge::new(v, step);
                if config.is_open(&e) && next.last() != Some(&e.to()) {
                    next.push(e.to());
                }
            }
        }
        debug_assert!(next.iter().all(|v| v.y == y + 1));
        next.dedup();
        if next.is_empty() {
            return Cluster { vertices, reached_top: false };
        }
        vertices.extend_from_slice(&next);
        row = next;
    }
    Cluster { vertices, reached_top: true }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PercolationTrial {
    pub trial: u64,
    pub reached_top: bool,
    pub cluster_size: usize,
}

/// Trial `i` samples with seed `derive_seed(seed, i)`; rows come back in trial order.
pub fn percolation_trials<M: BondModel + ?Sized>(
    model: &M,
    height: u32,
    trials: u64,
    seed: u64,
) -> Result<Vec<PercolationTrial>> {
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let cluster = explore_cluster(&model.sample(height, derive_seed(seed, i))?);
            Ok(PercolationTrial { trial: i, reached_top: cluster.reached_top, cluster_size: cluster.size() })
        })
        .collect()
}

/// Frequency of `reached_top` over independent samples.
pub fn percolation_probability<M: BondModel + ?Sized>(
    model: &M,
    height: u32,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    let rows = percolation_trials(model, height, trials, seed)?;
    let hits = rows.iter().filter(|r| r.reached_top).count() as u64;
    Ok(Estimate::from_counts(hits, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::models::{sample_iid_bonds, IidBonds};
    use crate::percolation::wedge::build_wedge;
    use proptest::prelude::*;

    /// Reachability by repeated relaxation over the full adjacency matrix.
    #[allow(clippy::needless_range_loop)]
    fn closure_oracle(config: &WedgeBondConfig) -> Vec<WedgeVertex> {
        let g = config.graph();
        let n = g.vertex_count();
        let mut reach = vec![vec![false; n]; n];
        for i in 0..n {
            reach[i][i] = true;
        }
        for e in g.edges() {
            if config.is_open(&e) {
                reach[g.vertex_index(e.from).unwrap()][g.vertex_index(e.to()).unwrap()] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    for j in 0..n {
                        if reach[k][j] {
                            reach[i][j] = true;
                        }
                    }
                }
            }
        }
        (0..n).filter(|&j| reach[0][j]).map(|j| g.vertex_at(j)).collect()
    }

    #[test]
    fn trivial_configs() {
        let g = build_wedge(5).unwrap();
        let all = explore_cluster(&WedgeBondConfig::all_open(g));
        assert_eq!(all.size(), g.vertex_count());
        assert!(all.reached_top);
        let none = explore_cluster(&WedgeBondConfig::all_closed(g));
        assert_eq!(none.vertices, vec![WedgeVertex::ORIGIN]);
        assert!(!none.reached_top);
    }

    #[test]
    fn two_edges_from_origin() {
        for h in 2..6 {
            let mut c = WedgeBondConfig::all_closed(build_wedge(h).unwrap());
            c.set(&WedgeEdge::north_east(0, 0), true).unwrap();
            c.set(&WedgeEdge::north_west(0, 0), true).unwrap();
            let cl = explore_cluster(&c);
            assert_eq!(cl.size(), 3);
            assert!(!cl.reached_top);
        }
    }

    #[test]
    fn near_one_percolates() {
        let model = IidBonds::new(1.0 - 1e-6).unwrap();
        let est = percolation_probability(&model, 100, 200, 5).unwrap();
        assert!(est.mean >= 0.99);
    }

    #[test]
    fn deeply_subcritical() {
        let model = IidBonds::new(0.1).unwrap();
        let est = percolation_probability(&model, 50, 2000, 5).unwrap();
        assert!(est.mean <= 0.01);
    }

    #[test]
    fn trials_are_reproducible() {
        let model = IidBonds::new(0.7).unwrap();
        let a = percolation_trials(&model, 20, 64, 11).unwrap();
        assert_eq!(a, percolation_trials(&model, 20, 64, 11).unwrap());
        assert!(a.iter().enumerate().all(|(i, r)| r.trial == i as u64));
        assert!(percolation_trials(&model, 20, 0, 11).is_err());
    }

    proptest! {
        #[test]
        fn matches_transitive_closure(h in 1u32..=6, p in 0.3f64..0.9, seed in any::<u64>()) {
            let c = sample_iid_bonds(p, h, seed).unwrap();
            let cl = explore_cluster(&c);
            let mut oracle = closure_oracle(&c);
            oracle.sort_by_key(|v| (v.y, v.x));
            prop_assert_eq!(&cl.vertices, &oracle);
            prop_assert_eq!(cl.reached_top, oracle.iter().any(|v| v.y == h as i64));
        }
    }
}
