use rand::Rng;
use serde::Serialize;

use super::cluster::explore_cluster;
use super::wedge::{build_wedge, Step, WedgeBondConfig, WedgeEdge, WedgeGraph, WedgeVertex};
use crate::contact::{evolve, has_infection_path_within, GraphicalSample, VertexRange};
use crate::distributions::InterarrivalSpec;
use crate::error::{Error, Result};
use crate::rng::derive_stream;
use crate::ETA;

/// A sampler of bond configurations on the truncated wedge.
pub trait BondModel: Sync {
    /// The `p` for which properties (I)/(II) are claimed.
    fn nominal_p(&self) -> f64;

    fn sample(&self, height: u32, seed: u64) -> Result<WedgeBondConfig>;
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", "must lie in (0, 1)"));
    }
    Ok(())
}

fn zigzag(c: i64) -> u64 {
    ((c << 1) ^ (c >> 63)) as u64
}

/// Independent bonds, each open with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IidBonds {
    p: f64,
}

impl IidBonds {
    pub fn new(p: f64) -> Result<Self> {
        check_p(p)?;
        Ok(Self { p })
    }
}

impl BondModel for IidBonds {
    fn nominal_p(&self) -> f64 {
        self.p
    }

    fn sample(&self, height: u32, seed: u64) -> Result<WedgeBondConfig> {
        let graph = build_wedge(height)?;
        let mut rng = derive_stream(seed, 0);
        let open = (0..graph.edge_count()).map(|_| rng.random::<f64>() < self.p).collect();
        WedgeBondConfig::from_states(graph, open)
    }
}

pub fn sample_iid_bonds(p: f64, height: u32, seed: u64) -> Result<WedgeBondConfig> {
    IidBonds::new(p)?.sample(height, seed)
}

/// Column-wise Markov bonds. Going up a column, an edge closes with
/// probability `1 − p` right after an open edge and `1 − p − bias` at the
/// bottom or right after a closed one. Columns are independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegenerativeBonds {
    p: f64,
    bias: f64,
}

impl RegenerativeBonds {
    pub fn new(p: f64, bias: f64) -> Result<Self> {
        check_p(p)?;
        if !(0.0..1.0 - p).contains(&bias) {
            return Err(Error::invalid("bias", format!("must lie in [0, {})", 1.0 - p)));
        }
        Ok(Self { p, bias })
    }

    /// The edge of column `c` leaving row `y`.
    pub fn column_edge(c: i64, y: i64) -> WedgeEdge {
        if (c + y).rem_euclid(2) == 0 {
            WedgeEdge::north_east(c, y)
        } else {
            WedgeEdge::north_west(c + 1, y)
        }
    }
}

impl BondModel for RegenerativeBonds {
    fn nominal_p(&self) -> f64 {
        self.p
    }

    fn sample(&self, height: u32, seed: u64) -> Result<WedgeBondConfig> {
        let graph = build_wedge(height)?;
        let h = height as i64;
        let mut config = WedgeBondConfig::all_closed(graph);
        for c in -h..h {
            let mut rng = derive_stream(seed, zigzag(c));
            let start = if c >= 0 { c } else { -c - 1 };
            let mut q = 1.0 - self.p - self.bias;
            for y in start..h {
                let open = rng.random::<f64>() >= q;
                config.set(&Self::column_edge(c, y), open)?;
                q = if open { 1.0 - self.p } else { 1.0 - self.p - self.bias };
            }
        }
        Ok(config)
    }
}

/// Result of replaying the contact process against an induced configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingCheck {
    pub reached_top: bool,
    pub cluster_size: usize,
    /// A cluster site `(k, ℓ)` whose block is not infected at time `ℓτ`.
    pub violation: Option<WedgeVertex>,
}

/// Starts the process from `{0}` and checks every cluster site `(k, ℓ)`
/// against the sites of `block(k)` infected at `ℓ·tau`.
fn coupling_check(
    sample: &GraphicalSample,
    config: &WedgeBondConfig,
    tau: f64,
    block: impl Fn(i64) -> VertexRange,
) -> Result<CouplingCheck> {
    let cluster = explore_cluster(config);
    let trajectory = evolve(sample, &[0])?;
    let height = config.height() as usize;
    let times: Vec<f64> = (0..=height).map(|l| l as f64 * tau).collect();
    let states = trajectory.states_at(&times);
    let violation = cluster.vertices.iter().copied().find(|v| {
        let b = block(v.x);
        !states[v.y as usize].iter().any(|&x| b.contains(x))
    });
    Ok(CouplingCheck { reached_top: cluster.reached_top, cluster_size: cluster.vertices.len(), violation })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid("lambda", "must be non-negative and finite"));
    }
    Ok(())
}

fn has_mark_at(marks: &[f64], t: f64) -> bool {
    let tol = 1e-9 * t.abs().max(1.0);
    let i = marks.partition_point(|&m| m < t - tol);
    i < marks.len() && marks[i] <= t + tol
}

fn has_mark_in(marks: &[f64], lo: f64, hi: f64) -> bool {
    let i = marks.partition_point(|&m| m <= lo);
    i < marks.len() && marks[i] <= hi
}

/// Block construction for a lattice law of span dividing `d`.
///
/// Blocks are `B_k = {kM, …, kM+M−1}` and row `ℓ` is time `ℓd`. The edge
/// `(k,ℓ) → (k+1,ℓ+1)` is open when some site of `B_{k+1}` has no mark at
/// `(ℓ+1)d` and an infection path runs from `kM` to `(k+2)M−1` inside
/// `B_k ∪ B_{k+1}` during `(ℓd, (ℓ+1)d)`. The edge `(k,ℓ) → (k−1,ℓ+1)` uses
/// `B_{k−1}` and a path from `(k+1)M−1` to `(k−1)M` inside `B_{k−1} ∪ B_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedArithmetic {
    spec: InterarrivalSpec,
    lambda: f64,
    block_size: u32,
    span: f64,
}

impl InducedArithmetic {
    pub fn new(spec: InterarrivalSpec, lambda: f64, block_size: u32, span: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if block_size < 1 {
            return Err(Error::invalid("M", "block size must be at least 1"));
        }
        let lattice = spec
            .lattice()
            .ok_or_else(|| Error::invalid("distribution", "law is not arithmetic"))?;
        let ratio = span / lattice.span;
        if !(span > 0.0 && (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0) {
            return Err(Error::invalid(
                "d",
                format!("must be a positive multiple of the lattice span {}", lattice.span),
            ));
        }
        Ok(Self { spec, lambda, block_size, span })
    }

    pub fn block(&self, k: i64) -> VertexRange {
        let m = self.block_size as i64;
        VertexRange { lo: k * m, hi: k * m + m - 1 }
    }

    /// Sites of blocks `−(H+1)..=H+1`.
    pub fn sample_range(&self, height: u32) -> VertexRange {
        let h = height as i64 + 1;
        VertexRange { lo: self.block(-h).lo, hi: self.block(h).hi }
    }

    pub fn sample_with_graph(&self, height: u32, seed: u64) -> Result<(GraphicalSample, WedgeBondConfig)> {
        let graph = build_wedge(height)?;
        let horizon = (height as f64 + 1.0) * self.span;
        let sample = GraphicalSample::build(&self.spec, self.lambda, self.sample_range(height), horizon, seed)?;
        let config = self.bonds(&sample, graph)?;
        Ok((sample, config))
    }

    pub fn bonds(&self, sample: &GraphicalSample, graph: WedgeGraph) -> Result<WedgeBondConfig> {
        let h = graph.height();
        let used = VertexRange { lo: self.block(-(h as i64)).lo, hi: self.block(h as i64).hi };
        if !sample.range().covers(&used) {
            return Err(Error::invalid("sample", "box does not cover the blocks used by the wedge"));
        }
        if sample.horizon() < h as f64 * self.span {
            return Err(Error::invalid("sample", "horizon is shorter than H·d"));
        }
        let open = graph.edges().map(|e| self.edge_open(sample, &e)).collect::<Result<Vec<_>>>()?;
        WedgeBondConfig::from_states(graph, open)
    }

    fn edge_open(&self, sample: &GraphicalSample, e: &WedgeEdge) -> Result<bool> {
        let (k, l) = (e.from.x, e.from.y as f64);
        let (s, t) = (l * self.span, (l + 1.0) * self.span);
        let m = self.block_size as i64;
        let (target, range, from, to) = match e.step {
            Step::NorthEast => (k + 1, VertexRange { lo: k * m, hi: (k + 2) * m - 1 }, k * m, (k + 2) * m - 1),
            Step::NorthWest => (k - 1, VertexRange { lo: (k - 1) * m, hi: (k + 1) * m - 1 }, (k + 1) * m - 1, (k - 1) * m),
        };
        if self.block(target).iter().all(|x| has_mark_at(sample.marks(x), t)) {
            return Ok(false);
        }
        has_infection_path_within(sample, range, (from, s), (to, t))
    }

    pub fn coupling_check(&self, sample: &GraphicalSample, config: &WedgeBondConfig) -> Result<CouplingCheck> {
        coupling_check(sample, config, self.span, |k| self.block(k))
    }
}

impl BondModel for InducedArithmetic {
    fn nominal_p(&self) -> f64 {
        1.0 - ETA
    }

    fn sample(&self, height: u32, seed: u64) -> Result<WedgeBondConfig> {
        Ok(self.sample_with_graph(height, seed)?.1)
    }
}

/// Single-site construction on windows `(ℓν, (ℓ+1)ν]`.
///
/// The edge `(k,ℓ) → (k±1,ℓ+1)` is open when neither `k` nor `k±1` has a
/// recovery mark in the window and some arrow `k → k±1` falls in it.
#[derive(Debug, Clone, PartialEq)]
pub struct InducedWindow {
    spec: InterarrivalSpec,
    lambda: f64,
    nu: f64,
}

impl InducedWindow {
    pub fn new(spec: InterarrivalSpec, lambda: f64, nu: f64) -> Result<Self> {
        check_lambda(lambda)?;
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::invalid("nu", "window must be positive and finite"));
        }
        Ok(Self { spec, lambda, nu })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn sample_range(&self, height: u32) -> VertexRange {
        VertexRange::symmetric(height + 1)
    }

    pub fn sample_with_graph(&self, height: u32, seed: u64) -> Result<(GraphicalSample, WedgeBondConfig)> {
        let graph = build_wedge(height)?;
        let horizon = (height as f64 + 1.0) * self.nu;
        let sample = GraphicalSample::build(&self.spec, self.lambda, self.sample_range(height), horizon, seed)?;
        let config = self.bonds(&sample, graph)?;
        Ok((sample, config))
    }

    pub fn bonds(&self, sample: &GraphicalSample, graph: WedgeGraph) -> Result<WedgeBondConfig> {
        let h = graph.height();
        if !sample.range().covers(&VertexRange::symmetric(h)) {
            return Err(Error::invalid("sample", "box does not cover [−H, H]"));
        }
        if sample.horizon() < h as f64 * self.nu {
            return Err(Error::invalid("sample", "horizon is shorter than H·ν"));
        }
        let open = graph
            .edges()
            .map(|e| {
                let (k, l) = (e.from.x, e.from.y as f64);
                let (lo, hi) = (l * self.nu, (l + 1.0) * self.nu);
                let j = e.to().x;
                let arrows = sample.arrows(k, j);
                !has_mark_in(sample.marks(k), lo, hi) && !has_mark_in(sample.marks(j), lo, hi) && has_mark_in(arrows, lo, hi)
            })
            .collect();
        WedgeBondConfig::from_states(graph, open)
    }

    pub fn coupling_check(&self, sample: &GraphicalSample, config: &WedgeBondConfig) -> Result<CouplingCheck> {
        coupling_check(sample, config, self.nu, |k| VertexRange { lo: k, hi: k })
    }
}

impl BondModel for InducedWindow {
    fn nominal_p(&self) -> f64 {
        1.0 - ETA
    }

    fn sample(&self, height: u32, seed: u64) -> Result<WedgeBondConfig> {
        Ok(self.sample_with_graph(height, seed)?.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::poisson_cdf;

    fn lattice_half() -> InterarrivalSpec {
        InterarrivalSpec::arithmetic(1.0, &[(1, 0.5), (2, 0.5)]).unwrap()
    }

    #[test]
    fn iid_is_deterministic_and_fair() {
        let a = sample_iid_bonds(0.5, 50, 7).unwrap();
        assert_eq!(a, sample_iid_bonds(0.5, 50, 7).unwrap());
        let frac = a.open_count() as f64 / 2550.0;
        assert!((frac - 0.5).abs() < 0.02, "{frac}");
        assert!(sample_iid_bonds(1.0, 5, 1).is_err());
    }

    #[test]
    fn iid_near_one_is_almost_all_open() {
        let good = (0..1000).filter(|&s| sample_iid_bonds(1.0 - 1e-9, 10, s).unwrap().open_count() >= 109).count();
        assert!(good >= 990);
    }

    #[test]
    fn regenerative_columns_cover_every_edge_once() {
        for h in 1..8i64 {
            let mut seen = std::collections::HashSet::new();
            for c in -h..h {
                let start = if c >= 0 { c } else { -c - 1 };
                for y in start..h {
                    let e = RegenerativeBonds::column_edge(c, y);
                    assert_eq!(e.column(), c);
                    assert!(build_wedge(h as u32).unwrap().contains_edge(&e));
                    assert!(seen.insert(e));
                }
            }
            assert_eq!(seen.len(), (h * (h + 1)) as usize);
        }
    }

    #[test]
    fn regenerative_marginal_after_open_and_closed() {
        let model = RegenerativeBonds::new(0.8, 0.1).unwrap();
        let (mut first_closed, mut after_open, mut opens) = (0u32, 0u32, 0u32);
        let trials = 40_000;
        for s in 0..trials {
            let c = model.sample(2, s).unwrap();
            let a = c.is_open(&WedgeEdge::north_east(0, 0));
            let b = c.is_open(&WedgeEdge::north_west(1, 1));
            first_closed += u32::from(!a);
            if a {
                opens += 1;
                after_open += u32::from(!b);
            }
        }
        let q0 = first_closed as f64 / trials as f64;
        let q1 = after_open as f64 / opens as f64;
        assert!((q0 - 0.1).abs() < 0.01, "{q0}");
        assert!((q1 - 0.2).abs() < 0.015, "{q1}");
        assert!(RegenerativeBonds::new(0.8, 0.2).is_err());
    }

    #[test]
    fn no_arrows_closes_everything() {
        let model = InducedArithmetic::new(lattice_half(), 0.0, 2, 1.0).unwrap();
        let c = model.sample(4, 3).unwrap();
        assert_eq!(c.open_count(), 0);
        let model = InducedWindow::new(InterarrivalSpec::exponential(1.0).unwrap(), 0.0, 0.1).unwrap();
        assert_eq!(model.sample(4, 3).unwrap().open_count(), 0);
    }

    #[test]
    fn hand_built_arithmetic_edge() {
        let model = InducedArithmetic::new(lattice_half(), 1.0, 1, 1.0).unwrap();
        let range = model.sample_range(1);
        let mut sample = GraphicalSample::empty(range, 2.0).unwrap().with_arrows(0, 1, vec![0.5]).unwrap();
        for x in range.iter().filter(|&x| x != 1) {
            sample = sample.with_marks(x, vec![1.0]).unwrap();
        }
        let c = model.bonds(&sample, build_wedge(1).unwrap()).unwrap();
        assert!(c.is_open(&WedgeEdge::north_east(0, 0)));
        assert!(!c.is_open(&WedgeEdge::north_west(0, 0)));
        let marked = sample.clone().with_marks(1, vec![1.0]).unwrap();
        let c = model.bonds(&marked, build_wedge(1).unwrap()).unwrap();
        assert!(!c.is_open(&WedgeEdge::north_east(0, 0)));
    }

    #[test]
    fn hand_built_leftward_block_edge() {
        // M = 2: the edge (0,0) → (−1,1) needs a path 1 → −2 inside [−2, 1].
        let model = InducedArithmetic::new(lattice_half(), 1.0, 2, 1.0).unwrap();
        let range = model.sample_range(1);
        let sample = GraphicalSample::empty(range, 2.0)
            .unwrap()
            .with_arrows(1, 0, vec![0.2])
            .unwrap()
            .with_arrows(0, -1, vec![0.4])
            .unwrap()
            .with_arrows(-1, -2, vec![0.6])
            .unwrap();
        let c = model.bonds(&sample, build_wedge(1).unwrap()).unwrap();
        assert!(c.is_open(&WedgeEdge::north_west(0, 0)));
        assert!(!c.is_open(&WedgeEdge::north_east(0, 0)));
        let late = sample.with_arrows(-1, -2, vec![1.0]).unwrap();
        assert!(!model.bonds(&late, build_wedge(1).unwrap()).unwrap().is_open(&WedgeEdge::north_west(0, 0)));
    }

    #[test]
    fn window_mark_closes_outgoing_edges() {
        let model = InducedWindow::new(InterarrivalSpec::exponential(1.0).unwrap(), 5.0, 0.5).unwrap();
        let range = model.sample_range(2);
        let sample = GraphicalSample::empty(range, 1.5)
            .unwrap()
            .with_arrows(0, 1, vec![0.2, 0.7])
            .unwrap()
            .with_arrows(0, -1, vec![0.3])
            .unwrap()
            .with_marks(0, vec![0.6])
            .unwrap();
        let c = model.bonds(&sample, build_wedge(2).unwrap()).unwrap();
        assert!(c.is_open(&WedgeEdge::north_east(0, 0)));
        assert!(c.is_open(&WedgeEdge::north_west(0, 0)));
        let marked = sample.with_marks(0, vec![0.4]).unwrap();
        let c = model.bonds(&marked, build_wedge(2).unwrap()).unwrap();
        assert!(!c.is_open(&WedgeEdge::north_east(0, 0)));
        assert!(!c.is_open(&WedgeEdge::north_west(0, 0)));
    }

    #[test]
    fn window_arrow_failure_is_poisson_zero_class() {
        // Marks never fall in the first window, so only arrows matter.
        let spec = InterarrivalSpec::degenerate(10.0).unwrap();
        let model = InducedWindow::new(spec, 10.0, 1.0).unwrap();
        let trials = 200_000u64;
        let fails = (0..trials)
            .filter(|&s| !model.sample(1, s).unwrap().is_open(&WedgeEdge::north_east(0, 0)))
            .count();
        let p = fails as f64 / trials as f64;
        let exact = (-10f64).exp();
        let se = (exact / trials as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se + 1e-6, "{p} vs {exact}");
    }

    #[test]
    fn arithmetic_edge_law_factorises() {
        // u_1 = 1/2 per site, so both sites of B_1 are marked at time 1 w.p. 1/4;
        // the path needs 3 sequential arrows in a unit window.
        let model = InducedArithmetic::new(lattice_half(), 2.0, 2, 1.0).unwrap();
        let trials = 40_000u64;
        let fails = (0..trials)
            .filter(|&s| !model.sample(1, s).unwrap().is_open(&WedgeEdge::north_east(0, 0)))
            .count();
        let p = fails as f64 / trials as f64;
        let exact = 1.0 - 0.75 * (1.0 - poisson_cdf(2.0, 2));
        let se = (exact * (1.0 - exact) / trials as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se, "{p} vs {exact}");
    }

    #[test]
    fn arithmetic_rejects_non_lattice() {
        let spec = InterarrivalSpec::exponential(1.0).unwrap();
        assert!(InducedArithmetic::new(spec, 1.0, 1, 1.0).is_err());
        assert!(InducedArithmetic::new(lattice_half(), 1.0, 1, 1.5).is_err());
        assert!(InducedArithmetic::new(lattice_half(), 1.0, 1, 2.0).is_ok());
    }

    #[test]
    fn coupling_holds_on_samples() {
        let arith = InducedArithmetic::new(lattice_half(), 6.0, 1, 1.0).unwrap();
        let window = InducedWindow::new(InterarrivalSpec::exponential(1.0).unwrap(), 40.0, 0.05).unwrap();
        for seed in 0..40 {
            let (s, c) = arith.sample_with_graph(8, seed).unwrap();
            assert_eq!(arith.coupling_check(&s, &c).unwrap().violation, None);
            let (s, c) = window.sample_with_graph(8, seed).unwrap();
            assert_eq!(window.coupling_check(&s, &c).unwrap().violation, None);
        }
    }
}
