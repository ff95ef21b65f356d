use rayon::prelude::*;
use serde::Serialize;

use super::models::BondModel;
use super::wedge::WedgeEdge;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::stats::Estimate;

/// Largest colinear set checked by [`check_property_i`].
pub const MAX_COLINEAR: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyIReport {
    pub edges: Vec<WedgeEdge>,
    pub column: i64,
    /// Frequency of all edges being closed together.
    pub joint_closure: Estimate,
    /// `(1 − p)^k` at the model's nominal `p`.
    pub bound: f64,
    pub passes: bool,
}

fn sample_height(edges: &[WedgeEdge]) -> u32 {
    edges.iter().map(|e| e.from.y + 1).max().unwrap_or(1) as u32
}

/// Indices `i` run through `derive_seed(seed, i)`; counts are merged by summation.
fn count_parallel<M: BondModel + ?Sized, const K: usize>(
    model: &M,
    height: u32,
    trials: u64,
    seed: u64,
    tally: impl Fn(&super::WedgeBondConfig) -> [u64; K] + Sync,
) -> Result<[u64; K]> {
    (0..trials)
        .into_par_iter()
        .map(|i| model.sample(height, derive_seed(seed, i)).map(|c| tally(&c)))
        .try_reduce(|| [0; K], |a, b| Ok(std::array::from_fn(|j| a[j] + b[j])))
}

/// Joint-closure frequency of `k ≤ 4` distinct edges in one column; passes
/// when the estimate minus three standard errors is at most `(1 − p)^k`.
pub fn check_property_i<M: BondModel + ?Sized>(
    model: &M,
    edges: &[WedgeEdge],
    trials: u64,
    seed: u64,
) -> Result<PropertyIReport> {
    let k = edges.len();
    if !(1..=MAX_COLINEAR).contains(&k) {
        return Err(Error::invalid("edges", format!("need between 1 and {MAX_COLINEAR} edges")));
    }
    if trials < 1 {
        return Err(Error::invalid("trials", "must be at least 1"));
    }
    let column = edges[0].column();
    if edges.iter().any(|e| e.column() != column) {
        return Err(Error::invalid("edges", "edges must share a column"));
    }
    if edges.iter().enumerate().any(|(i, e)| edges[..i].contains(e)) {
        return Err(Error::invalid("edges", "edges must be distinct"));
    }
    if edges.iter().any(|e| !e.from.in_wedge()) {
        return Err(Error::invalid("edges", "edge outside the wedge"));
    }
    let [closed] = count_parallel(model, sample_height(edges), trials, seed, |c| {
        [u64::from(edges.iter().all(|e| !c.is_open(e)))]
    })?;
    let joint_closure = Estimate::from_counts(closed, trials);
    let bound = (1.0 - model.nominal_p()).powi(k as i32);
    Ok(PropertyIReport {
        edges: edges.to_vec(),
        column,
        joint_closure,
        bound,
        passes: joint_closure.mean - 3.0 * joint_closure.std_error <= bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Column gap below 2: no independence is claimed.
    Informational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyIIReport {
    pub first: WedgeEdge,
    pub second: WedgeEdge,
    pub gap: i64,
    pub p_first: f64,
    pub p_second: f64,
    pub p_both: f64,
    /// `P(both open) − P(first open)·P(second open)`.
    pub covariance: f64,
    pub std_error: f64,
    pub trials: u64,
    pub verdict: Verdict,
}

/// Covariance of the two open indicators with its standard error, from the
/// 2×2 table of counts. A pair with gap ≥ 2 passes when
/// `|cov| ≤ 4·SE`.
pub fn check_property_ii<M: BondModel + ?Sized>(
    model: &M,
    first: WedgeEdge,
    second: WedgeEdge,
    trials: u64,
    seed: u64,
) -> Result<PropertyIIReport> {
    if trials < 2 {
        return Err(Error::invalid("trials", "must be at least 2"));
    }
    if !(first.from.in_wedge() && second.from.in_wedge()) {
        return Err(Error::invalid("edges", "edge outside the wedge"));
    }
    let height = sample_height(&[first, second]);
    let [n11, n10, n01] = count_parallel(model, height, trials, seed, |c| {
        let (a, b) = (c.is_open(&first), c.is_open(&second));
        [u64::from(a && b), u64::from(a && !b), u64::from(!a && b)]
    })?;
    let n = trials as f64;
    let pa = (n11 + n10) as f64 / n;
    let pb = (n11 + n01) as f64 / n;
    let pab = n11 as f64 / n;
    let covariance = pab - pa * pb;
    // Z = (A − ā)(B − b̄) takes four values; its sample variance over n gives the SE.
    let n00 = trials - n11 - n10 - n01;
    let z = |a: f64, b: f64| (a - pa) * (b - pb);
    let cells = [(n11, z(1.0, 1.0)), (n10, z(1.0, 0.0)), (n01, z(0.0, 1.0)), (n00, z(0.0, 0.0))];
    let second_moment: f64 = cells.iter().map(|&(c, v)| c as f64 * v * v).sum::<f64>() / n;
    let var = (second_moment - covariance * covariance).max(0.0) * n / (n - 1.0);
    let std_error = (var / n).sqrt();
    let gap = (first.column() - second.column()).abs();
    let verdict = if gap < 2 {
        Verdict::Informational
    } else if covariance.abs() <= 4.0 * std_error {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(PropertyIIReport {
        first,
        second,
        gap,
        p_first: pa,
        p_second: pb,
        p_both: pab,
        covariance,
        std_error,
        trials,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::percolation::models::{IidBonds, RegenerativeBonds};

    #[test]
    fn iid_pair_closure_sits_at_bound() {
        let model = IidBonds::new(0.9).unwrap();
        let edges = [WedgeEdge::north_east(0, 0), WedgeEdge::north_east(0, 2)];
        let r = check_property_i(&model, &edges, 200_000, 3).unwrap();
        assert!((r.bound - 0.01).abs() < 1e-12);
        assert!((r.joint_closure.mean - 0.01).abs() < 4.0 * r.joint_closure.std_error);
        assert!(r.passes);
    }

    #[test]
    fn input_checks() {
        let model = IidBonds::new(0.9).unwrap();
        let e = WedgeEdge::north_east(0, 0);
        assert!(check_property_i(&model, &[e, e], 10, 1).is_err());
        assert!(check_property_i(&model, &[e, WedgeEdge::north_east(1, 1)], 10, 1).is_err());
        assert!(check_property_i(&model, &[], 10, 1).is_err());
        assert!(check_property_i(&model, &[e; 5], 10, 1).is_err());
    }

    #[test]
    fn regenerative_model_satisfies_property_i() {
        let model = RegenerativeBonds::new(0.7, 0.15).unwrap();
        let column: Vec<_> = (0..4).map(|y| RegenerativeBonds::column_edge(1, 1 + y)).collect();
        for k in 1..=4 {
            let r = check_property_i(&model, &column[..k], 100_000, k as u64).unwrap();
            assert!(r.passes, "{r:?}");
        }
    }

    #[test]
    fn independent_columns_pass() {
        let model = RegenerativeBonds::new(0.6, 0.2).unwrap();
        let r = check_property_ii(&model, WedgeEdge::north_east(0, 2), WedgeEdge::north_east(2, 2), 100_000, 9).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:?}");
        let r = check_property_ii(&IidBonds::new(0.5).unwrap(), WedgeEdge::north_east(0, 0), WedgeEdge::north_west(3, 3), 50_000, 2).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn same_column_dependence_is_detected_but_informational() {
        let model = RegenerativeBonds::new(0.6, 0.3).unwrap();
        let a = RegenerativeBonds::column_edge(0, 0);
        let b = RegenerativeBonds::column_edge(0, 1);
        let r = check_property_ii(&model, a, b, 100_000, 4).unwrap();
        assert_eq!(r.verdict, Verdict::Informational);
        // After an open edge the next closes w.p. 0.4, after a closed one w.p. 0.1.
        assert!(r.covariance < -10.0 * r.std_error, "{r:?}");
    }

    #[test]
    fn covariance_se_matches_binomial_case() {
        let model = IidBonds::new(0.5).unwrap();
        let r = check_property_ii(&model, WedgeEdge::north_east(0, 0), WedgeEdge::north_east(2, 2), 100_000, 1).unwrap();
        // Var((A−½)(B−½)) = 1/16 for independent fair coins.
        assert!((r.std_error - (1.0f64 / 16.0 / 100_000.0).sqrt()).abs() < 1e-5);
    }
}
