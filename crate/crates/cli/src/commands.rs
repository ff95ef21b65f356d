use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use rcp_core::contact::{build_graphical_sample, estimate_lambda_c, evolve, survival_probability};
use rcp_core::contours::{count_bound_check, peierls_series, MAX_CONTOUR_LENGTH};
use rcp_core::distributions::DistributionDescriptor;
use rcp_core::percolation::{check_property_i, check_property_ii, percolation_trials};
use rcp_core::renewal::{
    arithmetic_renewal_masses, check_bounded_criterion, sup_arithmetic_mass, LatticeLaw, DEFAULT_MASS_TOLERANCE,
    DEFAULT_TRIALS,
};
use rcp_core::rng::derive_seed;
use rcp_core::stats::{Estimate, Z95};

use crate::config::{
    at_least, at_most, edge_label, non_negative, parse_edge, positive, spec_of, ModelFields, ModelKind,
};
use crate::error::{CliError, Result};
use crate::output::{StreamIds, Table};

pub const MAX_HEIGHT: u64 = 10_000;
pub const MAX_TABLE_LENGTH: u64 = 10_000_000;
pub const MAX_SERIES_TERMS: u64 = 100_000;

/// A subcommand's resolved configuration.
pub trait Experiment: DeserializeOwned + Serialize + Sync {
    const NAME: &'static str;

    fn seed(&self) -> u64;

    /// Range checks run before any work starts.
    fn validate(&self) -> Result<()>;

    fn run(&self) -> Result<Outcome>;
}

pub struct Outcome {
    pub table: Table,
    pub streams: StreamIds,
}

impl Outcome {
    fn new(table: Table, trials: u64) -> Self {
        Self { table, streams: StreamIds { first: 0, count: trials } }
    }
}

fn estimate_cells(e: &Estimate) -> [Value; 3] {
    [json!(e.mean), json!(e.half_width), json!(e.trials)]
}

fn default_trials() -> u64 {
    1000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub distribution: DistributionDescriptor,
    pub lambda: f64,
    pub box_half_width: u32,
    pub horizon: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    /// Dump the event log of trial 0 instead of estimating survival.
    #[serde(default)]
    pub trajectory: bool,
}

impl Experiment for SimulateConfig {
    const NAME: &'static str = "simulate";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        non_negative("lambda", self.lambda)?;
        at_least("box_half_width", self.box_half_width.into(), 1)?;
        positive("horizon", self.horizon)?;
        at_least("trials", self.trials, 1)?;
        spec_of(&self.distribution).map(drop)
    }

    fn run(&self) -> Result<Outcome> {
        let spec = spec_of(&self.distribution)?;
        if self.trajectory {
            let sample =
                build_graphical_sample(&spec, self.lambda, self.box_half_width, self.horizon, derive_seed(self.seed, 0))?;
            let path = evolve(&sample, &[0])?;
            let mut t = Table::new(&["time", "vertex", "event_type"]);
            for e in path.events() {
                t.push(vec![json!(e.time), json!(e.vertex), json!(e.kind.as_str())]);
            }
            let t = t.with_summary(json!({
                "boundary_hit": path.boundary_hit(),
                "extinction_time": path.extinction_time(),
                "final_state": path.final_state(),
            }));
            return Ok(Outcome::new(t, 1));
        }
        let s = survival_probability(&spec, self.lambda, self.box_half_width, self.horizon, self.trials, self.seed)?;
        let mut t = Table::new(&["lambda", "survival", "half_width", "trials", "boundary_hits", "boundary_fraction"]);
        let [m, h, n] = estimate_cells(&s.survival);
        t.push(vec![json!(s.lambda), m, h, n, json!(s.boundary_hits), json!(s.boundary_fraction)]);
        Ok(Outcome::new(t.with_summary(s), self.trials))
    }
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaCConfig {
    pub distribution: DistributionDescriptor,
    pub box_half_width: u32,
    pub horizon: f64,
    pub bracket: [f64; 2],
    #[serde(default = "default_threshold")]
    pub survival_threshold: f64,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Experiment for LambdaCConfig {
    const NAME: &'static str = "lambda-c";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        at_least("box_half_width", self.box_half_width.into(), 1)?;
        positive("horizon", self.horizon)?;
        let [lo, hi] = self.bracket;
        non_negative("bracket", lo)?;
        positive("bracket", hi)?;
        if lo >= hi {
            return Err(CliError::config("bracket", "need lo < hi"));
        }
        if !(self.survival_threshold > 0.0 && self.survival_threshold < 1.0) {
            return Err(CliError::config("survival_threshold", "must lie in (0, 1)"));
        }
        at_least("trials", self.trials, 1)?;
        spec_of(&self.distribution).map(drop)
    }

    fn run(&self) -> Result<Outcome> {
        let spec = spec_of(&self.distribution)?;
        let [lo, hi] = self.bracket;
        let e = estimate_lambda_c(
            &spec,
            self.box_half_width,
            self.horizon,
            self.trials,
            (lo, hi),
            self.survival_threshold,
            self.seed,
        )?;
        let mut t = Table::new(&[
            "lambda_hat",
            "lo",
            "hi",
            "survival_lo",
            "half_width_lo",
            "survival_hi",
            "half_width_hi",
            "trials",
        ]);
        t.push(vec![
            json!(e.lambda_hat),
            json!(e.lo),
            json!(e.hi),
            json!(e.survival_lo.survival.mean),
            json!(e.survival_lo.survival.half_width),
            json!(e.survival_hi.survival.mean),
            json!(e.survival_hi.survival.half_width),
            json!(self.trials),
        ]);
        Ok(Outcome::new(t.with_summary(e), self.trials))
    }
}

fn default_k_max() -> u64 {
    2000
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenewalConfig {
    pub distribution: DistributionDescriptor,
    #[serde(default = "default_k_max")]
    pub k_max: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Experiment for RenewalConfig {
    const NAME: &'static str = "renewal";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        at_least("k_max", self.k_max, 1)?;
        at_most("k_max", self.k_max, MAX_TABLE_LENGTH)?;
        LatticeLaw::from_spec(&spec_of(&self.distribution)?)?;
        Ok(())
    }

    fn run(&self) -> Result<Outcome> {
        let law = LatticeLaw::from_spec(&spec_of(&self.distribution)?)?;
        let table = arithmetic_renewal_masses(&law, self.k_max as usize)?;
        let sup = sup_arithmetic_mass(&table, 1);
        let mut t = Table::new(&["k", "u_k"]);
        for (k, u) in table.masses.iter().enumerate() {
            t.push(vec![json!(k), json!(u)]);
        }
        let t = t.with_summary(json!({
            "span": law.span,
            "limit": law.span / law.mean(),
            "degenerate": law.is_degenerate(),
            "sup": sup,
        }));
        Ok(Outcome::new(t, 0))
    }
}

fn default_mass_tolerance() -> f64 {
    DEFAULT_MASS_TOLERANCE
}

fn default_mc_trials() -> u64 {
    DEFAULT_TRIALS
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowCheckConfig {
    pub distribution: DistributionDescriptor,
    pub kappa: f64,
    #[serde(default = "default_mass_tolerance")]
    pub mass_tolerance: f64,
    #[serde(default = "default_mc_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Experiment for WindowCheckConfig {
    const NAME: &'static str = "window-check";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        positive("kappa", self.kappa)?;
        positive("mass_tolerance", self.mass_tolerance)?;
        at_least("trials", self.trials, 2)?;
        spec_of(&self.distribution).map(drop)
    }

    fn run(&self) -> Result<Outcome> {
        let spec = spec_of(&self.distribution)?;
        let c = check_bounded_criterion(&spec, self.kappa, self.mass_tolerance, self.trials, self.seed)?;
        let mut t =
            Table::new(&["kappa", "sup_estimate", "a_star", "threshold", "passes", "nu", "u_nu", "lambda"]);
        let a = &c.atomic;
        t.push(vec![
            json!(a.kappa),
            json!(a.sup_estimate),
            json!(a.a_star),
            json!(a.threshold),
            json!(a.passes),
            json!(c.nu),
            json!(c.u_nu),
            json!(c.lambda),
        ]);
        let trials = if spec.continuous_mass() > 0.0 { self.trials } else { 0 };
        Ok(Outcome::new(t.with_summary(c), trials))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolateConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionDescriptor>,
    #[serde(rename = "H")]
    pub height: u32,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

impl PercolateConfig {
    fn fields(&self) -> ModelFields {
        ModelFields {
            model: self.model,
            p: self.p,
            bias: self.bias,
            block_size: self.block_size,
            d: self.d,
            nu: self.nu,
            lambda: self.lambda,
            distribution: self.distribution.clone(),
        }
    }
}

impl Experiment for PercolateConfig {
    const NAME: &'static str = "percolate";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        at_least("H", self.height.into(), 1)?;
        at_most("H", self.height.into(), MAX_HEIGHT)?;
        at_least("trials", self.trials, 1)?;
        self.fields().build().map(drop)
    }

    fn run(&self) -> Result<Outcome> {
        let model = self.fields().build()?;
        let rows = percolation_trials(&*model, self.height, self.trials, self.seed)?;
        let hits = rows.iter().filter(|r| r.reached_top).count() as u64;
        let mut t = Table::new(&["trial", "reached_top", "cluster_size"]);
        for r in &rows {
            t.push(vec![json!(r.trial), json!(r.reached_top), json!(r.cluster_size)]);
        }
        let summary = json!({
            "nominal_p": model.nominal_p(),
            "reached_top": Estimate::from_counts(hits, self.trials),
        });
        Ok(Outcome::new(t.with_summary(summary), self.trials))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Property {
    /// Joint closure of colinear edges against `(1 − p)^k`.
    I,
    /// Covariance of two edges in different columns.
    II,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyCheckConfig {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub block_size: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<DistributionDescriptor>,
    pub property: Property,
    /// `ne:x:y` / `nw:x:y` labels.
    pub edges: Vec<String>,
    #[serde(default = "default_mc_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
}

impl PropertyCheckConfig {
    fn fields(&self) -> ModelFields {
        ModelFields {
            model: self.model,
            p: self.p,
            bias: self.bias,
            block_size: self.block_size,
            d: self.d,
            nu: self.nu,
            lambda: self.lambda,
            distribution: self.distribution.clone(),
        }
    }
}

impl Experiment for PropertyCheckConfig {
    const NAME: &'static str = "property-check";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        let edges = self.edges.iter().map(|s| parse_edge(s)).collect::<Result<Vec<_>>>()?;
        match self.property {
            Property::I if edges.is_empty() || edges.len() > 4 => {
                return Err(CliError::config("edges", "property I takes 1 to 4 edges"))
            }
            Property::II if edges.len() != 2 => return Err(CliError::config("edges", "property II takes 2 edges")),
            _ => {}
        }
        at_least("trials", self.trials, 2)?;
        self.fields().build().map(drop)
    }

    fn run(&self) -> Result<Outcome> {
        let model = self.fields().build()?;
        let edges = self.edges.iter().map(|s| parse_edge(s)).collect::<Result<Vec<_>>>()?;
        let table = match self.property {
            Property::I => {
                let r = check_property_i(&*model, &edges, self.trials, self.seed)?;
                let mut t = Table::new(&["edges", "column", "joint_closure", "half_width", "trials", "bound", "passes"]);
                let labels: Vec<String> = r.edges.iter().map(edge_label).collect();
                let [m, h, n] = estimate_cells(&r.joint_closure);
                t.push(vec![json!(labels.join(" ")), json!(r.column), m, h, n, json!(r.bound), json!(r.passes)]);
                t.with_summary(r)
            }
            Property::II => {
                let r = check_property_ii(&*model, edges[0], edges[1], self.trials, self.seed)?;
                let mut t = Table::new(&[
                    "first",
                    "second",
                    "gap",
                    "p_first",
                    "p_second",
                    "p_both",
                    "covariance",
                    "std_error",
                    "half_width",
                    "trials",
                    "verdict",
                ]);
                t.push(vec![
                    json!(edge_label(&r.first)),
                    json!(edge_label(&r.second)),
                    json!(r.gap),
                    json!(r.p_first),
                    json!(r.p_second),
                    json!(r.p_both),
                    json!(r.covariance),
                    json!(r.std_error),
                    json!(Z95 * r.std_error),
                    json!(r.trials),
                    json!(r.verdict),
                ]);
                t.with_summary(r)
            }
        };
        Ok(Outcome::new(table, self.trials))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContoursConfig {
    pub n: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Experiment for ContoursConfig {
    const NAME: &'static str = "contours";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        at_least("n", self.n, 2)?;
        at_most("n", self.n, MAX_CONTOUR_LENGTH as u64)
    }

    fn run(&self) -> Result<Outcome> {
        let b = count_bound_check(self.n as usize)?;
        let mut t = Table::new(&["n", "c_n", "bound", "ok"]);
        t.push(vec![json!(b.n), json!(b.count), json!(b.bound), json!(b.ok)]);
        Ok(Outcome::new(t.with_summary(b), 0))
    }
}

fn default_nmax() -> u64 {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeierlsConfig {
    pub epsilon: f64,
    #[serde(default = "default_nmax")]
    pub nmax: u64,
    #[serde(default)]
    pub seed: u64,
}

impl Experiment for PeierlsConfig {
    const NAME: &'static str = "peierls";

    fn seed(&self) -> u64 {
        self.seed
    }

    fn validate(&self) -> Result<()> {
        positive("epsilon", self.epsilon)?;
        at_least("nmax", self.nmax, 2)?;
        at_most("nmax", self.nmax, MAX_SERIES_TERMS)
    }

    fn run(&self) -> Result<Outcome> {
        let s = peierls_series(self.epsilon, self.nmax as usize)?;
        let mut t = Table::new(&["epsilon", "partial_sum", "tail_bound", "closed_form", "below_one"]);
        t.push(vec![
            json!(s.epsilon),
            json!(s.partial_sum),
            json!(s.tail_bound),
            json!(s.closed_form),
            json!(s.below_one),
        ]);
        Ok(Outcome::new(t.with_summary(s), 0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contour_row() {
        let o = ContoursConfig { n: 3, seed: 0 }.run().unwrap();
        assert_eq!(o.table.rows, vec![vec![json!(3), json!(2), json!(6), json!(true)]]);
    }

    #[test]
    fn contour_caps() {
        assert!(matches!(ContoursConfig { n: 1, seed: 0 }.validate(), Err(CliError::Config { .. })));
        assert!(matches!(ContoursConfig { n: 15, seed: 0 }.validate(), Err(CliError::Resource(_))));
    }

    #[test]
    fn peierls_boundary() {
        let o = PeierlsConfig { epsilon: 0.00390625, nmax: 200, seed: 0 }.run().unwrap();
        let row = &o.table.rows[0];
        assert_eq!(row[3], json!(1.0));
        assert_eq!(row[4], json!(false));
    }

    #[test]
    fn property_edge_counts() {
        let base: PropertyCheckConfig = serde_json::from_value(json!({
            "model": "iid", "p": 0.9, "property": "II", "edges": ["ne:0:0"]
        }))
        .unwrap();
        assert!(matches!(base.validate(), Err(CliError::Config { field, .. }) if field == "edges"));
        let ok = PropertyCheckConfig { edges: vec!["ne:0:2".into(), "ne:2:2".into()], ..base };
        ok.validate().unwrap();
    }
}
