use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use rcp_core::distributions::{DistributionDescriptor, InterarrivalSpec};
use rcp_core::percolation::{
    BondModel, IidBonds, InducedArithmetic, InducedWindow, RegenerativeBonds, Step, WedgeEdge,
};

use crate::error::{CliError, Result};

/// Reads a JSON object from `path`; no path gives an empty document.
pub fn load_document(path: Option<&Path>) -> Result<Map<String, Value>> {
    let Some(path) = path else {
        return Ok(Map::new());
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::config("config", "top level must be a JSON object")),
        Err(e) => Err(CliError::config("config", e.to_string())),
    }
}

/// Lays `overrides` over `doc` key by key and decodes the result. Decode
/// errors name the offending field.
pub fn resolve<T: DeserializeOwned>(mut doc: Map<String, Value>, overrides: Map<String, Value>) -> Result<T> {
    doc.extend(overrides);
    serde_path_to_error::deserialize(Value::Object(doc)).map_err(|e| {
        let path = e.path().to_string();
        let field = if path == "." { "config".to_string() } else { path };
        CliError::config(field, e.into_inner().to_string())
    })
}

pub fn positive(field: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(field, format!("must be positive and finite, got {v}")))
    }
}

pub fn non_negative(field: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::config(field, format!("must be non-negative and finite, got {v}")))
    }
}

pub fn at_least(field: &str, v: u64, min: u64) -> Result<()> {
    if v >= min {
        Ok(())
    } else {
        Err(CliError::config(field, format!("must be at least {min}, got {v}")))
    }
}

pub fn at_most(field: &str, v: u64, cap: u64) -> Result<()> {
    if v <= cap {
        Ok(())
    } else {
        Err(CliError::Resource(format!("{field} = {v} exceeds the cap of {cap}")))
    }
}

pub fn spec_of(d: &DistributionDescriptor) -> Result<InterarrivalSpec> {
    d.to_spec().map_err(|e| match e {
        rcp_core::Error::Validation { field, reason } => CliError::config(format!("distribution.{field}"), reason),
        other => other.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Iid,
    InducedArithmetic,
    InducedWindow,
    SyntheticRegen,
}

/// Bond-model fields shared by `percolate` and `property-check`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFields {
    pub model: ModelKind,
    pub p: Option<f64>,
    pub bias: Option<f64>,
    pub block_size: Option<u32>,
    pub d: Option<f64>,
    pub nu: Option<f64>,
    pub lambda: Option<f64>,
    pub distribution: Option<DistributionDescriptor>,
}

fn require<T: Copy>(field: &str, v: Option<T>, model: ModelKind) -> Result<T> {
    v.ok_or_else(|| CliError::config(field, format!("required by model {model:?}")))
}

impl ModelFields {
    fn forbid(&self, fields: &[&str]) -> Result<()> {
        for &f in fields {
            let set = match f {
                "p" => self.p.is_some(),
                "bias" => self.bias.is_some(),
                "M" => self.block_size.is_some(),
                "d" => self.d.is_some(),
                "nu" => self.nu.is_some(),
                "lambda" => self.lambda.is_some(),
                "distribution" => self.distribution.is_some(),
                _ => false,
            };
            if set {
                return Err(CliError::config(f, format!("not used by model {:?}", self.model)));
            }
        }
        Ok(())
    }

    fn spec(&self) -> Result<InterarrivalSpec> {
        let d = self
            .distribution
            .as_ref()
            .ok_or_else(|| CliError::config("distribution", format!("required by model {:?}", self.model)))?;
        spec_of(d)
    }

    pub fn build(&self) -> Result<Box<dyn BondModel>> {
        let m = self.model;
        Ok(match m {
            ModelKind::Iid => {
                self.forbid(&["bias", "M", "d", "nu", "lambda", "distribution"])?;
                Box::new(IidBonds::new(require("p", self.p, m)?)?)
            }
            ModelKind::SyntheticRegen => {
                self.forbid(&["M", "d", "nu", "lambda", "distribution"])?;
                Box::new(RegenerativeBonds::new(require("p", self.p, m)?, self.bias.unwrap_or(0.0))?)
            }
            ModelKind::InducedArithmetic => {
                self.forbid(&["p", "bias", "nu"])?;
                let lambda = require("lambda", self.lambda, m)?;
                non_negative("lambda", lambda)?;
                let block = require("M", self.block_size, m)?;
                let d = require("d", self.d, m)?;
                positive("d", d)?;
                Box::new(InducedArithmetic::new(self.spec()?, lambda, block, d)?)
            }
            ModelKind::InducedWindow => {
                self.forbid(&["p", "bias", "M", "d"])?;
                let lambda = require("lambda", self.lambda, m)?;
                non_negative("lambda", lambda)?;
                let nu = require("nu", self.nu, m)?;
                positive("nu", nu)?;
                Box::new(InducedWindow::new(self.spec()?, lambda, nu)?)
            }
        })
    }
}

/// `ne:x:y` or `nw:x:y`.
pub fn parse_edge(s: &str) -> Result<WedgeEdge> {
    let bad = || CliError::config("edges", format!("expected ne:x:y or nw:x:y, got {s:?}"));
    let mut parts = s.split(':');
    let (Some(dir), Some(x), Some(y), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
        return Err(bad());
    };
    let x: i64 = x.trim().parse().map_err(|_| bad())?;
    let y: i64 = y.trim().parse().map_err(|_| bad())?;
    let e = match dir.trim().to_ascii_lowercase().as_str() {
        "ne" => WedgeEdge::north_east(x, y),
        "nw" => WedgeEdge::north_west(x, y),
        _ => return Err(bad()),
    };
    if !e.from.in_wedge() {
        return Err(CliError::config("edges", format!("{s:?} does not start at a wedge vertex")));
    }
    Ok(e)
}

pub fn edge_label(e: &WedgeEdge) -> String {
    let dir = match e.step {
        Step::NorthEast => "ne",
        Step::NorthWest => "nw",
    };
    format!("{dir}:{}:{}", e.from.x, e.from.y)
}
