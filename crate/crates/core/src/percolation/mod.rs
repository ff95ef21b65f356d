//! Oriented bond percolation on the wedge `{(x, y) : |x| ≤ y, x + y even}`.
//!
//! Bond models implement [`BondModel`]. Besides i.i.d. and regenerative
//! synthetic models, two models are induced from a contact-process graphical
//! sample: a block construction for lattice laws and a single-site window
//! construction. An open path to the top row of an induced configuration
//! forces the infection started from `{0}` to survive on the sample, which
//! [`InducedArithmetic::coupling_check`] verifies sample by sample.

mod cluster;
mod dual;
mod models;
mod properties;
mod wedge;

pub use cluster::{explore_cluster, percolation_probability, percolation_trials, Cluster, PercolationTrial};
pub use dual::{
    check_parity, crossed_edge, find_dual_contour, for_each_dual_path, validate_contour, DualContour,
    DualStep, DualVertex, ParityCounts,
};
pub use models::{
    sample_iid_bonds, BondModel, CouplingCheck, IidBonds, InducedArithmetic, InducedWindow,
    RegenerativeBonds,
};
pub use properties::{
    check_property_i, check_property_ii, PropertyIIReport, PropertyIReport, Verdict, MAX_COLINEAR,
};
pub use wedge::{build_wedge, Step, WedgeBondConfig, WedgeEdge, WedgeGraph, WedgeVertex};
