//! Numerical laboratory for the one-dimensional renewal contact process.
//!
//! Recovery marks at each site follow an independent renewal process with
//! interarrival law `μ`; infections travel along Poisson(λ) arrows between
//! neighbours. The crate provides
//!
//! * [`distributions`]: interarrival laws (atomic + continuous mixtures) and samplers,
//! * [`renewal`]: renewal-measure tables, atomic parts and windowed-mass criteria,
//! * [`contact`]: the graphical construction, trajectories and survival estimates,
//! * [`percolation`]: the oriented wedge lattice, block-induced bond models,
//!   cluster exploration and dual contours,
//! * [`contours`]: admissible-path enumeration and the Peierls series.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contact;
pub mod contours;
pub mod distributions;
pub mod error;
pub mod percolation;
pub mod renewal;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Closure-probability threshold `2^-8` for which the contour series stays below one.
pub const ETA: f64 = 0.00390625;
