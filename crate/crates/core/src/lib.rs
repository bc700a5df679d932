//! Seeded simulator for sizing UAV base-station fleets over mobile ground
//! IoT nodes on a farm.
//!
//! For each snapshot the node positions are clustered and one UAV hovers
//! over every centroid. The smallest UAV count whose scheduled links serve
//! the coverage target, with UAVs kept apart by the minimum separation,
//! wins. A distance-dependent
//! Chinese Restaurant Process clustering serves as the baseline.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod config;
pub mod error;
pub mod export;
pub mod geometry;
pub mod harness;
pub mod mobility;
pub mod par;
pub mod planner;
pub mod radio;
pub mod scenario;
pub mod seed;

pub use config::{load_config, SimConfig};
pub use error::{Error, Result};
pub use par::Exec;
