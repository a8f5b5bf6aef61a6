//! Recurrent congestion discovery on road networks.
//!
//! The pipeline turns per-unit speed records into unit loads, flags units
//! whose load is an outlier for its weekly time bucket, groups flagged units
//! into clusters, merges overlapping clusters across time into persistent
//! subgraphs and ranks subgraph pairs by co-occurrence over distance.

pub mod artifacts;
pub mod clustering;
pub mod dependencies;
pub mod error;
pub mod geojson;
pub mod eval;
pub mod merging;
pub mod outliers;
pub mod pipeline;
pub mod road_graph;
pub mod synth;
pub mod tracking;
pub mod traffic;

pub use error::{Error, Result};
