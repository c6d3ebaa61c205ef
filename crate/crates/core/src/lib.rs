//! Ground-aerial collaborative exploration stack: multimodal (geometric +
//! semantic) traversability mapping, a hierarchical navigation-graph planner
//! with confidence scoring, aerial-deployment-zone identification, and a
//! unified-graph sharing protocol between two simulated agents.

pub mod config;
pub mod confidence;
pub mod elevation;
pub mod error;
pub mod frontier;
pub mod geometry;
pub mod graph;
pub mod hierarchy;
pub mod io;
pub mod kdtree;
pub mod protocol;
pub mod semantics;
pub mod sim;
pub mod voxel;

pub use error::{Error, Result};
