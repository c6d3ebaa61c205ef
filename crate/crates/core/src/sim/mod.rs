//! Deterministic synthetic environments, sensor models, and the mission
//! orchestrator that drives ground exploration, hand-off, and aerial
//! continuation.

pub mod lidar;
pub mod metrics;
pub mod mission;
pub mod scenario;

pub use lidar::{simulate_lidar, SimPoint};
pub use metrics::{CycleRecord, DeploymentEvent, MissionMetrics};
pub use mission::{apply_static_transform, run_mission, MissionReport};
pub use scenario::{Aabb, Scenario, ScenarioKind};
