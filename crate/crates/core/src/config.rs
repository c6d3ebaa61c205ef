//! Mission-wide configuration: every tunable in one self-describing JSON
//! document, with explicit defaults.

use serde::{Deserialize, Serialize};

use crate::confidence::ConfidenceParams;
use crate::elevation::GeometricRiskParams;
use crate::error::{Error, Result};
use crate::hierarchy::GraphConfig;
use crate::semantics::AlphaTable;
use crate::voxel::GainWeights;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Cell size, meters.
    pub resolution: f64,
    /// Robot-centric window side, meters.
    pub window: f64,
    /// Hole-filling interpolation radius around measured cells, meters.
    pub infill_radius: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { resolution: 0.05, window: 10.0, infill_radius: 0.35 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoxelConfig {
    pub voxel_size: f64,
    pub block_side: usize,
    pub truncation: f64,
}

impl Default for VoxelConfig {
    fn default() -> Self {
        Self { voxel_size: 0.1, block_side: 16, truncation: 0.3 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Lidar max range, meters.
    pub lidar_range: f64,
    /// Azimuth ray count per scan.
    pub lidar_rays: usize,
    /// Elevation channel count per scan.
    pub lidar_channels: usize,
    /// Vertical fov of the lidar, radians (symmetric about horizontal).
    pub lidar_vertical_fov: f64,
    /// Gain-census frustum horizontal fov, radians.
    pub census_horizontal_fov: f64,
    /// Gain-census frustum vertical fov, radians.
    pub census_vertical_fov: f64,
    /// Gain-census range, meters. Deliberately beyond the lidar range so
    /// yet-unsensed volume still scores as gain.
    pub census_range: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            lidar_range: 2.0,
            lidar_rays: 96,
            lidar_channels: 25,
            lidar_vertical_fov: 1.6,
            census_horizontal_fov: 1.6,
            census_vertical_fov: 1.0,
            census_range: 3.5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotConfig {
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for RobotConfig {
    fn default() -> Self {
        Self { length: 0.8, width: 0.6, height: 0.4 }
    }
}

/// Everything `run` needs besides the scenario. Serialized as JSON with all
/// fields explicit so runs are self-describing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Planning-cycle cap before the mission is flagged incomplete.
    pub max_cycles: usize,
    pub grid: GridConfig,
    pub voxel: VoxelConfig,
    pub sensor: SensorConfig,
    pub robot: RobotConfig,
    pub risk: GeometricRiskParams,
    pub alphas: AlphaTable,
    pub ground_graph: GraphConfig,
    pub aerial_graph: GraphConfig,
    pub ground_confidence: ConfidenceParams,
    pub aerial_confidence: ConfidenceParams,
    /// Protocol transition timeout, seconds.
    pub protocol_timeout_secs: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            max_cycles: 40,
            grid: GridConfig::default(),
            voxel: VoxelConfig::default(),
            sensor: SensorConfig::default(),
            robot: RobotConfig::default(),
            risk: GeometricRiskParams::default(),
            alphas: AlphaTable::default(),
            ground_graph: GraphConfig::ground_default(),
            aerial_graph: GraphConfig::aerial_default(),
            ground_confidence: ConfidenceParams::default(),
            aerial_confidence: ConfidenceParams::aerial_default(),
            protocol_timeout_secs: 5.0,
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.max_cycles == 0 {
            return Err(Error::Config("max_cycles must be > 0".into()));
        }
        for (name, v) in [
            ("grid.resolution", self.grid.resolution),
            ("grid.window", self.grid.window),
            ("voxel.voxel_size", self.voxel.voxel_size),
            ("voxel.truncation", self.voxel.truncation),
            ("sensor.lidar_range", self.sensor.lidar_range),
            ("sensor.census_range", self.sensor.census_range),
            ("robot.length", self.robot.length),
            ("robot.width", self.robot.width),
            ("robot.height", self.robot.height),
            ("protocol_timeout_secs", self.protocol_timeout_secs),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be finite and > 0")));
            }
        }
        if !self.grid.infill_radius.is_finite() || self.grid.infill_radius < 0.0 {
            return Err(Error::Config("grid.infill_radius must be finite and >= 0".into()));
        }
        self.risk.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.alphas.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.ground_confidence.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.aerial_confidence.validate().map_err(|e| Error::Config(e.to_string()))?;
        for (name, g) in [("ground_graph", &self.ground_graph), ("aerial_graph", &self.aerial_graph)]
        {
            if g.samples == 0 || g.neighbors == 0 {
                return Err(Error::Config(format!("{name}: samples and neighbors must be > 0")));
            }
            if g.r_safe <= 0.0 || g.cluster_radius <= 0.0 || g.frontier_radius <= 0.0 {
                return Err(Error::Config(format!("{name}: radii must be > 0")));
            }
        }
        Ok(())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Config = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gain_weights(&self) -> &GainWeights {
        &self.ground_graph.gain_weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrips_through_json() {
        let cfg = Config::default();
        cfg.validate().unwrap();
        let text = cfg.to_json_pretty();
        let back = Config::from_json(&text).unwrap();
        assert_eq!(text, back.to_json_pretty());
        // Template is fully explicit.
        for key in [
            "max_cycles",
            "resolution",
            "voxel_size",
            "census_range",
            "c_crit",
            "phi_min",
            "protocol_timeout_secs",
        ] {
            assert!(text.contains(key), "template missing {key}");
        }
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg = Config::from_json(r#"{"max_cycles": 7}"#).unwrap();
        assert_eq!(cfg.max_cycles, 7);
        assert_eq!(cfg.voxel.block_side, 16);
    }

    #[test]
    fn bad_values_rejected() {
        assert!(Config::from_json(r#"{"max_cycles": 0}"#).is_err());
        assert!(Config::from_json(r#"{"grid": {"resolution": -1.0}}"#).is_err());
        assert!(Config::from_json(r#"{"no_such_field": 1}"#).is_err());
    }
}
