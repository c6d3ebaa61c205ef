//! Node and path confidence scoring, and the drive-vs-deploy decision.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::elevation::TraversabilityGrid;
use crate::error::{Error, Result};
use crate::frontier::FrontierRegistry;
use crate::geometry::{footprint_polygon, BoundingBox};
use crate::graph::{ExplorationGraph, GraphNode, Path};
use crate::voxel::VoxelMap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfidenceParams {
    /// Geometric traversability weight (w_g).
    pub w_geom: f64,
    /// Semantic traversability weight (w_sem).
    pub w_sem: f64,
    /// Volumetric gain weight (w_v).
    pub w_gain: f64,
    /// Per-node confidence floor; any node at or below it penalizes the path.
    pub c_crit: f64,
    /// Penalty rate lambda: penalized paths scale by e^{-lambda}.
    pub lambda: f64,
    /// Path confidence below or equal to which the ground agent deploys.
    pub c_deploy: f64,
}

impl Default for ConfidenceParams {
    fn default() -> Self {
        Self { w_geom: 1.0, w_sem: 1.0, w_gain: 0.3, c_crit: 0.75, lambda: 1.0, c_deploy: 0.45 }
    }
}

impl ConfidenceParams {
    /// Aerial agents ignore terrain entirely and never deploy further.
    pub fn aerial_default() -> Self {
        Self { w_geom: 0.0, w_sem: 0.0, w_gain: 1.0, c_crit: 0.0, lambda: 1.0, c_deploy: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("w_geom", self.w_geom),
            ("w_sem", self.w_sem),
            ("w_gain", self.w_gain),
            ("lambda", self.lambda),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0")));
            }
        }
        for (name, v) in [("c_crit", self.c_crit), ("c_deploy", self.c_deploy)] {
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} must lie in [0,1]")));
            }
        }
        Ok(())
    }
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-node confidence: the logistic of the weighted sum of the footprint's
/// mean geometric traversability, the footprint volume's mean semantic
/// traversability, and the node's volumetric gain.
///
/// An unobserved term substitutes 0.5. Returns the confidence and an
/// unknown-terrain flag raised when *both* terrain terms are unobserved
/// while their weights are positive.
pub fn node_confidence(
    node: &GraphNode,
    bbox: &BoundingBox,
    grid: Option<&TraversabilityGrid>,
    map: &VoxelMap,
    params: &ConfidenceParams,
) -> (f64, bool) {
    let poly = footprint_polygon(&node.pose, bbox);
    let geom = grid.and_then(|g| g.avg_geometric_traversability(&poly));
    let sem = map.avg_semantic_traversability(&poly, node.pose.z, bbox.height);
    let unknown =
        geom.is_none() && sem.is_none() && (params.w_geom > 0.0 || params.w_sem > 0.0);
    let x = params.w_geom * geom.unwrap_or(0.5)
        + params.w_sem * sem.unwrap_or(0.5)
        + params.w_gain * node.gain;
    (sigmoid(x), unknown)
}

/// Fills the `confidence` field of every node and returns each node's
/// unknown-terrain flag.
pub fn score_graph(
    graph: &mut ExplorationGraph,
    bbox: &BoundingBox,
    grid: Option<&TraversabilityGrid>,
    map: &VoxelMap,
    params: &ConfidenceParams,
) -> BTreeMap<u32, bool> {
    let ids: Vec<u32> = graph.node_ids().collect();
    let mut flags = BTreeMap::new();
    for id in ids {
        let node = *graph.node(id).unwrap();
        let (c, unknown) = node_confidence(&node, bbox, grid, map, params);
        graph.node_mut(id).unwrap().confidence = Some(c);
        flags.insert(id, unknown);
    }
    flags
}

/// Path confidence: the mean node confidence, scaled by e^{-lambda} when any
/// node sits at or below `c_crit` or crosses unknown terrain.
pub fn path_confidence(
    path: &Path,
    graph: &ExplorationGraph,
    unknown_flags: &BTreeMap<u32, bool>,
    params: &ConfidenceParams,
) -> Result<f64> {
    if path.node_ids.is_empty() {
        return Err(Error::Contract("confidence of an empty path".into()));
    }
    let mut sum = 0.0;
    let mut penalized = false;
    for &id in &path.node_ids {
        let c = graph
            .node(id)
            .and_then(|n| n.confidence)
            .ok_or_else(|| Error::Contract(format!("node {id} unscored")))?;
        sum += c;
        if c <= params.c_crit || unknown_flags.get(&id).copied().unwrap_or(false) {
            penalized = true;
        }
    }
    let mut conf = sum / path.node_ids.len() as f64;
    if penalized {
        conf *= (-params.lambda).exp();
    }
    Ok(conf.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecisionReason {
    /// Best path clears the deployment threshold: keep driving.
    Drivable,
    /// Every candidate path scored at or below the threshold.
    AllPathsLowConfidence,
    /// No candidate paths, but open frontiers remain in the registry.
    NoFrontiers,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeploymentDecision {
    pub deploy: bool,
    pub reason: DecisionReason,
    /// The selected candidate path (drive target or hand-off payload),
    /// confidence filled in. Absent only for the registry fallback.
    pub target_path: Option<Path>,
    /// Registry id of the nearest open frontier when no candidate exists.
    pub fallback_frontier: Option<u32>,
}

/// Picks the best candidate path (highest confidence, ties broken by
/// shorter length then smaller terminal id) and decides whether to drive it
/// or deploy the aerial agent. With no candidates, open registry frontiers
/// justify a deployment only when they descend from a low-confidence halt
/// (`from_halt`); otherwise leftover pocket frontiers the agent can never
/// approach do not block completion. Returns `None` when nothing remains to
/// explore.
pub fn select_exploration_path(
    candidates: &[Path],
    graph: &ExplorationGraph,
    unknown_flags: &BTreeMap<u32, bool>,
    registry: &FrontierRegistry,
    robot: &crate::geometry::Point3,
    params: &ConfidenceParams,
    from_halt: bool,
) -> Result<Option<DeploymentDecision>> {
    if candidates.is_empty() {
        if !from_halt {
            return Ok(None);
        }
        let nearest = registry
            .open_frontiers()
            .min_by(|a, b| {
                a.position
                    .dist(robot)
                    .partial_cmp(&b.position.dist(robot))
                    .unwrap_or(Ordering::Equal)
                    .then(a.id.cmp(&b.id))
            })
            .map(|e| e.id);
        return Ok(nearest.map(|id| DeploymentDecision {
            deploy: true,
            reason: DecisionReason::NoFrontiers,
            target_path: None,
            fallback_frontier: Some(id),
        }));
    }

    let mut best: Option<(f64, Path)> = None;
    for path in candidates {
        let conf = path_confidence(path, graph, unknown_flags, params)?;
        let better = match &best {
            None => true,
            Some((bc, bp)) => match conf.partial_cmp(bc).unwrap_or(Ordering::Equal) {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => match path.length.partial_cmp(&bp.length) {
                    Some(Ordering::Less) => true,
                    Some(Ordering::Greater) | None => false,
                    Some(Ordering::Equal) => path.terminal() < bp.terminal(),
                },
            },
        };
        if better {
            let mut p = path.clone();
            p.confidence = Some(conf);
            best = Some((conf, p));
        }
    }
    let (conf, path) = best.unwrap();
    let deploy = conf <= params.c_deploy;
    Ok(Some(DeploymentDecision {
        deploy,
        reason: if deploy { DecisionReason::AllPathsLowConfidence } else { DecisionReason::Drivable },
        target_path: Some(path),
        fallback_frontier: None,
    }))
}
