//! Mission orchestration: the ground agent's sense-plan-drive loop, the
//! deployment hand-off over the coordination protocol, and the aerial
//! agent's continuation. Single-threaded and fully deterministic for a
//! given (scenario seed, config).

use std::cell::Cell;
use std::fs;
use std::path::Path;
use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::confidence::{
    score_graph, select_exploration_path, ConfidenceParams, DecisionReason, DeploymentDecision,
};
use crate::config::Config;
use crate::elevation::TraversabilityGrid;
use crate::error::{Error, Result};
use crate::frontier::FrontierRegistry;
use crate::geometry::{BoundingBox, LabeledPoint, Point3, RigidTransform, RobotState};
use crate::graph::{ExplorationGraph, Path as GraphPath};
use crate::hierarchy::{
    build_candidate_graph, build_pathways_graph, mark_frontiers, sample_local_graph,
    select_candidate_paths, shortest_paths, AgentKind, CollisionModel, GraphConfig,
};
use crate::protocol::{
    build_unified_graph, encode_message, fnv1a64, queue_pair, run_action_client,
    run_action_server, Message, MissionHandler, MissionResult, RejectReason, UnifiedGraphMessage,
};
use crate::sim::lidar::{simulate_lidar_rays, SimPoint};
use crate::sim::metrics::{CycleRecord, DeploymentEvent, MissionMetrics};
use crate::sim::scenario::Scenario;
use crate::voxel::{SensorFrustum, VoxelMap};

/// Applies the aerial->ground static transform to a pose (Eq. of rigid
/// motion on the position; yaw shifted by the transform's yaw).
pub fn apply_static_transform(t: &RigidTransform, pose: &RobotState) -> RobotState {
    let p = crate::geometry::transform_point(&pose.position(), t);
    let yaw = t.rotation[1][0].atan2(t.rotation[0][0]);
    RobotState::new(p.x, p.y, p.z, crate::geometry::wrap_angle(pose.psi + yaw))
        .expect("transformed pose is finite")
}

/// Everything a mission leaves behind, for tests and exports.
pub struct MissionReport {
    pub metrics: MissionMetrics,
    pub ground_map: VoxelMap,
    pub grid: TraversabilityGrid,
    pub aerial_map: Option<VoxelMap>,
    /// Encoded deployment request, when one was sent.
    pub unified_message_bytes: Option<Vec<u8>>,
    /// Size of the ground voxel-map snapshot, for hand-off size comparisons.
    pub ground_snapshot_bytes: u64,
}

/// Ground voxel map behind an access counter: the aerial agent has no code
/// path to it, and the counter proves it stayed that way.
struct GuardedMap {
    map: VoxelMap,
    aerial_reads: Cell<u64>,
}

impl GuardedMap {
    fn read(&self, by: AgentKind) -> &VoxelMap {
        if by == AgentKind::Aerial {
            self.aerial_reads.set(self.aerial_reads.get() + 1);
        }
        &self.map
    }
}

fn labeled_cloud(scan: &[SimPoint], config: &Config) -> Vec<LabeledPoint> {
    scan.iter()
        .map(|p| {
            let alpha = config.alphas.alpha(p.class);
            let trav = crate::semantics::traversability_decay(alpha, p.slope);
            LabeledPoint::new(p.position, trav).expect("decay is in [0,1]")
        })
        .collect()
}

/// The sensor's vertical blind cones leave unknown voxels inside the
/// robot's own clearance sphere; the occupied body volume is known free.
/// Ground agents only clear upward so the support surface stays intact.
fn carve_body(map: &mut VoxelMap, origin: &Point3, r_safe: f64, below: bool) {
    let r = r_safe + map.voxel_size;
    let z_lo = if below { origin.z - r } else { origin.z };
    map.fill_free_box(
        &Point3::new(origin.x - r, origin.y - r, z_lo),
        &Point3::new(origin.x + r, origin.y + r, origin.z + r),
    );
}

/// Close-range sensing can reveal a surface inside the clearance ball of a
/// node that looked clear from afar. When the current pose is no longer
/// clear, back off along the trail to the most recent clear position.
fn retreat_to_clear(
    pose: &mut RobotState,
    trail: &[Point3],
    map: &VoxelMap,
    r_safe: f64,
    kind: AgentKind,
) {
    let model = CollisionModel { map, r_safe, kind, allow_unknown: false };
    if model.point_clear(&pose.position()) {
        return;
    }
    for p in trail.iter().rev().skip(1) {
        if model.point_clear(p) {
            if let Ok(s) = RobotState::new(p.x, p.y, p.z, pose.psi) {
                *pose = s;
            }
            return;
        }
    }
}

fn scan_metadata(scan: &[SimPoint]) -> (u64, u64) {
    let mut bytes = Vec::with_capacity(scan.len() * 24);
    for p in scan {
        bytes.extend_from_slice(&p.position.x.to_le_bytes());
        bytes.extend_from_slice(&p.position.y.to_le_bytes());
        bytes.extend_from_slice(&p.position.z.to_le_bytes());
    }
    (scan.len() as u64, fnv1a64(&bytes))
}

enum CycleOutcome {
    Drive(GraphPath, ExplorationGraph),
    Deploy(DeploymentDecision, ExplorationGraph),
    Complete,
    Starved,
}

struct Planner<'a> {
    kind: AgentKind,
    graph_cfg: GraphConfig,
    conf: &'a ConfidenceParams,
    bbox_dims: (f64, f64, f64),
    census: SensorFrustum,
    config: &'a Config,
    /// Whether this agent's registry descends from a low-confidence halt
    /// (true for the aerial agent seeded by the hand-off message).
    from_halt: bool,
}

impl<'a> Planner<'a> {
    /// Omnidirectional gain probe for registry re-evaluation.
    fn sphere_gain(&self, map: &VoxelMap, p: &Point3) -> f64 {
        let apex = RobotState::new(p.x, p.y, p.z, 0.0).unwrap();
        let frustum = SensorFrustum {
            apex,
            horizontal_fov: std::f64::consts::TAU,
            vertical_fov: std::f64::consts::PI,
            max_range: self.census.max_range,
        };
        crate::voxel::volumetric_gain(&map.frustum_census(&frustum), &self.graph_cfg.gain_weights)
    }

    fn plan(
        &self,
        map: &VoxelMap,
        grid: Option<&TraversabilityGrid>,
        pose: &RobotState,
        registry: &mut FrontierRegistry,
        trail: &[Point3],
        rng: &mut ChaCha8Rng,
    ) -> Result<CycleOutcome> {
        let rho = self.graph_cfg.frontier_radius;
        registry.consume_by_trail(trail, rho);
        registry.consume_by_gain(self.graph_cfg.phi_min, |p| self.sphere_gain(map, p));

        let mut local = match sample_local_graph(map, grid, pose, &self.graph_cfg, self.kind, rng)
        {
            Ok(g) => g,
            Err(Error::SamplingStarved { .. }) => {
                // One retry with an enlarged window.
                let mut wide = self.graph_cfg.clone();
                wide.window =
                    (wide.window.0 * 1.5, wide.window.1 * 1.5, wide.window.2 * 1.5);
                match sample_local_graph(map, grid, pose, &wide, self.kind, rng) {
                    Ok(g) => g,
                    Err(Error::SamplingStarved { .. }) => return Ok(CycleOutcome::Starved),
                    Err(e) => return Err(e),
                }
            }
            Err(e) => return Err(e),
        };

        mark_frontiers(
            &mut local,
            map,
            &self.census,
            self.graph_cfg.phi_min,
            &self.graph_cfg.gain_weights,
        );
        // The robot's own node is never a drive target.
        local.node_mut(0).unwrap().is_frontier = false;
        let frontier_info: Vec<(u32, Point3, f64)> = local
            .nodes()
            .filter(|n| n.is_frontier)
            .map(|n| (n.id, n.position(), n.gain))
            .collect();
        for (id, p, gain) in &frontier_info {
            if registry.is_consumed_near(p, rho) {
                local.node_mut(*id).unwrap().is_frontier = false;
            } else {
                registry.observe(*p, *gain, rho);
            }
        }

        let paths = shortest_paths(&local, 0)?;
        let bbox = BoundingBox::new(
            *pose,
            self.bbox_dims.0,
            self.bbox_dims.1,
            self.bbox_dims.2,
        )?;

        let (candidates, candidate_graph) = if paths.is_empty() {
            (Vec::new(), ExplorationGraph::new(crate::graph::GraphLevel::Candidate))
        } else {
            let pathways = build_pathways_graph(&local, &paths)?;
            let candidates =
                select_candidate_paths(&local, &paths, self.graph_cfg.cluster_radius, self.graph_cfg.dtw_min);
            let graph = build_candidate_graph(&pathways, &candidates)?;
            (candidates, graph)
        };

        let mut candidate_graph = candidate_graph;
        let flags = score_graph(&mut candidate_graph, &bbox, grid, map, self.conf);
        let decision = select_exploration_path(
            &candidates,
            &candidate_graph,
            &flags,
            registry,
            &pose.position(),
            self.conf,
            self.from_halt,
        )?;
        let _ = self.config;
        Ok(match decision {
            None => CycleOutcome::Complete,
            Some(d) if !d.deploy => {
                CycleOutcome::Drive(d.target_path.clone().unwrap(), candidate_graph)
            }
            Some(d) => CycleOutcome::Deploy(d, candidate_graph),
        })
    }
}

struct AerialHandler {
    received: Option<UnifiedGraphMessage>,
}

impl MissionHandler for AerialHandler {
    fn on_request(&mut self, req: &UnifiedGraphMessage) -> std::result::Result<(), RejectReason> {
        if req.path.node_ids.is_empty() || req.graph.node_count() == 0 {
            return Err(RejectReason::InvalidRequest);
        }
        self.received = Some(req.clone());
        Ok(())
    }

    fn execute(&mut self, req: &UnifiedGraphMessage) -> (usize, MissionResult) {
        // Exploration-started semantics: the flight happens after the
        // exchange completes.
        (
            1,
            MissionResult {
                mission_id: req.mission_id,
                success: true,
                reached_frontiers: Vec::new(),
                newly_free_voxels: 0,
            },
        )
    }
}

struct ArtifactWriter<'a> {
    dir: Option<&'a Path>,
}

impl<'a> ArtifactWriter<'a> {
    fn new(dir: Option<&'a Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d.join("graphs"))?;
        }
        Ok(Self { dir })
    }

    fn write_graphs(
        &self,
        cycle: usize,
        local: Option<&ExplorationGraph>,
        candidate: &ExplorationGraph,
    ) -> Result<()> {
        let Some(dir) = self.dir else { return Ok(()) };
        let base = dir.join("graphs");
        if let Some(local) = local {
            fs::write(
                base.join(format!("cycle_{cycle:03}_local.json")),
                serde_json::to_string_pretty(&local.to_json())? + "\n",
            )?;
        }
        fs::write(
            base.join(format!("cycle_{cycle:03}_candidate.json")),
            serde_json::to_string_pretty(&candidate.to_json())? + "\n",
        )?;
        let mut dot = Vec::new();
        candidate.write_dot(&mut dot)?;
        fs::write(base.join(format!("cycle_{cycle:03}_candidate.dot")), dot)?;
        Ok(())
    }

    fn write_bytes(&self, name: &str, bytes: &[u8]) -> Result<()> {
        if let Some(dir) = self.dir {
            fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

/// Runs the full mission: ground exploration to completion or deployment,
/// then (after a deployment) the aerial continuation. Artifacts are written
/// under `out_dir` when given.
pub fn run_mission(
    scenario: &Scenario,
    config: &Config,
    out_dir: Option<&Path>,
) -> Result<MissionReport> {
    scenario.validate()?;
    config.validate()?;
    let writer = ArtifactWriter::new(out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut metrics = MissionMetrics::default();

    let census = SensorFrustum {
        apex: scenario.ground_start,
        horizontal_fov: config.sensor.census_horizontal_fov,
        vertical_fov: config.sensor.census_vertical_fov,
        max_range: config.sensor.census_range,
    };
    let bbox_dims = (config.robot.length, config.robot.width, config.robot.height);

    // --- Ground phase -----------------------------------------------------
    let mut ground_map = GuardedMap {
        map: VoxelMap::new(config.voxel.voxel_size, config.voxel.block_side, config.voxel.truncation)?,
        aerial_reads: Cell::new(0),
    };
    let mut grid = TraversabilityGrid::with_window(config.grid.resolution, config.grid.window)?;
    let mut registry = FrontierRegistry::new();
    let mut pose = scenario.ground_start;
    let mut trail = vec![pose.position()];
    let mut last_scan: Vec<SimPoint> = Vec::new();

    let sense_ground = |pose: &RobotState,
                        map: &mut GuardedMap,
                        grid: &mut TraversabilityGrid,
                        last_scan: &mut Vec<SimPoint>| {
        let (scan, misses) = simulate_lidar_rays(
            scenario,
            pose,
            config.sensor.lidar_rays,
            config.sensor.lidar_channels,
            config.sensor.lidar_vertical_fov,
            config.sensor.lidar_range,
        );
        let positions: Vec<Point3> = scan.iter().map(|p| p.position).collect();
        grid.integrate_scan(&positions, pose);
        grid.fill_holes(config.grid.infill_radius);
        grid.compute_features();
        grid.risk_and_traversability(&config.risk);
        let origin = pose.position();
        map.map.integrate_labeled_cloud(&labeled_cloud(&scan, config), &origin);
        for dir in &misses {
            map.map.integrate_free_ray(&origin, dir, config.sensor.lidar_range);
        }
        carve_body(&mut map.map, &origin, config.ground_graph.r_safe, false);
        *last_scan = scan;
    };

    let ground_planner = Planner {
        kind: AgentKind::Ground,
        graph_cfg: config.ground_graph.clone(),
        conf: &config.ground_confidence,
        bbox_dims,
        census,
        config,
        from_halt: false,
    };

    let mut cycle = 0usize;
    let mut deployment: Option<(UnifiedGraphMessage, Vec<u8>)> = None;
    let mut completed = false;
    let mut failed = false;

    while cycle < config.max_cycles {
        sense_ground(&pose, &mut ground_map, &mut grid, &mut last_scan);
        retreat_to_clear(
            &mut pose,
            &trail,
            ground_map.read(AgentKind::Ground),
            config.ground_graph.r_safe,
            AgentKind::Ground,
        );
        let outcome = ground_planner.plan(
            ground_map.read(AgentKind::Ground),
            Some(&grid),
            &pose,
            &mut registry,
            &trail,
            &mut rng,
        )?;
        let (decision_str, terminal, confidence) = match &outcome {
            CycleOutcome::Drive(path, graph) => {
                writer.write_graphs(cycle, None, graph)?;
                let ids = path.node_ids.clone();
                let conf = path.confidence;
                let term = path.terminal();
                let node_poses: Vec<RobotState> =
                    ids.iter().map(|id| graph.node(*id).unwrap().pose).collect();
                for node_pose in node_poses.into_iter().skip(1) {
                    pose = node_pose;
                    trail.push(pose.position());
                    sense_ground(&pose, &mut ground_map, &mut grid, &mut last_scan);
                }
                ("drive".to_string(), Some(term), conf)
            }
            CycleOutcome::Deploy(decision, graph) => {
                writer.write_graphs(cycle, None, graph)?;
                let unified = build_unified_graph(graph, decision, &registry)?;
                registry.mark_shared(&unified.shared_registry_ids);
                let (points, checksum) = scan_metadata(&last_scan);
                let msg = UnifiedGraphMessage {
                    mission_id: scenario.seed,
                    static_transform: scenario.static_transform,
                    graph: unified.graph,
                    path: unified.path,
                    frontier_ids: unified.frontier_ids,
                    scan_point_count: points,
                    scan_checksum: checksum,
                };
                let bytes = encode_message(&Message::Request(msg.clone()));
                writer.write_bytes("unified_message.bin", &bytes)?;

                // Hand-off over the in-process transport.
                let (mut client, mut server) = queue_pair();
                let timeout = Duration::from_secs_f64(config.protocol_timeout_secs);
                let req = msg.clone();
                let server_thread = std::thread::spawn(move || -> Result<UnifiedGraphMessage> {
                    let mut handler = AerialHandler { received: None };
                    run_action_server(&mut server, &mut handler, timeout)?;
                    handler.received.ok_or(Error::Mission("request never arrived".into()))
                });
                let result = run_action_client(&mut client, req, timeout)?;
                let received = server_thread
                    .join()
                    .map_err(|_| Error::Mission("aerial endpoint panicked".into()))??;
                if !result.success {
                    return Err(Error::Mission("aerial agent reported failure".into()));
                }

                metrics.deployments.push(DeploymentEvent {
                    cycle,
                    target_frontier: msg.path.terminal(),
                });
                deployment = Some((received, bytes));
                let reason = match decision.reason {
                    DecisionReason::AllPathsLowConfidence => "deploy",
                    DecisionReason::NoFrontiers => "deploy_fallback",
                    DecisionReason::Drivable => unreachable!("drivable is not a deployment"),
                };
                (
                    reason.to_string(),
                    decision.target_path.as_ref().map(|p| p.terminal()),
                    decision.target_path.as_ref().and_then(|p| p.confidence),
                )
            }
            CycleOutcome::Complete => {
                completed = true;
                ("complete".to_string(), None, None)
            }
            CycleOutcome::Starved => {
                failed = true;
                ("failed".to_string(), None, None)
            }
        };
        metrics.cycles.push(CycleRecord {
            cycle,
            agent: "ground".into(),
            explored_voxels: { let (f, o) = ground_map.read(AgentKind::Ground).count_known(); f + o },
            open_frontiers: registry.open_count(),
            decision: decision_str,
            path_terminal: terminal,
            path_confidence: confidence,
        });
        cycle += 1;
        if completed || failed || deployment.is_some() {
            break;
        }
    }
    if cycle >= config.max_cycles && !completed && !failed && deployment.is_none() {
        metrics.cycle_cap_hit = true;
    }

    // --- Aerial phase ------------------------------------------------------
    let mut aerial_map: Option<VoxelMap> = None;
    if let Some((msg, bytes)) = &deployment {
        let mut map =
            VoxelMap::new(config.voxel.voxel_size, config.voxel.block_side, config.voxel.truncation)?;
        let mut air_registry = FrontierRegistry::new();
        let rho = config.aerial_graph.frontier_radius;
        for &fid in &msg.frontier_ids {
            let n = msg.graph.node(fid).unwrap();
            air_registry.observe(n.position(), n.gain, rho);
        }

        let dock = pose.position().add(&scenario.aerial_dock_offset);
        let mut air_pose = RobotState::new(dock.x, dock.y, dock.z, pose.psi)?;
        let mut air_trail = vec![air_pose.position()];

        let sense_air = |pose: &RobotState, map: &mut VoxelMap| {
            let (scan, misses) = simulate_lidar_rays(
                scenario,
                pose,
                config.sensor.lidar_rays,
                config.sensor.lidar_channels,
                config.sensor.lidar_vertical_fov,
                config.sensor.lidar_range,
            );
            let origin = pose.position();
            map.integrate_labeled_cloud(&labeled_cloud(&scan, config), &origin);
            for dir in &misses {
                map.integrate_free_ray(&origin, dir, config.sensor.lidar_range);
            }
            carve_body(map, &origin, config.aerial_graph.r_safe, true);
        };
        sense_air(&air_pose, &mut map);

        // Fly the shared path, localizing each node through the static
        // transform's inverse composition (ground frame == world frame).
        // Shared nodes sit at ground height; the aerial agent tracks them at
        // its hover offset.
        let hover = scenario.aerial_dock_offset.z;
        for &id in &msg.path.node_ids {
            let shared = msg.graph.node(id).unwrap().pose;
            air_pose = RobotState::new(shared.x, shared.y, shared.z + hover, shared.psi)?;
            air_trail.push(air_pose.position());
            sense_air(&air_pose, &mut map);
        }

        let aerial_planner = Planner {
            kind: AgentKind::Aerial,
            graph_cfg: config.aerial_graph.clone(),
            conf: &config.aerial_confidence,
            bbox_dims,
            census,
            config,
            from_halt: true,
        };

        while cycle < config.max_cycles {
            retreat_to_clear(
                &mut air_pose,
                &air_trail,
                &map,
                config.aerial_graph.r_safe,
                AgentKind::Aerial,
            );
            let outcome = aerial_planner.plan(
                &map,
                None,
                &air_pose,
                &mut air_registry,
                &air_trail,
                &mut rng,
            )?;
            let (decision_str, terminal, confidence) = match &outcome {
                CycleOutcome::Drive(path, graph) => {
                    writer.write_graphs(cycle, None, graph)?;
                    let node_poses: Vec<RobotState> =
                        path.node_ids.iter().map(|id| graph.node(*id).unwrap().pose).collect();
                    for node_pose in node_poses.into_iter().skip(1) {
                        air_pose = node_pose;
                        air_trail.push(air_pose.position());
                        sense_air(&air_pose, &mut map);
                    }
                    ("drive".to_string(), Some(path.terminal()), path.confidence)
                }
                CycleOutcome::Deploy(decision, _) => {
                    // Gain-only confidence never dips to the (zero) deploy
                    // threshold; the only deploy-shaped outcome left is the
                    // registry fallback: fly straight to the frontier.
                    let target = decision
                        .fallback_frontier
                        .and_then(|fid| {
                            air_registry.entries().iter().find(|e| e.id == fid).cloned()
                        })
                        .ok_or_else(|| Error::Mission("aerial fallback without frontier".into()))?;
                    let p = target.position;
                    air_pose = RobotState::new(p.x, p.y, p.z + hover, air_pose.psi)?;
                    air_trail.push(air_pose.position());
                    sense_air(&air_pose, &mut map);
                    ("fallback".to_string(), None, None)
                }
                CycleOutcome::Complete => {
                    completed = true;
                    ("complete".to_string(), None, None)
                }
                CycleOutcome::Starved => {
                    failed = true;
                    ("failed".to_string(), None, None)
                }
            };
            metrics.cycles.push(CycleRecord {
                cycle,
                agent: "aerial".into(),
                explored_voxels: { let (f, o) = map.count_known(); f + o },
                open_frontiers: air_registry.open_count(),
                decision: decision_str,
                path_terminal: terminal,
                path_confidence: confidence,
            });
            cycle += 1;
            if completed || failed {
                break;
            }
        }
        if cycle >= config.max_cycles && !completed && !failed {
            metrics.cycle_cap_hit = true;
        }
        metrics.final_aerial_free = map.count_known().0;
        let _ = bytes;
        aerial_map = Some(map);
    }

    metrics.completed = completed;
    metrics.cross_map_reads = ground_map.aerial_reads.get();
    metrics.final_ground_free = ground_map.read(AgentKind::Ground).count_known().0;
    metrics.validate()?;

    // Snapshot size for hand-off comparisons and exports.
    let mut snapshot = Vec::new();
    ground_map.read(AgentKind::Ground).write_snapshot(&mut snapshot)?;
    let ground_snapshot_bytes = snapshot.len() as u64;

    if let Some(dir) = out_dir {
        let mut csv = Vec::new();
        metrics.write_csv(&mut csv)?;
        fs::write(dir.join("metrics.csv"), csv)?;
        let mut log = Vec::new();
        metrics.write_decision_log(&mut log)?;
        fs::write(dir.join("decisions.jsonl"), log)?;
        fs::write(dir.join("ground_map.tvox"), &snapshot)?;
        if let Some(map) = &aerial_map {
            let mut s = Vec::new();
            map.write_snapshot(&mut s)?;
            fs::write(dir.join("aerial_map.tvox"), s)?;
        }
        let mut grid_csv = Vec::new();
        grid.write_csv(&mut grid_csv)?;
        fs::write(dir.join("grid.csv"), grid_csv)?;
        let mut grid_pgm = Vec::new();
        grid.write_pgm(&mut grid_pgm)?;
        fs::write(dir.join("grid.pgm"), grid_pgm)?;
    }

    Ok(MissionReport {
        metrics,
        ground_map: ground_map.map,
        grid,
        aerial_map,
        unified_message_bytes: deployment.map(|(_, b)| b),
        ground_snapshot_bytes,
    })
}
