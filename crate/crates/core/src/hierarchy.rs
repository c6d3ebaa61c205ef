//! The three-level navigation graph: dense sampled local graph, pathways
//! graph from Dijkstra trees, and the candidate graph from DTW-filtered
//! representative paths.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, BTreeMap, BTreeSet, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::elevation::TraversabilityGrid;
use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, Point3, RobotState};
use crate::graph::{ExplorationGraph, GraphLevel, GraphNode, Path};
use crate::kdtree::KdTree;
use crate::voxel::{volumetric_gain, GainWeights, SensorFrustum, VoxelMap, VoxelState};

/// Which platform the sampler and collision model serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentKind {
    Ground,
    Aerial,
}

/// Graph construction parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphConfig {
    /// Number of uniform samples per local graph (N_s).
    pub samples: usize,
    /// Minimum surviving nodes before sampling counts as starved.
    pub min_nodes: usize,
    /// Nearest neighbors per node (k).
    pub neighbors: usize,
    /// Local window extents, meters (x, y, z).
    pub window: (f64, f64, f64),
    /// Clearance radius, meters.
    pub r_safe: f64,
    /// Ground standoff above terrain, meters.
    pub z_offset: f64,
    /// Candidate-path clustering radius rho, meters.
    pub cluster_radius: f64,
    /// Frontier registry radius: dedupe and trail-consumption range, meters.
    pub frontier_radius: f64,
    /// Minimum DTW distance between kept candidate paths, meters.
    pub dtw_min: f64,
    /// Frontier gain threshold.
    pub phi_min: f64,
    pub gain_weights: GainWeights,
}

impl GraphConfig {
    pub fn ground_default() -> Self {
        Self {
            samples: 300,
            min_nodes: 5,
            neighbors: 7,
            window: (6.0, 6.0, 2.0),
            r_safe: 0.4,
            z_offset: 0.3,
            cluster_radius: 2.0,
            frontier_radius: 0.75,
            dtw_min: 4.0,
            phi_min: 0.25,
            gain_weights: GainWeights::default(),
        }
    }

    pub fn aerial_default() -> Self {
        Self { r_safe: 0.5, window: (6.0, 6.0, 3.0), ..Self::ground_default() }
    }
}

/// Occupancy-based collision predicate.
///
/// Ground agents ignore blocking voxels below the sample height: the support
/// surface under the standoff is expected to be occupied, and feasibility
/// over low terrain is judged by the confidence pipeline instead. Aerial
/// agents use the full clearance sphere.
#[derive(Clone, Copy)]
pub struct CollisionModel<'m> {
    pub map: &'m VoxelMap,
    pub r_safe: f64,
    pub kind: AgentKind,
    /// Permit unknown voxels (aerial frontier-approach segments only).
    pub allow_unknown: bool,
}

impl<'m> CollisionModel<'m> {
    fn voxel_blocks(&self, state: VoxelState) -> bool {
        match state {
            VoxelState::Occupied => true,
            VoxelState::Unknown => !self.allow_unknown,
            VoxelState::Free => false,
        }
    }

    /// True when no blocking voxel center lies within `r_safe` of `p` (for
    /// ground agents, only voxels at or above the sample height count) and
    /// the containing voxel is not itself blocking.
    pub fn point_clear(&self, p: &Point3) -> bool {
        if self.voxel_blocks(self.map.voxel_state(p)) {
            return false;
        }
        let vs = self.map.voxel_size;
        let r = self.r_safe;
        let lo = self.map.voxel_index(&Point3::new(p.x - r, p.y - r, p.z - r));
        let hi = self.map.voxel_index(&Point3::new(p.x + r, p.y + r, p.z + r));
        for ix in lo.0..=hi.0 {
            for iy in lo.1..=hi.1 {
                for iz in lo.2..=hi.2 {
                    let c = self.map.voxel_center((ix, iy, iz));
                    if c.dist(p) >= r {
                        continue;
                    }
                    if self.kind == AgentKind::Ground && c.z < p.z {
                        continue;
                    }
                    if self.voxel_blocks(self.map.state_at_index((ix, iy, iz))) {
                        return false;
                    }
                }
            }
        }
        let _ = vs;
        true
    }

    /// Collision check along [a, b]: sample points at voxel_size/2 spacing
    /// must be clear, and the segment raycast must hit nothing closer than
    /// |b - a|.
    pub fn edge_collision_free(&self, a: &Point3, b: &Point3) -> bool {
        let delta = b.sub(a);
        let len = delta.norm();
        if len < 1e-12 {
            return self.point_clear(a);
        }
        let step = self.map.voxel_size / 2.0;
        let n = (len / step).ceil() as usize;
        for i in 0..=n {
            let t = len * i as f64 / n as f64;
            if !self.point_clear(&a.add(&delta.scale(t / len))) {
                return false;
            }
        }
        let dir = delta.scale(1.0 / len);
        let mut walker = crate::voxel::GridWalk::new(a, &dir, self.map.voxel_size);
        loop {
            let (idx, t_entry) = walker.next_voxel();
            if t_entry > len {
                return true;
            }
            if self.voxel_blocks(self.map.state_at_index(idx)) {
                return false;
            }
        }
    }
}

/// Samples the dense local graph around `root`. Ground nodes are projected
/// to terrain elevation plus the standoff; aerial nodes sample the free
/// volume. Nodes connect to their k nearest neighbors through collision-free
/// edges; only the component containing the root survives.
pub fn sample_local_graph(
    map: &VoxelMap,
    grid: Option<&TraversabilityGrid>,
    root: &RobotState,
    cfg: &GraphConfig,
    kind: AgentKind,
    rng: &mut impl Rng,
) -> Result<ExplorationGraph> {
    let collision = CollisionModel { map, r_safe: cfg.r_safe, kind, allow_unknown: false };
    let mut nodes: Vec<RobotState> = vec![*root];
    let (wx, wy, wz) = cfg.window;
    for _ in 0..cfg.samples {
        let x = root.x + rng.gen_range(-wx / 2.0..wx / 2.0);
        let y = root.y + rng.gen_range(-wy / 2.0..wy / 2.0);
        let psi = wrap_angle(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
        let z = match kind {
            AgentKind::Ground => {
                let Some(grid) = grid else {
                    return Err(Error::Config("ground sampling requires an elevation grid".into()));
                };
                // Footprint-scale support lookup: sparse scans leave gaps
                // between returns at the grid resolution.
                match grid.elevation_near(x, y, cfg.r_safe / 2.0) {
                    Some(e) => e + cfg.z_offset,
                    None => continue,
                }
            }
            AgentKind::Aerial => root.z + rng.gen_range(-wz / 2.0..wz / 2.0),
        };
        let p = Point3::new(x, y, z);
        if map.voxel_state(&p) != VoxelState::Free {
            continue;
        }
        if !collision.point_clear(&p) {
            continue;
        }
        nodes.push(RobotState::new(x, y, z, psi)?);
    }

    let mut graph = ExplorationGraph::new(GraphLevel::Local);
    for (id, pose) in nodes.iter().enumerate() {
        graph.add_node(GraphNode {
            id: id as u32,
            pose: *pose,
            gain: 0.0,
            is_frontier: false,
            confidence: None,
        })?;
    }
    let positions: Vec<Point3> = nodes.iter().map(|s| s.position()).collect();
    let tree = KdTree::build(positions.clone());
    for (i, p) in positions.iter().enumerate() {
        for j in tree.k_nearest(p, cfg.neighbors, Some(i)) {
            if graph.has_edge(i as u32, j as u32) {
                continue;
            }
            if collision.edge_collision_free(p, &positions[j]) {
                graph.add_edge(i as u32, j as u32)?;
            }
        }
    }

    // Keep only the root's connected component.
    let adj = graph.adjacency();
    let mut reachable: BTreeSet<u32> = BTreeSet::new();
    let mut queue = VecDeque::from([0u32]);
    reachable.insert(0);
    while let Some(id) = queue.pop_front() {
        for &(n, _) in &adj[&id] {
            if reachable.insert(n) {
                queue.push_back(n);
            }
        }
    }
    let mut pruned = ExplorationGraph::new(GraphLevel::Local);
    for n in graph.nodes().filter(|n| reachable.contains(&n.id)) {
        pruned.add_node(*n)?;
    }
    for &(a, b, _) in graph.edges() {
        if reachable.contains(&a) && reachable.contains(&b) {
            pruned.add_edge(a, b)?;
        }
    }

    if pruned.node_count() < cfg.min_nodes {
        return Err(Error::SamplingStarved { got: pruned.node_count(), want: cfg.min_nodes });
    }
    Ok(pruned)
}

/// Evaluates the volumetric gain of every node and marks frontiers above
/// `phi_min`.
pub fn mark_frontiers(
    graph: &mut ExplorationGraph,
    map: &VoxelMap,
    frustum_template: &SensorFrustum,
    phi_min: f64,
    weights: &GainWeights,
) {
    let ids: Vec<u32> = graph.node_ids().collect();
    for id in ids {
        let pose = graph.node(id).unwrap().pose;
        let counts = map.frustum_census(&frustum_template.at(pose));
        let phi = volumetric_gain(&counts, weights);
        let node = graph.node_mut(id).unwrap();
        node.gain = phi;
        node.is_frontier = phi > phi_min;
    }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    cost: f64,
    node: u32,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by (cost, node id).
        other
            .cost
            .partial_cmp(&self.cost)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Edge-length Dijkstra from `root`; returns a path per reachable frontier.
/// Equal-cost ties resolve to the smaller predecessor id.
pub fn shortest_paths(graph: &ExplorationGraph, root: u32) -> Result<BTreeMap<u32, Path>> {
    if !graph.contains(root) {
        return Err(Error::Contract(format!("root {root} not in graph")));
    }
    let adj = graph.adjacency();
    let mut dist: BTreeMap<u32, f64> = BTreeMap::new();
    let mut pred: BTreeMap<u32, u32> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(root, 0.0);
    heap.push(HeapEntry { cost: 0.0, node: root });
    while let Some(HeapEntry { cost, node }) = heap.pop() {
        if cost > dist[&node] {
            continue;
        }
        for &(next, len) in &adj[&node] {
            let cand = cost + len;
            match dist.get(&next) {
                Some(&d) if cand > d => {}
                Some(&d) if cand == d => {
                    if node < pred[&next] {
                        pred.insert(next, node);
                    }
                }
                _ => {
                    dist.insert(next, cand);
                    pred.insert(next, node);
                    heap.push(HeapEntry { cost: cand, node: next });
                }
            }
        }
    }

    let mut out = BTreeMap::new();
    for node in graph.nodes().filter(|n| n.is_frontier) {
        let Some(&length) = dist.get(&node.id) else { continue };
        let mut ids = vec![node.id];
        let mut cur = node.id;
        while cur != root {
            cur = pred[&cur];
            ids.push(cur);
        }
        ids.reverse();
        out.insert(node.id, Path { node_ids: ids, length, confidence: None });
    }
    Ok(out)
}

/// Pathways graph: the union of Dijkstra-path nodes with every local edge
/// whose endpoints both survive.
pub fn build_pathways_graph(
    local: &ExplorationGraph,
    paths: &BTreeMap<u32, Path>,
) -> Result<ExplorationGraph> {
    let mut keep: BTreeSet<u32> = BTreeSet::new();
    for path in paths.values() {
        keep.extend(path.node_ids.iter().copied());
    }
    let mut graph = ExplorationGraph::new(GraphLevel::Pathways);
    for id in &keep {
        graph.add_node(*local.node(*id).ok_or_else(|| Error::Contract("path node missing".into()))?)?;
    }
    for &(a, b, _) in local.edges() {
        if keep.contains(&a) && keep.contains(&b) {
            graph.add_edge(a, b)?;
        }
    }
    Ok(graph)
}

/// Classic dynamic-time-warping distance over node positions with unit
/// slope steps and Euclidean local cost.
pub fn dtw_distance(a: &[Point3], b: &[Point3]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "dtw over empty sequence");
    let (n, m) = (a.len(), b.len());
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for i in 1..=n {
        cur[0] = f64::INFINITY;
        for j in 1..=m {
            let cost = a[i - 1].dist(&b[j - 1]);
            let best = prev[j - 1].min(prev[j]).min(cur[j - 1]);
            cur[j] = cost + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}

/// Single-linkage clustering of frontier terminals with radius `rho`;
/// returns one representative (shortest, ties by smaller terminal id) path
/// per cluster, then greedily keeps paths whose DTW distance to every
/// already-kept path exceeds `dtw_min`, in ascending (length, terminal id)
/// order. Nonempty whenever `paths` is nonempty.
pub fn select_candidate_paths(
    graph: &ExplorationGraph,
    paths: &BTreeMap<u32, Path>,
    rho: f64,
    dtw_min: f64,
) -> Vec<Path> {
    if paths.is_empty() {
        return Vec::new();
    }
    let terminals: Vec<u32> = paths.keys().copied().collect();
    let position = |id: u32| graph.node(id).expect("terminal in graph").position();

    // Union-find single linkage.
    let mut parent: Vec<usize> = (0..terminals.len()).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..terminals.len() {
        for j in (i + 1)..terminals.len() {
            if position(terminals[i]).dist(&position(terminals[j])) <= rho {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut clusters: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for i in 0..terminals.len() {
        let r = find(&mut parent, i);
        clusters.entry(r).or_default().push(terminals[i]);
    }

    let mut reps: Vec<&Path> = Vec::new();
    for members in clusters.values() {
        let rep = members
            .iter()
            .map(|id| &paths[id])
            .min_by(|a, b| {
                a.length
                    .partial_cmp(&b.length)
                    .unwrap_or(Ordering::Equal)
                    .then(a.terminal().cmp(&b.terminal()))
            })
            .unwrap();
        reps.push(rep);
    }
    reps.sort_by(|a, b| {
        a.length
            .partial_cmp(&b.length)
            .unwrap_or(Ordering::Equal)
            .then(a.terminal().cmp(&b.terminal()))
    });

    let poses = |p: &Path| -> Vec<Point3> { p.node_ids.iter().map(|&id| position(id)).collect() };
    let mut kept: Vec<Path> = Vec::new();
    for rep in reps {
        let rep_poses = poses(rep);
        let distinct = kept.iter().all(|k| dtw_distance(&poses(k), &rep_poses) > dtw_min);
        if kept.is_empty() || distinct {
            kept.push(rep.clone());
        }
    }
    kept
}

/// Candidate graph: the pathways graph restricted to candidate-path nodes.
pub fn build_candidate_graph(
    pathways: &ExplorationGraph,
    candidates: &[Path],
) -> Result<ExplorationGraph> {
    let mut keep: BTreeSet<u32> = BTreeSet::new();
    for path in candidates {
        keep.extend(path.node_ids.iter().copied());
    }
    let mut graph = ExplorationGraph::new(GraphLevel::Candidate);
    for id in &keep {
        graph.add_node(*pathways.node(*id).ok_or_else(|| Error::Contract("candidate node missing".into()))?)?;
    }
    for &(a, b, _) in pathways.edges() {
        if keep.contains(&a) && keep.contains(&b) {
            graph.add_edge(a, b)?;
        }
    }
    Ok(graph)
}
