//! Sparse, block-hashed volumetric map with TSDF-style integration,
//! tri-state voxels, per-occupied-voxel semantic traversability, grid-walk
//! ray casting, polygon queries, and the frustum census behind volumetric
//! gain.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap_angle, FootprintPolygon, LabeledPoint, Point3, RobotState};

/// Tri-state voxel classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoxelState {
    Occupied,
    Free,
    Unknown,
}

/// TSDF voxel with a semantic traversability attribute.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Voxel {
    pub distance: f32,
    pub weight: f32,
    pub trav: f32,
    pub trav_weight: f32,
}

impl Voxel {
    pub fn state(&self, occupancy_threshold: f32) -> VoxelState {
        if self.weight == 0.0 {
            VoxelState::Unknown
        } else if self.distance.abs() < occupancy_threshold {
            VoxelState::Occupied
        } else {
            VoxelState::Free
        }
    }
}

/// Dense cube of `side^3` voxels, allocated lazily on first touch.
#[derive(Debug, Clone)]
pub struct VoxelBlock {
    voxels: Vec<Voxel>,
}

impl VoxelBlock {
    fn new(side: usize) -> Self {
        Self { voxels: vec![Voxel::default(); side * side * side] }
    }
}

pub type BlockIndex = (i32, i32, i32);

/// Result of a raycast: the first non-free voxel along the ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Center of the hit voxel.
    pub position: Point3,
    pub state: VoxelState,
    /// Semantic traversability, present for occupied hits with observations.
    pub trav: Option<f64>,
}

/// Sensor field-of-view frustum anchored at a pose (yaw-aligned, pitch 0).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SensorFrustum {
    pub apex: RobotState,
    pub horizontal_fov: f64,
    pub vertical_fov: f64,
    pub max_range: f64,
}

impl SensorFrustum {
    pub fn validate(&self) -> Result<()> {
        let tau = std::f64::consts::TAU;
        if !(self.horizontal_fov > 0.0 && self.horizontal_fov < tau) {
            return Err(Error::InvalidParameter("horizontal fov out of range".into()));
        }
        if !(self.vertical_fov > 0.0 && self.vertical_fov < tau) {
            return Err(Error::InvalidParameter("vertical fov out of range".into()));
        }
        if self.max_range <= 0.0 {
            return Err(Error::InvalidParameter("frustum range must be > 0".into()));
        }
        Ok(())
    }

    pub fn at(&self, apex: RobotState) -> Self {
        Self { apex, ..*self }
    }
}

/// Unknown / free / occupied voxel counts inside a frustum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrustumCounts {
    pub n_unknown: u64,
    pub n_free: u64,
    pub n_occupied: u64,
}

impl FrustumCounts {
    pub fn total(&self) -> u64 {
        self.n_unknown + self.n_free + self.n_occupied
    }
}

/// Weights for the volumetric-gain score.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GainWeights {
    pub w_unknown: f64,
    pub w_free: f64,
    pub w_occupied: f64,
}

impl Default for GainWeights {
    fn default() -> Self {
        Self { w_unknown: 1.0, w_free: 0.1, w_occupied: 1.0 }
    }
}

/// Volumetric gain: log((w_u e^u + w_f e^f) / (w_o e^o)) over counts
/// normalized by the grand total; zero total is defined as 0.
pub fn volumetric_gain(counts: &FrustumCounts, weights: &GainWeights) -> f64 {
    let total = counts.total();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    let u = counts.n_unknown as f64 / t;
    let f = counts.n_free as f64 / t;
    let o = counts.n_occupied as f64 / t;
    ((weights.w_unknown * u.exp() + weights.w_free * f.exp()) / (weights.w_occupied * o.exp())).ln()
}

/// Sparse block-hashed voxel map.
#[derive(Debug, Clone)]
pub struct VoxelMap {
    pub voxel_size: f64,
    pub block_side: usize,
    pub truncation: f64,
    blocks: HashMap<BlockIndex, VoxelBlock>,
}

impl VoxelMap {
    pub fn new(voxel_size: f64, block_side: usize, truncation: f64) -> Result<Self> {
        if voxel_size <= 0.0 || block_side == 0 {
            return Err(Error::InvalidParameter("bad voxel map dimensions".into()));
        }
        if truncation < voxel_size {
            return Err(Error::InvalidParameter("truncation must be >= voxel size".into()));
        }
        Ok(Self { voxel_size, block_side, truncation, blocks: HashMap::new() })
    }

    pub fn occupancy_threshold(&self) -> f32 {
        self.voxel_size as f32
    }

    pub fn allocated_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Global voxel index containing a world point (floor convention; a
    /// point exactly on a boundary belongs to the larger index).
    pub fn voxel_index(&self, p: &Point3) -> (i64, i64, i64) {
        (
            (p.x / self.voxel_size).floor() as i64,
            (p.y / self.voxel_size).floor() as i64,
            (p.z / self.voxel_size).floor() as i64,
        )
    }

    pub fn voxel_center(&self, idx: (i64, i64, i64)) -> Point3 {
        Point3::new(
            (idx.0 as f64 + 0.5) * self.voxel_size,
            (idx.1 as f64 + 0.5) * self.voxel_size,
            (idx.2 as f64 + 0.5) * self.voxel_size,
        )
    }

    fn split_index(&self, idx: (i64, i64, i64)) -> (BlockIndex, usize) {
        let b = self.block_side as i64;
        let block = (
            idx.0.div_euclid(b) as i32,
            idx.1.div_euclid(b) as i32,
            idx.2.div_euclid(b) as i32,
        );
        let (ox, oy, oz) = (idx.0.rem_euclid(b), idx.1.rem_euclid(b), idx.2.rem_euclid(b));
        let offset = ((oz * b + oy) * b + ox) as usize;
        (block, offset)
    }

    /// Read-only voxel lookup; never allocates.
    pub fn voxel(&self, idx: (i64, i64, i64)) -> Option<&Voxel> {
        let (block, offset) = self.split_index(idx);
        self.blocks.get(&block).map(|b| &b.voxels[offset])
    }

    fn voxel_mut(&mut self, idx: (i64, i64, i64)) -> &mut Voxel {
        let side = self.block_side;
        let (block, offset) = self.split_index(idx);
        &mut self.blocks.entry(block).or_insert_with(|| VoxelBlock::new(side)).voxels[offset]
    }

    pub fn state_at_index(&self, idx: (i64, i64, i64)) -> VoxelState {
        match self.voxel(idx) {
            Some(v) => v.state(self.occupancy_threshold()),
            None => VoxelState::Unknown,
        }
    }

    /// State of the voxel containing `p`; untouched blocks read as unknown
    /// without allocating.
    pub fn voxel_state(&self, p: &Point3) -> VoxelState {
        self.state_at_index(self.voxel_index(p))
    }

    /// Marks every voxel whose center lies inside [min, max] as observed
    /// free space (distance = +truncation, unit weight).
    pub fn fill_free_box(&mut self, min: &Point3, max: &Point3) {
        let trunc = self.truncation as f32;
        self.fill_box(min, max, |v| merge_distance(v, trunc));
    }

    /// Marks every voxel whose center lies inside [min, max] as an observed
    /// surface with the given traversability.
    pub fn fill_occupied_box(&mut self, min: &Point3, max: &Point3, trav: f64) {
        self.fill_box(min, max, |v| {
            // Overrides any prior free-space evidence: this is a hard surface.
            v.distance = 0.0;
            v.weight = v.weight.max(1.0);
            let tw = v.trav_weight;
            v.trav = ((v.trav as f64 * tw as f64 + trav) / (tw as f64 + 1.0)) as f32;
            v.trav_weight = tw + 1.0;
        });
    }

    /// Free-space update along a ray that returned nothing: every voxel the
    /// ray passes through within `range` gets a truncation-distance merge.
    pub fn integrate_free_ray(&mut self, origin: &Point3, dir: &Point3, range: f64) {
        let trunc = self.truncation as f32;
        let mut walker = GridWalk::new(origin, dir, self.voxel_size);
        loop {
            let (idx, t_entry) = walker.next_voxel();
            if t_entry > range {
                return;
            }
            merge_distance(self.voxel_mut(idx), trunc);
        }
    }

    fn fill_box(&mut self, min: &Point3, max: &Point3, mut update: impl FnMut(&mut Voxel)) {
        let lo = self.voxel_index(min);
        let hi = self.voxel_index(max);
        for ix in lo.0..=hi.0 {
            for iy in lo.1..=hi.1 {
                for iz in lo.2..=hi.2 {
                    let c = self.voxel_center((ix, iy, iz));
                    if c.x >= min.x && c.x <= max.x
                        && c.y >= min.y && c.y <= max.y
                        && c.z >= min.z && c.z <= max.z
                    {
                        update(self.voxel_mut((ix, iy, iz)));
                    }
                }
            }
        }
    }

    /// TSDF integration of a labeled world-frame cloud observed from
    /// `sensor_origin`. Surface-band voxels merge the projective signed
    /// distance; strictly-before-band voxels get free-space updates; the
    /// endpoint voxel merges the point's traversability.
    pub fn integrate_labeled_cloud(&mut self, cloud: &[LabeledPoint], sensor_origin: &Point3) {
        for lp in cloud {
            let p = lp.position;
            let delta = p.sub(sensor_origin);
            let range = delta.norm();
            if range < 1e-9 {
                continue;
            }
            let dir = delta.scale(1.0 / range);
            let trunc = self.truncation as f32;
            let band_start = range - self.truncation;
            let endpoint = self.voxel_index(&p);
            let mut walker = GridWalk::new(sensor_origin, &dir, self.voxel_size);
            loop {
                let (idx, t_entry) = walker.next_voxel();
                if t_entry > range + self.truncation {
                    break;
                }
                let center = self.voxel_center(idx);
                let t_center = center.sub(sensor_origin).dot(&dir);
                if t_center < 0.0 {
                    continue;
                }
                let sd = range - t_center;
                if t_center < band_start {
                    merge_distance(self.voxel_mut(idx), trunc);
                } else if sd.abs() <= self.truncation || t_center <= range {
                    let clamped = sd.clamp(-self.truncation, self.truncation) as f32;
                    merge_distance(self.voxel_mut(idx), clamped);
                }
                if idx == endpoint {
                    let v = self.voxel_mut(idx);
                    let tw = v.trav_weight;
                    v.trav = ((v.trav as f64 * tw as f64 + lp.traversability) / (tw as f64 + 1.0)) as f32;
                    v.trav_weight = tw + 1.0;
                }
            }
        }
    }

    /// Walks the grid from `origin` along the unit `direction`, returning
    /// the first voxel whose state is occupied or unknown; `None` when every
    /// voxel out to `max_range` is free.
    pub fn raycast(&self, origin: &Point3, direction: &Point3, max_range: f64) -> Option<RayHit> {
        let mut walker = GridWalk::new(origin, direction, self.voxel_size);
        loop {
            let (idx, t_entry) = walker.next_voxel();
            if t_entry > max_range {
                return None;
            }
            let state = self.state_at_index(idx);
            if state != VoxelState::Free {
                let trav = match (state, self.voxel(idx)) {
                    (VoxelState::Occupied, Some(v)) if v.trav_weight > 0.0 => Some(v.trav as f64),
                    _ => None,
                };
                return Some(RayHit { position: self.voxel_center(idx), state, trav });
            }
        }
    }

    /// True when no occupied voxel lies strictly between `origin`'s voxel
    /// and the voxel containing `target`.
    fn segment_unoccluded(&self, origin: &Point3, target_idx: (i64, i64, i64)) -> bool {
        let target_center = self.voxel_center(target_idx);
        let delta = target_center.sub(origin);
        let range = delta.norm();
        if range < 1e-12 {
            return true;
        }
        let dir = delta.scale(1.0 / range);
        let mut walker = GridWalk::new(origin, &dir, self.voxel_size);
        loop {
            let (idx, t_entry) = walker.next_voxel();
            if idx == target_idx || t_entry > range {
                return true;
            }
            if self.state_at_index(idx) == VoxelState::Occupied {
                return false;
            }
        }
    }

    /// Mean semantic traversability of occupied voxels whose centers fall
    /// inside the polygon within `z_center +/- z_halfspan`; `None` when the
    /// set is empty. Only voxels with observations participate.
    pub fn avg_semantic_traversability(
        &self,
        poly: &FootprintPolygon,
        z_center: f64,
        z_halfspan: f64,
    ) -> Option<f64> {
        let threshold = self.occupancy_threshold();
        let (mut sum, mut n) = (0.0f64, 0u64);
        let mut keys: Vec<&BlockIndex> = self.blocks.keys().collect();
        keys.sort();
        for key in keys {
            let block = &self.blocks[key];
            let side = self.block_side as i64;
            let base = (key.0 as i64 * side, key.1 as i64 * side, key.2 as i64 * side);
            for (off, v) in block.voxels.iter().enumerate() {
                if v.state(threshold) != VoxelState::Occupied || v.trav_weight == 0.0 {
                    continue;
                }
                let off = off as i64;
                let idx = (base.0 + off % side, base.1 + (off / side) % side, base.2 + off / (side * side));
                let c = self.voxel_center(idx);
                if (c.z - z_center).abs() <= z_halfspan && poly.contains(c.x, c.y) {
                    sum += v.trav as f64;
                    n += 1;
                }
            }
        }
        if n == 0 {
            None
        } else {
            Some(sum / n as f64)
        }
    }

    /// Occlusion-aware census of voxel centers inside the frustum: a voxel
    /// is counted only when the ray from the apex to its center is not
    /// blocked by a nearer occupied voxel.
    pub fn frustum_census(&self, frustum: &SensorFrustum) -> FrustumCounts {
        let mut counts = FrustumCounts::default();
        if frustum.max_range < self.voxel_size {
            return counts;
        }
        let apex = frustum.apex.position();
        let r = frustum.max_range;
        let lo = self.voxel_index(&Point3::new(apex.x - r, apex.y - r, apex.z - r));
        let hi = self.voxel_index(&Point3::new(apex.x + r, apex.y + r, apex.z + r));
        let half_h = frustum.horizontal_fov / 2.0;
        let half_v = frustum.vertical_fov / 2.0;
        for ix in lo.0..=hi.0 {
            for iy in lo.1..=hi.1 {
                for iz in lo.2..=hi.2 {
                    let c = self.voxel_center((ix, iy, iz));
                    let d = c.sub(&apex);
                    let dist = d.norm();
                    if dist > r || dist < 1e-12 {
                        continue;
                    }
                    let az = wrap_angle(d.y.atan2(d.x) - frustum.apex.psi);
                    if az.abs() > half_h {
                        continue;
                    }
                    let el = d.z.atan2((d.x * d.x + d.y * d.y).sqrt());
                    if el.abs() > half_v {
                        continue;
                    }
                    if !self.segment_unoccluded(&apex, (ix, iy, iz)) {
                        continue;
                    }
                    match self.state_at_index((ix, iy, iz)) {
                        VoxelState::Unknown => counts.n_unknown += 1,
                        VoxelState::Free => counts.n_free += 1,
                        VoxelState::Occupied => counts.n_occupied += 1,
                    }
                }
            }
        }
        counts
    }

    /// (free, occupied) counts over allocated voxels.
    pub fn count_known(&self) -> (u64, u64) {
        let threshold = self.occupancy_threshold();
        let (mut free, mut occ) = (0u64, 0u64);
        for block in self.blocks.values() {
            for v in &block.voxels {
                match v.state(threshold) {
                    VoxelState::Free => free += 1,
                    VoxelState::Occupied => occ += 1,
                    VoxelState::Unknown => {}
                }
            }
        }
        (free, occ)
    }

    /// Visits every allocated voxel in sorted block order.
    pub fn for_each_voxel_sorted(&self, mut f: impl FnMut((i64, i64, i64), &Voxel)) {
        let mut keys: Vec<&BlockIndex> = self.blocks.keys().collect();
        keys.sort();
        let side = self.block_side as i64;
        for key in keys {
            let block = &self.blocks[key];
            let base = (key.0 as i64 * side, key.1 as i64 * side, key.2 as i64 * side);
            for (off, v) in block.voxels.iter().enumerate() {
                let off = off as i64;
                let idx = (base.0 + off % side, base.1 + (off / side) % side, base.2 + off / (side * side));
                f(idx, v);
            }
        }
    }

    /// Binary snapshot: magic "TVOX", u32 version, f64 voxel_size, u32 B,
    /// u64 block count, then per block i32x3 index + B^3 records of
    /// (f32 distance, f32 weight, f32 trav, f32 trav_weight), little-endian.
    pub fn write_snapshot<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(b"TVOX")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&self.voxel_size.to_le_bytes())?;
        w.write_all(&(self.block_side as u32).to_le_bytes())?;
        w.write_all(&(self.blocks.len() as u64).to_le_bytes())?;
        let mut keys: Vec<&BlockIndex> = self.blocks.keys().collect();
        keys.sort();
        for key in keys {
            w.write_all(&key.0.to_le_bytes())?;
            w.write_all(&key.1.to_le_bytes())?;
            w.write_all(&key.2.to_le_bytes())?;
            for v in &self.blocks[key].voxels {
                w.write_all(&v.distance.to_le_bytes())?;
                w.write_all(&v.weight.to_le_bytes())?;
                w.write_all(&v.trav.to_le_bytes())?;
                w.write_all(&v.trav_weight.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_snapshot<R: Read>(r: &mut R) -> Result<Self> {
        let mut head = [0u8; 4 + 4 + 8 + 4 + 8];
        r.read_exact(&mut head).map_err(|_| Error::Malformed("truncated TVOX header".into()))?;
        if &head[0..4] != b"TVOX" {
            return Err(Error::Malformed("bad TVOX magic".into()));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != 1 {
            return Err(Error::UnsupportedVersion(version as u16));
        }
        let voxel_size = f64::from_le_bytes(head[8..16].try_into().unwrap());
        let block_side = u32::from_le_bytes(head[16..20].try_into().unwrap()) as usize;
        let n_blocks = u64::from_le_bytes(head[20..28].try_into().unwrap());
        // The snapshot format does not carry truncation; reconstruct a valid one.
        let mut map = Self::new(voxel_size, block_side, (3.0 * voxel_size).max(voxel_size))?;
        let n_vox = block_side * block_side * block_side;
        for _ in 0..n_blocks {
            let mut idx = [0u8; 12];
            r.read_exact(&mut idx).map_err(|_| Error::Malformed("truncated block index".into()))?;
            let key = (
                i32::from_le_bytes(idx[0..4].try_into().unwrap()),
                i32::from_le_bytes(idx[4..8].try_into().unwrap()),
                i32::from_le_bytes(idx[8..12].try_into().unwrap()),
            );
            let mut payload = vec![0u8; n_vox * 16];
            r.read_exact(&mut payload).map_err(|_| Error::Malformed("truncated block payload".into()))?;
            let mut block = VoxelBlock::new(block_side);
            for (i, rec) in payload.chunks_exact(16).enumerate() {
                block.voxels[i] = Voxel {
                    distance: f32::from_le_bytes(rec[0..4].try_into().unwrap()),
                    weight: f32::from_le_bytes(rec[4..8].try_into().unwrap()),
                    trav: f32::from_le_bytes(rec[8..12].try_into().unwrap()),
                    trav_weight: f32::from_le_bytes(rec[12..16].try_into().unwrap()),
                };
            }
            map.blocks.insert(key, block);
        }
        Ok(map)
    }
}

fn merge_distance(v: &mut Voxel, sd: f32) {
    let w = v.weight;
    v.distance = ((v.distance as f64 * w as f64 + sd as f64) / (w as f64 + 1.0)) as f32;
    v.weight = w + 1.0;
}

/// Amanatides-Woo incremental grid traversal. `next_voxel` yields each voxel
/// along the ray exactly once, in order, together with the ray parameter at
/// which the voxel is entered (0 for the start voxel).
pub struct GridWalk {
    idx: (i64, i64, i64),
    step: (i64, i64, i64),
    t_max: (f64, f64, f64),
    t_delta: (f64, f64, f64),
    t_entry: f64,
    started: bool,
}

impl GridWalk {
    pub fn new(origin: &Point3, direction: &Point3, voxel_size: f64) -> Self {
        let idx = (
            (origin.x / voxel_size).floor() as i64,
            (origin.y / voxel_size).floor() as i64,
            (origin.z / voxel_size).floor() as i64,
        );
        let axis = |o: f64, d: f64, i: i64| -> (i64, f64, f64) {
            if d > 0.0 {
                let next = (i as f64 + 1.0) * voxel_size;
                (1, (next - o) / d, voxel_size / d)
            } else if d < 0.0 {
                let next = i as f64 * voxel_size;
                (-1, (next - o) / d, -voxel_size / d)
            } else {
                (0, f64::INFINITY, f64::INFINITY)
            }
        };
        let (sx, tx, dx) = axis(origin.x, direction.x, idx.0);
        let (sy, ty, dy) = axis(origin.y, direction.y, idx.1);
        let (sz, tz, dz) = axis(origin.z, direction.z, idx.2);
        Self {
            idx,
            step: (sx, sy, sz),
            t_max: (tx, ty, tz),
            t_delta: (dx, dy, dz),
            t_entry: 0.0,
            started: false,
        }
    }

    pub fn next_voxel(&mut self) -> ((i64, i64, i64), f64) {
        if !self.started {
            self.started = true;
            return (self.idx, 0.0);
        }
        if self.t_max.0 <= self.t_max.1 && self.t_max.0 <= self.t_max.2 {
            self.t_entry = self.t_max.0;
            self.idx.0 += self.step.0;
            self.t_max.0 += self.t_delta.0;
        } else if self.t_max.1 <= self.t_max.2 {
            self.t_entry = self.t_max.1;
            self.idx.1 += self.step.1;
            self.t_max.1 += self.t_delta.1;
        } else {
            self.t_entry = self.t_max.2;
            self.idx.2 += self.step.2;
            self.t_max.2 += self.t_delta.2;
        }
        (self.idx, self.t_entry)
    }
}
