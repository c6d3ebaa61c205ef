//! Exact ray casting against the scenario: piecewise-constant heightfield
//! (2D DDA over cells), solid boxes (slab test), and the ceiling plane.
//! Every return carries the oracle terrain class and surface slope, standing
//! in for the semantic segmentation network.

use crate::geometry::{Point3, RobotState};
use crate::semantics::TerrainClass;
use crate::sim::scenario::{Aabb, Scenario};

#[derive(Debug, Clone, Copy)]
pub struct SimPoint {
    pub position: Point3,
    pub class: TerrainClass,
    pub slope: f64,
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    t: f64,
    class: TerrainClass,
    slope: f64,
}

const EPS: f64 = 1e-9;
const VERTICAL: f64 = std::f64::consts::FRAC_PI_2;

fn closer(best: &mut Option<Hit>, cand: Hit) {
    if best.map_or(true, |b| cand.t < b.t) {
        *best = Some(cand);
    }
}

/// Slab-method ray/box intersection; entry faces classified as top
/// (heightlike, box class, slope 0) or side/bottom (vertical surface).
fn ray_box(o: &Point3, d: &Point3, b: &Aabb) -> Option<Hit> {
    let mut t_in = EPS;
    let mut t_out = f64::INFINITY;
    let mut entry_axis = 0usize;
    let axes = [
        (o.x, d.x, b.min.x, b.max.x),
        (o.y, d.y, b.min.y, b.max.y),
        (o.z, d.z, b.min.z, b.max.z),
    ];
    for (axis, &(op, dp, lo, hi)) in axes.iter().enumerate() {
        if dp.abs() < EPS {
            if op < lo || op > hi {
                return None;
            }
            continue;
        }
        let (mut t0, mut t1) = ((lo - op) / dp, (hi - op) / dp);
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        if t0 > t_in {
            t_in = t0;
            entry_axis = axis;
        }
        t_out = t_out.min(t1);
        if t_in > t_out {
            return None;
        }
    }
    if t_in <= EPS {
        return None; // origin inside or behind.
    }
    let top = entry_axis == 2 && d.z < 0.0;
    Some(Hit {
        t: t_in,
        class: if top { b.top_class } else { TerrainClass::Untraversable },
        slope: if top { 0.0 } else { VERTICAL },
    })
}

/// 2D DDA over heightfield cells: within each crossed cell's parameter
/// interval the ray either dips below the cell's elevation (top hit, exact
/// plane crossing) or enters a cell whose column it is already below
/// (riser/side hit at the cell boundary).
fn ray_heightfield(scene: &Scenario, o: &Point3, d: &Point3, max_t: f64) -> Option<Hit> {
    let res = scene.resolution;
    let horiz = (d.x * d.x + d.y * d.y).sqrt();

    if horiz < EPS {
        // Vertical ray: only the origin's own column matters.
        let (i, j) = scene.cell_index(o.x, o.y)?;
        let h = scene.height_cell(i, j);
        if d.z < 0.0 && o.z > h {
            let t = (h - o.z) / d.z;
            if t <= max_t {
                return Some(Hit { t, class: scene.label_cell(i, j), slope: scene.slope_cell(i, j) });
            }
        }
        return None;
    }

    // Parametrize by world distance t along the full 3D direction.
    let inv_x = if d.x.abs() < EPS { f64::INFINITY } else { 1.0 / d.x };
    let inv_y = if d.y.abs() < EPS { f64::INFINITY } else { 1.0 / d.y };
    let mut fi = ((o.x - scene.origin.0) / res).floor() as i64;
    let mut fj = ((o.y - scene.origin.1) / res).floor() as i64;
    let step_i: i64 = if d.x > 0.0 { 1 } else { -1 };
    let step_j: i64 = if d.y > 0.0 { 1 } else { -1 };
    let next_boundary = |idx: i64, step: i64, org: f64, origin0: f64| -> f64 {
        let edge = origin0 + (idx + if step > 0 { 1 } else { 0 }) as f64 * res;
        edge - org
    };
    let mut t_next_x = if inv_x.is_finite() {
        next_boundary(fi, step_i, o.x, scene.origin.0) * inv_x
    } else {
        f64::INFINITY
    };
    let mut t_next_y = if inv_y.is_finite() {
        next_boundary(fj, step_j, o.y, scene.origin.1) * inv_y
    } else {
        f64::INFINITY
    };
    let dt_x = if inv_x.is_finite() { (res * inv_x).abs() } else { f64::INFINITY };
    let dt_y = if inv_y.is_finite() { (res * inv_y).abs() } else { f64::INFINITY };
    let mut t_curr = 0.0;

    while t_curr <= max_t {
        let t_exit = t_next_x.min(t_next_y).min(max_t + EPS);
        if fi >= 0 && fj >= 0 && (fi as usize) < scene.width && (fj as usize) < scene.height {
            let (i, j) = (fi as usize, fj as usize);
            let h = scene.height_cell(i, j);
            let z_in = o.z + d.z * t_curr;
            if z_in <= h && t_curr > EPS {
                // Entered a column we are already below: riser face.
                return Some(Hit { t: t_curr, class: scene.label_cell(i, j), slope: VERTICAL });
            }
            if d.z < 0.0 {
                let t_top = (h - o.z) / d.z;
                if t_top >= t_curr - EPS && t_top <= t_exit && t_top <= max_t && t_top > EPS {
                    return Some(Hit {
                        t: t_top,
                        class: scene.label_cell(i, j),
                        slope: scene.slope_cell(i, j),
                    });
                }
            }
        }
        if t_next_x < t_next_y {
            fi += step_i;
            t_curr = t_next_x;
            t_next_x += dt_x;
        } else {
            fj += step_j;
            t_curr = t_next_y;
            t_next_y += dt_y;
        }
        // Stop once the walk leaves the grid for good.
        let off_x = (fi < 0 && step_i < 0) || (fi >= scene.width as i64 && step_i > 0);
        let off_y = (fj < 0 && step_j < 0) || (fj >= scene.height as i64 && step_j > 0);
        if off_x || off_y {
            return None;
        }
    }
    None
}

fn ray_ceiling(scene: &Scenario, o: &Point3, d: &Point3) -> Option<Hit> {
    if d.z <= EPS || o.z >= scene.ceiling {
        return None;
    }
    Some(Hit { t: (scene.ceiling - o.z) / d.z, class: TerrainClass::Untraversable, slope: VERTICAL })
}

/// Nearest intersection along one ray, within `max_range`.
pub fn cast_ray(scene: &Scenario, o: &Point3, d: &Point3, max_range: f64) -> Option<SimPoint> {
    let mut best: Option<Hit> = None;
    if let Some(hit) = ray_heightfield(scene, o, d, max_range) {
        closer(&mut best, hit);
    }
    for b in &scene.boxes {
        if let Some(hit) = ray_box(o, d, b) {
            closer(&mut best, hit);
        }
    }
    if let Some(hit) = ray_ceiling(scene, o, d) {
        closer(&mut best, hit);
    }
    best.filter(|h| h.t <= max_range).map(|h| SimPoint {
        position: o.add(&d.scale(h.t)),
        class: h.class,
        slope: h.slope,
    })
}

/// A full scan: `rays` azimuth steps over 2*pi (rotated by the pose yaw) by
/// `channels` elevation steps spanning `vertical_fov` about the horizon.
/// Returns the surface returns plus the unit directions of rays that hit
/// nothing within range (needed to carve free space along misses).
pub fn simulate_lidar_rays(
    scene: &Scenario,
    pose: &RobotState,
    rays: usize,
    channels: usize,
    vertical_fov: f64,
    max_range: f64,
) -> (Vec<SimPoint>, Vec<Point3>) {
    let o = pose.position();
    let mut hits = Vec::new();
    let mut misses = Vec::new();
    for c in 0..channels {
        let el = if channels > 1 {
            -vertical_fov / 2.0 + vertical_fov * c as f64 / (channels - 1) as f64
        } else {
            0.0
        };
        let (sin_el, cos_el) = el.sin_cos();
        for r in 0..rays {
            let az = pose.psi + std::f64::consts::TAU * (r as f64 + 0.5) / rays as f64;
            let d = Point3::new(cos_el * az.cos(), cos_el * az.sin(), sin_el);
            match cast_ray(scene, &o, &d, max_range) {
                Some(p) => hits.push(p),
                None => misses.push(d),
            }
        }
    }
    (hits, misses)
}

/// Surface returns only; see [`simulate_lidar_rays`].
pub fn simulate_lidar(
    scene: &Scenario,
    pose: &RobotState,
    rays: usize,
    channels: usize,
    vertical_fov: f64,
    max_range: f64,
) -> Vec<SimPoint> {
    simulate_lidar_rays(scene, pose, rays, channels, vertical_fov, max_range).0
}
