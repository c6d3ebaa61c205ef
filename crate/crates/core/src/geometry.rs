//! Shared geometric primitives: poses, points, footprint polygons, rigid
//! transforms, and pinhole projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Normalize an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % std::f64::consts::TAU;
    if a <= -std::f64::consts::PI {
        a += std::f64::consts::TAU;
    } else if a > std::f64::consts::PI {
        a -= std::f64::consts::TAU;
    }
    a
}

/// World-frame pose of an agent: 3D position plus heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Heading, normalized to `(-pi, pi]`.
    pub psi: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, z: f64, psi: f64) -> Result<Self> {
        if !(x.is_finite() && y.is_finite() && z.is_finite() && psi.is_finite()) {
            return Err(Error::InvalidParameter("non-finite robot state".into()));
        }
        Ok(Self { x, y, z, psi: wrap_angle(psi) })
    }

    pub fn position(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }
}

/// A 3D point in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn sub(&self, o: &Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }

    pub fn add(&self, o: &Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }

    pub fn scale(&self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }

    pub fn dot(&self, o: &Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dist(&self, o: &Point3) -> f64 {
        self.sub(o).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// A point carrying a semantic traversability score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub position: Point3,
    pub traversability: f64,
}

impl LabeledPoint {
    pub fn new(position: Point3, traversability: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&traversability) {
            return Err(Error::InvalidParameter(format!(
                "traversability {traversability} outside [0,1]"
            )));
        }
        Ok(Self { position, traversability })
    }
}

/// Cuboid encapsulating the robot dimensions, centered on its state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub center: RobotState,
    pub length: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn new(center: RobotState, length: f64, width: f64, height: f64) -> Result<Self> {
        if length <= 0.0 || width <= 0.0 || height <= 0.0 {
            return Err(Error::InvalidParameter("bounding box extents must be > 0".into()));
        }
        Ok(Self { center, length, width, height })
    }
}

/// Ground-plane footprint of the robot: four world-frame vertices,
/// counter-clockwise, convex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootprintPolygon {
    pub vertices: [(f64, f64); 4],
}

impl FootprintPolygon {
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let mut s = 0.0;
        for i in 0..4 {
            let (x0, y0) = v[i];
            let (x1, y1) = v[(i + 1) % 4];
            s += x0 * y1 - x1 * y0;
        }
        0.5 * s
    }

    /// Point-in-convex-polygon by sign-consistent cross products; the
    /// boundary counts as inside.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        for i in 0..4 {
            let (x0, y0) = self.vertices[i];
            let (x1, y1) = self.vertices[(i + 1) % 4];
            let cross = (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0);
            if cross < 0.0 {
                return false;
            }
        }
        true
    }

    pub fn xy_bounds(&self) -> (f64, f64, f64, f64) {
        let xs = self.vertices.iter().map(|v| v.0);
        let ys = self.vertices.iter().map(|v| v.1);
        (
            xs.clone().fold(f64::INFINITY, f64::min),
            xs.fold(f64::NEG_INFINITY, f64::max),
            ys.clone().fold(f64::INFINITY, f64::min),
            ys.fold(f64::NEG_INFINITY, f64::max),
        )
    }
}

/// Footprint polygon of `box` at `state`: each vertex is the center plus the
/// yaw-rotated half extents, counter-clockwise starting from (+1, +1).
pub fn footprint_polygon(state: &RobotState, bbox: &BoundingBox) -> FootprintPolygon {
    let lh = bbox.length / 2.0;
    let wh = bbox.width / 2.0;
    let (s, c) = state.psi.sin_cos();
    let signs = [(1.0, 1.0), (-1.0, 1.0), (-1.0, -1.0), (1.0, -1.0)];
    let mut vertices = [(0.0, 0.0); 4];
    for (i, (s1, s2)) in signs.iter().enumerate() {
        let lx = s1 * lh;
        let ly = s2 * wh;
        vertices[i] = (state.x + c * lx - s * ly, state.y + s * lx + c * ly);
    }
    FootprintPolygon { vertices }
}

/// Rigid transform: orthonormal rotation (det +1) plus translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    /// Row-major 3x3 rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            translation: [0.0, 0.0, 0.0],
        }
    }

    pub fn from_translation(x: f64, y: f64, z: f64) -> Self {
        Self { translation: [x, y, z], ..Self::identity() }
    }

    pub fn from_yaw_translation(yaw: f64, x: f64, y: f64, z: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            rotation: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
            translation: [x, y, z],
        }
    }

    /// Checks the orthonormality / determinant invariant within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let r = &self.rotation;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| r[i][k] * r[j][k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > tol {
                    return Err(Error::InvalidParameter("rotation not orthonormal".into()));
                }
            }
        }
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        if (det - 1.0).abs() > tol {
            return Err(Error::InvalidParameter("rotation determinant != +1".into()));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        // R^T, -R^T t
        let r = &self.rotation;
        let mut rt = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                rt[i][j] = r[j][i];
            }
        }
        let t = &self.translation;
        let mut nt = [0.0; 3];
        for i in 0..3 {
            nt[i] = -(rt[i][0] * t[0] + rt[i][1] * t[1] + rt[i][2] * t[2]);
        }
        Self { rotation: rt, translation: nt }
    }

    pub fn compose(&self, other: &RigidTransform) -> Self {
        let a = &self.rotation;
        let b = &other.rotation;
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        let bt = &other.translation;
        let mut t = [0.0; 3];
        for i in 0..3 {
            t[i] = a[i][0] * bt[0] + a[i][1] * bt[1] + a[i][2] * bt[2] + self.translation[i];
        }
        Self { rotation: r, translation: t }
    }
}

/// `R p + t`.
pub fn transform_point(p: &Point3, tf: &RigidTransform) -> Point3 {
    let r = &tf.rotation;
    let t = &tf.translation;
    Point3::new(
        r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + t[0],
        r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + t[1],
        r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + t[2],
    )
}

/// Pinhole camera intrinsics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        if fx <= 0.0 || fy <= 0.0 {
            return Err(Error::InvalidParameter("focal lengths must be > 0".into()));
        }
        if cx < 0.0 || cx >= width as f64 || cy < 0.0 || cy >= height as f64 {
            return Err(Error::InvalidParameter("principal point outside image".into()));
        }
        Ok(Self { fx, fy, cx, cy, width, height })
    }
}

/// Projects a point through extrinsics then intrinsics, dividing by the
/// homogeneous depth. `None` when the camera-frame depth is <= 0 or the
/// continuous pixel falls outside the image bounds.
pub fn project_point_to_image(
    p: &Point3,
    extrinsics: &RigidTransform,
    intr: &CameraIntrinsics,
) -> Option<(f64, f64)> {
    let cam = transform_point(p, extrinsics);
    if cam.z <= 0.0 {
        return None;
    }
    let u = intr.fx * cam.x / cam.z + intr.cx;
    let v = intr.fy * cam.y / cam.z + intr.cy;
    if u < 0.0 || u >= intr.width as f64 || v < 0.0 || v >= intr.height as f64 {
        return None;
    }
    Some((u, v))
}

/// Round-half-up pixel index lookup for continuous coordinates.
pub fn pixel_index(u: f64, v: f64, width: u32, height: u32) -> Option<(u32, u32)> {
    let ui = (u + 0.5).floor();
    let vi = (v + 0.5).floor();
    if ui < 0.0 || vi < 0.0 || ui >= width as f64 || vi >= height as f64 {
        return None;
    }
    Some((ui as u32, vi as u32))
}
