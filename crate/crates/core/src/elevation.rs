//! Robot-centric 2.5D elevation grid with per-cell slope / roughness / step
//! features, risk factor, and geometric traversability.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FootprintPolygon, Point3, RobotState};

/// Weights and hard-constraint critical values for the terrain risk factor.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GeometricRiskParams {
    pub w_s: f64,
    pub w_r: f64,
    pub w_h: f64,
    /// Critical slope, radians.
    pub s_crit: f64,
    /// Critical roughness, meters.
    pub r_crit: f64,
    /// Critical step height, meters.
    pub h_crit: f64,
}

impl Default for GeometricRiskParams {
    fn default() -> Self {
        Self { w_s: 0.4, w_r: 0.3, w_h: 0.3, s_crit: 0.45, r_crit: 0.10, h_crit: 0.25 }
    }
}

impl GeometricRiskParams {
    pub fn validate(&self) -> Result<()> {
        if self.w_s < 0.0 || self.w_r < 0.0 || self.w_h < 0.0 {
            return Err(Error::InvalidParameter("risk weights must be >= 0".into()));
        }
        if ((self.w_s + self.w_r + self.w_h) - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter("risk weights must sum to 1".into()));
        }
        if self.s_crit <= 0.0 || self.r_crit <= 0.0 || self.h_crit <= 0.0 {
            return Err(Error::InvalidParameter("critical values must be > 0".into()));
        }
        Ok(())
    }
}

/// Risk = clamp(w_s s/s_crit + w_r r/r_crit + w_h h/h_crit, 0, 1);
/// traversability = 1 - risk, forced to 0 when any feature reaches its
/// critical value.
pub fn geometric_risk_trav(s: f64, r: f64, h: f64, params: &GeometricRiskParams) -> (f64, f64) {
    let raw =
        params.w_s * s / params.s_crit + params.w_r * r / params.r_crit + params.w_h * h / params.h_crit;
    let risk = raw.clamp(0.0, 1.0);
    let trav = if s >= params.s_crit || r >= params.r_crit || h >= params.h_crit {
        0.0
    } else {
        1.0 - risk
    };
    (risk, trav)
}

/// Per-cell record. Absent fields mean "not observed / not computable".
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub elevation: Option<f64>,
    pub slope: Option<f64>,
    pub roughness: Option<f64>,
    pub step: Option<f64>,
    pub risk: Option<f64>,
    pub trav_g: Option<f64>,
    /// True when the elevation came from a sensor return rather than from
    /// hole-filling interpolation.
    pub measured: bool,
}

/// Robot-centric 2.5D traversability grid. `origin` is the world position of
/// the corner of cell (0,0); cells are row-major with `i` along x.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraversabilityGrid {
    pub origin: (f64, f64),
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
    cells: Vec<Cell>,
}

impl TraversabilityGrid {
    pub fn new(resolution: f64, width: usize, height: usize) -> Result<Self> {
        if resolution <= 0.0 {
            return Err(Error::InvalidParameter("resolution must be > 0".into()));
        }
        Ok(Self { origin: (0.0, 0.0), resolution, width, height, cells: vec![Cell::default(); width * height] })
    }

    /// Grid covering `window` meters per side, centered at the origin until
    /// the first scan recenters it.
    pub fn with_window(resolution: f64, window: f64) -> Result<Self> {
        let n = (window / resolution).round() as usize;
        Self::new(resolution, n, n)
    }

    pub fn cell(&self, i: usize, j: usize) -> Option<&Cell> {
        if i < self.width && j < self.height {
            Some(&self.cells[j * self.width + i])
        } else {
            None
        }
    }

    #[cfg(test)]
    fn cell_mut(&mut self, i: usize, j: usize) -> &mut Cell {
        &mut self.cells[j * self.width + i]
    }

    /// World coordinates of the center of cell (i, j).
    pub fn cell_center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + (i as f64 + 0.5) * self.resolution,
            self.origin.1 + (j as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell index containing the world point, if inside the grid.
    pub fn index_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = (x - self.origin.0) / self.resolution;
        let fj = (y - self.origin.1) / self.resolution;
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi.floor() as usize, fj.floor() as usize);
        if i < self.width && j < self.height {
            Some((i, j))
        } else {
            None
        }
    }

    pub fn elevation_at(&self, x: f64, y: f64) -> Option<f64> {
        self.index_of(x, y).and_then(|(i, j)| self.cell(i, j).unwrap().elevation)
    }

    /// Elevation of the nearest observed cell whose center lies within
    /// `radius` of `(x, y)`. Sparse scans leave gaps between returns; a
    /// support query at footprint scale should tolerate them.
    pub fn elevation_near(&self, x: f64, y: f64, radius: f64) -> Option<f64> {
        let (ci, cj) = self.index_of(x, y)?;
        let reach = (radius / self.resolution).ceil() as i64;
        let mut best: Option<(f64, f64)> = None;
        for dj in -reach..=reach {
            for di in -reach..=reach {
                let (ni, nj) = (ci as i64 + di, cj as i64 + dj);
                if ni < 0 || nj < 0 || ni as usize >= self.width || nj as usize >= self.height {
                    continue;
                }
                let Some(e) = self.cells[nj as usize * self.width + ni as usize].elevation else {
                    continue;
                };
                let (cx, cy) = self.cell_center(ni as usize, nj as usize);
                let d = ((cx - x).powi(2) + (cy - y).powi(2)).sqrt();
                if d <= radius && best.is_none_or(|(bd, _)| d < bd) {
                    best = Some((d, e));
                }
            }
        }
        best.map(|(_, e)| e)
    }

    /// Recenter the window on the robot, keeping cells that remain inside.
    /// The origin stays a whole-cell multiple so surviving cells shift exactly.
    fn recenter(&mut self, robot: &RobotState) {
        let half_w = self.width as f64 * self.resolution / 2.0;
        let half_h = self.height as f64 * self.resolution / 2.0;
        let new_ox = ((robot.x - half_w) / self.resolution).round() * self.resolution;
        let new_oy = ((robot.y - half_h) / self.resolution).round() * self.resolution;
        let di = ((new_ox - self.origin.0) / self.resolution).round() as i64;
        let dj = ((new_oy - self.origin.1) / self.resolution).round() as i64;
        if di == 0 && dj == 0 {
            return;
        }
        let mut cells = vec![Cell::default(); self.width * self.height];
        for j in 0..self.height {
            for i in 0..self.width {
                let si = i as i64 + di;
                let sj = j as i64 + dj;
                if si >= 0 && sj >= 0 && (si as usize) < self.width && (sj as usize) < self.height {
                    cells[j * self.width + i] = self.cells[sj as usize * self.width + si as usize];
                }
            }
        }
        self.cells = cells;
        self.origin = (new_ox, new_oy);
    }

    /// Integrates a world-frame scan: recenters on the robot, then sets each
    /// hit cell's elevation to the 90th percentile of that cell's point
    /// heights from this scan (keeps the support surface, sheds stray
    /// ceiling returns).
    pub fn integrate_scan(&mut self, cloud: &[Point3], robot: &RobotState) {
        if cloud.is_empty() {
            return;
        }
        self.recenter(robot);
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); self.width * self.height];
        for p in cloud {
            if let Some((i, j)) = self.index_of(p.x, p.y) {
                buckets[j * self.width + i].push(p.z);
            }
        }
        for (idx, zs) in buckets.iter_mut().enumerate() {
            if zs.is_empty() {
                continue;
            }
            zs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            self.cells[idx].elevation = Some(percentile_sorted(zs, 0.9));
            // Features are stale until recomputed.
            self.cells[idx].slope = None;
            self.cells[idx].roughness = None;
            self.cells[idx].step = None;
            self.cells[idx].risk = None;
            self.cells[idx].trav_g = None;
            self.cells[idx].measured = true;
        }
    }

    /// Fills unmeasured cells by inverse-distance interpolation over the
    /// measured elevations within `radius`, bridging the gaps a sparse scan
    /// pattern leaves between returns. Previously interpolated cells are
    /// discarded first, so filled terrain never extends more than `radius`
    /// beyond a real measurement. Cells with fewer than three measured
    /// supports stay unobserved.
    pub fn fill_holes(&mut self, radius: f64) {
        if radius <= 0.0 {
            return;
        }
        for c in &mut self.cells {
            if !c.measured {
                *c = Cell::default();
            }
        }
        let reach = (radius / self.resolution).ceil() as i64;
        let mut filled: Vec<(usize, f64)> = Vec::new();
        for j in 0..self.height {
            for i in 0..self.width {
                if self.cells[j * self.width + i].measured {
                    continue;
                }
                let (x, y) = self.cell_center(i, j);
                let (mut wsum, mut esum, mut n) = (0.0, 0.0, 0usize);
                for dj in -reach..=reach {
                    for di in -reach..=reach {
                        let (ni, nj) = (i as i64 + di, j as i64 + dj);
                        if ni < 0 || nj < 0 || ni as usize >= self.width || nj as usize >= self.height
                        {
                            continue;
                        }
                        let c = &self.cells[nj as usize * self.width + ni as usize];
                        if !c.measured {
                            continue;
                        }
                        let Some(e) = c.elevation else { continue };
                        let (cx, cy) = self.cell_center(ni as usize, nj as usize);
                        let d = ((cx - x).powi(2) + (cy - y).powi(2)).sqrt();
                        if d <= radius {
                            let w = 1.0 / (d + self.resolution);
                            wsum += w;
                            esum += w * e;
                            n += 1;
                        }
                    }
                }
                if n >= 3 {
                    filled.push((j * self.width + i, esum / wsum));
                }
            }
        }
        for (idx, e) in filled {
            self.cells[idx].elevation = Some(e);
        }
    }

    /// Per observed cell with at least 3 observed neighbors in the 3x3
    /// window: slope from a least-squares plane fit over the window,
    /// roughness as the residual standard deviation, step height as the max
    /// absolute elevation difference to the 8-neighbors.
    pub fn compute_features(&mut self) {
        let mut out = self.cells.clone();
        for j in 0..self.height {
            for i in 0..self.width {
                let center = self.cells[j * self.width + i];
                let Some(elev) = center.elevation else { continue };
                let mut pts: Vec<(f64, f64, f64)> = Vec::with_capacity(9);
                let mut max_step = 0.0f64;
                let mut neighbors = 0usize;
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let ni = i as i64 + di;
                        let nj = j as i64 + dj;
                        if ni < 0 || nj < 0 || ni as usize >= self.width || nj as usize >= self.height {
                            continue;
                        }
                        let c = self.cells[nj as usize * self.width + ni as usize];
                        if let Some(e) = c.elevation {
                            let (x, y) = self.cell_center(ni as usize, nj as usize);
                            pts.push((x, y, e));
                            if di != 0 || dj != 0 {
                                neighbors += 1;
                                max_step = max_step.max((e - elev).abs());
                            }
                        }
                    }
                }
                if neighbors < 3 {
                    continue;
                }
                let (slope, roughness) = plane_fit_slope_roughness(&pts);
                let cell = &mut out[j * self.width + i];
                cell.slope = Some(slope);
                cell.roughness = Some(roughness);
                cell.step = Some(max_step);
            }
        }
        self.cells = out;
    }

    /// Applies [`geometric_risk_trav`] to every cell with computed features.
    pub fn risk_and_traversability(&mut self, params: &GeometricRiskParams) {
        for cell in &mut self.cells {
            let (Some(s), Some(r), Some(h)) = (cell.slope, cell.roughness, cell.step) else {
                continue;
            };
            let (risk, trav) = geometric_risk_trav(s, r, h, params);
            cell.risk = Some(risk);
            cell.trav_g = Some(trav);
        }
    }

    /// All cells whose center lies inside or on the polygon boundary.
    pub fn cells_in_polygon(&self, poly: &FootprintPolygon) -> Vec<(usize, usize)> {
        let (min_x, max_x, min_y, max_y) = poly.xy_bounds();
        let i0 = (((min_x - self.origin.0) / self.resolution).floor().max(0.0)) as usize;
        let j0 = (((min_y - self.origin.1) / self.resolution).floor().max(0.0)) as usize;
        let i1 = ((((max_x - self.origin.0) / self.resolution).ceil()).max(0.0) as usize).min(self.width);
        let j1 = ((((max_y - self.origin.1) / self.resolution).ceil()).max(0.0) as usize).min(self.height);
        let mut out = Vec::new();
        for j in j0..j1 {
            for i in i0..i1 {
                let (x, y) = self.cell_center(i, j);
                if poly.contains(x, y) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Mean trav_g over observed cells under the polygon; `None` when no
    /// scored cell lies inside (unknown terrain).
    pub fn avg_geometric_traversability(&self, poly: &FootprintPolygon) -> Option<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for (i, j) in self.cells_in_polygon(poly) {
            if let Some(t) = self.cell(i, j).unwrap().trav_g {
                sum += t;
                n += 1;
            }
        }
        if n == 0 {
            None
        } else {
            Some(sum / n as f64)
        }
    }

    /// CSV export: `i,j,x,y,elevation,slope,roughness,step,risk,trav_g`,
    /// absent values empty.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "i,j,x,y,elevation,slope,roughness,step,risk,trav_g")?;
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        for j in 0..self.height {
            for i in 0..self.width {
                let c = self.cell(i, j).unwrap();
                let (x, y) = self.cell_center(i, j);
                writeln!(
                    w,
                    "{i},{j},{x:.6},{y:.6},{},{},{},{},{},{}",
                    fmt(c.elevation),
                    fmt(c.slope),
                    fmt(c.roughness),
                    fmt(c.step),
                    fmt(c.risk),
                    fmt(c.trav_g)
                )?;
            }
        }
        Ok(())
    }

    /// 8-bit PGM of trav_g scaled 0-255; unobserved cells render as 0.
    pub fn write_pgm<W: Write>(&self, w: &mut W) -> Result<()> {
        let data: Vec<u8> = (0..self.height)
            .flat_map(|j| (0..self.width).map(move |i| (i, j)))
            .map(|(i, j)| {
                self.cell(i, j)
                    .unwrap()
                    .trav_g
                    .map(|t| (t.clamp(0.0, 1.0) * 255.0).round() as u8)
                    .unwrap_or(0)
            })
            .collect();
        crate::io::write_pgm(w, self.width as u32, self.height as u32, &data)
    }
}

/// Linear-interpolation percentile of pre-sorted values, numpy-style.
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let pos = q * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Least-squares plane z = ax + by + c over the samples; returns
/// (slope = arccos of the unit normal's z, residual standard deviation).
fn plane_fit_slope_roughness(pts: &[(f64, f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mz = pts.iter().map(|p| p.2).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy, mut sxz, mut syz) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y, z) in pts {
        let (dx, dy, dz) = (x - mx, y - my, z - mz);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
        sxz += dx * dz;
        syz += dy * dz;
    }
    let det = sxx * syy - sxy * sxy;
    let (a, b) = if det.abs() < 1e-12 {
        (0.0, 0.0)
    } else {
        ((syy * sxz - sxy * syz) / det, (sxx * syz - sxy * sxz) / det)
    };
    let nz = 1.0 / (1.0 + a * a + b * b).sqrt();
    let slope = nz.clamp(-1.0, 1.0).acos();
    let mut ss = 0.0;
    for (x, y, z) in pts {
        let pred = mz + a * (x - mx) + b * (y - my);
        ss += (z - pred) * (z - pred);
    }
    let roughness = (ss / n).sqrt();
    (slope, roughness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::footprint_polygon;
    use crate::geometry::BoundingBox;

    fn robot_at(x: f64, y: f64) -> RobotState {
        RobotState::new(x, y, 0.0, 0.0).unwrap()
    }

    fn dense_plane(grid: &TraversabilityGrid, z: impl Fn(f64, f64) -> f64) -> Vec<Point3> {
        // 4 samples per cell across the current window.
        let step = grid.resolution / 2.0;
        let mut pts = Vec::new();
        let (w, h) = (grid.width as f64 * grid.resolution, grid.height as f64 * grid.resolution);
        let mut x = grid.origin.0 + step / 2.0;
        while x < grid.origin.0 + w {
            let mut y = grid.origin.1 + step / 2.0;
            while y < grid.origin.1 + h {
                pts.push(Point3::new(x, y, z(x, y)));
                y += step;
            }
            x += step;
        }
        pts
    }


    #[test]
    fn fill_holes_bridges_rings_without_growing() {
        let mut g = TraversabilityGrid::with_window(0.1, 4.0).unwrap();
        // Two concentric measurement rings 0.5 m apart, as a sparse scan
        // leaves them.
        let mut cloud = Vec::new();
        for k in 0..128 {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 128.0;
            for r in [0.8, 1.3] {
                cloud.push(Point3::new(r * a.cos(), r * a.sin(), 0.0));
            }
        }
        g.integrate_scan(&cloud, &robot_at(0.0, 0.0));
        assert!(g.elevation_at(1.05, 0.0).is_none());
        g.fill_holes(0.35);
        // The gap between the rings is interpolated flat...
        let e = g.elevation_at(1.05, 0.0).expect("gap filled");
        assert!(e.abs() < 1e-9);
        // ...but cells farther than the radius from any measurement stay
        // unobserved, and repeated filling does not creep outward.
        assert!(g.elevation_at(0.0, 0.0).is_none());
        g.fill_holes(0.35);
        assert!(g.elevation_at(0.0, 0.0).is_none());
        assert!(g.elevation_at(1.9, 1.9).is_none());
        // Interpolated support yields features, hence trav_g, in the gap.
        g.compute_features();
        g.risk_and_traversability(&GeometricRiskParams::default());
        let (i, j) = g.index_of(1.05, 0.0).unwrap();
        assert!(g.cell(i, j).unwrap().trav_g.is_some());
    }

    #[test]
    fn flat_plane_elevation_zero() {
        let mut g = TraversabilityGrid::with_window(0.1, 2.0).unwrap();
        let cloud = dense_plane(&g, |_, _| 0.0);
        g.integrate_scan(&cloud, &robot_at(0.0, 0.0));
        let mut seen = 0;
        for j in 0..g.height {
            for i in 0..g.width {
                if let Some(e) = g.cell(i, j).unwrap().elevation {
                    assert!(e.abs() <= 0.05);
                    seen += 1;
                }
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn single_point_sets_elevation() {
        let mut g = TraversabilityGrid::with_window(0.1, 2.0).unwrap();
        g.integrate_scan(&[Point3::new(0.31, 0.12, 0.42)], &robot_at(0.0, 0.0));
        assert_eq!(g.elevation_at(0.31, 0.12), Some(0.42));
    }

    #[test]
    fn two_points_ninetieth_percentile() {
        // Oracle: linear-interpolation percentile of {0, 1} at q=0.9 is 0.9.
        let mut g = TraversabilityGrid::with_window(0.1, 2.0).unwrap();
        g.integrate_scan(
            &[Point3::new(0.31, 0.12, 0.0), Point3::new(0.32, 0.13, 1.0)],
            &robot_at(0.0, 0.0),
        );
        let e = g.elevation_at(0.31, 0.12).unwrap();
        assert!((e - 0.9).abs() < 1e-12);
    }

    #[test]
    fn recenter_drops_outside_cells() {
        let mut g = TraversabilityGrid::with_window(0.1, 2.0).unwrap();
        g.integrate_scan(&[Point3::new(0.0, 0.0, 0.5)], &robot_at(0.0, 0.0));
        assert!(g.elevation_at(0.0, 0.0).is_some());
        // Move far away; old cell leaves the window.
        g.integrate_scan(&[Point3::new(10.0, 10.0, 0.2)], &robot_at(10.0, 10.0));
        assert!(g.index_of(0.0, 0.0).is_none());
        assert_eq!(g.elevation_at(10.0, 10.0), Some(0.2));
    }

    #[test]
    fn flat_plane_features_zero() {
        let mut g = TraversabilityGrid::with_window(0.1, 2.0).unwrap();
        let cloud = dense_plane(&g, |_, _| 0.3);
        g.integrate_scan(&cloud, &robot_at(0.0, 0.0));
        g.compute_features();
        let c = g.cell(g.width / 2, g.height / 2).unwrap();
        assert!(c.slope.unwrap() < 1e-9);
        assert!(c.roughness.unwrap() < 1e-9);
        assert!(c.step.unwrap() < 1e-9);
    }

    #[test]
    fn ramp_slope_matches_grade() {
        // 45 degree ramp along x; plane-fit slope of exact samples is pi/4.
        let mut g = TraversabilityGrid::with_window(0.1, 2.0).unwrap();
        let cloud = dense_plane(&g, |x, _| x);
        g.integrate_scan(&cloud, &robot_at(0.0, 0.0));
        g.compute_features();
        let c = g.cell(g.width / 2, g.height / 2).unwrap();
        assert!((c.slope.unwrap() - std::f64::consts::FRAC_PI_4).abs() < 0.02);
    }

    #[test]
    fn step_height_at_edge() {
        // Two flat plateaus, 0.3 m apart; cells adjacent to the edge see h = 0.3.
        let mut g = TraversabilityGrid::with_window(0.1, 2.0).unwrap();
        // Recenter on the robot first so the sampling window matches.
        g.integrate_scan(&[Point3::new(0.05, 0.05, 0.3)], &robot_at(0.0, 0.0));
        let cloud = dense_plane(&g, |x, _| if x < 0.0 { 0.0 } else { 0.3 });
        g.integrate_scan(&cloud, &robot_at(0.0, 0.0));
        g.compute_features();
        let (i, j) = g.index_of(-0.05, 0.05).unwrap();
        let c = g.cell(i, j).unwrap();
        assert!((c.step.unwrap() - 0.3).abs() < 1e-6);
    }

    #[test]
    fn risk_hand_evaluated() {
        let params = GeometricRiskParams::default();
        params.validate().unwrap();
        let mut g = TraversabilityGrid::new(0.1, 1, 1).unwrap();
        g.cell_mut(0, 0).elevation = Some(0.0);
        g.cell_mut(0, 0).slope = Some(params.s_crit / 2.0);
        g.cell_mut(0, 0).roughness = Some(0.0);
        g.cell_mut(0, 0).step = Some(0.0);
        g.risk_and_traversability(&params);
        let c = g.cell(0, 0).unwrap();
        assert!((c.risk.unwrap() - 0.2).abs() < 1e-12);
        assert!((c.trav_g.unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn risk_zero_features() {
        let params = GeometricRiskParams::default();
        let mut g = TraversabilityGrid::new(0.1, 1, 1).unwrap();
        g.cell_mut(0, 0).slope = Some(0.0);
        g.cell_mut(0, 0).roughness = Some(0.0);
        g.cell_mut(0, 0).step = Some(0.0);
        g.risk_and_traversability(&params);
        let c = g.cell(0, 0).unwrap();
        assert_eq!(c.risk, Some(0.0));
        assert_eq!(c.trav_g, Some(1.0));
    }

    #[test]
    fn hard_constraint_zeroes_traversability() {
        let params = GeometricRiskParams::default();
        let mut g = TraversabilityGrid::new(0.1, 1, 1).unwrap();
        g.cell_mut(0, 0).slope = Some(0.0);
        g.cell_mut(0, 0).roughness = Some(0.0);
        g.cell_mut(0, 0).step = Some(params.h_crit * 1.5);
        g.risk_and_traversability(&params);
        assert_eq!(g.cell(0, 0).unwrap().trav_g, Some(0.0));
    }

    #[test]
    fn cells_in_polygon_matches_exhaustive_oracle() {
        let mut g = TraversabilityGrid::new(0.1, 40, 40).unwrap();
        g.origin = (-2.0, -2.0);
        let state = RobotState::new(0.05, 0.05, 0.0, 0.3).unwrap();
        let bbox = BoundingBox::new(state, 1.0, 1.0, 0.5).unwrap();
        let poly = footprint_polygon(&state, &bbox);
        let got = g.cells_in_polygon(&poly);
        let mut want = Vec::new();
        for j in 0..g.height {
            for i in 0..g.width {
                let (x, y) = g.cell_center(i, j);
                if poly.contains(x, y) {
                    want.push((i, j));
                }
            }
        }
        assert_eq!(got, want);
    }

    #[test]
    fn axis_aligned_polygon_covers_100_cells() {
        // 1m x 1m polygon on a 0.1 m grid aligned so 10x10 centers fall inside.
        let mut g = TraversabilityGrid::new(0.1, 40, 40).unwrap();
        g.origin = (-2.0, -2.0);
        let state = RobotState::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let bbox = BoundingBox::new(state, 1.0, 1.0, 0.5).unwrap();
        let poly = footprint_polygon(&state, &bbox);
        assert_eq!(g.cells_in_polygon(&poly).len(), 100);
    }

    #[test]
    fn tiny_polygon_contains_no_center() {
        let g = TraversabilityGrid::new(0.1, 10, 10).unwrap();
        // Polygon of side 0.02 centered on a cell corner.
        let state = RobotState::new(0.1, 0.1, 0.0, 0.0).unwrap();
        let bbox = BoundingBox::new(state, 0.02, 0.02, 0.5).unwrap();
        let poly = footprint_polygon(&state, &bbox);
        assert!(g.cells_in_polygon(&poly).is_empty());
    }

    #[test]
    fn avg_traversability_mean_and_absent() {
        let mut g = TraversabilityGrid::new(0.1, 10, 10).unwrap();
        g.cell_mut(2, 2).trav_g = Some(1.0);
        g.cell_mut(3, 2).trav_g = Some(0.5);
        let state = RobotState::new(0.3, 0.25, 0.0, 0.0).unwrap();
        let bbox = BoundingBox::new(state, 0.25, 0.12, 0.5).unwrap();
        let poly = footprint_polygon(&state, &bbox);
        let avg = g.avg_geometric_traversability(&poly).unwrap();
        assert!((avg - 0.75).abs() < 1e-12);

        let far = RobotState::new(0.85, 0.85, 0.0, 0.0).unwrap();
        let far_poly = footprint_polygon(&far, &BoundingBox::new(far, 0.1, 0.1, 0.5).unwrap());
        assert!(g.avg_geometric_traversability(&far_poly).is_none());
    }

    #[test]
    fn risk_monotone_in_each_feature() {
        let params = GeometricRiskParams::default();
        let eval = |s: f64, r: f64, h: f64| {
            let mut g = TraversabilityGrid::new(0.1, 1, 1).unwrap();
            g.cell_mut(0, 0).slope = Some(s);
            g.cell_mut(0, 0).roughness = Some(r);
            g.cell_mut(0, 0).step = Some(h);
            g.risk_and_traversability(&params);
            g.cell(0, 0).unwrap().risk.unwrap()
        };
        let base = eval(0.1, 0.02, 0.05);
        assert!(eval(0.2, 0.02, 0.05) >= base);
        assert!(eval(0.1, 0.04, 0.05) >= base);
        assert!(eval(0.1, 0.02, 0.10) >= base);
    }

    #[test]
    fn csv_and_pgm_export() {
        let mut g = TraversabilityGrid::new(0.1, 2, 2).unwrap();
        g.cell_mut(0, 0).elevation = Some(0.1);
        g.cell_mut(0, 0).trav_g = Some(1.0);
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("i,j,x,y,elevation,slope,roughness,step,risk,trav_g\n"));
        assert!(text.contains("0,0,0.050000,0.050000,0.100000,,,,,1.000000"));
        let mut pgm = Vec::new();
        g.write_pgm(&mut pgm).unwrap();
        let (w, h, data) = crate::io::read_pgm(&mut pgm.as_slice()).unwrap();
        assert_eq!((w, h), (2, 2));
        assert_eq!(data[0], 255);
        assert_eq!(data[1], 0);
    }
}
