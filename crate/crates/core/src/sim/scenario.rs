//! Scenario worlds: a piecewise-constant heightfield with per-cell terrain
//! labels, solid boxes for walls and clutter, and a ceiling. Five canned
//! layouts cover the behaviors a mission must reproduce.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, RigidTransform, RobotState};
use crate::io::{read_float_grid, write_float_grid};
use crate::semantics::{LabelImage, TerrainClass};

/// Axis-aligned solid body with the terrain class of its top face.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
    pub top_class: TerrainClass,
}

impl Aabb {
    pub fn new(min: Point3, max: Point3, top_class: TerrainClass) -> Result<Self> {
        if min.x >= max.x || min.y >= max.y || min.z >= max.z {
            return Err(Error::InvalidParameter("degenerate box".into()));
        }
        Ok(Self { min, max, top_class })
    }

    pub fn contains(&self, p: &Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Open,
    Corridor,
    Junction,
    Clutter,
    Stairs,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Open,
        ScenarioKind::Corridor,
        ScenarioKind::Junction,
        ScenarioKind::Clutter,
        ScenarioKind::Stairs,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ScenarioKind::Open => "open",
            ScenarioKind::Corridor => "corridor",
            ScenarioKind::Junction => "junction",
            ScenarioKind::Clutter => "clutter",
            ScenarioKind::Stairs => "stairs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(ScenarioKind::Open),
            "corridor" => Ok(ScenarioKind::Corridor),
            "junction" => Ok(ScenarioKind::Junction),
            "clutter" => Ok(ScenarioKind::Clutter),
            "stairs" => Ok(ScenarioKind::Stairs),
            other => Err(Error::InvalidParameter(format!("unknown scenario kind '{other}'"))),
        }
    }
}

/// A complete synthetic world plus mission boundary conditions.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    /// Heightfield cell size, meters.
    pub resolution: f64,
    /// World position of the corner of cell (0, 0).
    pub origin: (f64, f64),
    pub width: usize,
    pub height: usize,
    /// Row-major terrain elevation per cell, meters.
    pub heights: Vec<f32>,
    /// Row-major terrain class per cell.
    pub labels: Vec<TerrainClass>,
    pub boxes: Vec<Aabb>,
    /// Solid ceiling plane height, meters.
    pub ceiling: f64,
    pub ground_start: RobotState,
    /// Aerial dock position relative to the ground robot at hand-off.
    pub aerial_dock_offset: Point3,
    /// Aerial frame -> ground global frame.
    pub static_transform: RigidTransform,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    name: String,
    seed: u64,
    resolution: f64,
    origin: (f64, f64),
    ceiling: f64,
    heightmap: String,
    labels: String,
    boxes: Vec<Aabb>,
    ground_start: RobotState,
    aerial_dock_offset: Point3,
    static_transform: RigidTransform,
}

impl Scenario {
    pub fn cell_index(&self, x: f64, y: f64) -> Option<(usize, usize)> {
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

    pub fn height_cell(&self, i: usize, j: usize) -> f64 {
        self.heights[j * self.width + i] as f64
    }

    pub fn label_cell(&self, i: usize, j: usize) -> TerrainClass {
        self.labels[j * self.width + i]
    }

    /// Terrain slope at a cell from central differences of the heightfield.
    pub fn slope_cell(&self, i: usize, j: usize) -> f64 {
        let h = |i: usize, j: usize| self.height_cell(i, j);
        let (im, ip) = (i.saturating_sub(1), (i + 1).min(self.width - 1));
        let (jm, jp) = (j.saturating_sub(1), (j + 1).min(self.height - 1));
        let sx = (h(ip, j) - h(im, j)) / ((ip - im).max(1) as f64 * self.resolution);
        let sy = (h(i, jp) - h(i, jm)) / ((jp - jm).max(1) as f64 * self.resolution);
        (sx * sx + sy * sy).sqrt().atan()
    }

    /// True when the point is inside terrain, a box, or above the ceiling.
    pub fn is_solid(&self, p: &Point3) -> bool {
        if p.z >= self.ceiling {
            return true;
        }
        if self.boxes.iter().any(|b| b.contains(p)) {
            return true;
        }
        match self.cell_index(p.x, p.y) {
            Some((i, j)) => p.z <= self.height_cell(i, j),
            None => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.heights.len() != self.width * self.height
            || self.labels.len() != self.width * self.height
        {
            return Err(Error::Config("grid dimensions disagree with data".into()));
        }
        if self.resolution <= 0.0 || self.ceiling <= 0.0 {
            return Err(Error::Config("resolution and ceiling must be > 0".into()));
        }
        let start = self.ground_start.position();
        if self.is_solid(&start) {
            return Err(Error::Config("ground start pose is inside an obstacle".into()));
        }
        self.static_transform.validate(1e-6)?;
        Ok(())
    }

    /// Writes `manifest.json`, `heightmap.slpf`, and `labels.pgm` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut hm = fs::File::create(dir.join("heightmap.slpf"))?;
        write_float_grid(&mut hm, self.width as u32, self.height as u32, &self.heights)?;
        let mut lf = fs::File::create(dir.join("labels.pgm"))?;
        LabelImage::new(self.width as u32, self.height as u32, self.labels.clone())?
            .write_pgm(&mut lf)?;
        let manifest = Manifest {
            name: self.name.clone(),
            seed: self.seed,
            resolution: self.resolution,
            origin: self.origin,
            ceiling: self.ceiling,
            heightmap: "heightmap.slpf".into(),
            labels: "labels.pgm".into(),
            boxes: self.boxes.clone(),
            ground_start: self.ground_start,
            aerial_dock_offset: self.aerial_dock_offset,
            static_transform: self.static_transform,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }

    pub fn load(manifest_path: &Path) -> Result<Self> {
        let dir = manifest_path.parent().unwrap_or(Path::new("."));
        let manifest: Manifest = serde_json::from_str(&fs::read_to_string(manifest_path)?)?;
        let mut hm = fs::File::open(dir.join(&manifest.heightmap))?;
        let (w, h, heights) = read_float_grid(&mut hm)?;
        let mut lf = fs::File::open(dir.join(&manifest.labels))?;
        let labels_img = LabelImage::read_pgm(&mut lf)?;
        if labels_img.width != w || labels_img.height != h {
            return Err(Error::Config("label grid dimensions disagree with heightmap".into()));
        }
        let labels = (0..h)
            .flat_map(|v| (0..w).map(move |u| (u, v)))
            .map(|(u, v)| labels_img.at(u, v))
            .collect();
        let scenario = Scenario {
            name: manifest.name,
            seed: manifest.seed,
            resolution: manifest.resolution,
            origin: manifest.origin,
            width: w as usize,
            height: h as usize,
            heights,
            labels,
            boxes: manifest.boxes,
            ceiling: manifest.ceiling,
            ground_start: manifest.ground_start,
            aerial_dock_offset: manifest.aerial_dock_offset,
            static_transform: manifest.static_transform,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn build(kind: ScenarioKind, seed: u64) -> Scenario {
        match kind {
            ScenarioKind::Open => open_room(seed),
            ScenarioKind::Corridor => corridor(seed),
            ScenarioKind::Junction => junction(seed),
            ScenarioKind::Clutter => clutter_block(seed),
            ScenarioKind::Stairs => stairs(seed),
        }
    }
}

const RES: f64 = 0.05;
const WALL: f64 = 0.2;

struct Builder {
    scenario: Scenario,
}

impl Builder {
    /// Flat-floored world spanning [0, ext_x] x [0, ext_y] with perimeter
    /// walls up to the ceiling.
    fn room(name: &str, seed: u64, ext_x: f64, ext_y: f64, ceiling: f64) -> Self {
        let width = (ext_x / RES).round() as usize;
        let height = (ext_y / RES).round() as usize;
        let n = width * height;
        let wall = |min: Point3, max: Point3| {
            Aabb::new(min, max, TerrainClass::Untraversable).unwrap()
        };
        let boxes = vec![
            wall(Point3::new(-WALL, -WALL, 0.0), Point3::new(ext_x + WALL, 0.0, ceiling)),
            wall(Point3::new(-WALL, ext_y, 0.0), Point3::new(ext_x + WALL, ext_y + WALL, ceiling)),
            wall(Point3::new(-WALL, 0.0, 0.0), Point3::new(0.0, ext_y, ceiling)),
            wall(Point3::new(ext_x, 0.0, 0.0), Point3::new(ext_x + WALL, ext_y, ceiling)),
        ];
        Builder {
            scenario: Scenario {
                name: name.into(),
                seed,
                resolution: RES,
                origin: (0.0, 0.0),
                width,
                height,
                heights: vec![0.0; n],
                labels: vec![TerrainClass::Optimal; n],
                boxes,
                ceiling,
                ground_start: RobotState::new(1.0, 1.0, 0.3, 0.0).unwrap(),
                aerial_dock_offset: Point3::new(0.0, 0.0, 0.5),
                static_transform: RigidTransform::identity(),
            },
        }
    }

    fn solid(mut self, min: Point3, max: Point3, top: TerrainClass) -> Self {
        self.scenario.boxes.push(Aabb::new(min, max, top).unwrap());
        self
    }

    fn label_rect(mut self, x0: f64, y0: f64, x1: f64, y1: f64, class: TerrainClass) -> Self {
        let s = &mut self.scenario;
        for j in 0..s.height {
            for i in 0..s.width {
                let cx = s.origin.0 + (i as f64 + 0.5) * RES;
                let cy = s.origin.1 + (j as f64 + 0.5) * RES;
                if cx >= x0 && cx < x1 && cy >= y0 && cy < y1 {
                    s.labels[j * s.width + i] = class;
                }
            }
        }
        self
    }

    fn start(mut self, x: f64, y: f64, psi: f64) -> Self {
        self.scenario.ground_start = RobotState::new(x, y, 0.3, psi).unwrap();
        self
    }

    fn done(self) -> Scenario {
        self.scenario.validate().expect("canned scenario is valid");
        self.scenario
    }
}

/// Fully enclosed flat room: everything reachable by the ground robot, so
/// the mission must finish with zero deployments.
pub fn open_room(seed: u64) -> Scenario {
    Builder::room("open", seed, 5.0, 5.0, 2.0).start(2.5, 2.5, 0.0).done()
}

/// Straight open corridor: the ground robot advances monotonically to the
/// far end and finishes alone.
pub fn corridor(seed: u64) -> Scenario {
    Builder::room("corridor", seed, 12.0, 2.0, 2.0).start(1.0, 1.0, 0.0).done()
}

/// T-junction: a stem meeting a cross bar; both arms are drivable, so the
/// ground robot explores everything without deploying.
pub fn junction(seed: u64) -> Scenario {
    Builder::room("junction", seed, 10.0, 8.0, 2.0)
        // Everything except the stem (y in [3,5], x < 8) and the bar
        // (x in [8,10]) is filled solid.
        .solid(
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(8.0, 3.0, 2.0),
            TerrainClass::Untraversable,
        )
        .solid(
            Point3::new(0.0, 5.0, 0.0),
            Point3::new(8.0, 8.0, 2.0),
            TerrainClass::Untraversable,
        )
        .start(1.0, 4.0, 0.0)
        .done()
}

/// Corridor blocked by a rubble field (step height above critical) in front
/// of a tall barrier with open space behind: the ground robot's candidate
/// paths all cross zero-traversability rubble, forcing a deployment; the
/// aerial robot clears the barrier through the gap under the ceiling.
pub fn clutter_block(seed: u64) -> Scenario {
    let mut b = Builder::room("clutter", seed, 10.0, 3.0, 3.0)
        .label_rect(4.0, 0.0, 5.6, 3.0, TerrainClass::Untraversable)
        .start(1.0, 1.5, 0.0);
    // Rubble: a staggered field of 0.3 m blocks spanning the corridor width.
    let mut fy = 0.0;
    let mut row = 0;
    while fy < 3.0 {
        let x0 = 4.0 + if row % 2 == 0 { 0.0 } else { 0.8 };
        b = b.solid(
            Point3::new(x0, fy, 0.0),
            Point3::new(x0 + 0.8, (fy + 0.45).min(3.0), 0.3),
            TerrainClass::Untraversable,
        );
        fy += 0.45;
        row += 1;
    }
    // Second rubble band so no footprint-wide gap exists.
    b = b.solid(
        Point3::new(4.8, 0.0, 0.0),
        Point3::new(5.6, 3.0, 0.3),
        TerrainClass::Untraversable,
    );
    // Barrier: full-width wall to 1.8 m, leaving a 1.2 m flight gap.
    b = b.solid(
        Point3::new(6.4, 0.0, 0.0),
        Point3::new(6.6, 3.0, 1.8),
        TerrainClass::Untraversable,
    );
    b.done()
}

/// Stairway to a raised platform: risers exceed the critical step height, so
/// geometric traversability on the steps is zero while the volume above the
/// platform keeps its gain — the stairs-vs-wall distinction.
pub fn stairs(seed: u64) -> Scenario {
    let mut b = Builder::room("stairs", seed, 9.0, 2.4, 3.2)
        .label_rect(4.0, 0.0, 9.0, 2.4, TerrainClass::Undesirable)
        .start(1.0, 1.2, 0.0);
    // Five 0.3 m risers, 0.5 m deep, then a platform at 1.5 m.
    for k in 0..5 {
        let x0 = 4.0 + 0.5 * k as f64;
        b = b.solid(
            Point3::new(x0, 0.0, 0.0),
            Point3::new(9.0, 2.4, 0.3 * (k + 1) as f64),
            TerrainClass::Undesirable,
        );
    }
    b.solid(
        Point3::new(6.5, 0.0, 0.0),
        Point3::new(9.0, 2.4, 1.5),
        TerrainClass::Undesirable,
    )
    .done()
}
