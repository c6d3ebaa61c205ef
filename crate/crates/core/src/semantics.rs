//! Terrain-class semantics: the traversability decay function and projection
//! of class/slope images onto point clouds.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    pixel_index, project_point_to_image, transform_point, CameraIntrinsics, LabeledPoint, Point3,
    RigidTransform,
};

/// The four terrain traversability levels, least to most traversable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TerrainClass {
    Untraversable = 0,
    Undesirable = 1,
    Rough = 2,
    Optimal = 3,
}

impl TerrainClass {
    pub fn from_index(idx: u8) -> Result<Self> {
        match idx {
            0 => Ok(Self::Untraversable),
            1 => Ok(Self::Undesirable),
            2 => Ok(Self::Rough),
            3 => Ok(Self::Optimal),
            other => Err(Error::InvalidParameter(format!("terrain class index {other} out of range"))),
        }
    }
}

/// Per-class traversability ceilings (alpha).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AlphaTable {
    pub untraversable: f64,
    pub undesirable: f64,
    pub rough: f64,
    pub optimal: f64,
}

impl Default for AlphaTable {
    fn default() -> Self {
        Self { untraversable: 0.0, undesirable: 0.25, rough: 0.6, optimal: 1.0 }
    }
}

impl AlphaTable {
    pub fn validate(&self) -> Result<()> {
        if self.untraversable != 0.0 {
            return Err(Error::InvalidParameter("alpha(Untraversable) must be 0".into()));
        }
        if !(self.untraversable < self.undesirable
            && self.undesirable < self.rough
            && self.rough < self.optimal)
        {
            return Err(Error::InvalidParameter("alpha must be strictly increasing".into()));
        }
        if self.optimal > 1.0 {
            return Err(Error::InvalidParameter("alpha(Optimal) must be <= 1".into()));
        }
        Ok(())
    }

    pub fn alpha(&self, class: TerrainClass) -> f64 {
        match class {
            TerrainClass::Untraversable => self.untraversable,
            TerrainClass::Undesirable => self.undesirable,
            TerrainClass::Rough => self.rough,
            TerrainClass::Optimal => self.optimal,
        }
    }
}

/// Traversability decay: alpha * exp(-theta / alpha), with the alpha = 0
/// limit defined as 0. Theta is clamped to [0, pi/2].
pub fn traversability_decay(alpha: f64, theta: f64) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    let theta = theta.clamp(0.0, std::f64::consts::FRAC_PI_2);
    alpha * (-theta / alpha).exp()
}

/// Per-pixel terrain classes paired with a camera.
#[derive(Debug, Clone)]
pub struct LabelImage {
    pub width: u32,
    pub height: u32,
    data: Vec<TerrainClass>,
}

impl LabelImage {
    pub fn new(width: u32, height: u32, data: Vec<TerrainClass>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::Config("label image size mismatch".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, class: TerrainClass) -> Self {
        Self { width, height, data: vec![class; width as usize * height as usize] }
    }

    pub fn at(&self, u: u32, v: u32) -> TerrainClass {
        self.data[v as usize * self.width as usize + u as usize]
    }

    /// 8-bit PGM with class indices 0-3.
    pub fn write_pgm<W: Write>(&self, w: &mut W) -> Result<()> {
        let bytes: Vec<u8> = self.data.iter().map(|c| *c as u8).collect();
        crate::io::write_pgm(w, self.width, self.height, &bytes)
    }

    pub fn read_pgm<R: Read>(r: &mut R) -> Result<Self> {
        let (width, height, bytes) = crate::io::read_pgm(r)?;
        let data = bytes.into_iter().map(TerrainClass::from_index).collect::<Result<Vec<_>>>()?;
        Ok(Self { width, height, data })
    }
}

/// Per-pixel slope in radians, stored as an SLPF float grid.
#[derive(Debug, Clone)]
pub struct SlopeImage {
    pub width: u32,
    pub height: u32,
    data: Vec<f32>,
}

impl SlopeImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        if data.len() != (width as usize) * (height as usize) {
            return Err(Error::Config("slope image size mismatch".into()));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, slope: f32) -> Self {
        Self { width, height, data: vec![slope; width as usize * height as usize] }
    }

    pub fn at(&self, u: u32, v: u32) -> f64 {
        self.data[v as usize * self.width as usize + u as usize] as f64
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        crate::io::write_float_grid(w, self.width, self.height, &self.data)
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let (width, height, data) = crate::io::read_float_grid(r)?;
        Ok(Self { width, height, data })
    }
}

/// Labels a sensor-frame cloud: each in-view point gets the decay score of
/// the class and slope at its pixel and is transformed to the world frame;
/// out-of-view points are dropped.
#[allow(clippy::too_many_arguments)]
pub fn label_point_cloud(
    cloud: &[Point3],
    labels: &LabelImage,
    slopes: &SlopeImage,
    alphas: &AlphaTable,
    cam_extrinsics: &RigidTransform,
    intr: &CameraIntrinsics,
    world_from_sensor: &RigidTransform,
) -> Result<Vec<LabeledPoint>> {
    if labels.width != slopes.width || labels.height != slopes.height {
        return Err(Error::Config("label and slope image dimensions differ".into()));
    }
    if labels.width != intr.width || labels.height != intr.height {
        return Err(Error::Config("label image does not match camera intrinsics".into()));
    }
    let mut out = Vec::with_capacity(cloud.len());
    for p in cloud {
        let Some((u, v)) = project_point_to_image(p, cam_extrinsics, intr) else { continue };
        let Some((ui, vi)) = pixel_index(u, v, intr.width, intr.height) else { continue };
        let alpha = alphas.alpha(labels.at(ui, vi));
        let score = traversability_decay(alpha, slopes.at(ui, vi));
        out.push(LabeledPoint {
            position: transform_point(p, world_from_sensor),
            traversability: score,
        });
    }
    Ok(out)
}
