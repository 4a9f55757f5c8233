//! Pinhole camera model: depth frames, label masks and back-projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

/// Pinhole intrinsics plus the scale that turns raw depth units into meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    /// Focal lengths in pixels.
    pub fx: f64,
    pub fy: f64,
    /// Principal point in pixels.
    pub cx: f64,
    pub cy: f64,
    /// Frame size in pixels.
    pub width: usize,
    pub height: usize,
    /// Meters per raw depth unit.
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if self.fx <= 0.0 || self.fy <= 0.0 || self.fx.is_nan() || self.fy.is_nan() {
            return Err(Error::InvalidIntrinsics(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidIntrinsics("zero frame dimension".into()));
        }
        if self.depth_scale <= 0.0 || self.depth_scale.is_nan() {
            return Err(Error::InvalidIntrinsics(format!(
                "depth_scale must be positive, got {}",
                self.depth_scale
            )));
        }
        if !(0.0..self.width as f64).contains(&self.cx)
            || !(0.0..self.height as f64).contains(&self.cy)
        {
            return Err(Error::InvalidIntrinsics(format!(
                "principal point ({}, {}) outside {}x{} frame",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }
}

/// Raw sensor frame: a row-major grid of non-negative depth samples.
/// A sample of 0 means "no return" and never a valid measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u16>,
    pub intrinsics: CameraIntrinsics,
}

impl DepthFrame {
    pub fn new(intrinsics: CameraIntrinsics, data: Vec<u16>) -> Result<Self> {
        intrinsics.validate()?;
        let frame = DepthFrame {
            width: intrinsics.width,
            height: intrinsics.height,
            data,
            intrinsics,
        };
        frame.validate()?;
        Ok(frame)
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.width * self.height;
        if self.data.len() != expected {
            return Err(Error::MalformedFrame {
                width: self.width,
                height: self.height,
                expected,
                actual: self.data.len(),
            });
        }
        if self.width != self.intrinsics.width || self.height != self.intrinsics.height {
            return Err(Error::DimensionMismatch(format!(
                "frame is {}x{} but intrinsics declare {}x{}",
                self.width, self.height, self.intrinsics.width, self.intrinsics.height
            )));
        }
        Ok(())
    }

    /// Lifts every pixel with in-band depth to a 3D point.
    ///
    /// A pixel (u, v) with raw depth d becomes (x, y, z) with
    /// z = d * depth_scale, x = (u - cx) * z / fx, y = (v - cy) * z / fy,
    /// provided z_min <= z <= z_max. Zero samples are holes and dropped.
    /// Output follows row-major scan order.
    pub fn to_cloud(&self, z_min: f64, z_max: f64) -> Result<PointCloud> {
        self.to_cloud_filtered(z_min, z_max, |_, _| true)
    }

    /// Like [`DepthFrame::to_cloud`] but only lifts pixels whose mask value
    /// equals `label`.
    pub fn to_cloud_masked(
        &self,
        mask: &LabelMask,
        label: u8,
        z_min: f64,
        z_max: f64,
    ) -> Result<PointCloud> {
        if mask.width != self.width || mask.height != self.height {
            return Err(Error::DimensionMismatch(format!(
                "mask is {}x{} but frame is {}x{}",
                mask.width, mask.height, self.width, self.height
            )));
        }
        mask.validate()?;
        self.to_cloud_filtered(z_min, z_max, |u, v| mask.labels[v * mask.width + u] == label)
    }

    fn to_cloud_filtered(
        &self,
        z_min: f64,
        z_max: f64,
        keep: impl Fn(usize, usize) -> bool,
    ) -> Result<PointCloud> {
        self.validate()?;
        assert!(
            z_min >= 0.0 && z_min < z_max,
            "depth band must satisfy 0 <= z_min < z_max"
        );
        let intr = &self.intrinsics;
        let mut points = Vec::new();
        for v in 0..self.height {
            for u in 0..self.width {
                let d = self.data[v * self.width + u];
                if d == 0 || !keep(u, v) {
                    continue;
                }
                let z = d as f64 * intr.depth_scale;
                if z < z_min || z > z_max {
                    continue;
                }
                let x = (u as f64 - intr.cx) * z / intr.fx;
                let y = (v as f64 - intr.cy) * z / intr.fy;
                points.push(Point3::new(x, y, z));
            }
        }
        Ok(PointCloud::new(points))
    }
}

/// Per-pixel segmentation labels produced externally; 0 is background.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        let mask = LabelMask {
            width,
            height,
            labels,
        };
        mask.validate()?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() != self.width * self.height {
            return Err(Error::DimensionMismatch(format!(
                "mask has {} labels for {}x{} pixels",
                self.labels.len(),
                self.width,
                self.height
            )));
        }
        Ok(())
    }
}
