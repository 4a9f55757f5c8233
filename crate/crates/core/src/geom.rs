//! Points, clouds and axis-aligned boxes — the currency of the pipeline.
//!
//! All coordinates are meters in a camera-centered right-handed frame:
//! +z along the optical axis away from the camera, +x right, +y down in
//! image space.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 3D point (or vector) with finite coordinates, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Creates a point. Panics if any coordinate is NaN or infinite;
    /// parsers should go through [`Point3::try_new`] instead.
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        assert!(
            x.is_finite() && y.is_finite() && z.is_finite(),
            "non-finite coordinate ({x}, {y}, {z})"
        );
        Point3 { x, y, z }
    }

    /// Checked constructor for untrusted input; `None` on NaN/infinity.
    pub fn try_new(x: f64, y: f64, z: f64) -> Option<Self> {
        if x.is_finite() && y.is_finite() && z.is_finite() {
            Some(Point3 { x, y, z })
        } else {
            None
        }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Point3) -> Point3 {
        Point3 {
            x: self.y * other.z - self.z * other.y,
            y: self.z * other.x - self.x * other.z,
            z: self.x * other.y - self.y * other.x,
        }
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    /// Unit vector in the same direction; `None` for the zero vector.
    pub fn normalized(self) -> Option<Point3> {
        let n = self.norm();
        if n > 0.0 {
            Some(self * (1.0 / n))
        } else {
            None
        }
    }

    pub fn scale(self, s: f64) -> Point3 {
        Point3 {
            x: self.x * s,
            y: self.y * s,
            z: self.z * s,
        }
    }

    pub(crate) fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub(crate) fn from_vector(v: Vector3<f64>) -> Point3 {
        Point3 {
            x: v.x,
            y: v.y,
            z: v.z,
        }
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, rhs: Point3) -> Point3 {
        Point3 {
            x: self.x + rhs.x,
            y: self.y + rhs.y,
            z: self.z + rhs.z,
        }
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, rhs: Point3) -> Point3 {
        Point3 {
            x: self.x - rhs.x,
            y: self.y - rhs.y,
            z: self.z - rhs.z,
        }
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        self.scale(s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3 {
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

/// An ordered list of 3D points, optionally tagged with a source label.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub frame_id: Option<String>,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Self {
        PointCloud {
            points,
            frame_id: None,
        }
    }

    pub fn with_frame_id(mut self, id: impl Into<String>) -> Self {
        self.frame_id = Some(id.into());
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point3> {
        self.points.iter()
    }

    /// Componentwise min/max over all points (a closed box).
    pub fn bounding_box(&self) -> Result<Aabb> {
        let first = *self.points.first().ok_or(Error::EmptyCloud)?;
        let mut min = first;
        let mut max = first;
        for p in &self.points[1..] {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            min.z = min.z.min(p.z);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
            max.z = max.z.max(p.z);
        }
        Ok(Aabb { min, max })
    }

    /// Direction of largest spread: the unit eigenvector of the covariance
    /// matrix with the largest eigenvalue. The sign is fixed so that the
    /// largest-magnitude component is positive. When the top two eigenvalues
    /// are within a 1e-9 relative gap the direction is ambiguous and the
    /// longest bounding-box extent axis is returned instead.
    pub fn principal_axis(&self) -> Result<Point3> {
        if self.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let first = self.points[0];
        if self.points.iter().all(|p| *p == first) {
            return Err(Error::DegenerateCloud(
                "all points coincident; no principal axis".into(),
            ));
        }

        let n = self.len() as f64;
        let mut mean = Vector3::zeros();
        for p in &self.points {
            mean += p.to_vector();
        }
        mean /= n;

        let mut cov = Matrix3::zeros();
        for p in &self.points {
            let d = p.to_vector() - mean;
            cov += d * d.transpose();
        }
        cov /= n;

        let eigen = cov.symmetric_eigen();
        let mut order: Vec<usize> = (0..3).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[b]
                .partial_cmp(&eigen.eigenvalues[a])
                .unwrap()
        });
        let largest = eigen.eigenvalues[order[0]];
        let second = eigen.eigenvalues[order[1]];

        let axis = if largest <= 0.0 || (largest - second) / largest < 1e-9 {
            // Ambiguous spread; fall back to the widest box extent.
            let bb = self.bounding_box()?;
            let ext = bb.max - bb.min;
            if ext.x >= ext.y && ext.x >= ext.z {
                Vector3::x()
            } else if ext.y >= ext.z {
                Vector3::y()
            } else {
                Vector3::z()
            }
        } else {
            eigen.eigenvectors.column(order[0]).normalize()
        };

        let mut axis = Point3::from_vector(axis);
        let (ax, ay, az) = (axis.x.abs(), axis.y.abs(), axis.z.abs());
        let dominant = if ax >= ay && ax >= az {
            axis.x
        } else if ay >= az {
            axis.y
        } else {
            axis.z
        };
        if dominant < 0.0 {
            axis = -axis;
        }
        Ok(axis)
    }
}

impl FromIterator<Point3> for PointCloud {
    fn from_iter<T: IntoIterator<Item = Point3>>(iter: T) -> Self {
        PointCloud::new(iter.into_iter().collect())
    }
}

/// Axis-aligned bounding box, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn contains(&self, p: Point3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn extent(&self) -> Point3 {
        self.max - self.min
    }
}
