//! RANSAC plane fitting for bed/background removal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

/// A plane {p : n . p = d} with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    pub normal: Point3,
    pub offset: f64,
}

impl Plane {
    /// Plane through three points, `None` if they are (nearly) collinear.
    pub fn from_points(a: Point3, b: Point3, c: Point3) -> Option<Plane> {
        let normal = (b - a).cross(c - a).normalized()?;
        // Canonical sign so the fit is reproducible regardless of sample order.
        let (nx, ny, nz) = (normal.x.abs(), normal.y.abs(), normal.z.abs());
        let dominant = if nx >= ny && nx >= nz {
            normal.x
        } else if ny >= nz {
            normal.y
        } else {
            normal.z
        };
        let normal = if dominant < 0.0 { -normal } else { normal };
        Some(Plane {
            normal,
            offset: normal.dot(a),
        })
    }

    pub fn distance(&self, p: Point3) -> f64 {
        (self.normal.dot(p) - self.offset).abs()
    }

    /// Reflects a point through the plane.
    pub fn mirror(&self, p: Point3) -> Point3 {
        let d = self.normal.dot(p) - self.offset;
        p - self.normal * (2.0 * d)
    }
}

/// Least-squares plane through a subset of points: centroid plus the
/// covariance eigenvector of smallest eigenvalue. Deterministic, no
/// sampling. `None` when the subset is degenerate.
pub fn fit_plane_least_squares(cloud: &PointCloud, indices: &[usize]) -> Option<Plane> {
    if indices.len() < 3 {
        return None;
    }
    let mut centroid = nalgebra::Vector3::zeros();
    for &i in indices {
        centroid += cloud.points[i].to_vector();
    }
    centroid /= indices.len() as f64;

    let mut cov = nalgebra::Matrix3::zeros();
    for &i in indices {
        let d = cloud.points[i].to_vector() - centroid;
        cov += d * d.transpose();
    }
    let eigen = cov.symmetric_eigen();
    let mut smallest = 0;
    for k in 1..3 {
        if eigen.eigenvalues[k] < eigen.eigenvalues[smallest] {
            smallest = k;
        }
    }
    let n = Point3::from_vector(eigen.eigenvectors.column(smallest).normalize());
    let (nx, ny, nz) = (n.x.abs(), n.y.abs(), n.z.abs());
    let dominant = if nx >= ny && nx >= nz {
        n.x
    } else if ny >= nz {
        n.y
    } else {
        n.z
    };
    let n = if dominant < 0.0 { -n } else { n };
    Some(Plane {
        normal: n,
        offset: n.dot(Point3::from_vector(centroid)),
    })
}

/// True when all points lie on one line within a relative tolerance.
fn all_collinear(points: &[Point3]) -> bool {
    let first = points[0];
    let Some((_, dir)) = points
        .iter()
        .map(|p| (*p - first).norm_squared())
        .zip(points.iter().map(|p| *p - first))
        .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
    else {
        return true;
    };
    let Some(dir) = dir.normalized() else {
        return true; // all coincident
    };
    let scale = points
        .iter()
        .map(|p| (*p - first).norm())
        .fold(0.0f64, f64::max);
    let tol = scale * 1e-12;
    points.iter().all(|p| {
        let v = *p - first;
        (v - dir * v.dot(dir)).norm() <= tol
    })
}

/// Fits the dominant plane by seeded random 3-point consensus.
///
/// Returns the plane maximizing inliers within `dist_thresh` perpendicular
/// distance (ties broken by earliest iteration) and the sorted inlier
/// indices. Bit-reproducible for a fixed seed.
pub fn fit_plane_ransac(
    cloud: &PointCloud,
    dist_thresh: f64,
    iterations: usize,
    seed: u64,
) -> Result<(Plane, Vec<usize>)> {
    assert!(dist_thresh > 0.0, "dist_thresh must be positive");
    assert!(iterations >= 1, "need at least one iteration");
    let n = cloud.len();
    if n < 3 || all_collinear(&cloud.points) {
        return Err(Error::DegenerateCloud(
            "plane fit needs 3 non-collinear points".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Plane, usize)> = None;
    for _ in 0..iterations {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let k = rng.gen_range(0..n);
        if i == j || j == k || i == k {
            continue;
        }
        let Some(plane) = Plane::from_points(cloud.points[i], cloud.points[j], cloud.points[k])
        else {
            continue;
        };
        let count = cloud
            .iter()
            .filter(|p| plane.distance(**p) <= dist_thresh)
            .count();
        if best.map(|(_, c)| count > c).unwrap_or(true) {
            best = Some((plane, count));
        }
    }

    let (plane, _) = best.ok_or_else(|| {
        Error::DegenerateCloud("no valid plane sample drawn; cloud may be degenerate".into())
    })?;
    let inliers: Vec<usize> = cloud
        .iter()
        .enumerate()
        .filter(|(_, p)| plane.distance(**p) <= dist_thresh)
        .map(|(i, _)| i)
        .collect();
    Ok((plane, inliers))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn recovers_exact_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut points = Vec::new();
        for _ in 0..100 {
            points.push(Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                0.5,
            ));
        }
        for _ in 0..10 {
            points.push(Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(1.0..2.0),
            ));
        }
        let cloud = PointCloud::new(points);
        let (plane, inliers) = fit_plane_ransac(&cloud, 1e-6, 200, 0).unwrap();
        assert!(inliers.len() == 100, "got {} inliers", inliers.len());
        assert!((plane.normal.z.abs() - 1.0).abs() < 1e-6);
        assert!((plane.offset.abs() - 0.5).abs() < 1e-6);
        assert!(inliers.windows(2).all(|w| w[0] < w[1]), "indices sorted");
    }

    #[test]
    fn collinear_cloud_is_degenerate() {
        let cloud: PointCloud = (0..50)
            .map(|i| Point3::new(i as f64 * 0.1, 2.0 * i as f64 * 0.1, 0.0))
            .collect();
        assert!(matches!(
            fit_plane_ransac(&cloud, 0.01, 100, 0),
            Err(Error::DegenerateCloud(_))
        ));
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cloud: PointCloud = (0..500)
            .map(|_| {
                Point3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-0.02..0.02),
                )
            })
            .collect();
        let (p1, in1) = fit_plane_ransac(&cloud, 0.015, 300, 42).unwrap();
        let (p2, in2) = fit_plane_ransac(&cloud, 0.015, 300, 42).unwrap();
        assert_eq!(p1.normal.x.to_bits(), p2.normal.x.to_bits());
        assert_eq!(p1.normal.y.to_bits(), p2.normal.y.to_bits());
        assert_eq!(p1.normal.z.to_bits(), p2.normal.z.to_bits());
        assert_eq!(p1.offset.to_bits(), p2.offset.to_bits());
        assert_eq!(in1, in2);
    }

    #[test]
    fn captures_noisy_bed_plane() {
        // bed at z = 0.8 with 5 mm gaussian-ish noise plus a body blob above
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut points = Vec::new();
        let mut bed = 0usize;
        for _ in 0..2000 {
            let noise: f64 = rng.gen_range(-0.005..0.005) + rng.gen_range(-0.005..0.005);
            points.push(Point3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                0.8 + noise / 2.0,
            ));
            bed += 1;
        }
        for _ in 0..400 {
            points.push(Point3::new(
                rng.gen_range(-0.2..0.2),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(0.5..0.7),
            ));
        }
        let cloud = PointCloud::new(points);
        let (_, inliers) = fit_plane_ransac(&cloud, 0.015, 500, 0).unwrap();
        let bed_captured = inliers.iter().filter(|&&i| i < bed).count();
        assert!(
            bed_captured as f64 >= 0.99 * bed as f64,
            "captured {bed_captured}/{bed}"
        );
    }

    #[test]
    fn mirror_reflects_through_plane() {
        let plane = Plane {
            normal: Point3::new(0.0, 0.0, 1.0),
            offset: 2.0,
        };
        let p = Point3::new(0.3, -0.1, 1.5);
        let m = plane.mirror(p);
        assert!((m.z - 2.5).abs() < 1e-12);
        assert!((m.x - p.x).abs() < 1e-12 && (m.y - p.y).abs() < 1e-12);
        let back = plane.mirror(m);
        assert!((back - p).norm() < 1e-12);
    }
}
