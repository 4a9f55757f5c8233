//! Independent oracles used by the test suites.
//!
//! Everything here recomputes results along a different algorithmic route
//! than the library (exhaustive face enumeration, Monte-Carlo membership
//! integration), so agreement is evidence rather than tautology. Nothing
//! in this crate is part of the shipping API.

use bodymetrics::{Point3, PointCloud};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform random cloud in a centered cube of the given half extent.
pub fn random_cloud(n: usize, half: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            Point3::new(
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
            )
        })
        .collect()
}

/// A supporting plane of the point set: every point lies on or behind it.
#[derive(Debug, Clone, Copy)]
pub struct SupportPlane {
    pub normal: Point3,
    pub offset: f64,
}

/// Enumerates supporting planes by brute force over all point triples
/// (the O(n^4) convex-hull construction: n^3 triples, each checked
/// against all n points).
///
/// Returned planes may repeat; membership testing is unaffected.
pub fn naive_hull_planes(points: &[Point3]) -> Vec<SupportPlane> {
    let n = points.len();
    assert!(n >= 4, "need at least 4 points");
    let diag = {
        let cloud = PointCloud::new(points.to_vec());
        cloud.bounding_box().unwrap().diagonal()
    };
    let eps = 1e-9 * diag;

    let mut planes = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let Some(normal) = (points[j] - points[i])
                    .cross(points[k] - points[i])
                    .normalized()
                else {
                    continue;
                };
                let offset = normal.dot(points[i]);
                let mut max_d = f64::NEG_INFINITY;
                let mut min_d = f64::INFINITY;
                for p in points {
                    let d = normal.dot(*p) - offset;
                    max_d = max_d.max(d);
                    min_d = min_d.min(d);
                }
                if max_d <= eps {
                    planes.push(SupportPlane { normal, offset });
                }
                if min_d >= -eps {
                    planes.push(SupportPlane {
                        normal: -normal,
                        offset: -offset,
                    });
                }
            }
        }
    }
    planes
}

/// Monte-Carlo volume of the region inside all supporting planes,
/// integrated over the cloud's bounding box.
///
/// Two exact shortcuts keep the integration fast without changing the
/// membership predicate: ball bounds around the centroid (inscribed
/// radius from the planes, circumscribed radius from the points) resolve
/// clear cases, and duplicate planes are collapsed with the rest sorted
/// most-often-violated first so outside samples exit early.
pub fn mc_hull_volume(
    points: &[Point3],
    planes: &[SupportPlane],
    samples: usize,
    seed: u64,
) -> f64 {
    let cloud = PointCloud::new(points.to_vec());
    let bb = cloud.bounding_box().unwrap();
    let ext = bb.extent();
    let box_volume = ext.x * ext.y * ext.z;

    let centroid = points
        .iter()
        .fold(Point3::ORIGIN, |acc, p| acc + *p)
        * (1.0 / points.len() as f64);
    let r_in = planes
        .iter()
        .map(|pl| pl.offset - pl.normal.dot(centroid))
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let r_out = points
        .iter()
        .map(|p| (*p - centroid).norm())
        .fold(0.0f64, f64::max);
    let (r_in_sq, r_out_sq) = (r_in * r_in, r_out * r_out);

    // near-identical planes constrain the same half-space
    let mut unique: Vec<SupportPlane> = Vec::with_capacity(planes.len());
    for pl in planes {
        let dup = unique.iter().any(|u| {
            u.normal.dot(pl.normal) > 1.0 - 1e-12 && (u.offset - pl.offset).abs() < 1e-12
        });
        if !dup {
            unique.push(*pl);
        }
    }

    let mut rng = SmallRng::seed_from_u64(seed);
    let draw = |rng: &mut SmallRng| {
        Point3::new(
            rng.gen_range(bb.min.x..=bb.max.x),
            rng.gen_range(bb.min.y..=bb.max.y),
            rng.gen_range(bb.min.z..=bb.max.z),
        )
    };

    // order planes by how often the shell samples violate them
    let pilot = (samples / 100).clamp(1, 20_000);
    let mut violations = vec![(0usize, 0usize); unique.len()];
    for _ in 0..pilot {
        let p = draw(&mut rng);
        for (i, pl) in unique.iter().enumerate() {
            if pl.normal.dot(p) > pl.offset {
                violations[i].0 += 1;
            }
        }
    }
    for (i, v) in violations.iter_mut().enumerate() {
        v.1 = i;
    }
    violations.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let ordered: Vec<SupportPlane> = violations.iter().map(|&(_, i)| unique[i]).collect();

    let mut rng = SmallRng::seed_from_u64(seed);
    let mut inside = 0usize;
    for _ in 0..samples {
        let p = draw(&mut rng);
        let d_sq = (p - centroid).norm_squared();
        if d_sq <= r_in_sq {
            inside += 1;
            continue;
        }
        if d_sq > r_out_sq {
            continue;
        }
        if ordered.iter().all(|pl| pl.normal.dot(p) <= pl.offset) {
            inside += 1;
        }
    }
    box_volume * inside as f64 / samples as f64
}

/// Monte-Carlo volume of an arbitrary membership predicate over a box.
pub fn mc_membership_volume(
    lo: Point3,
    hi: Point3,
    samples: usize,
    seed: u64,
    contains: impl Fn(Point3) -> bool,
) -> f64 {
    let ext = hi - lo;
    let box_volume = ext.x * ext.y * ext.z;
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut inside = 0usize;
    for _ in 0..samples {
        let p = Point3::new(
            rng.gen_range(lo.x..=hi.x),
            rng.gen_range(lo.y..=hi.y),
            rng.gen_range(lo.z..=hi.z),
        );
        if contains(p) {
            inside += 1;
        }
    }
    box_volume * inside as f64 / samples as f64
}
