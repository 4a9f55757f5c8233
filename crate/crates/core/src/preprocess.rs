//! Cloud cleaning: statistical outlier removal, band filtering, index
//! removal and voxel-grid downsampling.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};
use crate::kdtree::KdTree;

/// Statistical outlier removal.
///
/// For each point the mean distance to its k nearest neighbors (excluding
/// itself) is computed; points whose mean distance exceeds
/// `mean + alpha * stddev` of that distribution are dropped. The standard
/// deviation is the population one, so the rule is well defined even for
/// n = k + 1. Relative order is preserved.
///
/// Returns the kept cloud and the number of removed points.
pub fn statistical_outlier_removal(
    cloud: &PointCloud,
    k: usize,
    alpha: f64,
) -> Result<(PointCloud, usize)> {
    assert!(k >= 1, "k must be at least 1");
    assert!(alpha > 0.0, "alpha must be positive");
    let n = cloud.len();
    if n <= k {
        return Err(Error::TooFewPoints {
            needed: k,
            actual: n,
        });
    }

    let tree = KdTree::build(cloud)?;
    let mean_dists: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let neighbors = tree.nearest(cloud.points[i], k + 1);
            // Drop the query point itself; when it is crowded out of the
            // result by zero-distance duplicates, drop the farthest instead.
            let mut sum = 0.0;
            let mut count = 0usize;
            for nb in &neighbors {
                if nb.index == i {
                    continue;
                }
                if count == k {
                    break;
                }
                sum += nb.dist_sq.sqrt();
                count += 1;
            }
            debug_assert_eq!(count, k);
            sum / count as f64
        })
        .collect();

    let mean = mean_dists.iter().sum::<f64>() / n as f64;
    let var = mean_dists
        .iter()
        .map(|d| (d - mean) * (d - mean))
        .sum::<f64>()
        / n as f64;
    let threshold = mean + alpha * var.sqrt();

    let mut kept = Vec::with_capacity(n);
    for (i, p) in cloud.points.iter().enumerate() {
        if mean_dists[i] <= threshold {
            kept.push(*p);
        }
    }
    let removed = n - kept.len();
    let mut out = PointCloud::new(kept);
    out.frame_id = cloud.frame_id.clone();
    Ok((out, removed))
}

/// Keeps points whose projection onto `axis` lies in `[lo, hi]`.
/// Order is preserved; the result may be empty.
pub fn depth_band_filter(cloud: &PointCloud, axis: Point3, lo: f64, hi: f64) -> PointCloud {
    assert!(lo < hi, "band must satisfy lo < hi");
    let mut out = PointCloud::new(
        cloud
            .iter()
            .filter(|p| {
                let t = p.dot(axis);
                t >= lo && t <= hi
            })
            .copied()
            .collect(),
    );
    out.frame_id = cloud.frame_id.clone();
    out
}

/// Removes the points at `indices` (the complement subsequence, in order).
pub fn remove_indices(cloud: &PointCloud, indices: &[usize]) -> Result<PointCloud> {
    let n = cloud.len();
    let mut drop = vec![false; n];
    for &i in indices {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, len: n });
        }
        drop[i] = true;
    }
    let mut out = PointCloud::new(
        cloud
            .iter()
            .enumerate()
            .filter(|(i, _)| !drop[*i])
            .map(|(_, p)| *p)
            .collect(),
    );
    out.frame_id = cloud.frame_id.clone();
    Ok(out)
}

/// Voxel-grid downsampling: space is cut into cubes of side `voxel`
/// anchored at the world origin, and each occupied cell is replaced by the
/// centroid of its points. Output is ordered by cell (x, then y, then z),
/// so the result is deterministic and independent of input order.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> PointCloud {
    assert!(voxel > 0.0, "voxel size must be positive");
    let mut cells: BTreeMap<(i64, i64, i64), (Point3, u32)> = BTreeMap::new();
    for p in cloud.iter() {
        let key = (
            (p.x / voxel).floor() as i64,
            (p.y / voxel).floor() as i64,
            (p.z / voxel).floor() as i64,
        );
        let entry = cells.entry(key).or_insert((Point3::ORIGIN, 0));
        entry.0 = entry.0 + *p;
        entry.1 += 1;
    }
    let mut out = PointCloud::new(
        cells
            .into_values()
            .map(|(sum, count)| sum * (1.0 / count as f64))
            .collect(),
    );
    out.frame_id = cloud.frame_id.clone();
    out
}
