//! Body estimators: slab-segmented volume, height, weight, and the
//! pipeline composing them with the cleaning stages.
//!
//! Volume is measured by partitioning the cloud into equal-width slabs
//! along the body's long axis, taking the convex hull of each slab and
//! summing the hull volumes. Slicing tracks shape changes a single
//! whole-body hull would bridge over, which is what makes the estimate
//! usable for non-convex poses.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, DepthFrame};
use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};
use crate::hull::{convex_hull_of_points, hull_volume};
use crate::preprocess::{depth_band_filter, statistical_outlier_removal, voxel_downsample};
use crate::ransac::{fit_plane_least_squares, fit_plane_ransac, Plane};

/// A cloud cut into consecutive intervals along an axis.
///
/// Boundaries are strictly ascending with `boundaries[0]` the minimum and
/// `boundaries[n]` the maximum projection. Slab `i` holds exactly the
/// points with `boundaries[i] <= p.axis < boundaries[i+1]`; the last slab
/// is closed on both ends. Point order is preserved within each slab.
#[derive(Debug, Clone)]
pub struct SlabPartition {
    pub axis: Point3,
    pub boundaries: Vec<f64>,
    pub slabs: Vec<PointCloud>,
}

/// Cuts the cloud into `n_slabs` equal-width intervals along `axis`.
///
/// A zero-extent cloud (all projections equal) collapses to a single slab
/// holding everything.
pub fn slab_partition(cloud: &PointCloud, axis: Point3, n_slabs: usize) -> Result<SlabPartition> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    assert!(n_slabs >= 1, "need at least one slab");
    debug_assert!((axis.norm() - 1.0).abs() < 1e-9, "axis must be unit length");

    let projections: Vec<f64> = cloud.iter().map(|p| p.dot(axis)).collect();
    let min = projections.iter().copied().fold(f64::INFINITY, f64::min);
    let max = projections.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let mut boundaries = Vec::with_capacity(n_slabs + 1);
    if max > min {
        boundaries.push(min);
        for i in 1..n_slabs {
            boundaries.push(min + (max - min) * (i as f64 / n_slabs as f64));
        }
        boundaries.push(max);
    }
    let strictly_ascending = boundaries.windows(2).all(|w| w[0] < w[1]);
    if !strictly_ascending || max <= min {
        // Degenerate extent: everything in one slab.
        boundaries = vec![min, if max > min { max } else { min }];
        if boundaries[1] <= boundaries[0] {
            boundaries[1] = boundaries[0];
        }
        let slabs = vec![cloud.clone()];
        return Ok(SlabPartition {
            axis,
            boundaries,
            slabs,
        });
    }

    let n = boundaries.len() - 1;
    let width = max - min;
    let mut slabs = vec![PointCloud::default(); n];
    for (p, &t) in cloud.iter().zip(projections.iter()) {
        let mut idx = (((t - min) / width) * n as f64).floor() as isize;
        idx = idx.clamp(0, n as isize - 1);
        let mut idx = idx as usize;
        // Float division and the stored boundaries can disagree at the
        // edges; nudge until the interval test itself holds.
        while idx > 0 && t < boundaries[idx] {
            idx -= 1;
        }
        while idx + 1 < n && t >= boundaries[idx + 1] {
            idx += 1;
        }
        slabs[idx].points.push(*p);
    }
    Ok(SlabPartition {
        axis,
        boundaries,
        slabs,
    })
}

/// Per-slab volumes and their sum.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VolumeReport {
    /// Sum of `slab_volumes` in m^3.
    pub total_volume: f64,
    pub slab_volumes: Vec<f64>,
    /// Slabs that contributed zero volume because they were too small or
    /// geometrically degenerate.
    pub skipped_slabs: usize,
    pub slab_count: usize,
}

/// Sums per-slab convex-hull volumes along `axis`.
///
/// Slabs with fewer than `min_slab_points` points, or whose points are
/// degenerate (coincident / collinear / coplanar), contribute zero volume
/// and are counted in `skipped_slabs`. Slab hulls are computed in parallel
/// but summed in slab order, so the total is reproducible.
pub fn segmented_volume(
    cloud: &PointCloud,
    axis: Point3,
    n_slabs: usize,
    min_slab_points: usize,
) -> Result<VolumeReport> {
    assert!(min_slab_points >= 4, "hull needs at least 4 points");
    let partition = slab_partition(cloud, axis, n_slabs)?;
    let volumes: Vec<Option<f64>> = partition
        .slabs
        .par_iter()
        .map(|slab| {
            if slab.len() < min_slab_points {
                return Ok(None);
            }
            match convex_hull_of_points(&slab.points) {
                Ok(mesh) => hull_volume(&mesh).map(Some),
                Err(Error::Degenerate(_)) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    let mut report = VolumeReport {
        total_volume: 0.0,
        slab_volumes: Vec::with_capacity(volumes.len()),
        skipped_slabs: 0,
        slab_count: volumes.len(),
    };
    for v in volumes {
        match v {
            Some(vol) => {
                report.total_volume += vol;
                report.slab_volumes.push(vol);
            }
            None => {
                report.skipped_slabs += 1;
                report.slab_volumes.push(0.0);
            }
        }
    }
    Ok(report)
}

/// Extent of the cloud along `axis` between the `trim` and `1 - trim`
/// nearest-rank quantiles of the projections. `trim = 0` is exactly
/// max minus min.
pub fn estimate_height(cloud: &PointCloud, axis: Point3, trim: f64) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    assert!(
        (0.0..0.5).contains(&trim),
        "trim must be in [0, 0.5), got {trim}"
    );
    let mut projections: Vec<f64> = cloud.iter().map(|p| p.dot(axis)).collect();
    projections.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = projections.len();
    let rank = |q: f64| -> usize {
        if q <= 0.0 {
            0
        } else {
            ((q * n as f64).ceil() as usize).clamp(1, n) - 1
        }
    };
    let lower = projections[rank(trim)];
    let upper = projections[rank(1.0 - trim)];
    Ok(upper - lower)
}

/// Physical extent of an image-space measurement, corrected for subject
/// distance: `pixels * depth / fy`. Invariant to distance for a fixed
/// physical extent by similar triangles.
pub fn estimate_height_image(
    bbox_px_height: f64,
    median_depth: f64,
    intr: &CameraIntrinsics,
) -> Result<f64> {
    if intr.fy <= 0.0 || !intr.fy.is_finite() {
        return Err(Error::InvalidIntrinsics(format!(
            "fy must be positive and finite, got {}",
            intr.fy
        )));
    }
    assert!(bbox_px_height > 0.0, "pixel height must be positive");
    assert!(median_depth > 0.0, "depth must be positive");
    Ok(bbox_px_height * median_depth / intr.fy)
}

/// Weight from volume under a uniform-density model.
pub fn estimate_weight(volume: f64, density: f64) -> Result<f64> {
    if density <= 0.0 || density.is_nan() {
        return Err(Error::NonPositiveDensity(density));
    }
    assert!(volume >= 0.0, "volume must be non-negative");
    Ok(volume * density)
}

/// Which axis the slabs and the height measurement run along.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum AxisMode {
    /// Principal component of the cleaned cloud.
    #[default]
    Pca,
    X,
    Y,
    Z,
}

/// Every knob of the estimation pipeline. Unknown JSON keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    /// Keep points whose optical-axis depth lies in [band_lo, band_hi] (m).
    pub band_lo: f64,
    pub band_hi: f64,
    /// Detect and remove the dominant plane (bed / floor).
    pub ransac: bool,
    /// RANSAC inlier distance (m).
    pub ransac_thresh: f64,
    pub ransac_iterations: usize,
    /// Seed for every randomized stage.
    pub seed: u64,
    /// Statistical outlier removal: neighbor count and std-dev multiplier.
    /// A neighbor count of 0 disables the stage.
    pub sor_k: usize,
    pub sor_alpha: f64,
    /// Reflect the cloud about the detected support plane to reconstruct
    /// the side a single depth view cannot see. Requires `ransac`.
    pub mirror: bool,
    /// Voxel edge length in meters; 0 disables downsampling.
    pub voxel: f64,
    pub axis: AxisMode,
    pub n_slabs: usize,
    pub min_slab_points: usize,
    /// Percentile trimmed from each end of the height projections.
    pub trim: f64,
    /// Uniform body density (kg/m^3) converting volume to weight.
    pub density: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            band_lo: -10.0,
            band_hi: 10.0,
            ransac: false,
            ransac_thresh: 0.01,
            ransac_iterations: 500,
            seed: 0,
            sor_k: 20,
            sor_alpha: 2.0,
            mirror: false,
            voxel: 0.0,
            axis: AxisMode::Pca,
            n_slabs: 50,
            min_slab_points: 10,
            trim: 0.0,
            density: 1000.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        fn bad(name: &'static str, message: String) -> Error {
            Error::ParameterOutOfRange { name, message }
        }
        if !self.band_lo.is_finite() {
            return Err(bad("band_lo", format!("must be finite, got {}", self.band_lo)));
        }
        if self.band_hi <= self.band_lo || self.band_hi.is_nan() {
            return Err(bad(
                "band_hi",
                format!("must exceed band_lo, got {} <= {}", self.band_hi, self.band_lo),
            ));
        }
        if self.ransac_thresh <= 0.0 || self.ransac_thresh.is_nan() {
            return Err(bad(
                "ransac_thresh",
                format!("must be positive, got {}", self.ransac_thresh),
            ));
        }
        if self.ransac_iterations == 0 {
            return Err(bad("ransac_iterations", "must be at least 1".into()));
        }
        if self.sor_alpha <= 0.0 || self.sor_alpha.is_nan() {
            return Err(bad(
                "sor_alpha",
                format!("must be positive, got {}", self.sor_alpha),
            ));
        }
        if self.mirror && !self.ransac {
            return Err(bad(
                "mirror",
                "mirroring needs the support plane; enable ransac".into(),
            ));
        }
        if self.voxel < 0.0 || !self.voxel.is_finite() {
            return Err(bad("voxel", format!("must be >= 0, got {}", self.voxel)));
        }
        if self.n_slabs == 0 {
            return Err(bad("n_slabs", "must be at least 1".into()));
        }
        if self.min_slab_points < 4 {
            return Err(bad(
                "min_slab_points",
                format!("must be at least 4, got {}", self.min_slab_points),
            ));
        }
        if !(0.0..0.5).contains(&self.trim) {
            return Err(bad(
                "trim",
                format!("must be in [0, 0.5), got {}", self.trim),
            ));
        }
        if self.density <= 0.0 || self.density.is_nan() {
            return Err(bad(
                "density",
                format!("must be positive, got {}", self.density),
            ));
        }
        Ok(())
    }
}

/// The pipeline's product: the three estimates plus their provenance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BodyEstimate {
    /// Total body volume in m^3.
    pub volume: f64,
    /// Extent along the body axis in m.
    pub height: f64,
    /// volume * density_used, in kg.
    pub weight: f64,
    pub density_used: f64,
    pub volume_report: VolumeReport,
    pub axis_used: Point3,
}

/// What one pipeline stage did to the cloud.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: &'static str,
    pub points_in: usize,
    pub points_out: usize,
    pub millis: f64,
}

/// A pipeline run: the estimate plus per-stage diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct PipelineRun {
    pub estimate: BodyEstimate,
    pub stages: Vec<StageRecord>,
}

/// Input accepted by the pipeline.
pub enum PipelineInput {
    Cloud(PointCloud),
    Frame(DepthFrame),
}

/// Runs the full estimation chain:
/// back-projection (frame input) -> depth band filter -> optional plane
/// removal -> optional mirror completion -> statistical outlier removal ->
/// optional voxel downsampling -> axis selection -> segmented volume ->
/// height -> weight.
///
/// Deterministic for a fixed input, config and seed. Errors are annotated
/// with the stage that raised them.
pub fn run_pipeline(input: PipelineInput, config: &PipelineConfig) -> Result<PipelineRun> {
    config.validate()?;
    let mut stages: Vec<StageRecord> = Vec::new();

    let record = |name: &'static str,
                      points_in: usize,
                      points_out: usize,
                      started: Instant,
                      stages: &mut Vec<StageRecord>| {
        stages.push(StageRecord {
            name,
            points_in,
            points_out,
            millis: started.elapsed().as_secs_f64() * 1e3,
        });
    };

    let mut cloud = match input {
        PipelineInput::Cloud(cloud) => cloud,
        PipelineInput::Frame(frame) => {
            let t = Instant::now();
            let pixels = frame.width * frame.height;
            let cloud = frame
                .to_cloud(0.0, f64::INFINITY)
                .map_err(|e| e.in_stage("backproject"))?;
            record("backproject", pixels, cloud.len(), t, &mut stages);
            cloud
        }
    };

    let ensure_nonempty = |cloud: &PointCloud, stage: &'static str| -> Result<()> {
        if cloud.is_empty() {
            Err(Error::EmptyCloud.in_stage(stage))
        } else {
            Ok(())
        }
    };
    ensure_nonempty(&cloud, "ingest")?;

    // Depth band along the optical axis.
    {
        let t = Instant::now();
        let before = cloud.len();
        cloud = depth_band_filter(
            &cloud,
            Point3::new(0.0, 0.0, 1.0),
            config.band_lo,
            config.band_hi,
        );
        record("band_filter", before, cloud.len(), t, &mut stages);
        ensure_nonempty(&cloud, "band_filter")?;
    }

    let mut support_plane = None;
    if config.ransac {
        let t = Instant::now();
        let before = cloud.len();
        let (plane, inliers) = fit_plane_ransac(
            &cloud,
            config.ransac_thresh,
            config.ransac_iterations,
            config.seed,
        )
        .map_err(|e| e.in_stage("ransac"))?;
        // The raw 3-point consensus plane is only accurate to the inlier
        // threshold; the mirror stage measures against it, so refit the
        // inliers by least squares (deterministic).
        let plane = fit_plane_least_squares(&cloud, &inliers).unwrap_or(plane);

        // Orient the plane so the subject (the non-inlier mass) sits on
        // the negative side, then drop the whole half-space from the
        // inlier margin on: the support surface, its noise tails, and
        // anything occluded behind it.
        let mut inlier_mask = vec![false; cloud.len()];
        for &i in &inliers {
            inlier_mask[i] = true;
        }
        let mut body_centroid = Point3::ORIGIN;
        let mut body_count = 0usize;
        for (i, p) in cloud.iter().enumerate() {
            if !inlier_mask[i] {
                body_centroid = body_centroid + *p;
                body_count += 1;
            }
        }
        let plane = if body_count > 0 {
            let c = body_centroid * (1.0 / body_count as f64);
            if plane.normal.dot(c) - plane.offset > 0.0 {
                Plane {
                    normal: -plane.normal,
                    offset: -plane.offset,
                }
            } else {
                plane
            }
        } else {
            plane
        };
        cloud.points.retain(|p| {
            plane.normal.dot(*p) - plane.offset < -config.ransac_thresh
        });
        support_plane = Some(plane);
        record("ransac", before, cloud.len(), t, &mut stages);
        ensure_nonempty(&cloud, "ransac")?;
    }

    // Mirroring runs before outlier removal: the reflected twins restore
    // the neighborhoods of points near the support plane, which would
    // otherwise read as sparse fringes and be trimmed away.
    if config.mirror {
        let t = Instant::now();
        let before = cloud.len();
        let plane = support_plane.expect("validated: mirror requires ransac");
        let mirrored: Vec<Point3> = cloud.iter().map(|p| plane.mirror(*p)).collect();
        cloud.points.extend(mirrored);
        record("mirror", before, cloud.len(), t, &mut stages);
    }

    if config.sor_k > 0 {
        let t = Instant::now();
        let before = cloud.len();
        let (kept, _) = statistical_outlier_removal(&cloud, config.sor_k, config.sor_alpha)
            .map_err(|e| e.in_stage("sor"))?;
        cloud = kept;
        record("sor", before, cloud.len(), t, &mut stages);
        ensure_nonempty(&cloud, "sor")?;
    }

    if config.voxel > 0.0 {
        let t = Instant::now();
        let before = cloud.len();
        cloud = voxel_downsample(&cloud, config.voxel);
        record("voxel", before, cloud.len(), t, &mut stages);
    }

    let axis = {
        let t = Instant::now();
        let n = cloud.len();
        let axis = match config.axis {
            AxisMode::Pca => cloud.principal_axis().map_err(|e| e.in_stage("axis"))?,
            AxisMode::X => Point3::new(1.0, 0.0, 0.0),
            AxisMode::Y => Point3::new(0.0, 1.0, 0.0),
            AxisMode::Z => Point3::new(0.0, 0.0, 1.0),
        };
        record("axis", n, n, t, &mut stages);
        axis
    };

    let volume_report = {
        let t = Instant::now();
        let n = cloud.len();
        let report = segmented_volume(&cloud, axis, config.n_slabs, config.min_slab_points)
            .map_err(|e| e.in_stage("volume"))?;
        record("volume", n, n, t, &mut stages);
        report
    };

    let height = {
        let t = Instant::now();
        let n = cloud.len();
        let h = estimate_height(&cloud, axis, config.trim).map_err(|e| e.in_stage("height"))?;
        record("height", n, n, t, &mut stages);
        h
    };

    let weight = {
        let t = Instant::now();
        let n = cloud.len();
        let w = estimate_weight(volume_report.total_volume, config.density)
            .map_err(|e| e.in_stage("weight"))?;
        record("weight", n, n, t, &mut stages);
        w
    };

    Ok(PipelineRun {
        estimate: BodyEstimate {
            volume: volume_report.total_volume,
            height,
            weight,
            density_used: config.density,
            volume_report,
            axis_used: axis,
        },
        stages,
    })
}
