//! Synthetic ground-truth phantoms: analytic solids sampled as surface
//! clouds, a composable humanoid, and a depth-frame renderer.
//!
//! A depth camera sees surfaces, and hull-based volume only needs extreme
//! points, so phantoms are sampled on their surfaces (area-uniform per
//! solid) rather than volumetrically. All generation is seeded and
//! bit-reproducible.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::camera::{CameraIntrinsics, DepthFrame};
use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

/// Shape of a phantom solid, dimensions in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase")]
pub enum ShapeKind {
    /// Semi-axes along the local x, y, z axes.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// Cylinder of the given length along local y, capped by hemispheres.
    Capsule { radius: f64, length: f64 },
    /// Full edge lengths along the local axes.
    Box { x: f64, y: f64, z: f64 },
}

impl ShapeKind {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ShapeKind::Ellipsoid { a, b, c } => a > 0.0 && b > 0.0 && c > 0.0,
            ShapeKind::Capsule { radius, length } => radius > 0.0 && length > 0.0,
            ShapeKind::Box { x, y, z } => x > 0.0 && y > 0.0 && z > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::ParameterOutOfRange {
                name: "shape",
                message: format!("all size parameters must be positive: {self:?}"),
            })
        }
    }

    pub fn volume(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            ShapeKind::Ellipsoid { a, b, c } => 4.0 * PI * a * b * c / 3.0,
            ShapeKind::Capsule { radius, length } => {
                PI * radius * radius * length + 4.0 * PI * radius.powi(3) / 3.0
            }
            ShapeKind::Box { x, y, z } => x * y * z,
        }
    }

    /// Surface area; the ellipsoid uses the Thomsen approximation, which
    /// is plenty for area-proportional sample allocation.
    pub fn surface_area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            ShapeKind::Ellipsoid { a, b, c } => {
                let p = 1.6075;
                let s = ((a * b).powf(p) + (a * c).powf(p) + (b * c).powf(p)) / 3.0;
                4.0 * PI * s.powf(1.0 / p)
            }
            ShapeKind::Capsule { radius, length } => {
                2.0 * PI * radius * length + 4.0 * PI * radius * radius
            }
            ShapeKind::Box { x, y, z } => 2.0 * (x * y + y * z + z * x),
        }
    }

    /// Support function in the local frame: max of p . dir over the shape,
    /// for a unit direction.
    fn support_local(&self, dir: Vector3<f64>) -> f64 {
        match *self {
            ShapeKind::Ellipsoid { a, b, c } => {
                ((a * dir.x).powi(2) + (b * dir.y).powi(2) + (c * dir.z).powi(2)).sqrt()
            }
            ShapeKind::Capsule { radius, length } => length / 2.0 * dir.y.abs() + radius,
            ShapeKind::Box { x, y, z } => {
                (x * dir.x.abs() + y * dir.y.abs() + z * dir.z.abs()) / 2.0
            }
        }
    }

    fn contains_local(&self, p: Vector3<f64>) -> bool {
        match *self {
            ShapeKind::Ellipsoid { a, b, c } => {
                (p.x / a).powi(2) + (p.y / b).powi(2) + (p.z / c).powi(2) <= 1.0
            }
            ShapeKind::Capsule { radius, length } => {
                let y = p.y.clamp(-length / 2.0, length / 2.0);
                (p - Vector3::new(0.0, y, 0.0)).norm() <= radius
            }
            ShapeKind::Box { x, y, z } => {
                p.x.abs() <= x / 2.0 && p.y.abs() <= y / 2.0 && p.z.abs() <= z / 2.0
            }
        }
    }
}

/// Rigid placement: p_world = rotation * p_local + translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl Pose {
    pub fn identity() -> Pose {
        Pose {
            rotation: Rotation3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn translate(x: f64, y: f64, z: f64) -> Pose {
        Pose {
            rotation: Rotation3::identity(),
            translation: Vector3::new(x, y, z),
        }
    }

    pub fn apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }

    pub fn inverse_apply(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rotation.inverse() * (p - self.translation)
    }
}

/// A posed analytic solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solid {
    pub kind: ShapeKind,
    pub pose: Pose,
}

impl Solid {
    pub fn new(kind: ShapeKind, pose: Pose) -> Result<Solid> {
        kind.validate()?;
        Ok(Solid { kind, pose })
    }

    pub fn analytic_volume(&self) -> f64 {
        self.kind.volume()
    }

    pub fn surface_area(&self) -> f64 {
        self.kind.surface_area()
    }

    /// Max of p . dir over the solid, for a unit world direction.
    pub fn support(&self, dir: Point3) -> f64 {
        let d = dir.to_vector();
        let local = self.pose.rotation.inverse() * d;
        self.kind.support_local(local) + self.pose.translation.dot(&d)
    }

    /// Extent of the solid along a unit axis.
    pub fn extent_along(&self, axis: Point3) -> f64 {
        self.support(axis) + self.support(-axis)
    }

    pub fn contains(&self, p: Point3) -> bool {
        self.kind.contains_local(self.pose.inverse_apply(p.to_vector()))
    }

    /// World-frame bounding box via the support function.
    pub fn aabb(&self) -> (Point3, Point3) {
        let axes = [
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(0.0, 0.0, 1.0),
        ];
        let hi: Vec<f64> = axes.iter().map(|a| self.support(*a)).collect();
        let lo: Vec<f64> = axes.iter().map(|a| -self.support(-*a)).collect();
        (
            Point3::new(lo[0], lo[1], lo[2]),
            Point3::new(hi[0], hi[1], hi[2]),
        )
    }

    /// One point uniform by area on the surface, in world coordinates.
    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vector3<f64> {
        use std::f64::consts::PI;
        let local = match self.kind {
            ShapeKind::Ellipsoid { a, b, c } => {
                // Map sphere samples through the ellipsoid and thin by the
                // local area distortion to stay uniform by area.
                let m_max = (1.0 / a).max(1.0 / b).max(1.0 / c);
                loop {
                    let u: [f64; 3] = UnitSphere.sample(rng);
                    let w = ((u[0] / a).powi(2) + (u[1] / b).powi(2) + (u[2] / c).powi(2)).sqrt();
                    if rng.gen::<f64>() * m_max <= w {
                        break Vector3::new(a * u[0], b * u[1], c * u[2]);
                    }
                }
            }
            ShapeKind::Capsule { radius, length } => {
                let cyl_area = 2.0 * PI * radius * length;
                let cap_area = 4.0 * PI * radius * radius;
                if rng.gen::<f64>() * (cyl_area + cap_area) < cyl_area {
                    let theta = rng.gen::<f64>() * 2.0 * PI;
                    let y = rng.gen_range(-length / 2.0..=length / 2.0);
                    Vector3::new(radius * theta.cos(), y, radius * theta.sin())
                } else {
                    let u: [f64; 3] = UnitSphere.sample(rng);
                    let offset = if u[1] >= 0.0 { length / 2.0 } else { -length / 2.0 };
                    Vector3::new(radius * u[0], offset + radius * u[1], radius * u[2])
                }
            }
            ShapeKind::Box { x, y, z } => {
                let areas = [x * y, x * y, y * z, y * z, z * x, z * x];
                let total: f64 = areas.iter().sum();
                let mut pick = rng.gen::<f64>() * total;
                let mut face = 0usize;
                for (i, a) in areas.iter().enumerate() {
                    if pick < *a {
                        face = i;
                        break;
                    }
                    pick -= a;
                }
                let (u, v) = (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                match face {
                    0 => Vector3::new(u * x, v * y, z / 2.0),
                    1 => Vector3::new(u * x, v * y, -z / 2.0),
                    2 => Vector3::new(x / 2.0, u * y, v * z),
                    3 => Vector3::new(-x / 2.0, u * y, v * z),
                    4 => Vector3::new(u * x, y / 2.0, v * z),
                    _ => Vector3::new(u * x, -y / 2.0, v * z),
                }
            }
        };
        self.pose.apply(local)
    }
}

/// Finite rectangular support patch in the z = 0 plane of the scene frame,
/// spanning [-half_x, half_x] x [-half_y, half_y]. Stands in for the bed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BedPatch {
    pub half_x: f64,
    pub half_y: f64,
}

impl BedPatch {
    pub fn area(&self) -> f64 {
        4.0 * self.half_x * self.half_y
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vector3<f64> {
        Vector3::new(
            rng.gen_range(-self.half_x..=self.half_x),
            rng.gen_range(-self.half_y..=self.half_y),
            0.0,
        )
    }
}

/// Analytic totals a pipeline estimate is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Sum of the solids' analytic volumes (m^3); the bed never counts.
    pub volume: f64,
    /// Extent along the body axis (m).
    pub height: f64,
}

/// A scene of non-overlapping solids with known totals.
///
/// Scenes built by [`make_humanoid`] are centered at the origin with the
/// body along +y and every solid center in the z = 0 plane, so a bed patch
/// added with [`PhantomScene::with_bed`] is exactly the plane of symmetry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomScene {
    pub solids: Vec<Solid>,
    pub bed: Option<BedPatch>,
    /// Unit direction the body length runs along.
    pub body_axis: Point3,
    pub ground_truth: GroundTruth,
}

impl PhantomScene {
    /// Scene holding one solid; ground truth follows from the shape.
    pub fn single(solid: Solid, body_axis: Point3) -> PhantomScene {
        PhantomScene {
            ground_truth: GroundTruth {
                volume: solid.analytic_volume(),
                height: solid.extent_along(body_axis),
            },
            solids: vec![solid],
            bed: None,
            body_axis,
        }
    }

    pub fn with_bed(mut self, half_x: f64, half_y: f64) -> PhantomScene {
        self.bed = Some(BedPatch { half_x, half_y });
        self
    }

    /// Label a sampled point from solid `i` carries (bed points carry 0).
    pub fn solid_label(i: usize) -> u8 {
        (i + 1) as u8
    }
}

/// Arm placement of the humanoid phantom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HumanoidPose {
    /// Arms parallel to the body, beside the torso.
    ArmsDown,
    /// Arms straight out along +-x: strongly non-convex.
    ArmsOut,
}

/// Proportion table of the humanoid, as fractions of total height.
/// Lengths along the body axis are pinned so the phantom spans exactly
/// `height`; every dimension of each solid scales with `build`, so each
/// solid's volume scales with build^3.
///
/// Cross-sections perpendicular to the body axis are kept near-convex
/// (limbs form a single row of circles, the torso and head stand alone in
/// their slabs) so slab hulls track the true union closely.
mod proportions {
    /// Leg capsule radius.
    pub const LEG_RADIUS: f64 = 0.020;
    /// Leg capsule total length (cylinder + both caps).
    pub const LEG_LENGTH: f64 = 0.34;
    /// Half-gap between the legs (unscaled by build).
    pub const LEG_HALF_GAP: f64 = 0.001;
    /// Torso ellipsoid semi-axes.
    pub const TORSO_AX: f64 = 0.15;
    pub const TORSO_AY: f64 = 0.14;
    pub const TORSO_AZ: f64 = 0.05;
    /// Head ellipsoid semi-axes (head is ~1/7.7 of the height).
    pub const HEAD_AX: f64 = 0.05;
    pub const HEAD_AY: f64 = 0.065;
    /// Arm capsule radius (same as the legs; hanging arms continue the
    /// legs' circle row so cross-sections stay a single row of circles).
    pub const ARM_RADIUS: f64 = 0.020;
    /// Hanging arm capsule total length.
    pub const ARM_DOWN_LENGTH: f64 = 0.12;
    /// Outstretched arm cylinder length.
    pub const ARM_OUT_CYL: f64 = 0.36;
    /// Clearance between stacked parts (unscaled by build). The wide parts
    /// (torso, head, outstretched arms) are separated by much more than a
    /// 50-slab interval so no slab ever bridges two of them sideways.
    pub const CLEARANCE: f64 = 0.005;
}

/// Builds the head + torso + four-limb phantom.
///
/// The phantom lies along +y, centered at the origin, with every solid
/// center in the z = 0 plane. Total extent along y is exactly `height`;
/// `build` scales all cross-sections (and solid volumes by build^3) while
/// the anchors keep the height fixed. Solids are separated by construction
/// gaps; a build large enough to close them is rejected.
///
/// Arms-down hangs the arms beside the thighs, continuing the limb row.
/// Arms-out stretches them along +-x through the neck gap, which makes
/// the whole-body shape strongly non-convex while leaving each slab
/// cross-section nearly convex.
pub fn make_humanoid(height: f64, build: f64, pose: HumanoidPose) -> Result<PhantomScene> {
    use proportions as pr;
    if !(0.5..=2.5).contains(&height) {
        return Err(Error::ParameterOutOfRange {
            name: "height",
            message: format!("must be in [0.5, 2.5] m, got {height}"),
        });
    }
    if build <= 0.0 || build.is_nan() {
        return Err(Error::ParameterOutOfRange {
            name: "build",
            message: format!("must be positive, got {build}"),
        });
    }
    let h = height;
    let s = build;

    // Feet-frame y positions (0 = sole, h = top of head), shifted to be
    // centered at the end. The stack is legs, hanging arms, torso, head;
    // only lengths along y are anchored, so solids scale freely.
    let leg_r = pr::LEG_RADIUS * h * s;
    let leg_len = pr::LEG_LENGTH * h * s;
    let leg_cyl = leg_len - 2.0 * leg_r;
    let leg_center_y = leg_len / 2.0;
    let limb_x = leg_r + pr::LEG_HALF_GAP * h;

    let arm_r = pr::ARM_RADIUS * h * s;
    let arm_down_len = pr::ARM_DOWN_LENGTH * h * s;
    let arm_bottom = leg_len + 2.0 * pr::CLEARANCE * h;
    let arm_top = arm_bottom + arm_down_len;

    let head_ay = pr::HEAD_AY * h * s;
    let head_center_y = h - head_ay;
    let head_bottom = h - 2.0 * head_ay;

    let torso_ay = pr::TORSO_AY * h * s;
    let torso_ax = pr::TORSO_AX * h * s;
    let torso_bottom = arm_top + pr::CLEARANCE * h;
    let torso_center_y = torso_bottom + torso_ay;
    let torso_top = torso_bottom + 2.0 * torso_ay;

    if leg_cyl <= 0.0 || arm_down_len <= 2.0 * arm_r {
        return Err(Error::ParameterOutOfRange {
            name: "build",
            message: "limb caps exceed limb length".into(),
        });
    }

    let mut solids = Vec::new();
    let ell = |a, b, c| ShapeKind::Ellipsoid { a, b, c };

    // head, torso
    solids.push(Solid::new(
        ell(pr::HEAD_AX * h * s, head_ay, pr::HEAD_AX * h * s),
        Pose::translate(0.0, head_center_y, 0.0),
    )?);
    solids.push(Solid::new(
        ell(torso_ax, torso_ay, pr::TORSO_AZ * h * s),
        Pose::translate(0.0, torso_center_y, 0.0),
    )?);

    // arms
    match pose {
        HumanoidPose::ArmsDown => {
            // hanging beside the thighs, continuing the leg row
            let arm_cyl = arm_down_len - 2.0 * arm_r;
            let arm_center_y = (arm_bottom + arm_top) / 2.0;
            let arm_x = arm_r + pr::LEG_HALF_GAP * h;
            for side in [-1.0, 1.0] {
                solids.push(Solid::new(
                    ShapeKind::Capsule {
                        radius: arm_r,
                        length: arm_cyl,
                    },
                    Pose::translate(side * arm_x, arm_center_y, 0.0),
                )?);
            }
        }
        HumanoidPose::ArmsOut => {
            // capsule local y rotated onto world x; the bar crosses the
            // gap between torso and head
            let arm_cyl = pr::ARM_OUT_CYL * h * s;
            let rot = Rotation3::from_axis_angle(
                &Unit::new_normalize(Vector3::z()),
                -std::f64::consts::FRAC_PI_2,
            );
            let arm_center_x = pr::CLEARANCE * h + arm_cyl / 2.0 + arm_r;
            let arm_center_y = (torso_top + head_bottom) / 2.0;
            for side in [-1.0, 1.0] {
                solids.push(Solid {
                    kind: ShapeKind::Capsule {
                        radius: arm_r,
                        length: arm_cyl,
                    },
                    pose: Pose {
                        rotation: rot,
                        translation: Vector3::new(side * arm_center_x, arm_center_y, 0.0),
                    },
                });
            }
        }
    }

    // legs
    let leg_kind = ShapeKind::Capsule {
        radius: leg_r,
        length: leg_cyl,
    };
    for side in [-1.0, 1.0] {
        solids.push(Solid::new(
            leg_kind,
            Pose::translate(side * limb_x, leg_center_y, 0.0),
        )?);
    }

    // center the body on the origin
    for solid in &mut solids {
        solid.pose.translation.y -= h / 2.0;
    }

    // construction gaps must survive the requested build
    for i in 0..solids.len() {
        for j in (i + 1)..solids.len() {
            let (alo, ahi) = solids[i].aabb();
            let (blo, bhi) = solids[j].aabb();
            let disjoint = ahi.x < blo.x
                || bhi.x < alo.x
                || ahi.y < blo.y
                || bhi.y < alo.y
                || ahi.z < blo.z
                || bhi.z < alo.z;
            if !disjoint {
                return Err(Error::ParameterOutOfRange {
                    name: "build",
                    message: format!(
                        "build {build} closes the gap between solids {i} and {j}"
                    ),
                });
            }
        }
    }

    let volume = solids.iter().map(Solid::analytic_volume).sum();
    Ok(PhantomScene {
        solids,
        bed: None,
        body_axis: Point3::new(0.0, 1.0, 0.0),
        ground_truth: GroundTruth { volume, height },
    })
}

/// Surface sample of the whole scene with per-point solid labels
/// (bed points carry label 0).
///
/// Each solid receives `density * area` points, uniform by area, then
/// isotropic Gaussian noise of `noise_sigma`. Reproducible for a seed.
pub fn sample_surface_labeled(
    scene: &PhantomScene,
    points_per_m2: f64,
    noise_sigma: f64,
    seed: u64,
) -> (PointCloud, Vec<u8>) {
    assert!(points_per_m2 > 0.0, "density must be positive");
    assert!(noise_sigma >= 0.0, "noise sigma must be non-negative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut points = Vec::new();
    let mut labels = Vec::new();

    fn perturb(
        p: Vector3<f64>,
        sigma: f64,
        normal: &Normal<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Vector3<f64> {
        if sigma > 0.0 {
            p + Vector3::new(normal.sample(rng), normal.sample(rng), normal.sample(rng))
        } else {
            p
        }
    }

    for (i, solid) in scene.solids.iter().enumerate() {
        let count = (points_per_m2 * solid.surface_area()).round() as usize;
        for _ in 0..count {
            let p = perturb(solid.sample_point(&mut rng), noise_sigma, &normal, &mut rng);
            points.push(Point3::new(p.x, p.y, p.z));
            labels.push(PhantomScene::solid_label(i));
        }
    }
    if let Some(bed) = &scene.bed {
        let count = (points_per_m2 * bed.area()).round() as usize;
        for _ in 0..count {
            let p = perturb(bed.sample_point(&mut rng), noise_sigma, &normal, &mut rng);
            points.push(Point3::new(p.x, p.y, p.z));
            labels.push(0);
        }
    }
    (PointCloud::new(points), labels)
}

/// Surface sample without labels; see [`sample_surface_labeled`].
pub fn sample_surface(
    scene: &PhantomScene,
    points_per_m2: f64,
    noise_sigma: f64,
    seed: u64,
) -> PointCloud {
    sample_surface_labeled(scene, points_per_m2, noise_sigma, seed).0
}

/// Renders the scene into a depth frame by z-buffer point splatting.
///
/// A dense surface sample (at least four points per pixel footprint at the
/// scene's far depth) is projected through the intrinsics; the nearest
/// depth wins each pixel, unhit pixels stay 0. Optional per-pixel Gaussian
/// depth noise is applied before quantizing to raw units.
///
/// `camera_pose` maps scene coordinates into the camera frame
/// (p_cam = R * p + t); the camera itself sits at the camera-frame origin
/// looking along +z.
pub fn render_depth(
    scene: &PhantomScene,
    intr: &CameraIntrinsics,
    camera_pose: &Pose,
    seed: u64,
    depth_noise_sigma: f64,
) -> Result<DepthFrame> {
    intr.validate()?;
    assert!(depth_noise_sigma >= 0.0);

    // camera position in scene coordinates must be outside every solid
    let cam_in_scene = camera_pose.inverse_apply(Vector3::zeros());
    let cam = Point3::new(cam_in_scene.x, cam_in_scene.y, cam_in_scene.z);
    assert!(
        scene.solids.iter().all(|s| !s.contains(cam)),
        "camera is inside a solid"
    );

    if scene.solids.is_empty() && scene.bed.is_none() {
        return DepthFrame::new(*intr, vec![0; intr.width * intr.height]);
    }

    // farthest scene depth bounds the pixel footprint
    let mut z_far = 0.0f64;
    for solid in &scene.solids {
        let (lo, hi) = solid.aabb();
        for corner in 0..8 {
            let p = Vector3::new(
                if corner & 1 == 0 { lo.x } else { hi.x },
                if corner & 2 == 0 { lo.y } else { hi.y },
                if corner & 4 == 0 { lo.z } else { hi.z },
            );
            z_far = z_far.max(camera_pose.apply(p).z);
        }
    }
    if let Some(bed) = &scene.bed {
        for (sx, sy) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
            let p = Vector3::new(sx * bed.half_x, sy * bed.half_y, 0.0);
            z_far = z_far.max(camera_pose.apply(p).z);
        }
    }
    assert!(z_far > 0.0, "scene is behind the camera");

    let pixel_area = (z_far / intr.fx) * (z_far / intr.fy);
    let density = 4.0 / pixel_area;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zbuf = vec![f64::INFINITY; intr.width * intr.height];

    let mut splat = |p_scene: Vector3<f64>| {
        let p = camera_pose.apply(p_scene);
        if p.z <= 0.0 {
            return;
        }
        let u = (intr.fx * p.x / p.z + intr.cx).round();
        let v = (intr.fy * p.y / p.z + intr.cy).round();
        if u < 0.0 || v < 0.0 || u >= intr.width as f64 || v >= intr.height as f64 {
            return;
        }
        let idx = v as usize * intr.width + u as usize;
        if p.z < zbuf[idx] {
            zbuf[idx] = p.z;
        }
    };

    for solid in &scene.solids {
        let count = (density * solid.surface_area()).round() as usize;
        for _ in 0..count {
            let p = solid.sample_point(&mut rng);
            splat(p);
        }
    }
    if let Some(bed) = &scene.bed {
        let count = (density * bed.area()).round() as usize;
        for _ in 0..count {
            let p = bed.sample_point(&mut rng);
            splat(p);
        }
    }

    let noise = Normal::new(0.0, depth_noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let data: Vec<u16> = zbuf
        .iter()
        .map(|&z| {
            if !z.is_finite() {
                return 0;
            }
            let z = if depth_noise_sigma > 0.0 {
                z + noise.sample(&mut rng)
            } else {
                z
            };
            let raw = (z / intr.depth_scale).round();
            if raw < 1.0 || raw > u16::MAX as f64 {
                0
            } else {
                raw as u16
            }
        })
        .collect();

    DepthFrame::new(*intr, data)
}
