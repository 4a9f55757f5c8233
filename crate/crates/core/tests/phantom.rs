//! Phantom generator invariants: analytic formulas, sampling, labels,
//! reproducibility and the depth renderer.

use bodymetrics::phantom::{
    make_humanoid, render_depth, sample_surface, sample_surface_labeled, HumanoidPose,
    PhantomScene, Pose, ShapeKind, Solid,
};
use bodymetrics::{CameraIntrinsics, Error, Point3};
use bodymetrics_testkit::mc_membership_volume;

fn y_axis() -> Point3 {
    Point3::new(0.0, 1.0, 0.0)
}

fn sphere(radius: f64) -> Solid {
    Solid::new(
        ShapeKind::Ellipsoid {
            a: radius,
            b: radius,
            c: radius,
        },
        Pose::identity(),
    )
    .unwrap()
}

#[test]
fn noiseless_sphere_sample_lies_on_the_surface() {
    let scene = PhantomScene::single(sphere(1.0), y_axis());
    let cloud = sample_surface(&scene, 2_000.0, 0.0, 9);
    assert!(cloud.len() > 10_000);
    for p in cloud.iter() {
        assert!((p.norm() - 1.0).abs() < 1e-9, "point {p:?} off the sphere");
    }
}

#[test]
fn doubling_density_doubles_point_count() {
    let scene = make_humanoid(1.75, 1.0, HumanoidPose::ArmsDown).unwrap();
    let a = sample_surface(&scene, 5_000.0, 0.0, 1).len() as f64;
    let b = sample_surface(&scene, 10_000.0, 0.0, 1).len() as f64;
    assert!((b / a - 2.0).abs() < 0.01, "{a} -> {b}");
}

#[test]
fn humanoid_ground_truth_height_is_exact() {
    for (h, s) in [(1.75, 1.0), (1.2, 0.8), (2.1, 1.1)] {
        for pose in [HumanoidPose::ArmsDown, HumanoidPose::ArmsOut] {
            let Ok(scene) = make_humanoid(h, s, pose) else {
                continue;
            };
            assert_eq!(scene.ground_truth.height, h);
            // the solids really span [-h/2, h/2] along y
            let lo = scene
                .solids
                .iter()
                .map(|sl| -sl.support(-y_axis()))
                .fold(f64::INFINITY, f64::min);
            let hi = scene
                .solids
                .iter()
                .map(|sl| sl.support(y_axis()))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!((lo + h / 2.0).abs() < 1e-12, "bottom at {lo}");
            assert!((hi - h / 2.0).abs() < 1e-12, "top at {hi}");
        }
    }
}

#[test]
fn humanoid_volume_scales_with_build_cubed() {
    let base = make_humanoid(1.75, 1.0, HumanoidPose::ArmsDown)
        .unwrap()
        .ground_truth
        .volume;
    for s in [0.7, 0.9, 1.1] {
        let scaled = make_humanoid(1.75, s, HumanoidPose::ArmsDown)
            .unwrap()
            .ground_truth
            .volume;
        let expect = base * s * s * s;
        assert!(
            (scaled - expect).abs() / expect < 1e-9,
            "build {s}: {scaled} vs {expect}"
        );
    }
}

#[test]
fn humanoid_solids_never_overlap() {
    let scene = make_humanoid(1.75, 1.0, HumanoidPose::ArmsDown).unwrap();
    assert_eq!(scene.solids.len(), 6, "head, torso, 2 arms, 2 legs");
    for i in 0..scene.solids.len() {
        for j in (i + 1)..scene.solids.len() {
            let (alo, ahi) = scene.solids[i].aabb();
            let (blo, bhi) = scene.solids[j].aabb();
            let disjoint = ahi.x < blo.x
                || bhi.x < alo.x
                || ahi.y < blo.y
                || bhi.y < alo.y
                || ahi.z < blo.z
                || bhi.z < alo.z;
            assert!(disjoint, "solids {i} and {j} overlap");
        }
    }
}

#[test]
fn oversized_build_is_rejected() {
    assert!(matches!(
        make_humanoid(1.75, 3.0, HumanoidPose::ArmsDown),
        Err(Error::ParameterOutOfRange { .. })
    ));
    assert!(matches!(
        make_humanoid(0.3, 1.0, HumanoidPose::ArmsDown),
        Err(Error::ParameterOutOfRange { name: "height", .. })
    ));
}

#[test]
fn labels_partition_the_sample() {
    let scene = make_humanoid(1.75, 1.0, HumanoidPose::ArmsOut)
        .unwrap()
        .with_bed(0.6, 1.0);
    let (cloud, labels) = sample_surface_labeled(&scene, 4_000.0, 0.0, 11);
    assert_eq!(cloud.len(), labels.len());
    let n_solids = scene.solids.len() as u8;
    for &l in &labels {
        assert!(l <= n_solids, "label {l} out of range");
    }
    // sub-clouds selected by label partition the full sample
    let total: usize = (0..=n_solids)
        .map(|l| labels.iter().filter(|&&x| x == l).count())
        .sum();
    assert_eq!(total, cloud.len());
    // bed points really lie on the z = 0 patch
    for (p, &l) in cloud.iter().zip(labels.iter()) {
        if l == 0 {
            assert!(p.z.abs() < 1e-9);
        }
    }
}

#[test]
fn sampling_is_reproducible_and_seed_sensitive() {
    let scene = make_humanoid(1.6, 0.9, HumanoidPose::ArmsDown).unwrap();
    let a = sample_surface(&scene, 3_000.0, 0.002, 42);
    let b = sample_surface(&scene, 3_000.0, 0.002, 42);
    assert_eq!(a, b, "same seed, same cloud");
    let c = sample_surface(&scene, 3_000.0, 0.002, 43);
    assert_ne!(a, c, "different seed, different cloud");
}

#[test]
fn analytic_volumes_match_monte_carlo_membership() {
    // ellipsoid, capsule, box: the formulas against 1e7-sample integration
    let solids = [
        Solid::new(
            ShapeKind::Ellipsoid {
                a: 0.3,
                b: 0.18,
                c: 0.24,
            },
            Pose::identity(),
        )
        .unwrap(),
        Solid::new(
            ShapeKind::Capsule {
                radius: 0.12,
                length: 0.5,
            },
            Pose::identity(),
        )
        .unwrap(),
        Solid::new(
            ShapeKind::Box {
                x: 0.4,
                y: 0.3,
                z: 0.22,
            },
            Pose::identity(),
        )
        .unwrap(),
    ];
    for (i, solid) in solids.iter().enumerate() {
        let (lo, hi) = solid.aabb();
        let mc = mc_membership_volume(lo, hi, 10_000_000, 55 + i as u64, |p| solid.contains(p));
        let analytic = solid.analytic_volume();
        assert!(
            (mc - analytic).abs() / analytic < 0.005,
            "solid {i}: mc {mc} vs analytic {analytic}"
        );
    }
}

#[test]
fn humanoid_total_volume_matches_monte_carlo() {
    let scene = make_humanoid(1.75, 1.0, HumanoidPose::ArmsDown).unwrap();
    let lo = Point3::new(-0.4, -0.875, -0.1);
    let hi = Point3::new(0.4, 0.875, 0.1);
    let mc = mc_membership_volume(lo, hi, 10_000_000, 77, |p| {
        scene.solids.iter().any(|s| s.contains(p))
    });
    let analytic = scene.ground_truth.volume;
    assert!(
        (mc - analytic).abs() / analytic < 0.005,
        "mc {mc} vs analytic {analytic}"
    );
}

fn render_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 200.0,
        fy: 200.0,
        cx: 160.0,
        cy: 120.0,
        width: 320,
        height: 240,
        depth_scale: 0.001,
    }
}

#[test]
fn empty_scene_renders_all_zero() {
    let scene = PhantomScene {
        solids: Vec::new(),
        bed: None,
        body_axis: y_axis(),
        ground_truth: bodymetrics::phantom::GroundTruth {
            volume: 0.0,
            height: 0.0,
        },
    };
    let frame = render_depth(
        &scene,
        &render_intrinsics(),
        &Pose::translate(0.0, 0.0, 2.0),
        0,
        0.0,
    )
    .unwrap();
    assert!(frame.data.iter().all(|&d| d == 0));
}

#[test]
fn sphere_render_min_depth_is_the_near_surface() {
    let scene = PhantomScene::single(sphere(0.3), y_axis());
    let frame = render_depth(
        &scene,
        &render_intrinsics(),
        &Pose::translate(0.0, 0.0, 2.0),
        4,
        0.0,
    )
    .unwrap();
    let min_depth = frame
        .data
        .iter()
        .filter(|&&d| d != 0)
        .map(|&d| d as f64 * 0.001)
        .fold(f64::INFINITY, f64::min);
    // nearest surface point of the sphere sits at 2 - r; one quantum slack
    assert!(
        (min_depth - 1.7).abs() <= 0.0015,
        "min depth {min_depth} vs 1.7"
    );
}

#[test]
fn rendering_is_reproducible() {
    let scene = make_humanoid(1.75, 1.0, HumanoidPose::ArmsDown)
        .unwrap()
        .with_bed(0.5, 1.0);
    let intr = render_intrinsics();
    let pose = Pose::translate(0.0, 0.0, 2.2);
    let a = render_depth(&scene, &intr, &pose, 21, 0.003).unwrap();
    let b = render_depth(&scene, &intr, &pose, 21, 0.003).unwrap();
    assert_eq!(a.data, b.data);
}

#[test]
fn scene_serializes_and_regenerates_exactly() {
    let scene = make_humanoid(1.75, 1.0, HumanoidPose::ArmsOut)
        .unwrap()
        .with_bed(0.6, 1.0);
    let json = serde_json::to_string(&scene).unwrap();
    let back: PhantomScene = serde_json::from_str(&json).unwrap();
    assert_eq!(back, scene);
    let a = sample_surface(&scene, 2_000.0, 0.001, 5);
    let b = sample_surface(&back, 2_000.0, 0.001, 5);
    assert_eq!(a, b, "deserialized scene regenerates the same cloud");
}
