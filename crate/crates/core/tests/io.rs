//! File-format round trips and error taxonomy.

use std::fs;
use std::io::Write;

use bodymetrics::hull::convex_hull;
use bodymetrics::io::{
    read_depth, read_intrinsics, read_mask, read_ply, write_depth, write_depth_raw,
    write_hull_ply, write_intrinsics, write_mask, write_ply,
};
use bodymetrics::phantom::{render_depth, sample_surface, PhantomScene, Pose, ShapeKind, Solid};
use bodymetrics::{CameraIntrinsics, DepthFrame, Error, LabelMask, Point3, PointCloud};
use tempfile::TempDir;

fn tmp() -> TempDir {
    tempfile::tempdir().expect("tempdir")
}

fn small_cloud() -> PointCloud {
    PointCloud::new(vec![
        Point3::new(0.0, 0.0, 0.0),
        Point3::new(1.5, -2.25, 0.125),
        Point3::new(-0.3333333333333333, 0.1, 9.75),
    ])
}

#[test]
fn ply_binary_round_trip_is_exact() {
    let dir = tmp();
    let path = dir.path().join("points.ply");
    let cloud = small_cloud();
    write_ply(&cloud, &path, true).unwrap();
    let back = read_ply(&path).unwrap();
    assert_eq!(back.points, cloud.points);
}

#[test]
fn ply_ascii_round_trip_within_tolerance() {
    let dir = tmp();
    let path = dir.path().join("points.ply");
    let cloud = small_cloud();
    write_ply(&cloud, &path, false).unwrap();
    let back = read_ply(&path).unwrap();
    assert_eq!(back.len(), cloud.len());
    for (a, b) in back.iter().zip(cloud.iter()) {
        assert!((*a - *b).norm() <= 1e-6);
    }
}

#[test]
fn ply_large_binary_round_trip_is_bitwise() {
    let dir = tmp();
    let path = dir.path().join("phantom.ply");
    let scene = PhantomScene::single(
        Solid::new(
            ShapeKind::Ellipsoid {
                a: 0.3,
                b: 0.5,
                c: 0.2,
            },
            Pose::identity(),
        )
        .unwrap(),
        Point3::new(0.0, 1.0, 0.0),
    );
    let cloud = sample_surface(&scene, 8_000.0, 0.001, 3);
    assert!(cloud.len() >= 10_000, "need a 10k-point cloud");
    write_ply(&cloud, &path, true).unwrap();
    let back = read_ply(&path).unwrap();
    assert_eq!(back.len(), cloud.len());
    for (a, b) in back.iter().zip(cloud.iter()) {
        assert_eq!(a.x.to_bits(), b.x.to_bits());
        assert_eq!(a.y.to_bits(), b.y.to_bits());
        assert_eq!(a.z.to_bits(), b.z.to_bits());
    }
}

#[test]
fn ply_reader_ignores_extra_vertex_properties() {
    let dir = tmp();
    let path = dir.path().join("colors.ply");
    let mut f = fs::File::create(&path).unwrap();
    write!(
        f,
        "ply\nformat ascii 1.0\nelement vertex 2\n\
         property float x\nproperty float y\nproperty float z\n\
         property uchar red\nproperty uchar green\nproperty uchar blue\n\
         end_header\n\
         1.0 2.0 3.0 255 0 0\n\
         -1.0 0.5 0.25 0 255 0\n"
    )
    .unwrap();
    drop(f);
    let cloud = read_ply(&path).unwrap();
    assert_eq!(cloud.len(), 2);
    assert_eq!(cloud.points[0], Point3::new(1.0, 2.0, 3.0));
    assert_eq!(cloud.points[1], Point3::new(-1.0, 0.5, 0.25));
}

#[test]
fn ply_reader_skips_non_vertex_elements() {
    let dir = tmp();
    let path = dir.path().join("mesh.ply");
    let mut f = fs::File::create(&path).unwrap();
    write!(
        f,
        "ply\nformat ascii 1.0\n\
         element vertex 3\nproperty double x\nproperty double y\nproperty double z\n\
         element face 1\nproperty list uchar int vertex_indices\n\
         end_header\n\
         0 0 0\n1 0 0\n0 1 0\n\
         3 0 1 2\n"
    )
    .unwrap();
    drop(f);
    let cloud = read_ply(&path).unwrap();
    assert_eq!(cloud.len(), 3);
}

#[test]
fn ply_reader_rejects_big_endian() {
    let dir = tmp();
    let path = dir.path().join("big.ply");
    fs::write(
        &path,
        "ply\nformat binary_big_endian 1.0\nelement vertex 0\n\
         property float x\nproperty float y\nproperty float z\nend_header\n",
    )
    .unwrap();
    assert!(matches!(read_ply(&path), Err(Error::UnsupportedFormat(_))));
}

#[test]
fn ply_reader_rejects_malformed_header_and_truncated_body() {
    let dir = tmp();
    let bad_magic = dir.path().join("notply.ply");
    fs::write(&bad_magic, "pyl\nformat ascii 1.0\nend_header\n").unwrap();
    assert!(matches!(read_ply(&bad_magic), Err(Error::Parse { .. })));

    let truncated = dir.path().join("short.ply");
    fs::write(
        &truncated,
        "ply\nformat ascii 1.0\nelement vertex 5\n\
         property float x\nproperty float y\nproperty float z\nend_header\n\
         0 0 0\n1 1 1\n",
    )
    .unwrap();
    assert!(matches!(read_ply(&truncated), Err(Error::Parse { .. })));

    let truncated_bin = dir.path().join("short_bin.ply");
    let mut f = fs::File::create(&truncated_bin).unwrap();
    write!(
        f,
        "ply\nformat binary_little_endian 1.0\nelement vertex 2\n\
         property double x\nproperty double y\nproperty double z\nend_header\n"
    )
    .unwrap();
    f.write_all(&1.0f64.to_le_bytes()).unwrap();
    drop(f);
    assert!(matches!(read_ply(&truncated_bin), Err(Error::Parse { .. })));
}

#[test]
fn ply_reader_rejects_integer_coordinates() {
    let dir = tmp();
    let path = dir.path().join("int.ply");
    fs::write(
        &path,
        "ply\nformat ascii 1.0\nelement vertex 1\n\
         property int x\nproperty float y\nproperty float z\nend_header\n1 2 3\n",
    )
    .unwrap();
    assert!(matches!(read_ply(&path), Err(Error::UnsupportedFormat(_))));
}

#[test]
fn hull_ply_export_is_readable() {
    let dir = tmp();
    let path = dir.path().join("hull.ply");
    let cloud: PointCloud = (0..8)
        .map(|i| {
            Point3::new(
                (i & 1) as f64,
                ((i >> 1) & 1) as f64,
                ((i >> 2) & 1) as f64,
            )
        })
        .collect();
    let mesh = convex_hull(&cloud).unwrap();
    write_hull_ply(&mesh, &path).unwrap();
    // the cloud reader sees the vertices and skips the face element
    let back = read_ply(&path).unwrap();
    assert_eq!(back.len(), mesh.vertices().len());
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.contains("element face 12"));
}

fn test_intrinsics(width: usize, height: usize) -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 100.0,
        fy: 100.0,
        cx: width as f64 / 2.0,
        cy: height as f64 / 2.0,
        width,
        height,
        depth_scale: 0.001,
    }
}

#[test]
fn pgm_round_trip_is_exact() {
    let dir = tmp();
    let depth_path = dir.path().join("frame.pgm");
    let intr_path = dir.path().join("intr.json");
    let intr = test_intrinsics(2, 2);
    write_intrinsics(&intr, &intr_path).unwrap();
    let frame = DepthFrame::new(intr, vec![0, 1000, 2000, 3000]).unwrap();
    write_depth(&frame, &depth_path).unwrap();
    let back = read_depth(&depth_path, &intr_path).unwrap();
    assert_eq!(back.data, frame.data);
    assert_eq!(back.intrinsics, frame.intrinsics);
}

#[test]
fn raw_round_trip_is_exact() {
    let dir = tmp();
    let depth_path = dir.path().join("frame.raw");
    let intr_path = dir.path().join("intr.json");
    let intr = test_intrinsics(4, 3);
    write_intrinsics(&intr, &intr_path).unwrap();
    let data: Vec<u16> = (0..12).map(|i| i * 777).collect();
    let frame = DepthFrame::new(intr, data).unwrap();
    write_depth_raw(&frame, &depth_path).unwrap();
    let back = read_depth(&depth_path, &intr_path).unwrap();
    assert_eq!(back.data, frame.data);
}

#[test]
fn rendered_frame_round_trips_byte_identically() {
    let dir = tmp();
    let intr = test_intrinsics(160, 120);
    let scene = PhantomScene::single(
        Solid::new(
            ShapeKind::Ellipsoid {
                a: 0.3,
                b: 0.3,
                c: 0.3,
            },
            Pose::identity(),
        )
        .unwrap(),
        Point3::new(0.0, 1.0, 0.0),
    );
    let frame = render_depth(&scene, &intr, &Pose::translate(0.0, 0.0, 2.0), 5, 0.002).unwrap();

    let depth_path = dir.path().join("render.pgm");
    let intr_path = dir.path().join("intr.json");
    write_intrinsics(&intr, &intr_path).unwrap();
    write_depth(&frame, &depth_path).unwrap();
    let back = read_depth(&depth_path, &intr_path).unwrap();
    assert_eq!(back.data, frame.data, "depth samples must survive exactly");

    // and the file bytes themselves are reproducible
    let depth_path2 = dir.path().join("render2.pgm");
    write_depth(&back, &depth_path2).unwrap();
    assert_eq!(fs::read(&depth_path).unwrap(), fs::read(&depth_path2).unwrap());
}

#[test]
fn pgm_with_wrong_maxval_is_rejected() {
    let dir = tmp();
    let depth_path = dir.path().join("bad.pgm");
    let intr_path = dir.path().join("intr.json");
    write_intrinsics(&test_intrinsics(2, 2), &intr_path).unwrap();
    fs::write(&depth_path, b"P5\n2 2\n255\n\x00\x01\x02\x03").unwrap();
    assert!(matches!(
        read_depth(&depth_path, &intr_path),
        Err(Error::Parse { .. })
    ));
}

#[test]
fn depth_dimension_mismatch_is_reported() {
    let dir = tmp();
    let depth_path = dir.path().join("frame.pgm");
    let intr_path = dir.path().join("intr.json");
    let frame = DepthFrame::new(test_intrinsics(4, 4), vec![100u16; 16]).unwrap();
    write_depth(&frame, &depth_path).unwrap();
    write_intrinsics(&test_intrinsics(8, 8), &intr_path).unwrap();
    assert!(matches!(
        read_depth(&depth_path, &intr_path),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn intrinsics_missing_field_names_it() {
    let dir = tmp();
    let path = dir.path().join("intr.json");
    fs::write(
        &path,
        r#"{"fy": 100.0, "cx": 1.0, "cy": 1.0, "width": 2, "height": 2, "depth_scale": 0.001}"#,
    )
    .unwrap();
    let err = read_intrinsics(&path).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
    assert!(err.to_string().contains("fx"), "message: {err}");
}

#[test]
fn mask_round_trip() {
    let dir = tmp();
    let path = dir.path().join("mask.pgm");
    let labels: Vec<u8> = (0..12).map(|i| (i % 3) as u8).collect();
    let mask = LabelMask::new(4, 3, labels).unwrap();
    write_mask(&mask, &path).unwrap();
    let back = read_mask(&path).unwrap();
    assert_eq!(back, mask);
}
