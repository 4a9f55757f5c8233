//! Property tests over randomly generated clouds.

use bodymetrics::hull::{convex_hull, hull_contains, hull_volume, HULL_EPS_FACTOR};
use bodymetrics::metrics::{estimate_height, segmented_volume};
use bodymetrics::preprocess::{depth_band_filter, statistical_outlier_removal, voxel_downsample};
use bodymetrics::{Point3, PointCloud};
use proptest::prelude::*;

fn arb_point(half: f64) -> impl Strategy<Value = Point3> {
    (
        -half..half,
        -half..half,
        -half..half,
    )
        .prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn arb_cloud(min: usize, max: usize, half: f64) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(arb_point(half), min..max).prop_map(PointCloud::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bounding_box_contains_every_point(cloud in arb_cloud(1, 200, 2.0)) {
        let bb = cloud.bounding_box().unwrap();
        for p in cloud.iter() {
            prop_assert!(bb.contains(*p));
        }
    }

    #[test]
    fn voxel_output_is_smaller_and_near_the_input(
        cloud in arb_cloud(1, 300, 1.5),
        voxel in 0.05f64..0.7,
    ) {
        let out = voxel_downsample(&cloud, voxel);
        prop_assert!(out.len() <= cloud.len());
        let bound = 3.0f64.sqrt() * voxel / 2.0;
        for q in out.iter() {
            let nearest = cloud
                .iter()
                .map(|p| (*p - *q).norm())
                .fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= bound + 1e-12);
        }
    }

    #[test]
    fn band_filter_is_idempotent(
        cloud in arb_cloud(0, 300, 2.0),
        lo in -1.0f64..0.5,
        width in 0.1f64..2.0,
    ) {
        let axis = Point3::new(0.0, 0.0, 1.0);
        let once = depth_band_filter(&cloud, axis, lo, lo + width);
        let twice = depth_band_filter(&once, axis, lo, lo + width);
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn sor_with_huge_alpha_keeps_everything(cloud in arb_cloud(30, 200, 1.0)) {
        let (kept, removed) = statistical_outlier_removal(&cloud, 5, 1e9).unwrap();
        prop_assert_eq!(removed, 0);
        prop_assert_eq!(kept.points, cloud.points);
    }

    #[test]
    fn hull_contains_inputs_and_scales_cubically(cloud in arb_cloud(4, 120, 1.0)) {
        let Ok(mesh) = convex_hull(&cloud) else {
            // degenerate draws are fine; nothing to check
            return Ok(());
        };
        mesh.validate_closed().unwrap();
        let eps = HULL_EPS_FACTOR * cloud.bounding_box().unwrap().diagonal();
        for p in cloud.iter() {
            prop_assert!(hull_contains(&mesh, *p, eps));
        }
        let vol = hull_volume(&mesh).unwrap();
        let scaled: PointCloud = cloud.iter().map(|p| *p * 3.0).collect();
        let scaled_vol = hull_volume(&convex_hull(&scaled).unwrap()).unwrap();
        prop_assert!(((scaled_vol - vol * 27.0) / (vol * 27.0)).abs() < 1e-9);
    }

    #[test]
    fn slab_totals_never_exceed_the_whole_hull(
        cloud in arb_cloud(4, 300, 1.0),
        n_slabs in 1usize..20,
    ) {
        let axis = Point3::new(0.0, 1.0, 0.0);
        let whole = segmented_volume(&cloud, axis, 1, 4).unwrap().total_volume;
        let sliced = segmented_volume(&cloud, axis, n_slabs, 4).unwrap().total_volume;
        prop_assert!(sliced <= whole + 1e-9);
    }

    #[test]
    fn zero_trim_height_is_exactly_the_projection_extent(cloud in arb_cloud(1, 200, 2.0)) {
        let axis = Point3::new(0.0, 1.0, 0.0);
        let h = estimate_height(&cloud, axis, 0.0).unwrap();
        let max = cloud.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let min = cloud.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        prop_assert_eq!(h.to_bits(), (max - min).to_bits());
    }
}
