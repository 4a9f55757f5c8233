//! Body volume, height and weight estimation from 3D depth data.
//!
//! The pipeline converts depth frames to point clouds through a pinhole
//! model, cleans them (band filtering, dominant-plane removal, statistical
//! outlier removal, voxel downsampling), slices the cloud into slabs along
//! the body's long axis, and sums per-slab convex-hull volumes. Height is
//! the trimmed extent along that axis and weight follows from a uniform
//! density model.
//!
//! A synthetic phantom generator ([`phantom`]) provides analytic ground
//! truth (solids with closed-form volumes, a composable humanoid, and a
//! z-buffer depth renderer) so every estimator can be verified without
//! sensor data.
//!
//! Coordinates are camera-centered and right-handed: +z along the optical
//! axis away from the camera, +x right, +y down in image space. All
//! lengths are meters; raw depth units are converted exactly once, at
//! back-projection.

mod camera;
mod error;
mod geom;
pub mod hull;
pub mod io;
mod kdtree;
pub mod metrics;
pub mod phantom;
pub mod preprocess;
mod ransac;

pub use camera::{CameraIntrinsics, DepthFrame, LabelMask};
pub use error::{Degeneracy, Error, Result};
pub use geom::{Aabb, Point3, PointCloud};
pub use kdtree::{brute_force_knn, KdTree, Neighbor};
pub use ransac::{fit_plane_ransac, Plane};
