//! File formats: PLY clouds, PGM/raw depth frames, JSON intrinsics.

mod depth;
mod intrinsics;
mod ply;

pub use depth::{read_depth, read_mask, write_depth, write_depth_raw, write_mask};
pub use intrinsics::{read_intrinsics, write_intrinsics};
pub use ply::{read_ply, write_hull_ply, write_ply};
