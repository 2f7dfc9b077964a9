//! Rotated-box and point-set geometry primitives.

mod fps;
mod iou;
mod plane;
mod profile;

pub use fps::farthest_point_sampling;
pub use iou::{bev_intersection_area, bev_intersection_area_grad, bev_iou, iou_3d};
pub use plane::{ransac_plane, GroundPlane};
pub use profile::{build_height_profile, HeightProfile};

use crate::types::{Box3D, PointCloud};
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error("plane fit needs at least 3 points, got {got}")]
    InsufficientPoints { got: usize },
    #[error("all RANSAC samples were degenerate (collinear or coincident points)")]
    DegenerateSamples,
    #[error("no points within {band} m of the plane; cannot build a height profile")]
    EmptyBand { band: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Indices of the points inside `b` inflated by `margin` on every
/// half-extent (boundary inclusive).
pub fn points_in_box(cloud: &PointCloud, b: &Box3D, margin: f64) -> Vec<usize> {
    cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| b.contains(p.xyz(), margin))
        .map(|(i, _)| i)
        .collect()
}
