//! Shared domain types: points, clouds, oriented boxes, annotations,
//! detections and the sensor description.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

#[allow(unused_imports)]
use num_traits::Float;

/// Categories the toolkit knows about; anything else maps to `Other`.
pub const KNOWN_CATEGORIES: [&str; 9] = [
    "Car",
    "Van",
    "Truck",
    "Bus",
    "Pedestrian",
    "Bicycle",
    "Motorbike",
    "Trailer",
    "Other",
];

/// Wrap an angle into `(-pi, pi]` preserving the rotation it represents.
pub fn normalize_yaw(yaw: f64) -> f64 {
    if yaw > -PI && yaw <= PI {
        return yaw;
    }
    // Float remainder is exact, so the only error here is the `yaw + PI`
    // rounding, which keeps cos/sin stable to ~1 ulp per wrapped turn.
    let mut r = (yaw + PI) % TAU;
    if r < 0.0 {
        r += TAU;
    }
    let r = r - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}

/// One LiDAR return: position in meters, intensity normalized into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point { x, y, z, intensity }
    }

    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// An ordered point collection tagged with its frame id and sensor origin.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointCloud {
    pub frame_id: String,
    /// Sensor mounting position in the cloud frame; rays for the noise
    /// model emanate from here.
    pub sensor_origin: [f64; 3],
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(frame_id: impl Into<String>, points: Vec<Point>) -> Self {
        PointCloud {
            frame_id: frame_id.into(),
            sensor_origin: [0.0; 3],
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Oriented cuboid: center, extents (l along heading), yaw about +z
/// counterclockwise from +x. Right-handed, z up; bottom face sits at
/// `cz - h/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Box3D {
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
    pub l: f64,
    pub w: f64,
    pub h: f64,
    pub yaw: f64,
}

impl Box3D {
    /// Build a box, normalizing yaw into `(-pi, pi]`. Extents must be
    /// positive; parsers validate before calling.
    pub fn new(cx: f64, cy: f64, cz: f64, l: f64, w: f64, h: f64, yaw: f64) -> Self {
        debug_assert!(l > 0.0 && w > 0.0 && h > 0.0, "non-positive box extent");
        Box3D {
            cx,
            cy,
            cz,
            l,
            w,
            h,
            yaw: normalize_yaw(yaw),
        }
    }

    pub fn volume(&self) -> f64 {
        self.l * self.w * self.h
    }

    pub fn bev_area(&self) -> f64 {
        self.l * self.w
    }

    pub fn bottom_z(&self) -> f64 {
        self.cz - self.h / 2.0
    }

    pub fn top_z(&self) -> f64 {
        self.cz + self.h / 2.0
    }

    /// BEV footprint corners in counterclockwise order.
    pub fn corners_bev(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.l / 2.0, self.w / 2.0);
        let rot = |x: f64, y: f64| [self.cx + c * x - s * y, self.cy + s * x + c * y];
        [rot(hl, hw), rot(-hl, hw), rot(-hl, -hw), rot(hl, -hw)]
    }

    /// All 8 corners; bottom face first, matching `corners_bev` order.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let bev = self.corners_bev();
        let mut out = [[0.0; 3]; 8];
        for (i, c) in bev.iter().enumerate() {
            out[i] = [c[0], c[1], self.bottom_z()];
            out[i + 4] = [c[0], c[1], self.top_z()];
        }
        out
    }

    /// World point into box-frame coordinates (box center at origin,
    /// x along heading).
    pub fn to_box_frame(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.cx;
        let dy = p[1] - self.cy;
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.cz]
    }

    /// Inverse of [`Box3D::to_box_frame`].
    pub fn from_box_frame(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        [
            self.cx + c * p[0] - s * p[1],
            self.cy + s * p[0] + c * p[1],
            self.cz + p[2],
        ]
    }

    /// Containment with an additive margin on every half-extent
    /// (boundary inclusive).
    pub fn contains(&self, p: [f64; 3], margin: f64) -> bool {
        let q = self.to_box_frame(p);
        q[0].abs() <= self.l / 2.0 + margin
            && q[1].abs() <= self.w / 2.0 + margin
            && q[2].abs() <= self.h / 2.0 + margin
    }

    /// BEV containment with an additive margin (boundary inclusive).
    pub fn contains_bev(&self, x: f64, y: f64, margin: f64) -> bool {
        let q = self.to_box_frame([x, y, self.cz]);
        q[0].abs() <= self.l / 2.0 + margin && q[1].abs() <= self.w / 2.0 + margin
    }
}

/// A labeled object: box plus class and track id.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Annotation {
    pub object_id: String,
    pub category: String,
    #[cfg_attr(feature = "serde", serde(rename = "box"))]
    pub box3d: Box3D,
}

/// One frame: cloud plus its labels. Annotation object ids are expected
/// to be pairwise distinct; file parsers enforce this.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frame {
    pub cloud: PointCloud,
    pub annotations: Vec<Annotation>,
    pub timestamp: Option<f64>,
}

impl Frame {
    pub fn new(cloud: PointCloud, annotations: Vec<Annotation>) -> Self {
        Frame {
            cloud,
            annotations,
            timestamp: None,
        }
    }
}

/// A predicted object: box plus classification score, predicted IoU and
/// the direction-classifier decision.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Detection {
    pub category: String,
    pub score: f64,
    pub iou_pred: f64,
    pub direction_front: bool,
    #[cfg_attr(feature = "serde", serde(rename = "box"))]
    pub box3d: Box3D,
}

/// Simulated-sensor description; defaults follow a simulated OS1-64.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct SensorSpec {
    pub channels: u32,
    pub range_m: f64,
    pub points_per_second: u64,
    pub rotation_rate_hz: f64,
    pub vfov_deg: f64,
    pub hfov_deg: f64,
    pub noise_sigma: f64,
    pub dropoff_rate: f64,
}

impl Default for SensorSpec {
    fn default() -> Self {
        SensorSpec {
            channels: 64,
            range_m: 120.0,
            points_per_second: 2_621_480,
            rotation_rate_hz: 20.0,
            vfov_deg: 45.0,
            hfov_deg: 360.0,
            noise_sigma: 0.1,
            dropoff_rate: 0.1,
        }
    }
}
