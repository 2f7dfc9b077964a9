//! Deterministic compute kernels for roadside LiDAR dataset tooling.
//!
//! Everything in this crate is pure computation over in-memory point clouds,
//! boxes and detections: rotated-box IoU, ground-plane estimation, height
//! profiles, semi-synthetic frame composition, augmentation, pillar
//! preprocessing, IoU-aware post-processing, training-loss math and
//! AP/AOS evaluation. File formats and the CLI live in the companion
//! `pillarforge` crate.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature just forwards to the dependencies' std implementations. All
//! randomized operations take explicit seeds and are reproducible across
//! platforms.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod augment;
pub mod eval;
pub mod geometry;
pub mod losses;
pub mod pillars;
pub mod postprocess;
pub mod semisynth;
pub mod types;

pub use types::{normalize_yaw, Annotation, Box3D, Detection, Frame, Point, PointCloud, SensorSpec, KNOWN_CATEGORIES};

pub use augment::{ClassSizeTable, DatasetStats, MatchPlan};

pub use eval::{EvalConfig, EvalReport, Metric};
pub use pillars::{PillarConfig, PillarTensor};
pub use postprocess::NmsParams;
pub use semisynth::NoiseSpec;
