//! File formats, configuration, and the CLI around [`pillarforge_core`].
//!
//! The core crate holds the numerics (geometry, composition, augmentation,
//! pillars, NMS, losses, evaluation); this crate adds PCD and OpenLABEL IO,
//! detection JSONL, pillar blobs, run configs/manifests, and the
//! `pillarforge` binary.

pub mod blob;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod detections;
pub mod manifest;
pub mod openlabel;
pub mod pcd;
pub mod report;
pub mod simlabels;

pub use config::RunConfig;
pub use manifest::Manifest;
