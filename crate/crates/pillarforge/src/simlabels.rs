//! Converter for simulator label exports.
//!
//! The simulator writes one JSON document per scenario:
//!
//! ```json
//! {"frames": [{"frame_id": "000",
//!              "objects": [{"id": "veh_3", "class": "car",
//!                           "position": [1.0, 2.0, 0.0], "yaw": 0.0,
//!                           "extent": [2.0, 1.0, 0.75]}]}]}
//! ```
//!
//! `position` is the box center. `extent` is full size by default; CARLA-style
//! exports store half extents, enabled with [`ConvertOptions::half_extents`].

use pillarforge_core::{Annotation, Box3D, KNOWN_CATEGORIES};
use serde::Deserialize;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::openlabel::FrameLabels;

#[derive(Debug, Error)]
pub enum SimLabelError {
    #[error("invalid sim label JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("frame {frame}, object {object}: unknown class {class:?} (known: {known}; pass a class_map entry or drop --strict-classes)", known = KNOWN_CATEGORIES.join(", "))]
    UnknownClass {
        frame: String,
        object: String,
        class: String,
    },
    #[error("frame {frame}, object {object}: non-positive extent {extent:?}")]
    BadExtent {
        frame: String,
        object: String,
        extent: [f64; 3],
    },
    #[error("class_map maps {class:?} to {target:?}, which is not a known category")]
    BadMapTarget { class: String, target: String },
}

#[derive(Debug, Deserialize)]
struct SimExport {
    frames: Vec<SimFrame>,
}

#[derive(Debug, Deserialize)]
struct SimFrame {
    frame_id: String,
    objects: Vec<SimObject>,
}

#[derive(Debug, Deserialize)]
struct SimObject {
    id: String,
    class: String,
    position: [f64; 3],
    yaw: f64,
    extent: [f64; 3],
}

#[derive(Debug, Clone, Default)]
pub struct ConvertOptions {
    /// Treat `extent` as half extents (doubled on conversion).
    pub half_extents: bool,
    /// Error on unknown classes instead of mapping them to `Other`.
    pub strict: bool,
    /// Extra simulator-class → category entries, consulted before the
    /// built-in aliases. Targets must be known categories.
    pub class_map: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConvertSummary {
    pub frames: usize,
    pub objects: usize,
    /// Unknown simulator classes mapped to `Other`, with occurrence counts.
    pub unmapped: BTreeMap<String, usize>,
}

/// Built-in simulator-class aliases. Lowercased category names map to
/// themselves, plus the common simulator spellings.
fn builtin_class(class: &str) -> Option<&'static str> {
    let lower = class.to_ascii_lowercase();
    for known in KNOWN_CATEGORIES {
        if lower == known.to_ascii_lowercase() {
            return Some(known);
        }
    }
    match lower.as_str() {
        "motorcycle" | "moped" => Some("Motorbike"),
        "bike" | "cyclist" => Some("Bicycle"),
        "person" | "walker" => Some("Pedestrian"),
        "lorry" => Some("Truck"),
        _ => None,
    }
}

pub fn convert_sim_labels(
    text: &str,
    options: &ConvertOptions,
) -> Result<(FrameLabels, ConvertSummary), SimLabelError> {
    for (class, target) in &options.class_map {
        if !KNOWN_CATEGORIES.contains(&target.as_str()) {
            return Err(SimLabelError::BadMapTarget {
                class: class.clone(),
                target: target.clone(),
            });
        }
    }
    let export: SimExport = serde_json::from_str(text)?;
    let mut out = FrameLabels::new();
    let mut summary = ConvertSummary::default();
    for frame in export.frames {
        let mut annotations = Vec::with_capacity(frame.objects.len());
        for obj in frame.objects {
            let category = if let Some(mapped) = options.class_map.get(&obj.class) {
                mapped.clone()
            } else if let Some(known) = builtin_class(&obj.class) {
                known.to_owned()
            } else if options.strict {
                return Err(SimLabelError::UnknownClass {
                    frame: frame.frame_id.clone(),
                    object: obj.id,
                    class: obj.class,
                });
            } else {
                *summary.unmapped.entry(obj.class.clone()).or_insert(0) += 1;
                "Other".to_owned()
            };
            let scale = if options.half_extents { 2.0 } else { 1.0 };
            let [l, w, h] = obj.extent.map(|e| e * scale);
            if !(l > 0.0 && w > 0.0 && h > 0.0) {
                return Err(SimLabelError::BadExtent {
                    frame: frame.frame_id.clone(),
                    object: obj.id,
                    extent: obj.extent,
                });
            }
            let [x, y, z] = obj.position;
            annotations.push(Annotation {
                object_id: obj.id,
                category,
                box3d: Box3D::new(x, y, z, l, w, h, obj.yaw),
            });
            summary.objects += 1;
        }
        annotations.sort_by(|a, b| a.object_id.cmp(&b.object_id));
        out.insert(frame.frame_id, annotations);
        summary.frames += 1;
    }
    for (class, count) in &summary.unmapped {
        log::warn!("{count} object(s) with unknown class {class:?} mapped to \"Other\"");
    }
    Ok((out, summary))
}
