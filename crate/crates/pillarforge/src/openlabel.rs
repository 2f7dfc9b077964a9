//! Minimal OpenLABEL reader/writer for cuboid annotations.
//!
//! Only the slice of the schema this toolkit produces is supported: a
//! `frames` map whose objects carry one `cuboid` entry of ten values
//! `[x, y, z, qx, qy, qz, qw, sx, sy, sz]`, plus a top-level `objects` map
//! giving each object id its category. Boxes are yaw-only: the quaternion
//! must be a unit rotation about z (within tolerance), and roll/pitch beyond
//! 0.01 rad only warns since roadside labels are nominally upright.

use pillarforge_core::{Annotation, Box3D};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use thiserror::Error;

pub const SCHEMA_VERSION: &str = "1.0.0";
const QUAT_NORM_TOL: f64 = 1e-3;
const TILT_WARN_RAD: f64 = 1e-2;

#[derive(Debug, Error)]
pub enum OpenLabelError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: schema error at {at}: {message}")]
    Schema {
        path: String,
        at: String,
        message: String,
    },
    #[error("{path}: frame {frame}, object {object}: quaternion norm {norm} is not 1 (tolerance 1e-3)")]
    Quaternion {
        path: String,
        frame: String,
        object: String,
        norm: f64,
    },
    #[error("frame {frame}: duplicate object id {object}")]
    DuplicateObject { frame: String, object: String },
    #[error("object {object} labeled both {a:?} and {b:?}")]
    CategoryConflict { object: String, a: String, b: String },
}

/// Annotations per frame id, ordered by object id within each frame.
pub type FrameLabels = BTreeMap<String, Vec<Annotation>>;

fn get<'a>(value: &'a Value, key: &str, path: &str, at: &str) -> Result<&'a Value, OpenLabelError> {
    value.get(key).ok_or_else(|| OpenLabelError::Schema {
        path: path.into(),
        at: at.into(),
        message: format!("missing key {key:?}"),
    })
}

fn as_object<'a>(value: &'a Value, path: &str, at: &str) -> Result<&'a Map<String, Value>, OpenLabelError> {
    value.as_object().ok_or_else(|| OpenLabelError::Schema {
        path: path.into(),
        at: at.into(),
        message: "expected a JSON object".into(),
    })
}

pub fn parse_openlabel_file(path: &Path) -> Result<FrameLabels, OpenLabelError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| OpenLabelError::Io {
        path: display.clone(),
        source,
    })?;
    parse_openlabel(&text, &display)
}

/// Parses OpenLABEL text. `path` is used only for error messages.
pub fn parse_openlabel(text: &str, path: &str) -> Result<FrameLabels, OpenLabelError> {
    let root: Value = serde_json::from_str(text).map_err(|source| OpenLabelError::Json {
        path: path.into(),
        source,
    })?;
    let ol = get(&root, "openlabel", path, "$")?;
    // Categories come from the top-level objects map; object entries inside
    // frames refer back to it by id.
    let mut categories: BTreeMap<String, String> = BTreeMap::new();
    if let Some(objs) = ol.get("objects") {
        for (oid, obj) in as_object(objs, path, "openlabel.objects")? {
            let at = format!("openlabel.objects.{oid}");
            let ty = get(obj, "type", path, &at)?;
            let ty = ty.as_str().ok_or_else(|| OpenLabelError::Schema {
                path: path.into(),
                at: format!("{at}.type"),
                message: "expected a string".into(),
            })?;
            categories.insert(oid.clone(), ty.to_owned());
        }
    }

    let mut out = FrameLabels::new();
    let frames = get(ol, "frames", path, "openlabel")?;
    for (fid, frame) in as_object(frames, path, "openlabel.frames")? {
        let at = format!("openlabel.frames.{fid}");
        let objects = as_object(get(frame, "objects", path, &at)?, path, &format!("{at}.objects"))?;
        let mut annotations = Vec::with_capacity(objects.len());
        for (oid, obj) in objects {
            let at = format!("{at}.objects.{oid}");
            let data = get(obj, "object_data", path, &at)?;
            let cuboids = get(data, "cuboid", path, &format!("{at}.object_data"))?;
            let cuboid = cuboids
                .as_array()
                .and_then(|a| a.first())
                .ok_or_else(|| OpenLabelError::Schema {
                    path: path.into(),
                    at: format!("{at}.object_data.cuboid"),
                    message: "expected a non-empty array".into(),
                })?;
            let val = get(cuboid, "val", path, &format!("{at}.object_data.cuboid[0]"))?;
            let at_val = format!("{at}.object_data.cuboid[0].val");
            let nums: Vec<f64> = val
                .as_array()
                .map(|a| a.iter().filter_map(Value::as_f64).collect())
                .unwrap_or_default();
            if nums.len() != 10 {
                return Err(OpenLabelError::Schema {
                    path: path.into(),
                    at: at_val,
                    message: format!("expected 10 numbers, got {}", nums.len()),
                });
            }
            let [x, y, z, qx, qy, qz, qw, sx, sy, sz] = nums[..] else {
                unreachable!()
            };
            let norm = (qx * qx + qy * qy + qz * qz + qw * qw).sqrt();
            if (norm - 1.0).abs() > QUAT_NORM_TOL {
                return Err(OpenLabelError::Quaternion {
                    path: path.into(),
                    frame: fid.clone(),
                    object: oid.clone(),
                    norm,
                });
            }
            let (roll, pitch, yaw) = quat_to_euler(qx / norm, qy / norm, qz / norm, qw / norm);
            if roll.abs() > TILT_WARN_RAD || pitch.abs() > TILT_WARN_RAD {
                log::warn!(
                    "{path}: frame {fid}, object {oid}: cuboid tilted (roll {roll:.4}, pitch {pitch:.4} rad); keeping yaw only"
                );
            }
            if !(sx > 0.0 && sy > 0.0 && sz > 0.0) {
                return Err(OpenLabelError::Schema {
                    path: path.into(),
                    at: at_val,
                    message: format!("non-positive extents [{sx}, {sy}, {sz}]"),
                });
            }
            let category = categories.get(oid).cloned().unwrap_or_else(|| "Other".into());
            annotations.push(Annotation {
                object_id: oid.clone(),
                category,
                box3d: Box3D::new(x, y, z, sx, sy, sz, yaw),
            });
        }
        out.insert(fid.clone(), annotations);
    }
    Ok(out)
}

/// Intrinsic ZYX euler angles of a unit quaternion.
fn quat_to_euler(qx: f64, qy: f64, qz: f64, qw: f64) -> (f64, f64, f64) {
    let roll = (2.0 * (qw * qx + qy * qz)).atan2(1.0 - 2.0 * (qx * qx + qy * qy));
    let pitch = (2.0 * (qw * qy - qz * qx)).clamp(-1.0, 1.0).asin();
    let yaw = (2.0 * (qw * qz + qx * qy)).atan2(1.0 - 2.0 * (qy * qy + qz * qz));
    (roll, pitch, yaw)
}

fn cuboid_value(a: &Annotation) -> Value {
    let b = &a.box3d;
    let half = b.yaw / 2.0;
    json!({
        "name": "shape3D",
        "val": [b.cx, b.cy, b.cz, 0.0, 0.0, half.sin(), half.cos(), b.l, b.w, b.h],
    })
}

pub fn write_openlabel_file(frames: &FrameLabels, path: &Path) -> Result<(), OpenLabelError> {
    let display = path.display().to_string();
    let text = render_openlabel(frames)?;
    fs::write(path, text).map_err(|source| OpenLabelError::Io {
        path: display,
        source,
    })
}

/// Serializes frames to pretty-printed OpenLABEL. Map keys are sorted, so
/// identical inputs give byte-identical output.
pub fn render_openlabel(frames: &FrameLabels) -> Result<String, OpenLabelError> {
    let mut objects: BTreeMap<String, String> = BTreeMap::new();
    let mut frames_json = Map::new();
    for (fid, annotations) in frames {
        let mut objs = Map::new();
        for a in annotations {
            if objs.contains_key(&a.object_id) {
                return Err(OpenLabelError::DuplicateObject {
                    frame: fid.clone(),
                    object: a.object_id.clone(),
                });
            }
            match objects.get(&a.object_id) {
                Some(prev) if *prev != a.category => {
                    return Err(OpenLabelError::CategoryConflict {
                        object: a.object_id.clone(),
                        a: prev.clone(),
                        b: a.category.clone(),
                    });
                }
                _ => {
                    objects.insert(a.object_id.clone(), a.category.clone());
                }
            }
            objs.insert(
                a.object_id.clone(),
                json!({ "object_data": { "cuboid": [cuboid_value(a)] } }),
            );
        }
        frames_json.insert(fid.clone(), json!({ "objects": objs }));
    }
    let objects_json: Map<String, Value> = objects
        .into_iter()
        .map(|(oid, ty)| (oid.clone(), json!({ "name": oid, "type": ty })))
        .collect();
    let doc = json!({
        "openlabel": {
            "metadata": { "schema_version": SCHEMA_VERSION },
            "objects": objects_json,
            "frames": frames_json,
        }
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("json serialization cannot fail");
    text.push('\n');
    Ok(text)
}
