//! JSON-lines detection files: one object per line,
//! `{"frame_id", "category", "score", "iou_pred", "direction_front", "box": [cx,cy,cz,l,w,h,yaw]}`.

use pillarforge_core::{Box3D, Detection};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DetectionsError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Record {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Serialize, Deserialize)]
struct DetRecord {
    frame_id: String,
    category: String,
    score: f64,
    iou_pred: f64,
    direction_front: bool,
    #[serde(rename = "box")]
    bbox: [f64; 7],
}

/// Reads detections grouped by frame id, preserving line order within a frame.
pub fn read_detections(path: &Path) -> Result<BTreeMap<String, Vec<Detection>>, DetectionsError> {
    let display = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| DetectionsError::Io {
        path: display.clone(),
        source,
    })?;
    let mut out: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| DetectionsError::Record {
            path: display.clone(),
            line: line_no,
            message,
        };
        let rec: DetRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let [cx, cy, cz, l, w, h, yaw] = rec.bbox;
        if !rec.bbox.iter().all(|v| v.is_finite()) {
            return Err(err("non-finite box value".into()));
        }
        if !(l > 0.0 && w > 0.0 && h > 0.0) {
            return Err(err(format!("non-positive box dimensions [{l}, {w}, {h}]")));
        }
        for (name, v) in [("score", rec.score), ("iou_pred", rec.iou_pred)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(err(format!("{name} {v} outside [0, 1]")));
            }
        }
        out.entry(rec.frame_id).or_default().push(Detection {
            category: rec.category,
            score: rec.score,
            iou_pred: rec.iou_pred,
            direction_front: rec.direction_front,
            box3d: Box3D::new(cx, cy, cz, l, w, h, yaw),
        });
    }
    Ok(out)
}

/// Writes detections sorted by frame id, preserving in-frame order.
pub fn write_detections(
    detections: &BTreeMap<String, Vec<Detection>>,
    path: &Path,
) -> Result<(), DetectionsError> {
    let mut text = String::new();
    for (frame_id, dets) in detections {
        for d in dets {
            let b = &d.box3d;
            let rec = DetRecord {
                frame_id: frame_id.clone(),
                category: d.category.clone(),
                score: d.score,
                iou_pred: d.iou_pred,
                direction_front: d.direction_front,
                bbox: [b.cx, b.cy, b.cz, b.l, b.w, b.h, b.yaw],
            };
            let _ = writeln!(text, "{}", serde_json::to_string(&rec).expect("serialize detection"));
        }
    }
    fs::write(path, text).map_err(|source| DetectionsError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn det(frame: &str, score: f64) -> (String, Detection) {
        (
            frame.to_owned(),
            Detection {
                category: "Car".into(),
                score,
                iou_pred: 0.8,
                direction_front: score > 0.5,
                box3d: Box3D::new(1.0, -2.0, 0.5, 4.25, 1.875, 1.5, 0.3),
            },
        )
    }

    #[test]
    fn round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut map: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
        for (f, d) in [det("b", 0.9), det("a", 0.4), det("b", 0.2)] {
            map.entry(f).or_default().push(d);
        }
        write_detections(&map, &path).unwrap();
        let back = read_detections(&path).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn bad_line_reports_number() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let good = r#"{"frame_id":"f","category":"Car","score":0.5,"iou_pred":0.5,"direction_front":true,"box":[0,0,0,4,2,1.5,0]}"#;
        fs::write(&path, format!("{good}\nnot json\n")).unwrap();
        match read_detections(&path) {
            Err(DetectionsError::Record { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected record error, got {other:?}"),
        }
    }

    #[test]
    fn score_range_is_validated() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let line = r#"{"frame_id":"f","category":"Car","score":1.5,"iou_pred":0.5,"direction_front":true,"box":[0,0,0,4,2,1.5,0]}"#;
        fs::write(&path, line).unwrap();
        match read_detections(&path) {
            Err(DetectionsError::Record { message, .. }) => assert!(message.contains("score"), "{message}"),
            other => panic!("expected record error, got {other:?}"),
        }
    }

    #[test]
    fn zero_dimension_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("z.jsonl");
        let line = r#"{"frame_id":"f","category":"Car","score":0.5,"iou_pred":0.5,"direction_front":true,"box":[0,0,0,4,0,1.5,0]}"#;
        fs::write(&path, line).unwrap();
        assert!(matches!(read_detections(&path), Err(DetectionsError::Record { .. })));
    }
}
