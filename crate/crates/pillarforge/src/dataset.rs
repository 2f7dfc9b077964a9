//! Dataset directory convention: one frame per `<stem>.pcd`, labels (when
//! present) in a sibling `<stem>.json` OpenLABEL file keyed by the same stem.

use crate::openlabel::{parse_openlabel_file, write_openlabel_file, FrameLabels};
use crate::pcd::{load_pcd, save_pcd};
use anyhow::{bail, Context, Result};
use pillarforge_core::Frame;
use std::path::{Path, PathBuf};

pub fn pcd_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.pcd"))
}

pub fn labels_path(dir: &Path, stem: &str) -> PathBuf {
    dir.join(format!("{stem}.json"))
}

/// Frame stems in a dataset directory, sorted for deterministic ordering.
pub fn list_stems(dir: &Path) -> Result<Vec<String>> {
    let entries = std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))?;
    let mut stems = Vec::new();
    for entry in entries {
        let path = entry.with_context(|| format!("reading {}", dir.display()))?.path();
        if path.extension().is_some_and(|e| e == "pcd") {
            if let Some(stem) = path.file_stem() {
                stems.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    stems.sort();
    Ok(stems)
}

/// Loads one frame. A missing label file means an unlabeled frame; a label
/// file that doesn't contain this stem's frame is an error.
pub fn load_frame(dir: &Path, stem: &str) -> Result<Frame> {
    let cloud = load_pcd(&pcd_path(dir, stem))?;
    let labels = labels_path(dir, stem);
    let annotations = if labels.exists() {
        let mut frames = parse_openlabel_file(&labels)?;
        match frames.remove(stem) {
            Some(annotations) => annotations,
            None if frames.len() == 1 => frames.into_values().next().unwrap(),
            None => bail!(
                "{}: no frame {stem:?} in label file (found {:?})",
                labels.display(),
                frames.keys().collect::<Vec<_>>()
            ),
        }
    } else {
        Vec::new()
    };
    Ok(Frame {
        cloud,
        annotations,
        timestamp: None,
    })
}

pub fn load_dataset(dir: &Path) -> Result<Vec<Frame>> {
    let stems = list_stems(dir)?;
    if stems.is_empty() {
        bail!("{}: no .pcd files found", dir.display());
    }
    stems.iter().map(|s| load_frame(dir, s)).collect()
}

/// Writes `<stem>.pcd` (+ `<stem>.json` when the frame has labels), with the
/// stem taken from the frame id.
pub fn write_frame(dir: &Path, frame: &Frame, binary_pcd: bool) -> Result<()> {
    let stem = &frame.cloud.frame_id;
    save_pcd(&frame.cloud, &pcd_path(dir, stem), binary_pcd)?;
    if !frame.annotations.is_empty() {
        let mut labels = FrameLabels::new();
        labels.insert(stem.clone(), frame.annotations.clone());
        write_openlabel_file(&labels, &labels_path(dir, stem))?;
    }
    Ok(())
}

/// Removes this stem's output pair if present; used to clean up after a
/// failed frame so reruns never see partial results.
pub fn remove_frame_outputs(dir: &Path, stem: &str) {
    for path in [pcd_path(dir, stem), labels_path(dir, stem)] {
        if path.exists() {
            if let Err(e) = std::fs::remove_file(&path) {
                log::warn!("could not remove partial output {}: {e}", path.display());
            }
        }
    }
}
