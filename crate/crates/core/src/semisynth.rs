//! Semi-synthetic frame composition: seat simulated objects on the
//! estimated ground of a real background cloud, with the calibrated
//! sensor-noise model.

use crate::geometry::HeightProfile;
use crate::types::{Annotation, Box3D, Frame, Point, PointCloud};
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[allow(unused_imports)]
use num_traits::Float;

/// Extraction margin cap; object point sets stay within their box
/// inflated by at most this much.
pub const MAX_EXTRACT_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ComposeError {
    #[error("box {index} ({hint}) footprint not covered by the height profile")]
    FootprintCoverage { index: usize, hint: String },
    #[error("object {index} ({hint}) center ({x:.2}, {y:.2}) outside the height profile")]
    CenterCoverage {
        index: usize,
        hint: String,
        x: f64,
        y: f64,
    },
}

/// Radial Gaussian noise: `p + (mu + sigma * g) * u`, applied to a seeded
/// subset of `ceil(apply_fraction * n)` points.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NoiseSpec {
    pub mu: f64,
    pub sigma: f64,
    pub apply_fraction: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            mu: 0.0,
            sigma: 0.1,
            apply_fraction: 1.0,
            seed: 0,
        }
    }
}

/// The points belonging to one annotated object, in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectPointSet {
    pub annotation: Annotation,
    pub points: Vec<Point>,
}

/// Per-point origin of a composed frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PointProvenance {
    Background,
    /// Index into the composed frame's annotations.
    Object(usize),
}

/// Composition result: the frame, per-point provenance (parallel to
/// `frame.cloud.points`), and bookkeeping counts for the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedFrame {
    pub frame: Frame,
    pub provenance: Vec<PointProvenance>,
    pub stats: ComposeStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComposeStats {
    pub background_points: usize,
    pub object_points: usize,
    pub dropped_points: usize,
    pub cleared_points: usize,
    pub empty_object_sets: usize,
}

/// splitmix64 finalizer; used to derive independent sub-streams from one
/// seed without overlapping the consumer RNG sequences.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Disturb a seeded subset of points along their sensor rays. Points
/// coincident with the sensor origin have no defined ray and stay put.
pub fn add_raycast_noise(cloud: &PointCloud, spec: &NoiseSpec) -> PointCloud {
    let n = cloud.len();
    let m = ((spec.apply_fraction.clamp(0.0, 1.0) * n as f64).ceil() as usize).min(n);
    let mut out = cloud.clone();
    if m == 0 || (spec.sigma == 0.0 && spec.mu == 0.0) {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut chosen = rand::seq::index::sample(&mut rng, n, m).into_vec();
    chosen.sort_unstable();
    let o = cloud.sensor_origin;
    for i in chosen {
        let g: f64 = rng.sample(StandardNormal);
        let p = &mut out.points[i];
        let u = [p.x - o[0], p.y - o[1], p.z - o[2]];
        let len = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if len < 1e-12 {
            continue;
        }
        let s = (spec.mu + spec.sigma * g) / len;
        p.x += u[0] * s;
        p.y += u[1] * s;
        p.z += u[2] * s;
    }
    out
}

/// Independently remove each point with probability `rate`.
pub fn dropout_points(cloud: &PointCloud, rate: f64, seed: u64) -> PointCloud {
    let mut out = cloud.clone();
    if rate <= 0.0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.points = cloud
        .points
        .iter()
        .filter(|_| rng.random::<f64>() >= rate)
        .copied()
        .collect();
    out
}

/// One ObjectPointSet per annotation; points inside several boxes go to
/// the box with the nearest center (ties to the earlier annotation).
pub fn extract_object_points(frame: &Frame, margin: f64) -> Vec<ObjectPointSet> {
    let mut sets: Vec<ObjectPointSet> = frame
        .annotations
        .iter()
        .map(|a| ObjectPointSet {
            annotation: a.clone(),
            points: Vec::new(),
        })
        .collect();
    for p in &frame.cloud.points {
        let xyz = p.xyz();
        let mut best: Option<(f64, usize)> = None;
        for (i, a) in frame.annotations.iter().enumerate() {
            if !a.box3d.contains(xyz, margin) {
                continue;
            }
            let b = &a.box3d;
            let d2 = (xyz[0] - b.cx) * (xyz[0] - b.cx)
                + (xyz[1] - b.cy) * (xyz[1] - b.cy)
                + (xyz[2] - b.cz) * (xyz[2] - b.cz);
            // strict < keeps the earlier annotation on ties
            if best.is_none_or(|(bd, _)| d2 < bd) {
                best = Some((d2, i));
            }
        }
        if let Some((_, i)) = best {
            sets[i].points.push(*p);
        }
    }
    let empty = sets.iter().filter(|s| s.points.is_empty()).count();
    if empty > 0 {
        log::warn!(
            "{empty} of {} annotations have no points within margin {margin}",
            sets.len()
        );
    }
    sets
}

fn assert_footprint_covered(
    b: &Box3D,
    profile: &HeightProfile,
    index: usize,
    hint: &str,
) -> Result<(), ComposeError> {
    for c in b.corners_bev() {
        if !profile.covers(c[0], c[1]) {
            return Err(ComposeError::FootprintCoverage {
                index,
                hint: hint.into(),
            });
        }
    }
    Ok(())
}

/// Remove background points that are (a) inside any box inflated by
/// `clearance`, or (b) under a box footprint between the box bottom and
/// the ground profile minus `clearance`.
pub fn clear_insertion_region(
    background: &PointCloud,
    boxes: &[Box3D],
    profile: &HeightProfile,
    clearance: f64,
) -> Result<PointCloud, ComposeError> {
    for (i, b) in boxes.iter().enumerate() {
        assert_footprint_covered(b, profile, i, "clear_insertion_region")?;
    }
    let mut out = background.clone();
    out.points = background
        .points
        .iter()
        .filter(|p| {
            let xyz = p.xyz();
            for b in boxes {
                if b.contains(xyz, clearance) {
                    return false;
                }
                if b.contains_bev(p.x, p.y, clearance) && p.z < b.bottom_z() {
                    // convexity: the footprint corners are covered, so
                    // every interior point is too
                    let ground = profile.z_at(p.x, p.y).unwrap_or(f64::NEG_INFINITY);
                    if p.z >= ground - clearance {
                        return false;
                    }
                }
            }
            true
        })
        .copied()
        .collect();
    Ok(out)
}

/// Drop each object onto the ground: translate points and box by
/// `dz = profile(cx, cy) + h/2 - cz` so the box bottom rests on the
/// profile; x, y and yaw are untouched.
pub fn place_objects(
    objects: &[ObjectPointSet],
    profile: &HeightProfile,
) -> Result<Vec<ObjectPointSet>, ComposeError> {
    objects
        .iter()
        .enumerate()
        .map(|(i, set)| {
            let b = &set.annotation.box3d;
            let ground = profile.z_at(b.cx, b.cy).ok_or(ComposeError::CenterCoverage {
                index: i,
                hint: set.annotation.object_id.clone(),
                x: b.cx,
                y: b.cy,
            })?;
            let dz = ground + b.h / 2.0 - b.cz;
            let mut placed = set.clone();
            placed.annotation.box3d.cz += dz;
            for p in &mut placed.points {
                p.z += dz;
            }
            Ok(placed)
        })
        .collect()
}

/// Compose one semi-synthetic frame.
///
/// Pipeline: extract object points from the synthetic frame, seat them on
/// the ground profile, augment the background (dropout, then radial
/// noise), clear the placed boxes and the ground columns under them out
/// of the background, and merge. Clearing runs against the augmented
/// background so the output never contains a background point inside a
/// placed box, noise included.
pub fn compose_frame(
    background: &PointCloud,
    synthetic: &Frame,
    profile: &HeightProfile,
    noise: &NoiseSpec,
    dropout_rate: f64,
    clearance: f64,
    seed: u64,
) -> Result<ComposedFrame, ComposeError> {
    let extracted = extract_object_points(synthetic, clearance.min(MAX_EXTRACT_MARGIN));
    let empty_object_sets = extracted.iter().filter(|s| s.points.is_empty()).count();
    let placed = place_objects(&extracted, profile)?;

    let after_dropout = dropout_points(background, dropout_rate, derive_seed(seed, 1));
    let dropped = background.len() - after_dropout.len();
    let noised = add_raycast_noise(&after_dropout, noise);

    let boxes: Vec<Box3D> = placed.iter().map(|s| s.annotation.box3d).collect();
    let cleared = clear_insertion_region(&noised, &boxes, profile, clearance)?;
    let cleared_count = noised.len() - cleared.len();

    let mut points = cleared.points;
    let mut provenance = alloc::vec![PointProvenance::Background; points.len()];
    let background_points = points.len();
    let mut object_points = 0;
    let mut annotations = Vec::with_capacity(placed.len());
    for (i, set) in placed.into_iter().enumerate() {
        object_points += set.points.len();
        provenance.extend(core::iter::repeat_n(PointProvenance::Object(i), set.points.len()));
        points.extend(set.points);
        annotations.push(set.annotation);
    }

    let cloud = PointCloud {
        frame_id: synthetic.cloud.frame_id.clone(),
        sensor_origin: background.sensor_origin,
        points,
    };
    Ok(ComposedFrame {
        frame: Frame {
            cloud,
            annotations,
            timestamp: synthetic.timestamp,
        },
        provenance,
        stats: ComposeStats {
            background_points,
            object_points,
            dropped_points: dropped,
            cleared_points: cleared_count,
            empty_object_sets,
        },
    })
}
