//! Training-time and domain-adaptation augmentation: global transforms,
//! shape-aware per-object edits, dataset statistics and matching, box
//! size normalization.

use crate::geometry::farthest_point_sampling;
use crate::semisynth::PointProvenance;
use crate::types::{Box3D, Frame, Point};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("size table has no entry for category {0}")]
    MissingCategory(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Aggregate dataset statistics used for domain matching.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetStats {
    pub frame_count: usize,
    pub mean_points_per_frame: f64,
    pub mean_points_per_object: BTreeMap<String, f64>,
    pub object_count: BTreeMap<String, usize>,
}

/// How to morph a source dataset toward a target's statistics.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct MatchPlan {
    pub object_upsample_factor: BTreeMap<String, f64>,
    pub background_dropout_rate: f64,
}

/// Mean box extents per category.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ClassSizeTable {
    pub mean_dims: BTreeMap<String, [f64; 3]>,
}

/// Rotate about z, optionally mirror across the x-z plane, then scale
/// about the origin. Applies to points, box centers/dims/yaw and the
/// sensor origin.
pub fn global_transform(frame: &Frame, rotation: f64, flip_y: bool, scale: f64) -> Frame {
    debug_assert!(scale > 0.0, "scale must be positive");
    let (s, c) = rotation.sin_cos();
    let fy = if flip_y { -1.0 } else { 1.0 };
    let map = |x: f64, y: f64, z: f64| {
        let (rx, ry) = (c * x - s * y, s * x + c * y);
        [rx * scale, ry * fy * scale, z * scale]
    };
    let mut out = frame.clone();
    for p in &mut out.cloud.points {
        let [x, y, z] = map(p.x, p.y, p.z);
        p.x = x;
        p.y = y;
        p.z = z;
    }
    let o = out.cloud.sensor_origin;
    out.cloud.sensor_origin = map(o[0], o[1], o[2]);
    for a in &mut out.annotations {
        let b = &mut a.box3d;
        let [cx, cy, cz] = map(b.cx, b.cy, b.cz);
        let yaw = if flip_y {
            -(b.yaw + rotation)
        } else {
            b.yaw + rotation
        };
        *b = Box3D::new(cx, cy, cz, b.l * scale, b.w * scale, b.h * scale, yaw);
    }
    out
}

/// Pyramid index (0..6) of a box-frame point: faces +x, -x, +y, -y,
/// +z, -z of the box, apex at the center. Classification is by the
/// dominant normalized coordinate; ties prefer x over y over z.
fn pyramid_index(b: &Box3D, p: [f64; 3]) -> usize {
    let q = b.to_box_frame(p);
    let n = [
        q[0] / (b.l / 2.0),
        q[1] / (b.w / 2.0),
        q[2] / (b.h / 2.0),
    ];
    let mut axis = 0;
    for i in 1..3 {
        if n[i].abs() > n[axis].abs() {
            axis = i;
        }
    }
    axis * 2 + if n[axis] >= 0.0 { 0 } else { 1 }
}

/// Map a world point from box `a`'s frame into box `b`'s, scaling the
/// normalized coordinates so the point lands in the same relative spot.
fn map_between_boxes(a: &Box3D, b: &Box3D, p: [f64; 3]) -> [f64; 3] {
    let q = a.to_box_frame(p);
    b.from_box_frame([
        q[0] / a.l * b.l,
        q[1] / a.w * b.w,
        q[2] / a.h * b.h,
    ])
}

/// Assign each point to at most one annotation (margin 0, overlaps to the
/// nearest box center, ties to the earlier annotation).
fn assign_points(frame: &Frame) -> Vec<Option<usize>> {
    frame
        .cloud
        .points
        .iter()
        .map(|p| {
            let xyz = p.xyz();
            let mut best: Option<(f64, usize)> = None;
            for (i, a) in frame.annotations.iter().enumerate() {
                if !a.box3d.contains(xyz, 0.0) {
                    continue;
                }
                let b = &a.box3d;
                let d2 = (xyz[0] - b.cx).powi(2) + (xyz[1] - b.cy).powi(2) + (xyz[2] - b.cz).powi(2);
                if best.is_none_or(|(bd, _)| d2 < bd) {
                    best = Some((d2, i));
                }
            }
            best.map(|(_, i)| i)
        })
        .collect()
}

/// Per-object augmentation: with the given probabilities, drop one of the
/// six pyramidal sub-volumes, swap a sub-volume with a same-category
/// partner, or FPS-sparsify the object's points to half. Points outside
/// all boxes are never touched.
pub fn shape_aware_augment(
    frame: &Frame,
    p_dropout: f64,
    p_swap: f64,
    p_sparsify: f64,
    seed: u64,
) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = assign_points(frame);
    // working copy: per-point slot, None = removed; appended points carry
    // their owning object
    let mut slots: Vec<Option<Point>> = frame.cloud.points.iter().map(|p| Some(*p)).collect();
    let mut owner: Vec<Option<usize>> = assignment;
    let mut appended: Vec<Point> = Vec::new();

    let object_indices = |owner: &[Option<usize>], slots: &[Option<Point>], i: usize| -> Vec<usize> {
        owner
            .iter()
            .enumerate()
            .filter(|(k, o)| **o == Some(i) && slots[*k].is_some())
            .map(|(k, _)| k)
            .collect()
    };

    for i in 0..frame.annotations.len() {
        let bi = frame.annotations[i].box3d;

        let u_drop: f64 = rng.random();
        let do_drop = u_drop < p_dropout;
        let drop_pyramid = rng.random_range(0..6usize);
        if do_drop {
            for k in object_indices(&owner, &slots, i) {
                let p = slots[k].unwrap();
                if pyramid_index(&bi, p.xyz()) == drop_pyramid {
                    slots[k] = None;
                }
            }
        }

        let u_swap: f64 = rng.random();
        let do_swap = u_swap < p_swap;
        let partner_pick: f64 = rng.random();
        let swap_pyramid = rng.random_range(0..6usize);
        if do_swap {
            let partners: Vec<usize> = frame
                .annotations
                .iter()
                .enumerate()
                .filter(|(j, a)| *j != i && a.category == frame.annotations[i].category)
                .map(|(j, _)| j)
                .collect();
            if !partners.is_empty() {
                let j = partners
                    [((partner_pick * partners.len() as f64) as usize).min(partners.len() - 1)];
                let bj = frame.annotations[j].box3d;
                let mine: Vec<usize> = object_indices(&owner, &slots, i)
                    .into_iter()
                    .filter(|&k| pyramid_index(&bi, slots[k].unwrap().xyz()) == swap_pyramid)
                    .collect();
                let theirs: Vec<usize> = object_indices(&owner, &slots, j)
                    .into_iter()
                    .filter(|&k| pyramid_index(&bj, slots[k].unwrap().xyz()) == swap_pyramid)
                    .collect();
                for &k in &mine {
                    let p = slots[k].unwrap();
                    let m = map_between_boxes(&bi, &bj, p.xyz());
                    appended.push(Point::new(m[0], m[1], m[2], p.intensity));
                    slots[k] = None;
                }
                for &k in &theirs {
                    let p = slots[k].unwrap();
                    let m = map_between_boxes(&bj, &bi, p.xyz());
                    appended.push(Point::new(m[0], m[1], m[2], p.intensity));
                    slots[k] = None;
                }
            }
        }

        let u_sparse: f64 = rng.random();
        if u_sparse < p_sparsify {
            let idxs = object_indices(&owner, &slots, i);
            if idxs.len() >= 2 {
                let coords: Vec<[f64; 3]> = idxs.iter().map(|&k| slots[k].unwrap().xyz()).collect();
                let keep = farthest_point_sampling(&coords, idxs.len().div_ceil(2), 0)
                    .expect("k <= n by construction");
                let keep: BTreeSet<usize> = keep.into_iter().map(|loc| idxs[loc]).collect();
                for &k in &idxs {
                    if !keep.contains(&k) {
                        slots[k] = None;
                    }
                }
            }
        }
        let _ = &mut owner;
    }

    let mut out = frame.clone();
    out.cloud.points = slots.into_iter().flatten().chain(appended).collect();
    out
}

/// Exact means over frames and per-object point counts (margin 0,
/// overlap points count for every containing box).
pub fn compute_stats(frames: &[Frame]) -> Result<DatasetStats, AugmentError> {
    if frames.is_empty() {
        return Err(AugmentError::EmptyDataset);
    }
    let mut total_points = 0usize;
    let mut per_cat_points: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_cat_objects: BTreeMap<String, usize> = BTreeMap::new();
    for f in frames {
        total_points += f.cloud.len();
        for a in &f.annotations {
            let n = crate::geometry::points_in_box(&f.cloud, &a.box3d, 0.0).len();
            *per_cat_points.entry(a.category.clone()).or_default() += n;
            *per_cat_objects.entry(a.category.clone()).or_default() += 1;
        }
    }
    let mean_points_per_object = per_cat_points
        .iter()
        .map(|(c, &pts)| (c.clone(), pts as f64 / per_cat_objects[c] as f64))
        .collect();
    Ok(DatasetStats {
        frame_count: frames.len(),
        mean_points_per_frame: total_points as f64 / frames.len() as f64,
        mean_points_per_object,
        object_count: per_cat_objects,
    })
}

/// Upsample factors `max(1, target/source)` per shared category, and a
/// background dropout rate `clamp(1 - target_mpf / source_mpf, 0, 1)`.
pub fn match_domains(source: &DatasetStats, target: &DatasetStats) -> MatchPlan {
    let mut factors = BTreeMap::new();
    for (cat, &tgt) in &target.mean_points_per_object {
        match source.mean_points_per_object.get(cat) {
            Some(&src) if src > 0.0 => {
                factors.insert(cat.clone(), (tgt / src).max(1.0));
            }
            _ => {
                log::warn!("category {cat} missing in source stats; factor omitted");
            }
        }
    }
    let rate = if source.mean_points_per_frame > 0.0 {
        (1.0 - target.mean_points_per_frame / source.mean_points_per_frame).clamp(0.0, 1.0)
    } else {
        0.0
    };
    MatchPlan {
        object_upsample_factor: factors,
        background_dropout_rate: rate,
    }
}

/// Grow each object's point count to `round(factor * n)` by adding
/// jittered midpoints of random point pairs, clamped into the box.
pub fn upsample_object_points(
    frame: &Frame,
    factors: &BTreeMap<String, f64>,
    seed: u64,
) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignment = assign_points(frame);
    let mut out = frame.clone();
    let mut skipped = 0usize;
    for (i, a) in frame.annotations.iter().enumerate() {
        let Some(&factor) = factors.get(&a.category) else {
            continue;
        };
        let idxs: Vec<usize> = assignment
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == Some(i))
            .map(|(k, _)| k)
            .collect();
        let n = idxs.len();
        let target = (factor.max(1.0) * n as f64).round() as usize;
        if target <= n {
            continue;
        }
        if n < 2 {
            skipped += 1;
            continue;
        }
        let b = &a.box3d;
        for _ in 0..(target - n) {
            let p1 = frame.cloud.points[idxs[rng.random_range(0..n)]];
            let mut p2 = p1;
            // bounded retries: duplicate points degrade to jitter-only
            for _ in 0..16 {
                p2 = frame.cloud.points[idxs[rng.random_range(0..n)]];
                if p2 != p1 {
                    break;
                }
            }
            let jitter = |rng: &mut ChaCha8Rng| -> f64 {
                let g: f64 = rng.sample(StandardNormal);
                g * 0.01
            };
            let mid = [
                (p1.x + p2.x) / 2.0 + jitter(&mut rng),
                (p1.y + p2.y) / 2.0 + jitter(&mut rng),
                (p1.z + p2.z) / 2.0 + jitter(&mut rng),
            ];
            let mut q = b.to_box_frame(mid);
            q[0] = q[0].clamp(-b.l / 2.0, b.l / 2.0);
            q[1] = q[1].clamp(-b.w / 2.0, b.w / 2.0);
            q[2] = q[2].clamp(-b.h / 2.0, b.h / 2.0);
            let wpt = b.from_box_frame(q);
            out.cloud.points.push(Point::new(
                wpt[0],
                wpt[1],
                wpt[2],
                (p1.intensity + p2.intensity) / 2.0,
            ));
        }
    }
    if skipped > 0 {
        log::warn!("{skipped} objects had < 2 points and were not upsampled");
    }
    out
}

/// Apply a match plan: upsample object points, then drop background
/// points at the plan's rate. Background means provenance `Background`
/// when a provenance table is given, otherwise any point outside all
/// annotation boxes.
pub fn apply_match_plan(
    frame: &Frame,
    plan: &MatchPlan,
    provenance: Option<&[PointProvenance]>,
    seed: u64,
) -> Frame {
    let upsampled = upsample_object_points(frame, &plan.object_upsample_factor, seed);
    if plan.background_dropout_rate <= 0.0 {
        return upsampled;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(crate::semisynth::derive_seed(seed, 2));
    let is_background = |k: usize, p: &Point| -> bool {
        if let Some(prov) = provenance {
            match prov.get(k) {
                Some(PointProvenance::Background) => true,
                Some(PointProvenance::Object(_)) => false,
                None => false, // appended upsample points belong to objects
            }
        } else {
            !frame
                .annotations
                .iter()
                .any(|a| a.box3d.contains(p.xyz(), 0.0))
        }
    };
    let mut out = upsampled.clone();
    out.cloud.points = upsampled
        .cloud
        .points
        .iter()
        .enumerate()
        .filter(|(k, p)| !is_background(*k, p) || rng.random::<f64>() >= plan.background_dropout_rate)
        .map(|(_, p)| *p)
        .collect();
    out
}

/// Replace every box's extents by its category mean and rescale the
/// contained points anisotropically about the box center. Returns the
/// transformed frames and the table used.
pub fn normalize_box_sizes(
    frames: &[Frame],
    table: Option<&ClassSizeTable>,
) -> Result<(Vec<Frame>, ClassSizeTable), AugmentError> {
    if frames.is_empty() {
        return Err(AugmentError::EmptyDataset);
    }
    let table = match table {
        Some(t) => {
            for f in frames {
                for a in &f.annotations {
                    if !t.mean_dims.contains_key(&a.category) {
                        return Err(AugmentError::MissingCategory(a.category.clone()));
                    }
                }
            }
            t.clone()
        }
        None => {
            let mut sums: BTreeMap<String, ([f64; 3], usize)> = BTreeMap::new();
            for f in frames {
                for a in &f.annotations {
                    let e = sums.entry(a.category.clone()).or_insert(([0.0; 3], 0));
                    e.0[0] += a.box3d.l;
                    e.0[1] += a.box3d.w;
                    e.0[2] += a.box3d.h;
                    e.1 += 1;
                }
            }
            ClassSizeTable {
                mean_dims: sums
                    .into_iter()
                    .map(|(c, (s, n))| (c, [s[0] / n as f64, s[1] / n as f64, s[2] / n as f64]))
                    .collect(),
            }
        }
    };

    let out = frames
        .iter()
        .map(|f| {
            let assignment = assign_points(f);
            let mut nf = f.clone();
            for (i, a) in f.annotations.iter().enumerate() {
                let [ml, mw, mh] = table.mean_dims[&a.category];
                let b = a.box3d;
                let ratios = [ml / b.l, mw / b.w, mh / b.h];
                if ratios == [1.0, 1.0, 1.0] {
                    continue; // exact idempotence: skip the round trip
                }
                for (k, o) in assignment.iter().enumerate() {
                    if *o != Some(i) {
                        continue;
                    }
                    let p = &mut nf.cloud.points[k];
                    let mut q = b.to_box_frame(p.xyz());
                    q[0] *= ratios[0];
                    q[1] *= ratios[1];
                    q[2] *= ratios[2];
                    let w = b.from_box_frame(q);
                    p.x = w[0];
                    p.y = w[1];
                    p.z = w[2];
                }
                nf.annotations[i].box3d = Box3D::new(b.cx, b.cy, b.cz, ml, mw, mh, b.yaw);
            }
            nf
        })
        .collect();
    Ok((out, table))
}
