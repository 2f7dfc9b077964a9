//! Detection post-processing: confidence rectification from the
//! IoU-prediction head, distance-variant IoU-weighted NMS, and
//! direction-bin decoding.

use crate::geometry::{bev_iou, iou_3d};
use crate::types::{normalize_yaw, Box3D, Detection};
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct NmsParams {
    pub iou_threshold: f64,
    pub score_threshold: f64,
    /// Confidence-rectification exponent in [0, 1].
    pub beta: f64,
    /// Weight exponent at zero distance; decays with distance so far
    /// clusters average near-uniformly.
    pub tau_near: f64,
    /// Distance scale of the exponent decay, meters.
    pub d_ref: f64,
    /// Reference point distances are measured from (the sensor, usually).
    pub origin: [f64; 2],
    /// Cluster with 3D IoU instead of BEV.
    pub use_3d_iou: bool,
}

impl Default for NmsParams {
    fn default() -> Self {
        NmsParams {
            iou_threshold: 0.2,
            score_threshold: 0.1,
            beta: 0.5,
            tau_near: 4.0,
            d_ref: 40.0,
            origin: [0.0, 0.0],
            use_3d_iou: false,
        }
    }
}

/// Geometric interpolation `score^(1-beta) * iou_pred^beta`; both bases
/// are clamped to >= 1e-12 so the 0^0 corner follows the continuous
/// limit.
pub fn rectify_confidence(score: f64, iou_pred: f64, beta: f64) -> f64 {
    let s = score.max(1e-12);
    let i = iou_pred.max(1e-12);
    s.powf(1.0 - beta) * i.powf(beta)
}

/// Flip yaw by pi when the direction bin disagrees with the canonical
/// front half-plane yaw in (-pi/2, pi/2].
pub fn decode_direction(box3d: Box3D, direction_front: bool) -> Box3D {
    let front = box3d.yaw > -PI / 2.0 && box3d.yaw <= PI / 2.0;
    if front == direction_front {
        return box3d;
    }
    Box3D {
        yaw: normalize_yaw(box3d.yaw + PI),
        ..box3d
    }
}

fn pair_iou(a: &Box3D, b: &Box3D, params: &NmsParams) -> f64 {
    if params.use_3d_iou {
        iou_3d(a, b)
    } else {
        bev_iou(a, b)
    }
}

/// Weighted circular mean of doubled yaws, halved, on the branch
/// nearest `anchor`.
fn weighted_yaw_mean(yaws: &[f64], weights: &[f64], anchor: f64) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (&y, &w) in yaws.iter().zip(weights) {
        s += w * (2.0 * y).sin();
        c += w * (2.0 * y).cos();
    }
    if s * s + c * c < 1e-24 {
        return anchor;
    }
    let half = normalize_yaw(f64::atan2(s, c) / 2.0);
    let alt = normalize_yaw(half + PI);
    if normalize_yaw(half - anchor).abs() <= normalize_yaw(alt - anchor).abs() {
        half
    } else {
        alt
    }
}

/// Distance-variant IoU-weighted NMS. Expects rectified scores.
///
/// Greedily pops the highest-scoring detection, clusters same-category
/// detections with IoU >= `iou_threshold` against it, and replaces the
/// cluster with one box whose parameters are averaged with weights
/// `iou_i^tau`, `tau = tau_near * exp(-dist/d_ref)`: sharp IoU weighting
/// near the sensor, near-uniform smoothing far away. The merged score is
/// the cluster maximum.
pub fn di_nms(detections: &[Detection], params: &NmsParams) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..detections.len())
        .filter(|&i| detections[i].score >= params.score_threshold)
        .collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .score
            .total_cmp(&detections[a].score)
            .then(a.cmp(&b))
    });

    let mut alive: Vec<usize> = order;
    let mut out = Vec::new();
    while let Some(&top) = alive.first() {
        let t = &detections[top];
        let mut cluster = Vec::with_capacity(4);
        let mut rest = Vec::with_capacity(alive.len());
        for &i in &alive {
            if i == top
                || (detections[i].category == t.category
                    && pair_iou(&detections[i].box3d, &t.box3d, params) >= params.iou_threshold)
            {
                cluster.push(i);
            } else {
                rest.push(i);
            }
        }
        alive = rest;

        if cluster.len() == 1 {
            out.push(t.clone());
            continue;
        }

        let dist = f64::hypot(t.box3d.cx - params.origin[0], t.box3d.cy - params.origin[1]);
        let tau = params.tau_near * (-dist / params.d_ref).exp();
        let weights: Vec<f64> = cluster
            .iter()
            .map(|&i| pair_iou(&detections[i].box3d, &t.box3d, params).powf(tau))
            .collect();
        let total: f64 = weights.iter().sum();

        let mut acc = [0.0; 6];
        let mut yaws = Vec::with_capacity(cluster.len());
        for (&i, &w) in cluster.iter().zip(&weights) {
            let b = &detections[i].box3d;
            for (a, v) in acc.iter_mut().zip([b.cx, b.cy, b.cz, b.l, b.w, b.h]) {
                *a += w * v;
            }
            yaws.push(b.yaw);
        }
        for a in &mut acc {
            *a /= total;
        }
        let yaw = weighted_yaw_mean(&yaws, &weights, t.box3d.yaw);
        out.push(Detection {
            category: t.category.clone(),
            score: t.score,
            iou_pred: t.iou_pred,
            direction_front: t.direction_front,
            box3d: Box3D::new(acc[0], acc[1], acc[2], acc[3], acc[4], acc[5], yaw),
        });
    }
    out
}
