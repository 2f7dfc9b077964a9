//! Self-ensembling loss arithmetic: focal classification, OD-IoU box
//! regression, direction cross-entropy, teacher-student consistency,
//! and the EMA teacher update. Pure scalar math with analytic
//! gradients where a training loop would need them.

use crate::geometry::{bev_intersection_area_grad, bev_iou, iou_3d};
use crate::types::{normalize_yaw, Box3D, Detection};
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("parameter vectors differ in length: {teacher} vs {student}")]
    LengthMismatch { teacher: usize, student: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct LossWeights {
    pub omega1: f64,
    pub omega2: f64,
    pub mu_t: f64,
    /// Orientation-term weight inside the OD-IoU loss.
    pub gamma_o: f64,
    pub focal_alpha: f64,
    pub focal_gamma: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            omega1: 1.0,
            omega2: 0.2,
            mu_t: 1.0,
            gamma_o: 1.0,
            focal_alpha: 0.25,
            focal_gamma: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub cls: f64,
    pub od_iou: f64,
    pub dir: f64,
    pub consist: f64,
    pub total: f64,
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Focal loss for one binary prediction; `p` is clamped into
/// [1e-7, 1-1e-7] first.
pub fn focal_loss(p: f64, is_positive: bool, alpha: f64, gamma: f64) -> f64 {
    let p = clamp_prob(p);
    if is_positive {
        -alpha * (1.0 - p).powf(gamma) * p.ln()
    } else {
        -(1.0 - alpha) * p.powf(gamma) * (1.0 - p).ln()
    }
}

/// dL/dp of `focal_loss` at the clamped point.
pub fn focal_loss_grad(p: f64, is_positive: bool, alpha: f64, gamma: f64) -> f64 {
    let p = clamp_prob(p);
    if is_positive {
        // gamma = 0 kills the first term; skip it so (1-p)^(gamma-1)
        // cannot blow up
        let bend = if gamma == 0.0 {
            0.0
        } else {
            gamma * (1.0 - p).powf(gamma - 1.0) * p.ln()
        };
        alpha * (bend - (1.0 - p).powf(gamma) / p)
    } else {
        let bend = if gamma == 0.0 {
            0.0
        } else {
            gamma * p.powf(gamma - 1.0) * (1.0 - p).ln()
        };
        -(1.0 - alpha) * (bend - p.powf(gamma) / (1.0 - p))
    }
}

/// Direction cross-entropy; `p_front` clamped as in `focal_loss`.
pub fn direction_loss(p_front: f64, front_target: bool) -> f64 {
    let p = clamp_prob(p_front);
    if front_target {
        -p.ln()
    } else {
        -(1.0 - p).ln()
    }
}

pub fn direction_loss_grad(p_front: f64, front_target: bool) -> f64 {
    let p = clamp_prob(p_front);
    if front_target {
        -1.0 / p
    } else {
        1.0 / (1.0 - p)
    }
}

/// Diagonal-squared of the smallest axis-aligned box enclosing both
/// boxes, plus the attainment pattern of each extreme (+1 where the
/// pred box attains it, used by the center gradient).
fn enclosing_diag_sq(pred: &Box3D, gt: &Box3D) -> (f64, [f64; 3]) {
    let pc = pred.corners_bev();
    let gc = gt.corners_bev();
    let mut diag_sq = 0.0;
    let mut grad = [0.0; 3];
    for axis in 0..2 {
        let pmax = pc.iter().map(|c| c[axis]).fold(f64::NEG_INFINITY, f64::max);
        let pmin = pc.iter().map(|c| c[axis]).fold(f64::INFINITY, f64::min);
        let gmax = gc.iter().map(|c| c[axis]).fold(f64::NEG_INFINITY, f64::max);
        let gmin = gc.iter().map(|c| c[axis]).fold(f64::INFINITY, f64::min);
        let span = pmax.max(gmax) - pmin.min(gmin);
        diag_sq += span * span;
        let d_span = (if pmax > gmax { 1.0 } else { 0.0 }) - (if pmin < gmin { 1.0 } else { 0.0 });
        grad[axis] = 2.0 * span * d_span;
    }
    let span_z = pred.top_z().max(gt.top_z()) - pred.bottom_z().min(gt.bottom_z());
    diag_sq += span_z * span_z;
    let d_span_z = (if pred.top_z() > gt.top_z() { 1.0 } else { 0.0 })
        - (if pred.bottom_z() < gt.bottom_z() { 1.0 } else { 0.0 });
    grad[2] = 2.0 * span_z * d_span_z;
    (diag_sq, grad)
}

/// OD-IoU regression loss:
/// `1 - iou_3d + ||c_pred - c_gt||^2 / diag^2 + gamma_o * (1 - |cos(dyaw)|)`
/// with `diag` the diagonal of the joint axis-aligned enclosing box.
pub fn od_iou_loss(pred: &Box3D, gt: &Box3D, gamma_o: f64) -> f64 {
    let dist_sq = (pred.cx - gt.cx).powi(2) + (pred.cy - gt.cy).powi(2) + (pred.cz - gt.cz).powi(2);
    let (diag_sq, _) = enclosing_diag_sq(pred, gt);
    let orient = 1.0 - (pred.yaw - gt.yaw).cos().abs();
    1.0 - iou_3d(pred, gt) + dist_sq / diag_sq + gamma_o * orient
}

/// d(od_iou_loss)/d(pred center). Exact away from contact boundaries
/// and enclosing-box attainment ties.
pub fn od_iou_loss_center_grad(pred: &Box3D, gt: &Box3D, _gamma_o: f64) -> [f64; 3] {
    // IoU term: iou = vi/vu, vu = va + vb - vi, so d(iou)/d(vi) =
    // (va + vb)/vu^2
    let (area, area_grad) = bev_intersection_area_grad(pred, gt);
    let zo = (pred.top_z().min(gt.top_z()) - pred.bottom_z().max(gt.bottom_z())).max(0.0);
    let mut grad = [0.0; 3];
    if area > 0.0 && zo > 0.0 {
        let vi = area * zo;
        let vu = pred.volume() + gt.volume() - vi;
        let diou_dvi = (pred.volume() + gt.volume()) / (vu * vu);
        let dzo_dz = (if pred.top_z() < gt.top_z() { 1.0 } else { 0.0 })
            - (if pred.bottom_z() > gt.bottom_z() { 1.0 } else { 0.0 });
        // loss has -iou, so negate
        grad[0] -= diou_dvi * zo * area_grad[0];
        grad[1] -= diou_dvi * zo * area_grad[1];
        grad[2] -= diou_dvi * area * dzo_dz;
    }

    let delta = [pred.cx - gt.cx, pred.cy - gt.cy, pred.cz - gt.cz];
    let dist_sq: f64 = delta.iter().map(|d| d * d).sum();
    let (diag_sq, diag_grad) = enclosing_diag_sq(pred, gt);
    for axis in 0..3 {
        // quotient rule on dist^2/diag^2
        grad[axis] += (2.0 * delta[axis] * diag_sq - dist_sq * diag_grad[axis]) / (diag_sq * diag_sq);
    }
    grad
}

/// Huber-style smooth L1 with transition at 1.
fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

/// Teacher-student consistency: teachers in score order greedily claim
/// the unmatched student of max BEV IoU (if >= `match_iou`); each pair
/// contributes smooth-L1 over the 7 box parameters (yaw difference
/// wrapped) plus smooth-L1 between scores. Mean over pairs; no pairs
/// gives 0.
pub fn consistency_loss(student: &[Detection], teacher: &[Detection], match_iou: f64) -> f64 {
    debug_assert!(match_iou > 0.0 && match_iou <= 1.0);
    let mut t_order: Vec<usize> = (0..teacher.len()).collect();
    t_order.sort_by(|&a, &b| {
        teacher[b]
            .score
            .total_cmp(&teacher[a].score)
            .then(a.cmp(&b))
    });

    let mut claimed = alloc::vec![false; student.len()];
    let mut total = 0.0;
    let mut pairs = 0usize;
    for ti in t_order {
        let t = &teacher[ti];
        let mut best: Option<(usize, f64)> = None;
        for (si, s) in student.iter().enumerate() {
            if claimed[si] {
                continue;
            }
            let iou = bev_iou(&s.box3d, &t.box3d);
            if iou >= match_iou && best.is_none_or(|(_, b)| iou > b) {
                best = Some((si, iou));
            }
        }
        let Some((si, _)) = best else { continue };
        claimed[si] = true;
        let s = &student[si];
        let (a, b) = (&s.box3d, &t.box3d);
        total += smooth_l1(a.cx - b.cx)
            + smooth_l1(a.cy - b.cy)
            + smooth_l1(a.cz - b.cz)
            + smooth_l1(a.l - b.l)
            + smooth_l1(a.w - b.w)
            + smooth_l1(a.h - b.h)
            + smooth_l1(normalize_yaw(a.yaw - b.yaw))
            + smooth_l1(s.score - t.score);
        pairs += 1;
    }
    if pairs == 0 {
        0.0
    } else {
        total / pairs as f64
    }
}

/// Assemble the student objective
/// `cls + omega1*od + omega2*dir + mu_t*consist`.
pub fn student_total_loss(cls: f64, od: f64, dir: f64, consist: f64, w: &LossWeights) -> LossBreakdown {
    LossBreakdown {
        cls,
        od_iou: od,
        dir,
        consist,
        total: cls + w.omega1 * od + w.omega2 * dir + w.mu_t * consist,
    }
}

/// Element-wise `alpha*teacher + (1-alpha)*student`.
pub fn ema_update(teacher: &[f64], student: &[f64], alpha: f64) -> Result<Vec<f64>, LossError> {
    if teacher.len() != student.len() {
        return Err(LossError::LengthMismatch {
            teacher: teacher.len(),
            student: student.len(),
        });
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(LossError::InvalidArgument(
            "alpha must lie in [0, 1]".into(),
        ));
    }
    Ok(teacher
        .iter()
        .zip(student)
        .map(|(&t, &s)| alpha * t + (1.0 - alpha) * s)
        .collect())
}
