//! Rotated-rectangle intersection by convex clipping, and the BEV / 3D
//! IoU built on it.

use crate::types::Box3D;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Vertices closer than this are merged before the area computation to
/// guard against near-degenerate intersections.
const VERTEX_MERGE_EPS: f64 = 1e-9;

/// Distance tolerance for deciding that a clipped-polygon edge lies on a
/// rectangle edge line (used by the area gradient).
const EDGE_ON_LINE_EPS: f64 = 1e-7;

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Clip convex polygon `poly` (CCW) by the half-plane left of `(a, b)`.
fn clip_half_plane(poly: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let n = poly.len();
    for i in 0..n {
        let cur = poly[i];
        let nxt = poly[(i + 1) % n];
        let dc = cross(a, b, cur);
        let dn = cross(a, b, nxt);
        if dc >= 0.0 {
            out.push(cur);
        }
        if (dc > 0.0 && dn < 0.0) || (dc < 0.0 && dn > 0.0) {
            let t = dc / (dc - dn);
            out.push([cur[0] + t * (nxt[0] - cur[0]), cur[1] + t * (nxt[1] - cur[1])]);
        }
    }
    out
}

fn merge_close_vertices(poly: &mut Vec<[f64; 2]>) {
    if poly.len() < 2 {
        return;
    }
    let mut merged: Vec<[f64; 2]> = Vec::with_capacity(poly.len());
    for &v in poly.iter() {
        if let Some(&last) = merged.last() {
            if (v[0] - last[0]).hypot(v[1] - last[1]) < VERTEX_MERGE_EPS {
                continue;
            }
        }
        merged.push(v);
    }
    while merged.len() >= 2 {
        let first = merged[0];
        let last = *merged.last().unwrap();
        if (first[0] - last[0]).hypot(first[1] - last[1]) < VERTEX_MERGE_EPS {
            merged.pop();
        } else {
            break;
        }
    }
    *poly = merged;
}

fn shoelace_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a[0] * b[1] - b[0] * a[1];
    }
    (s / 2.0).abs()
}

/// Intersection polygon of the two BEV footprints (CCW, possibly empty).
fn intersection_polygon(a: &Box3D, b: &Box3D) -> Vec<[f64; 2]> {
    let mut poly: Vec<[f64; 2]> = a.corners_bev().to_vec();
    let cb = b.corners_bev();
    for i in 0..4 {
        if poly.is_empty() {
            return poly;
        }
        poly = clip_half_plane(&poly, cb[i], cb[(i + 1) % 4]);
    }
    merge_close_vertices(&mut poly);
    poly
}

/// Area of the BEV footprint intersection of two boxes.
pub fn bev_intersection_area(a: &Box3D, b: &Box3D) -> f64 {
    shoelace_area(&intersection_polygon(a, b))
}

/// Intersection area together with its gradient w.r.t. the center
/// translation of `moving`.
///
/// Each edge of the intersection polygon lies on a boundary line of one
/// of the two rectangles; translating `moving` sweeps exactly the edges
/// on its own boundary, so `dA/dt = sum(len_e * n_e)` over those edges
/// with `n_e` the outward normal. Non-differentiable configurations
/// (collinear edges, touching contact) are the caller's concern.
pub fn bev_intersection_area_grad(moving: &Box3D, fixed: &Box3D) -> (f64, [f64; 2]) {
    let poly = intersection_polygon(moving, fixed);
    let area = shoelace_area(&poly);
    if poly.len() < 3 {
        return (0.0, [0.0, 0.0]);
    }
    let mc = moving.corners_bev();
    let mut grad = [0.0, 0.0];
    for i in 0..poly.len() {
        let v1 = poly[i];
        let v2 = poly[(i + 1) % poly.len()];
        // classify: does (v1, v2) lie on one of moving's edge lines?
        let mut best: Option<(f64, usize)> = None;
        for j in 0..4 {
            let a = mc[j];
            let b = mc[(j + 1) % 4];
            let len = (b[0] - a[0]).hypot(b[1] - a[1]);
            let d1 = cross(a, b, v1).abs() / len;
            let d2 = cross(a, b, v2).abs() / len;
            let d = d1.max(d2);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, j));
            }
        }
        if let Some((d, j)) = best {
            if d < EDGE_ON_LINE_EPS {
                let a = mc[j];
                let b = mc[(j + 1) % 4];
                let elen = (b[0] - a[0]).hypot(b[1] - a[1]);
                // CCW polygon: outward normal is the edge direction
                // rotated -90 degrees.
                let n = [(b[1] - a[1]) / elen, -(b[0] - a[0]) / elen];
                let seg = (v2[0] - v1[0]).hypot(v2[1] - v1[1]);
                grad[0] += seg * n[0];
                grad[1] += seg * n[1];
            }
        }
    }
    (area, grad)
}

/// Bird's-eye-view IoU of the two yaw-rotated footprints.
pub fn bev_iou(a: &Box3D, b: &Box3D) -> f64 {
    let inter = bev_intersection_area(a, b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.bev_area() + b.bev_area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

fn z_overlap(a: &Box3D, b: &Box3D) -> f64 {
    (a.top_z().min(b.top_z()) - a.bottom_z().max(b.bottom_z())).max(0.0)
}

/// 3D IoU: BEV intersection area times z-overlap, over the volume union.
pub fn iou_3d(a: &Box3D, b: &Box3D) -> f64 {
    let zo = z_overlap(a, b);
    if zo <= 0.0 {
        return 0.0;
    }
    let inter = bev_intersection_area(a, b) * zo;
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.volume() + b.volume() - inter;
    (inter / union).clamp(0.0, 1.0)
}
