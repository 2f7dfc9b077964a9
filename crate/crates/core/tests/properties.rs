//! Property tests for the library invariants: IoU geometry, sampling,
//! composition determinism, augmentation identities, pillarization
//! reconstruction, NMS suppression guarantees, loss fixed points and
//! AP monotonicity.

use pillarforge_core::augment::{
    global_transform, normalize_box_sizes, shape_aware_augment, ClassSizeTable,
};
use pillarforge_core::eval::{evaluate, EvalConfig, Metric};
use pillarforge_core::geometry::{
    bev_iou, build_height_profile, farthest_point_sampling, iou_3d, ransac_plane,
};
use pillarforge_core::losses::{
    ema_update, focal_loss, od_iou_loss, student_total_loss, LossWeights,
};
use pillarforge_core::pillars::pillarize;
use pillarforge_core::postprocess::{di_nms, rectify_confidence, NmsParams};
use pillarforge_core::semisynth::{
    add_raycast_noise, compose_frame, dropout_points, NoiseSpec,
};
use pillarforge_core::types::normalize_yaw;
use pillarforge_core::{
    Annotation, Box3D, Detection, Frame, PillarConfig, Point, PointCloud,
};
use proptest::prelude::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn arb_box() -> impl Strategy<Value = Box3D> {
    (
        -30.0..30.0f64,
        -30.0..30.0f64,
        -2.0..2.0f64,
        1.0..6.0f64,
        0.8..3.0f64,
        0.8..2.5f64,
        -PI..PI,
    )
        .prop_map(|(cx, cy, cz, l, w, h, yaw)| Box3D::new(cx, cy, cz, l, w, h, yaw))
}

fn rigid(b: &Box3D, phi: f64, tx: f64, ty: f64) -> Box3D {
    let (s, c) = phi.sin_cos();
    Box3D::new(
        c * b.cx - s * b.cy + tx,
        s * b.cx + c * b.cy + ty,
        b.cz,
        b.l,
        b.w,
        b.h,
        b.yaw + phi,
    )
}

proptest! {
    #[test]
    fn yaw_normalization_preserves_rotation(yaw in -100.0..100.0f64) {
        let n = normalize_yaw(yaw);
        prop_assert!(n > -PI && n <= PI);
        prop_assert!((n.cos() - yaw.cos()).abs() < 1e-12);
        prop_assert!((n.sin() - yaw.sin()).abs() < 1e-12);
    }

    #[test]
    fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
        let (ab, ba) = (bev_iou(&a, &b), bev_iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((ab - ba).abs() < 1e-9);
        let (ab3, ba3) = (iou_3d(&a, &b), iou_3d(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab3));
        prop_assert!((ab3 - ba3).abs() < 1e-9);
    }

    #[test]
    fn iou_rigid_invariance(
        a in arb_box(),
        b in arb_box(),
        phi in -PI..PI,
        tx in -20.0..20.0f64,
        ty in -20.0..20.0f64,
    ) {
        prop_assert!((bev_iou(&a, &b) - bev_iou(&rigid(&a, phi, tx, ty), &rigid(&b, phi, tx, ty))).abs() < 1e-9);
        prop_assert!((iou_3d(&a, &b) - iou_3d(&rigid(&a, phi, tx, ty), &rigid(&b, phi, tx, ty))).abs() < 1e-9);
    }

    #[test]
    fn iou_3d_bounded_by_bev(a in arb_box(), b in arb_box()) {
        prop_assert!(iou_3d(&a, &b) <= bev_iou(&a, &b) + 1e-12);
        // identical z-center and height: the z-overlap ratio is 1 and the
        // two agree
        let aligned = Box3D { cz: a.cz, h: a.h, ..b };
        prop_assert!((iou_3d(&a, &aligned) - bev_iou(&a, &aligned)).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ransac_recount_and_determinism(
        seed in 0u64..1000,
        nx in 0.01..0.3f64,
        ny in -0.3..0.3f64,
        noise in 0.0..0.05f64,
    ) {
        let mut pts = Vec::new();
        let mut state = seed.wrapping_mul(2654435761).wrapping_add(1);
        let mut unit = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..200 {
            let (x, y) = (unit() * 40.0 - 20.0, unit() * 40.0 - 20.0);
            pts.push(Point::new(x, y, nx * x + ny * y + (unit() - 0.5) * noise, 0.0));
        }
        for _ in 0..20 {
            pts.push(Point::new(unit() * 40.0 - 20.0, unit() * 40.0 - 20.0, 3.0 + unit() * 5.0, 0.0));
        }
        let cloud = PointCloud::new("f", pts);
        let plane = ransac_plane(&cloud, 200, 0.1, seed).unwrap();
        let norm = (plane.normal.iter().map(|v| v * v).sum::<f64>()).sqrt();
        prop_assert!((norm - 1.0).abs() < 1e-9);
        prop_assert!(plane.normal[2] >= 0.0);
        let recount = cloud.points.iter().filter(|p| plane.distance(p.xyz()) <= 0.1).count();
        prop_assert_eq!(recount, plane.inlier_count);
        let again = ransac_plane(&cloud, 200, 0.1, seed).unwrap();
        prop_assert_eq!(plane, again);
    }

    #[test]
    fn fps_is_greedy_max_min(
        raw in proptest::collection::vec((-50.0..50.0f64, -50.0..50.0f64, -3.0..3.0f64), 3..12),
        k_frac in 0.0..1.0f64,
        start_frac in 0.0..1.0f64,
    ) {
        let pts: Vec<[f64; 3]> = raw.iter().map(|&(x, y, z)| [x, y, z]).collect();
        let n = pts.len();
        let k = 1 + (k_frac * (n - 1) as f64) as usize;
        let start = (start_frac * n as f64) as usize % n;
        let sel = farthest_point_sampling(&pts, k, start).unwrap();
        prop_assert_eq!(sel[0], start);
        let d2 = |a: [f64; 3], b: [f64; 3]| -> f64 {
            (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
        };
        for i in 1..sel.len() {
            let chosen: Vec<[f64; 3]> = sel[..i].iter().map(|&s| pts[s]).collect();
            let min_to_set = |p: [f64; 3]| chosen.iter().map(|&c| d2(p, c)).fold(f64::INFINITY, f64::min);
            let picked = min_to_set(pts[sel[i]]);
            for (j, &p) in pts.iter().enumerate() {
                if !sel[..i].contains(&j) {
                    prop_assert!(picked >= min_to_set(p) - 1e-12);
                }
            }
        }
    }
}

fn grid_cloud(n_side: usize, spacing: f64) -> PointCloud {
    let mut pts = Vec::new();
    for i in 0..n_side {
        for j in 0..n_side {
            pts.push(Point::new(i as f64 * spacing, j as f64 * spacing, 0.0, 0.3));
        }
    }
    let mut c = PointCloud::new("bg", pts);
    c.sensor_origin = [0.0, 0.0, 3.0];
    c
}

fn toy_synthetic() -> Frame {
    let b = Box3D::new(6.0, 6.0, 0.8, 2.0, 1.2, 1.6, 0.4);
    let mut pts = Vec::new();
    for i in 0..27 {
        let q = [
            ((i % 3) as f64 - 1.0) * 0.5,
            (((i / 3) % 3) as f64 - 1.0) * 0.3,
            ((i / 9) as f64 - 1.0) * 0.5,
        ];
        let w = b.from_box_frame(q);
        pts.push(Point::new(w[0], w[1], w[2], 0.8));
    }
    Frame::new(
        PointCloud::new("syn", pts),
        vec![Annotation {
            object_id: "obj0".into(),
            category: "Car".into(),
            box3d: b,
        }],
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dropout_preserves_survivor_coordinates(rate in 0.0..1.0f64, seed in 0u64..500) {
        let cloud = grid_cloud(12, 1.0);
        let out = dropout_points(&cloud, rate, seed);
        prop_assert!(out.len() <= cloud.len());
        // survivors are an ordered subsequence with identical bits
        let mut it = cloud.points.iter();
        for s in &out.points {
            prop_assert!(it.any(|p| p == s));
        }
    }

    #[test]
    fn noise_moves_points_along_rays(
        mu in -0.1..0.1f64,
        sigma in 0.0..0.3f64,
        fraction in 0.0..1.0f64,
        seed in 0u64..500,
    ) {
        let cloud = grid_cloud(10, 1.3);
        let spec = NoiseSpec { mu, sigma, apply_fraction: fraction, seed };
        let out = add_raycast_noise(&cloud, &spec);
        prop_assert_eq!(out.len(), cloud.len());
        let o = cloud.sensor_origin;
        for (a, b) in cloud.points.iter().zip(&out.points) {
            let u = [a.x - o[0], a.y - o[1], a.z - o[2]];
            let v = [b.x - o[0], b.y - o[1], b.z - o[2]];
            let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            let cross = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let cross_n = (cross.iter().map(|c| c * c).sum::<f64>()).sqrt();
            let angle = cross_n.atan2(dot);
            prop_assert!(angle.abs() < 1e-9, "ray bent by {angle}");
        }
    }

    #[test]
    fn compose_is_deterministic(seed in 0u64..200, dropout in 0.0..0.3f64) {
        let bg = grid_cloud(14, 1.0);
        let syn = toy_synthetic();
        let plane = ransac_plane(&bg, 50, 0.05, 7).unwrap();
        let profile = build_height_profile(&bg, &plane, 1.0, 0.3).unwrap();
        let noise = NoiseSpec { mu: 0.0, sigma: 0.05, apply_fraction: 0.3, seed };
        let a = compose_frame(&bg, &syn, &profile, &noise, dropout, 0.05, seed).unwrap();
        let b = compose_frame(&bg, &syn, &profile, &noise, dropout, 0.05, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn global_transform_round_trips(phi in -PI..PI) {
        let syn = toy_synthetic();
        let back = global_transform(&global_transform(&syn, phi, false, 1.0), -phi, false, 1.0);
        for (a, b) in syn.cloud.points.iter().zip(&back.cloud.points) {
            prop_assert!((a.x - b.x).abs() < 1e-9);
            prop_assert!((a.y - b.y).abs() < 1e-9);
            prop_assert!((a.z - b.z).abs() < 1e-9);
        }
        let (ba, bb) = (&syn.annotations[0].box3d, &back.annotations[0].box3d);
        prop_assert!((ba.cx - bb.cx).abs() < 1e-9);
        prop_assert!((ba.cy - bb.cy).abs() < 1e-9);
        prop_assert!(normalize_yaw(ba.yaw - bb.yaw).abs() < 1e-9);
    }

    #[test]
    fn shape_aware_leaves_outside_points_alone(
        p_drop in 0.0..1.0f64,
        p_swap in 0.0..1.0f64,
        p_sparse in 0.0..1.0f64,
        seed in 0u64..500,
    ) {
        let mut frame = toy_synthetic();
        let outside: Vec<Point> = (0..40)
            .map(|i| Point::new(30.0 + i as f64, -20.0, 0.5, 0.1))
            .collect();
        frame.cloud.points.extend(outside.iter().copied());
        let out = shape_aware_augment(&frame, p_drop, p_swap, p_sparse, seed);
        for p in &outside {
            prop_assert!(out.cloud.points.iter().any(|q| q == p));
        }
    }

    #[test]
    fn normalize_box_sizes_idempotent(
        l in 3.0..5.0f64,
        w in 1.5..2.5f64,
        h in 1.2..2.0f64,
    ) {
        let mut table = ClassSizeTable::default();
        table.mean_dims.insert("Car".into(), [l, w, h]);
        let frames = vec![toy_synthetic()];
        let (once, t1) = normalize_box_sizes(&frames, Some(&table)).unwrap();
        let (twice, _) = normalize_box_sizes(&once, Some(&t1)).unwrap();
        prop_assert_eq!(once, twice);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pillarize_reconstructs_and_respects_caps(
        raw in proptest::collection::vec((0.0..20.0f64, 0.0..20.0f64, -2.9..2.9f64), 1..400),
    ) {
        let pts: Vec<Point> = raw.iter().map(|&(x, y, z)| Point::new(x, y, z, 0.5)).collect();
        let in_range = pts.len();
        let cloud = PointCloud::new("f", pts);
        let cfg = PillarConfig::new([0.0, 20.0, 0.0, 20.0, -3.0, 3.0]);
        let t = pillarize(&cloud, &cfg).unwrap();
        prop_assert!(t.pillar_count() <= cfg.max_pillars);
        let total: usize = t.num_points.iter().sum();
        prop_assert!(total <= in_range);
        let mut saw_overflow = false;
        for p in 0..t.pillar_count() {
            prop_assert!(t.num_points[p] >= 1 && t.num_points[p] <= cfg.max_points_per_pillar);
            if t.num_points[p] == cfg.max_points_per_pillar {
                saw_overflow = true;
            }
            let [ix, iy] = t.coords[p];
            for row in 0..t.num_points[p] {
                let x = cfg.range[0] + (ix as f64 + 0.5) * cfg.voxel_size[0] + t.feature(p, row, 7);
                let y = cfg.range[2] + (iy as f64 + 0.5) * cfg.voxel_size[1] + t.feature(p, row, 8);
                prop_assert!((x - t.feature(p, row, 0)).abs() < 1e-9);
                prop_assert!((y - t.feature(p, row, 1)).abs() < 1e-9);
            }
        }
        if !saw_overflow {
            prop_assert_eq!(total, in_range);
        }
        let again = pillarize(&cloud, &cfg).unwrap();
        prop_assert_eq!(t, again);
    }

    #[test]
    fn pillar_mean_offsets_sum_to_zero(
        raw in proptest::collection::vec((0.0..0.2f64, 0.0..0.2f64, -2.9..2.9f64), 2..39),
    ) {
        // everything lands in one pillar and below the cap: no subsampling,
        // so the mean-offset channels must cancel
        let pts: Vec<Point> = raw.iter().map(|&(x, y, z)| Point::new(x, y, z, 0.5)).collect();
        let cloud = PointCloud::new("f", pts);
        let cfg = PillarConfig::new([0.0, 20.0, 0.0, 20.0, -3.0, 3.0]);
        let t = pillarize(&cloud, &cfg).unwrap();
        prop_assert_eq!(t.pillar_count(), 1);
        for ch in 4..7 {
            let s: f64 = (0..t.num_points[0]).map(|r| t.feature(0, r, ch)).sum();
            prop_assert!(s.abs() < 1e-9);
        }
    }
}

fn clustered_detections() -> impl Strategy<Value = Vec<Detection>> {
    proptest::collection::vec(
        (
            0usize..5,
            -0.25..0.25f64,
            -0.25..0.25f64,
            -0.05..0.05f64,
            0.15..1.0f64,
            proptest::bool::ANY,
        ),
        1..12,
    )
    .prop_map(|items| {
        items
            .into_iter()
            .map(|(anchor, dx, dy, dyaw, score, is_car)| Detection {
                category: (if is_car { "Car" } else { "Truck" }).into(),
                score,
                iou_pred: score,
                direction_front: true,
                box3d: Box3D::new(
                    anchor as f64 * 15.0 + dx,
                    dy,
                    0.0,
                    4.2,
                    1.9,
                    1.6,
                    0.3 + dyaw,
                ),
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn rectify_is_monotone(
        s1 in 0.0..1.0f64,
        s2 in 0.0..1.0f64,
        iou in 0.0..1.0f64,
        beta in 0.001..0.999f64,
    ) {
        let (lo, hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
        prop_assert!(rectify_confidence(lo, iou, beta) <= rectify_confidence(hi, iou, beta) + 1e-15);
        prop_assert!(rectify_confidence(iou, lo, beta) <= rectify_confidence(iou, hi, beta) + 1e-15);
    }

    #[test]
    fn nms_suppression_invariants(dets in clustered_detections()) {
        let params = NmsParams::default();
        let out = di_nms(&dets, &params);
        prop_assert!(out.len() <= dets.len());
        for d in &out {
            prop_assert!(d.score >= params.score_threshold);
        }
        for i in 0..out.len() {
            for j in i + 1..out.len() {
                if out[i].category == out[j].category {
                    prop_assert!(bev_iou(&out[i].box3d, &out[j].box3d) < params.iou_threshold);
                }
            }
        }
        let again = di_nms(&out, &params);
        prop_assert_eq!(out, again);
    }

    #[test]
    fn ema_is_elementwise_contraction(
        t in proptest::collection::vec(-5.0..5.0f64, 1..20),
        s_seed in -5.0..5.0f64,
        alpha in 0.0..1.0f64,
    ) {
        let s: Vec<f64> = t.iter().map(|v| v * 0.5 + s_seed).collect();
        let new = ema_update(&t, &s, alpha).unwrap();
        for ((n, t), s) in new.iter().zip(&t).zip(&s) {
            prop_assert!(((n - s).abs() - alpha * (t - s).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn breakdown_is_linear(
        cls in 0.0..5.0f64,
        od in 0.0..5.0f64,
        dir in 0.0..5.0f64,
        consist in 0.0..5.0f64,
        omega1 in 0.0..3.0f64,
        omega2 in 0.0..3.0f64,
        mu_t in 0.0..3.0f64,
    ) {
        let w = LossWeights { omega1, omega2, mu_t, ..LossWeights::default() };
        let b = student_total_loss(cls, od, dir, consist, &w);
        prop_assert!((b.total - (b.cls + omega1 * b.od_iou + omega2 * b.dir + mu_t * b.consist)).abs() < 1e-12);
        let doubled = student_total_loss(2.0 * cls, 2.0 * od, 2.0 * dir, 2.0 * consist, &w);
        prop_assert!((doubled.total - 2.0 * b.total).abs() < 1e-12);
    }

    #[test]
    fn losses_nonnegative(
        p in 0.001..0.999f64,
        pos in proptest::bool::ANY,
        gamma in 0.0..4.0f64,
        a in arb_box(),
        b in arb_box(),
    ) {
        prop_assert!(focal_loss(p, pos, 0.25, gamma) >= 0.0);
        prop_assert!(od_iou_loss(&a, &b, 1.0) >= 0.0);
        prop_assert!(od_iou_loss(&a, &a, 1.0).abs() < 1e-12);
    }
}

// ---- AP properties ----

fn gt_at(i: usize) -> Annotation {
    Annotation {
        object_id: format!("g{i}"),
        category: "Car".into(),
        box3d: Box3D::new(i as f64 * 15.0, 0.0, 0.0, 4.0, 2.0, 1.5, 0.0),
    }
}

fn pred_near(i: usize, dx: f64, dy: f64, score: f64) -> Detection {
    Detection {
        category: "Car".into(),
        score,
        iou_pred: score,
        direction_front: true,
        box3d: Box3D::new(i as f64 * 15.0 + dx, dy, 0.0, 4.0, 2.0, 1.5, 0.0),
    }
}

fn ap_fixture() -> impl Strategy<Value = (Vec<Annotation>, Vec<Detection>)> {
    (
        1usize..5,
        proptest::collection::vec((0usize..5, -0.35..0.35f64, -0.35..0.35f64, 0.05..1.0f64), 0..8),
        proptest::collection::vec(0.05..1.0f64, 0..4),
    )
        .prop_map(|(n_gt, near, fps)| {
            let gts: Vec<Annotation> = (0..n_gt).map(gt_at).collect();
            let mut preds = Vec::new();
            for (slot, dx, dy, score) in near {
                preds.push(pred_near(slot % n_gt, dx, dy, score));
            }
            for (k, score) in fps.into_iter().enumerate() {
                preds.push(pred_near(0, 500.0 + 20.0 * k as f64, 300.0, score));
            }
            (gts, preds)
        })
}

fn run_eval(gts: &[Annotation], preds: &[Detection], metric: Metric) -> pillarforge_core::EvalReport {
    let mut pm = BTreeMap::new();
    pm.insert("f".to_string(), preds.to_vec());
    let mut gm = BTreeMap::new();
    gm.insert("f".to_string(), gts.to_vec());
    let cfg = EvalConfig {
        metric,
        score_threshold: 0.0,
        ..EvalConfig::default()
    };
    evaluate(&pm, &gm, &cfg).unwrap()
}

/// Exact all-threshold AP: integrate the interpolated precision
/// envelope over recall.
fn exact_ap(precision: &[f64], recall: &[f64]) -> f64 {
    let mut distinct: Vec<f64> = recall.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut total = 0.0;
    let mut prev = 0.0;
    for &r in &distinct {
        let envelope = precision
            .iter()
            .zip(recall)
            .filter(|(_, rc)| **rc >= r)
            .map(|(p, _)| *p)
            .fold(0.0, f64::max);
        total += (r - prev) * envelope;
        prev = r;
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ap_bounds_and_counts((gts, preds) in ap_fixture()) {
        let r = run_eval(&gts, &preds, Metric::Bev);
        let c = &r.per_category["Car"];
        prop_assert!((0.0..=1.0).contains(&c.ap));
        prop_assert_eq!(c.tp + c.fn_count, gts.len());
        prop_assert_eq!(c.tp + c.fp, preds.len());
    }

    #[test]
    fn ap_never_increases_with_trailing_fp((gts, preds) in ap_fixture()) {
        let base = run_eval(&gts, &preds, Metric::Bev).per_category["Car"].ap;
        let lowest = preds.iter().map(|p| p.score).fold(1.0, f64::min);
        let mut worse = preds.clone();
        worse.push(pred_near(0, 900.0, 900.0, lowest / 2.0));
        let edited = run_eval(&gts, &worse, Metric::Bev).per_category["Car"].ap;
        prop_assert!(edited <= base + 1e-12);
    }

    #[test]
    fn ap_never_decreases_with_leading_tp((gts, preds) in ap_fixture()) {
        // grow the scene by one unclaimed ground truth, then detect it
        // with the top score
        let mut gts2 = gts.clone();
        gts2.push(gt_at(50));
        let base = run_eval(&gts2, &preds, Metric::Bev).per_category["Car"].ap;
        let highest = preds.iter().map(|p| p.score).fold(0.0, f64::max);
        let mut better = preds.clone();
        better.push(pred_near(50, 0.0, 0.0, highest + 0.5));
        let edited = run_eval(&gts2, &better, Metric::Bev).per_category["Car"].ap;
        prop_assert!(edited >= base - 1e-12);
    }

    #[test]
    fn aos_bounded_by_bev_ap((gts, preds) in ap_fixture()) {
        let bev = run_eval(&gts, &preds, Metric::Bev).per_category["Car"].ap;
        let aos = run_eval(&gts, &preds, Metric::Aos).per_category["Car"].ap;
        prop_assert!(aos <= bev + 1e-12);
    }

    #[test]
    fn ap_invariant_under_monotone_score_transform((gts, preds) in ap_fixture()) {
        let base = run_eval(&gts, &preds, Metric::Bev).per_category["Car"].ap;
        let squashed: Vec<Detection> = preds
            .iter()
            .map(|p| Detection { score: 0.05 + 0.9 * p.score, ..p.clone() })
            .collect();
        let transformed = run_eval(&gts, &squashed, Metric::Bev).per_category["Car"].ap;
        prop_assert!((base - transformed).abs() < 1e-12);
    }

    #[test]
    fn ap40_within_discretization_bound_of_exact((gts, preds) in ap_fixture()) {
        let r = run_eval(&gts, &preds, Metric::Bev);
        let c = &r.per_category["Car"];
        let exact = exact_ap(&c.precision_curve, &c.recall_curve);
        prop_assert!(c.ap <= exact + 1e-12);
        prop_assert!(exact - c.ap <= 1.0 / 40.0 + 1e-12);
    }
}
