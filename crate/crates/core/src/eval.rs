//! Detection evaluation: greedy score-ordered matching, exact
//! precision/recall sweeps, and 40-recall-position average precision
//! for BEV, 3D and orientation-similarity (AOS) metrics.

use crate::augment::DatasetStats;
use crate::geometry::{bev_iou, iou_3d};
use crate::types::{Annotation, Detection};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("predictions reference frames absent from ground truth: {}", ids.join(", "))]
    UnknownFrames { ids: Vec<String> },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Metric {
    #[cfg_attr(feature = "serde", serde(rename = "bev"))]
    Bev,
    #[cfg_attr(feature = "serde", serde(rename = "3d"))]
    ThreeD,
    /// Average orientation similarity; matching runs in BEV.
    #[cfg_attr(feature = "serde", serde(rename = "aos"))]
    Aos,
}

impl Metric {
    fn pair_iou(self, d: &Detection, g: &Annotation) -> f64 {
        match self {
            Metric::ThreeD => iou_3d(&d.box3d, &g.box3d),
            Metric::Bev | Metric::Aos => bev_iou(&d.box3d, &g.box3d),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct EvalConfig {
    pub metric: Metric,
    pub iou_threshold: f64,
    pub recall_positions: usize,
    /// Predictions below this score are dropped before matching.
    pub score_threshold: f64,
    /// Empty means every category present in the ground truth.
    pub categories: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            metric: Metric::Bev,
            iou_threshold: 0.5,
            recall_positions: 40,
            score_threshold: 0.1,
            categories: Vec::new(),
        }
    }
}

/// Per-category outcome. For the AOS metric `precision_curve` holds the
/// orientation-similarity precision that produced `ap`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoryEval {
    pub ap: f64,
    pub precision_curve: Vec<f64>,
    pub recall_curve: Vec<f64>,
    pub tp: usize,
    pub fp: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_count: usize,
}

/// Categories with zero ground truths are absent rather than scored 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub per_category: BTreeMap<String, CategoryEval>,
    pub m_ap: f64,
}

/// One prediction's fate after matching, carried into the PR sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredMatch {
    pub score: f64,
    pub is_tp: bool,
    /// (1 + cos dyaw)/2 against the matched ground truth; meaningless
    /// for false positives.
    pub orientation_sim: f64,
}

/// Greedy matching: predictions in descending score order (ties to the
/// lower index) each claim the unmatched ground truth of maximum IoU if
/// it reaches `threshold`. Returns (pred index, claimed gt) pairs in
/// processing order. Caller filters categories beforehand.
pub fn match_frame(
    preds: &[Detection],
    gts: &[Annotation],
    metric: Metric,
    threshold: f64,
) -> Vec<(usize, Option<usize>)> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].score.total_cmp(&preds[a].score).then(a.cmp(&b)));

    let mut taken = alloc::vec![false; gts.len()];
    let mut out = Vec::with_capacity(preds.len());
    for pi in order {
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if taken[gi] {
                continue;
            }
            let iou = metric.pair_iou(&preds[pi], g);
            if iou >= threshold && best.is_none_or(|(_, b)| iou > b) {
                best = Some((gi, iou));
            }
        }
        if let Some((gi, _)) = best {
            taken[gi] = true;
            out.push((pi, Some(gi)));
        } else {
            out.push((pi, None));
        }
    }
    out
}

/// Exact PR sweep over distinct scores, then `r_positions`-point AP.
/// `orientation` swaps precision for similarity-weighted precision.
/// Returns (ap, precision_curve, recall_curve, tp, fp).
fn ap_sweep(
    matches: &mut [ScoredMatch],
    gt_count: usize,
    r_positions: usize,
    orientation: bool,
) -> (f64, Vec<f64>, Vec<f64>, usize, usize) {
    debug_assert!(gt_count > 0);
    matches.sort_by(|a, b| b.score.total_cmp(&a.score));

    let mut precision = Vec::new();
    let mut recall = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut sim_sum = 0.0;
    let mut i = 0;
    while i < matches.len() {
        // advance through the whole tie group: thresholds are "score >= s"
        let s = matches[i].score;
        while i < matches.len() && matches[i].score == s {
            if matches[i].is_tp {
                tp += 1;
                sim_sum += matches[i].orientation_sim;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let numer = if orientation { sim_sum } else { tp as f64 };
        precision.push(numer / (tp + fp) as f64);
        recall.push(tp as f64 / gt_count as f64);
    }

    let mut ap = 0.0;
    for r in 1..=r_positions {
        let target = r as f64 / r_positions as f64;
        let mut best = 0.0;
        for (p, rc) in precision.iter().zip(&recall) {
            if *rc >= target && *p > best {
                best = *p;
            }
        }
        ap += best;
    }
    ap /= r_positions as f64;
    (ap, precision, recall, tp, fp)
}

/// 40-point AP over pooled matches; `None` when there is no ground
/// truth to recall.
pub fn average_precision_40(matches: &[ScoredMatch], gt_count: usize) -> Option<f64> {
    if gt_count == 0 {
        return None;
    }
    let mut pool = matches.to_vec();
    Some(ap_sweep(&mut pool, gt_count, 40, false).0)
}

/// Evaluate per-frame predictions against per-frame ground truth, both
/// keyed by frame id. Predictions in categories outside the evaluated
/// set are ignored; ground-truth frames without predictions still count
/// their annotations as misses.
pub fn evaluate(
    preds: &BTreeMap<String, Vec<Detection>>,
    gts: &BTreeMap<String, Vec<Annotation>>,
    config: &EvalConfig,
) -> Result<EvalReport, EvalError> {
    if !(config.iou_threshold > 0.0 && config.iou_threshold <= 1.0) {
        return Err(EvalError::InvalidConfig("iou_threshold must lie in (0, 1]".into()));
    }
    if config.recall_positions == 0 {
        return Err(EvalError::InvalidConfig("recall_positions must be >= 1".into()));
    }
    let unknown: Vec<String> = preds
        .keys()
        .filter(|id| !gts.contains_key(*id))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        return Err(EvalError::UnknownFrames { ids: unknown });
    }

    let categories: BTreeSet<String> = if config.categories.is_empty() {
        gts.values()
            .flatten()
            .map(|a| a.category.clone())
            .collect()
    } else {
        config.categories.iter().cloned().collect()
    };

    let empty: Vec<Detection> = Vec::new();
    let mut per_category = BTreeMap::new();
    for cat in &categories {
        let mut pool: Vec<ScoredMatch> = Vec::new();
        let mut gt_count = 0usize;
        for (frame_id, frame_gts) in gts {
            let cat_gts: Vec<Annotation> = frame_gts
                .iter()
                .filter(|a| &a.category == cat)
                .cloned()
                .collect();
            gt_count += cat_gts.len();
            let cat_preds: Vec<Detection> = preds
                .get(frame_id)
                .unwrap_or(&empty)
                .iter()
                .filter(|d| &d.category == cat && d.score >= config.score_threshold)
                .cloned()
                .collect();
            for (pi, gi) in match_frame(&cat_preds, &cat_gts, config.metric, config.iou_threshold)
            {
                let d = &cat_preds[pi];
                match gi {
                    Some(gi) => pool.push(ScoredMatch {
                        score: d.score,
                        is_tp: true,
                        orientation_sim: 0.5
                            * (1.0 + (d.box3d.yaw - cat_gts[gi].box3d.yaw).cos()),
                    }),
                    None => pool.push(ScoredMatch {
                        score: d.score,
                        is_tp: false,
                        orientation_sim: 0.0,
                    }),
                }
            }
        }
        if gt_count == 0 {
            continue; // AP undefined: leave the category out entirely
        }
        let (ap, precision_curve, recall_curve, tp, fp) = ap_sweep(
            &mut pool,
            gt_count,
            config.recall_positions,
            config.metric == Metric::Aos,
        );
        per_category.insert(
            cat.clone(),
            CategoryEval {
                ap,
                precision_curve,
                recall_curve,
                tp,
                fp,
                fn_count: gt_count - tp,
            },
        );
    }

    let m_ap = if per_category.is_empty() {
        0.0
    } else {
        per_category.values().map(|c| c.ap).sum::<f64>() / per_category.len() as f64
    };
    Ok(EvalReport { per_category, m_ap })
}

/// Target/source ratios of the headline dataset statistics. Categories
/// missing from either side (or with a nonpositive source mean) are
/// omitted.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DatasetComparison {
    pub points_per_frame_ratio: f64,
    pub points_per_object_ratio: BTreeMap<String, f64>,
    pub object_count_ratio: BTreeMap<String, f64>,
}

pub fn dataset_report(source: &DatasetStats, target: &DatasetStats) -> DatasetComparison {
    let mut points_per_object_ratio = BTreeMap::new();
    for (cat, &s) in &source.mean_points_per_object {
        if s <= 0.0 {
            continue;
        }
        if let Some(&t) = target.mean_points_per_object.get(cat) {
            points_per_object_ratio.insert(cat.clone(), t / s);
        }
    }
    let mut object_count_ratio = BTreeMap::new();
    for (cat, &s) in &source.object_count {
        if s == 0 {
            continue;
        }
        if let Some(&t) = target.object_count.get(cat) {
            object_count_ratio.insert(cat.clone(), t as f64 / s as f64);
        }
    }
    DatasetComparison {
        points_per_frame_ratio: if source.mean_points_per_frame > 0.0 {
            target.mean_points_per_frame / source.mean_points_per_frame
        } else {
            0.0
        },
        points_per_object_ratio,
        object_count_ratio,
    }
}
