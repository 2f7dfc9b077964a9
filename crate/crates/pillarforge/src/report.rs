//! Plain-text rendering of evaluation reports and dataset comparisons.

use pillarforge_core::eval::DatasetComparison;
use pillarforge_core::{DatasetStats, EvalConfig, EvalReport, Metric};
use std::fmt::Write as _;

fn metric_name(metric: Metric) -> &'static str {
    match metric {
        Metric::Bev => "BEV AP",
        Metric::ThreeD => "3D AP",
        Metric::Aos => "AOS",
    }
}

pub fn render_eval(report: &EvalReport, config: &EvalConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} @ IoU {} (R{})",
        metric_name(config.metric),
        config.iou_threshold,
        config.recall_positions
    );
    let name_w = report
        .per_category
        .keys()
        .map(|c| c.len())
        .chain(["category".len(), "mean".len()])
        .max()
        .unwrap();
    let _ = writeln!(out, "{:<name_w$}  {:>8}  {:>6}  {:>6}  {:>6}", "category", "AP", "TP", "FP", "FN");
    for (category, eval) in &report.per_category {
        let _ = writeln!(
            out,
            "{category:<name_w$}  {:>8.4}  {:>6}  {:>6}  {:>6}",
            eval.ap, eval.tp, eval.fp, eval.fn_count
        );
    }
    let _ = writeln!(out, "{:<name_w$}  {:>8.4}", "mean", report.m_ap);
    out
}

pub fn render_stats(stats: &DatasetStats) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "frames: {}", stats.frame_count);
    let _ = writeln!(out, "mean points/frame: {:.1}", stats.mean_points_per_frame);
    for (category, count) in &stats.object_count {
        let mppo = stats.mean_points_per_object.get(category).copied().unwrap_or(0.0);
        let _ = writeln!(out, "  {category}: {count} object(s), {mppo:.1} points/object");
    }
    out
}

pub fn render_comparison(cmp: &DatasetComparison) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "target/source points-per-frame ratio: {:.3}", cmp.points_per_frame_ratio);
    for (category, ratio) in &cmp.points_per_object_ratio {
        let count = cmp.object_count_ratio.get(category).copied();
        match count {
            Some(c) => {
                let _ = writeln!(out, "  {category}: points/object x{ratio:.3}, count x{c:.3}");
            }
            None => {
                let _ = writeln!(out, "  {category}: points/object x{ratio:.3}");
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use pillarforge_core::eval::CategoryEval;
    use std::collections::BTreeMap;

    #[test]
    fn eval_table_is_aligned() {
        let mut per_category = BTreeMap::new();
        per_category.insert(
            "Car".to_owned(),
            CategoryEval {
                ap: 0.9125,
                precision_curve: vec![],
                recall_curve: vec![],
                tp: 3,
                fp: 1,
                fn_count: 0,
            },
        );
        per_category.insert(
            "Pedestrian".to_owned(),
            CategoryEval {
                ap: 1.0,
                precision_curve: vec![],
                recall_curve: vec![],
                tp: 2,
                fp: 0,
                fn_count: 0,
            },
        );
        let report = EvalReport {
            per_category,
            m_ap: 0.95625,
        };
        let text = render_eval(&report, &EvalConfig::default());
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("BEV AP @ IoU 0.5"));
        assert!(lines[1].contains("category"));
        // Column starts line up across rows.
        let ap_col = lines[1].find("AP").unwrap();
        assert_eq!(lines[2].find("0.9125").map(|i| i + 6), Some(ap_col + 2));
        assert!(lines[4].starts_with("mean"));
    }
}
