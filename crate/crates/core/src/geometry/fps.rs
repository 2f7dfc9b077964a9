//! Greedy max-min farthest point sampling.

use super::GeometryError;
use alloc::vec::Vec;

fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

/// Select `k` indices by greedy max-min distance: the first pick is
/// `start_index`, each following pick maximizes the distance to the
/// already-selected set, ties broken by the lowest index.
pub fn farthest_point_sampling(
    points: &[[f64; 3]],
    k: usize,
    start_index: usize,
) -> Result<Vec<usize>, GeometryError> {
    let n = points.len();
    if k > n {
        return Err(GeometryError::InvalidArgument(alloc::format!(
            "k = {k} exceeds point count {n}"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }
    if start_index >= n {
        return Err(GeometryError::InvalidArgument(alloc::format!(
            "start_index = {start_index} out of bounds for {n} points"
        )));
    }

    let mut selected = Vec::with_capacity(k);
    let mut picked = alloc::vec![false; n];
    // min squared distance from each point to the selected set
    let mut min_d2 = alloc::vec![f64::INFINITY; n];

    let mut cur = start_index;
    selected.push(cur);
    picked[cur] = true;
    while selected.len() < k {
        let mut best: Option<(f64, usize)> = None;
        for i in 0..n {
            let d = dist2(points[i], points[cur]);
            if d < min_d2[i] {
                min_d2[i] = d;
            }
            if !picked[i] {
                // strict > keeps the lowest index on ties
                if best.is_none_or(|(bd, _)| min_d2[i] > bd) {
                    best = Some((min_d2[i], i));
                }
            }
        }
        let (_, idx) = best.expect("k <= n guarantees an unpicked point");
        cur = idx;
        selected.push(cur);
        picked[cur] = true;
    }
    Ok(selected)
}
