//! RANSAC ground-plane estimation with total-least-squares refinement.

use super::GeometryError;
use crate::types::PointCloud;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[allow(unused_imports)]
use num_traits::Float;

/// A plane `normal . p + d = 0` with unit normal and canonical
/// orientation `normal.z > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroundPlane {
    pub normal: [f64; 3],
    pub d: f64,
    pub inlier_count: usize,
    pub threshold: f64,
}

impl GroundPlane {
    /// Unsigned distance from `p` to the plane.
    pub fn distance(&self, p: [f64; 3]) -> f64 {
        self.signed_distance(p).abs()
    }

    pub fn signed_distance(&self, p: [f64; 3]) -> f64 {
        self.normal[0] * p[0] + self.normal[1] * p[1] + self.normal[2] * p[2] + self.d
    }

    /// Plane height at `(x, y)`; requires a non-horizontal-degenerate
    /// normal (`normal.z != 0`), which the canonical orientation gives.
    pub fn z_at(&self, x: f64, y: f64) -> f64 {
        -(self.normal[0] * x + self.normal[1] * y + self.d) / self.normal[2]
    }
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi
/// rotations. Returns (eigenvalues, eigenvectors as columns).
fn jacobi_eigen_3x3(m: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let scale = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .fold(0.0_f64, |acc, (i, j)| acc.max(m[i][j].abs()))
        .max(1e-300);
    for _ in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-15 * scale {
            break;
        }
        for &(p, q) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let mut rot = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
            rot[p][p] = c;
            rot[q][q] = c;
            rot[p][q] = s;
            rot[q][p] = -s;
            // a = rot^T * a * rot; v = v * rot
            let mut tmp = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    tmp[i][j] = (0..3).map(|k| a[i][k] * rot[k][j]).sum();
                }
            }
            for i in 0..3 {
                for j in 0..3 {
                    a[i][j] = (0..3).map(|k| rot[k][i] * tmp[k][j]).sum();
                }
            }
            let mut vn = [[0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    vn[i][j] = (0..3).map(|k| v[i][k] * rot[k][j]).sum();
                }
            }
            v = vn;
        }
    }
    ([a[0][0], a[1][1], a[2][2]], v)
}

/// Total-least-squares plane through `idx`: centroid plus the smallest
/// scatter eigenvector. Returns (unit normal, d).
fn tls_plane(cloud: &PointCloud, idx: &[usize]) -> Option<([f64; 3], f64)> {
    let n = idx.len();
    if n < 3 {
        return None;
    }
    let mut c = [0.0; 3];
    for &i in idx {
        let p = cloud.points[i];
        c[0] += p.x;
        c[1] += p.y;
        c[2] += p.z;
    }
    for v in &mut c {
        *v /= n as f64;
    }
    let mut s = [[0.0; 3]; 3];
    for &i in idx {
        let p = cloud.points[i];
        let d = [p.x - c[0], p.y - c[1], p.z - c[2]];
        for r in 0..3 {
            for q in 0..3 {
                s[r][q] += d[r] * d[q];
            }
        }
    }
    let (vals, vecs) = jacobi_eigen_3x3(s);
    let mut k = 0;
    for i in 1..3 {
        if vals[i] < vals[k] {
            k = i;
        }
    }
    let normal = [vecs[0][k], vecs[1][k], vecs[2][k]];
    let len = norm3(normal);
    if len < 1e-12 {
        return None;
    }
    let normal = [normal[0] / len, normal[1] / len, normal[2] / len];
    let d = -(normal[0] * c[0] + normal[1] * c[1] + normal[2] * c[2]);
    Some((normal, d))
}

fn count_inliers(cloud: &PointCloud, normal: [f64; 3], d: f64, threshold: f64) -> Vec<usize> {
    cloud
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| {
            (normal[0] * p.x + normal[1] * p.y + normal[2] * p.z + d).abs() <= threshold
        })
        .map(|(i, _)| i)
        .collect()
}

fn canonicalize(normal: &mut [f64; 3], d: &mut f64) {
    if normal[2] < 0.0 || (normal[2] == 0.0 && (normal[0] < 0.0 || (normal[0] == 0.0 && normal[1] < 0.0))) {
        for v in normal.iter_mut() {
            *v = -*v;
        }
        *d = -*d;
    }
}

/// Fit a ground plane: best 3-point hypothesis over `iterations` seeded
/// draws, refined by total least squares over its inliers. The refined
/// plane is kept only if it does not lose inliers against the raw
/// hypothesis.
pub fn ransac_plane(
    cloud: &PointCloud,
    iterations: usize,
    threshold: f64,
    seed: u64,
) -> Result<GroundPlane, GeometryError> {
    let n = cloud.len();
    if n < 3 {
        return Err(GeometryError::InsufficientPoints { got: n });
    }
    if iterations == 0 {
        return Err(GeometryError::InvalidArgument(
            "iterations must be >= 1".into(),
        ));
    }
    // negated so a NaN threshold fails validation too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(threshold > 0.0) {
        return Err(GeometryError::InvalidArgument(
            "threshold must be > 0".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<([f64; 3], f64, usize)> = None;
    for _ in 0..iterations {
        let pick = rand::seq::index::sample(&mut rng, n, 3);
        let (i, j, k) = (pick.index(0), pick.index(1), pick.index(2));
        let (p1, p2, p3) = (
            cloud.points[i].xyz(),
            cloud.points[j].xyz(),
            cloud.points[k].xyz(),
        );
        let nv = cross3(sub(p2, p1), sub(p3, p1));
        let len = norm3(nv);
        let span = norm3(sub(p2, p1)).max(norm3(sub(p3, p1))).max(1e-300);
        if len <= 1e-12 * span * span {
            continue; // collinear or coincident sample
        }
        let normal = [nv[0] / len, nv[1] / len, nv[2] / len];
        let d = -(normal[0] * p1[0] + normal[1] * p1[1] + normal[2] * p1[2]);
        let count = count_inliers(cloud, normal, d, threshold).len();
        if best.is_none_or(|(_, _, bc)| count > bc) {
            best = Some((normal, d, count));
        }
    }
    let (mut normal, mut d, raw_count) = best.ok_or(GeometryError::DegenerateSamples)?;

    let raw_inliers = count_inliers(cloud, normal, d, threshold);
    if let Some((rn, rd)) = tls_plane(cloud, &raw_inliers) {
        let refined = count_inliers(cloud, rn, rd, threshold);
        if refined.len() >= raw_count {
            normal = rn;
            d = rd;
        }
    }
    canonicalize(&mut normal, &mut d);
    let inlier_count = count_inliers(cloud, normal, d, threshold).len();
    Ok(GroundPlane {
        normal,
        d,
        inlier_count,
        threshold,
    })
}
