//! Ground height profile: per-cell median z of near-plane points with
//! nearest-valid fill for empty cells.

use super::{GeometryError, GroundPlane};
use crate::types::PointCloud;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// A 2D grid of ground elevation covering the source cloud's x-y extent.
/// `valid` marks cells that contained near-plane points before filling.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HeightProfile {
    pub origin_xy: [f64; 2],
    pub cell_size: f64,
    nx: usize,
    ny: usize,
    grid: Vec<f64>,
    valid: Vec<bool>,
}

impl HeightProfile {
    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn is_valid(&self, ix: usize, iy: usize) -> bool {
        self.valid[iy * self.nx + ix]
    }

    pub fn cell_z(&self, ix: usize, iy: usize) -> f64 {
        self.grid[iy * self.nx + ix]
    }

    /// Cell index for a world coordinate, or None outside the grid.
    /// The far edges belong to the last cell.
    pub fn cell_index(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fx = (x - self.origin_xy[0]) / self.cell_size;
        let fy = (y - self.origin_xy[1]) / self.cell_size;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let mut ix = fx.floor() as usize;
        let mut iy = fy.floor() as usize;
        if ix == self.nx && fx <= self.nx as f64 {
            ix -= 1;
        }
        if iy == self.ny && fy <= self.ny as f64 {
            iy -= 1;
        }
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        Some((ix, iy))
    }

    /// Ground z at a world coordinate, or None outside coverage.
    pub fn z_at(&self, x: f64, y: f64) -> Option<f64> {
        self.cell_index(x, y).map(|(ix, iy)| self.cell_z(ix, iy))
    }

    pub fn covers(&self, x: f64, y: f64) -> bool {
        self.cell_index(x, y).is_some()
    }
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Build a height profile over the cloud's x-y bounding rectangle.
/// Each cell takes the median z of points within `band` of `plane`;
/// empty cells copy the nearest valid cell (squared center distance,
/// ties by lower `(ix, iy)` lexicographic).
pub fn build_height_profile(
    cloud: &PointCloud,
    plane: &GroundPlane,
    cell_size: f64,
    band: f64,
) -> Result<HeightProfile, GeometryError> {
    // negated so NaN arguments fail validation too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(cell_size > 0.0) {
        return Err(GeometryError::InvalidArgument(
            "cell_size must be > 0".into(),
        ));
    }
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(band > 0.0) {
        return Err(GeometryError::InvalidArgument("band must be > 0".into()));
    }
    if cloud.is_empty() {
        return Err(GeometryError::EmptyBand { band });
    }

    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in &cloud.points {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let nx = (((max_x - min_x) / cell_size).ceil() as usize).max(1);
    let ny = (((max_y - min_y) / cell_size).ceil() as usize).max(1);

    let mut cells: Vec<Vec<f64>> = alloc::vec![Vec::new(); nx * ny];
    for p in &cloud.points {
        if plane.distance(p.xyz()) > band {
            continue;
        }
        let ix = (((p.x - min_x) / cell_size).floor() as usize).min(nx - 1);
        let iy = (((p.y - min_y) / cell_size).floor() as usize).min(ny - 1);
        cells[iy * nx + ix].push(p.z);
    }

    let mut grid = alloc::vec![f64::NAN; nx * ny];
    let mut valid = alloc::vec![false; nx * ny];
    let mut any = false;
    for iy in 0..ny {
        for ix in 0..nx {
            let c = &mut cells[iy * nx + ix];
            if !c.is_empty() {
                grid[iy * nx + ix] = median(c);
                valid[iy * nx + ix] = true;
                any = true;
            }
        }
    }
    if !any {
        return Err(GeometryError::EmptyBand { band });
    }

    // Nearest-valid fill by expanding Chebyshev rings; a ring at radius r
    // cannot beat a found best once r^2 exceeds it.
    let filled: Vec<f64> = (0..nx * ny)
        .map(|idx| {
            if valid[idx] {
                return grid[idx];
            }
            let (ix, iy) = (idx % nx, idx / nx);
            let mut best: Option<(u64, usize, usize)> = None;
            let max_r = nx.max(ny);
            for r in 1..=max_r {
                if let Some((bd, _, _)) = best {
                    if (r as u64) * (r as u64) > bd {
                        break;
                    }
                }
                let (x0, x1) = (ix.saturating_sub(r), (ix + r).min(nx - 1));
                let (y0, y1) = (iy.saturating_sub(r), (iy + r).min(ny - 1));
                for cy in y0..=y1 {
                    for cx in x0..=x1 {
                        let on_ring = cx.abs_diff(ix) == r || cy.abs_diff(iy) == r;
                        if !on_ring || !valid[cy * nx + cx] {
                            continue;
                        }
                        let dx = cx.abs_diff(ix) as u64;
                        let dy = cy.abs_diff(iy) as u64;
                        let d2 = dx * dx + dy * dy;
                        let cand = (d2, cx, cy);
                        if best.is_none_or(|b| cand < b) {
                            best = Some(cand);
                        }
                    }
                }
            }
            let (_, bx, by) = best.expect("at least one valid cell exists");
            grid[by * nx + bx]
        })
        .collect();

    Ok(HeightProfile {
        origin_xy: [min_x, min_y],
        cell_size,
        nx,
        ny,
        grid: filled,
        valid,
    })
}
