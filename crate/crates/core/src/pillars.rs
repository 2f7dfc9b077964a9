//! Pillarization: bucket a cloud into vertical columns and emit the
//! decorated (P x N x 9) feature tensor plus pseudo-image scatter
//! indices.

use crate::geometry::farthest_point_sampling;
use crate::types::PointCloud;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

pub const FEATURE_DIM: usize = 9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PillarError {
    #[error("invalid pillar config: {0}")]
    InvalidConfig(String),
}

/// Grid geometry and caps. `voxel_size.z` must equal the configured
/// z-range extent: pillars are full-height columns.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PillarConfig {
    /// (vx, vy, vz) in meters.
    pub voxel_size: [f64; 3],
    /// (x_min, x_max, y_min, y_max, z_min, z_max) in meters.
    pub range: [f64; 6],
    pub max_points_per_pillar: usize,
    pub max_pillars: usize,
}

impl PillarConfig {
    /// Paper-default caps and (0.2, 0.2, z-extent) voxels over `range`.
    pub fn new(range: [f64; 6]) -> Self {
        PillarConfig {
            voxel_size: [0.2, 0.2, range[5] - range[4]],
            range,
            max_points_per_pillar: 40,
            max_pillars: 20_000,
        }
    }

    pub fn validate(&self) -> Result<(), PillarError> {
        let [x0, x1, y0, y1, z0, z1] = self.range;
        if !(x1 > x0 && y1 > y0 && z1 > z0) {
            return Err(PillarError::InvalidConfig("range must be ordered".into()));
        }
        if !(self.voxel_size[0] > 0.0 && self.voxel_size[1] > 0.0) {
            return Err(PillarError::InvalidConfig(
                "voxel sizes must be positive".into(),
            ));
        }
        if (self.voxel_size[2] - (z1 - z0)).abs() > 1e-9 {
            return Err(PillarError::InvalidConfig(
                "voxel z-size must equal the z detection range".into(),
            ));
        }
        if self.max_points_per_pillar == 0 || self.max_pillars == 0 {
            return Err(PillarError::InvalidConfig("caps must be positive".into()));
        }
        Ok(())
    }

    /// (W, H): cells along x and y.
    pub fn grid_dims(&self) -> (usize, usize) {
        let w = ((self.range[1] - self.range[0]) / self.voxel_size[0]).ceil() as usize;
        let h = ((self.range[3] - self.range[2]) / self.voxel_size[1]).ceil() as usize;
        (w.max(1), h.max(1))
    }

    pub fn pillar_center(&self, ix: u32, iy: u32) -> [f64; 2] {
        [
            self.range[0] + (ix as f64 + 0.5) * self.voxel_size[0],
            self.range[2] + (iy as f64 + 0.5) * self.voxel_size[1],
        ]
    }
}

/// The decorated pillar tensor: `features` is row-major P x N x 9 with
/// all-zero padding rows beyond `num_points[p]`. Pillars are sorted by
/// (iy, ix). Per-point features: (x, y, z, r, x-xm, y-ym, z-zm,
/// x-cx, y-cy) with (xm, ym, zm) the mean of the pillar's retained
/// points and (cx, cy) the cell center.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PillarTensor {
    pub features: Vec<f64>,
    /// (ix, iy) per pillar.
    pub coords: Vec<[u32; 2]>,
    pub num_points: Vec<usize>,
    pub config: PillarConfig,
}

impl PillarTensor {
    pub fn pillar_count(&self) -> usize {
        self.coords.len()
    }

    pub fn feature(&self, pillar: usize, point: usize, channel: usize) -> f64 {
        let n = self.config.max_points_per_pillar;
        self.features[(pillar * n + point) * FEATURE_DIM + channel]
    }
}

/// Scatter map from pillar index to pseudo-image cell (iy, ix); empty
/// cells are implicitly zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PseudoImageIndex {
    pub height: usize,
    pub width: usize,
    pub mapping: Vec<(usize, [u32; 2])>,
}

/// Bucket in-range points into pillars, FPS-reduce overfull pillars to
/// `max_points_per_pillar`, keep the densest `max_pillars` pillars on
/// overflow (ties to lower (iy, ix)), and decorate.
pub fn pillarize(cloud: &PointCloud, config: &PillarConfig) -> Result<PillarTensor, PillarError> {
    config.validate()?;
    let [x0, x1, y0, y1, z0, z1] = config.range;
    let (w, h) = config.grid_dims();

    let mut buckets: BTreeMap<(u32, u32), Vec<usize>> = BTreeMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        if p.x < x0 || p.x >= x1 || p.y < y0 || p.y >= y1 || p.z < z0 || p.z >= z1 {
            continue;
        }
        let ix = (((p.x - x0) / config.voxel_size[0]).floor() as usize).min(w - 1) as u32;
        let iy = (((p.y - y0) / config.voxel_size[1]).floor() as usize).min(h - 1) as u32;
        buckets.entry((iy, ix)).or_default().push(i);
    }

    let selected: Vec<((u32, u32), Vec<usize>)> = if buckets.len() > config.max_pillars {
        let mut keys: Vec<((u32, u32), usize)> =
            buckets.iter().map(|(k, v)| (*k, v.len())).collect();
        // densest first, ties to lower (iy, ix)
        keys.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut kept: Vec<(u32, u32)> = keys
            .into_iter()
            .take(config.max_pillars)
            .map(|(k, _)| k)
            .collect();
        kept.sort_unstable();
        kept.into_iter()
            .map(|k| {
                let v = buckets.remove(&k).expect("key came from the map");
                (k, v)
            })
            .collect()
    } else {
        buckets.into_iter().collect()
    };

    let n_cap = config.max_points_per_pillar;
    let p_count = selected.len();
    let mut features = alloc::vec![0.0; p_count * n_cap * FEATURE_DIM];
    let mut coords = Vec::with_capacity(p_count);
    let mut num_points = Vec::with_capacity(p_count);

    for (pi, ((iy, ix), bucket)) in selected.into_iter().enumerate() {
        let retained: Vec<usize> = if bucket.len() > n_cap {
            let pts: Vec<[f64; 3]> = bucket.iter().map(|&i| cloud.points[i].xyz()).collect();
            // bucket preserves cloud order, so local index 0 is the
            // lowest original index
            let mut sel = farthest_point_sampling(&pts, n_cap, 0)
                .expect("n_cap <= bucket size checked above");
            sel.sort_unstable();
            sel.into_iter().map(|loc| bucket[loc]).collect()
        } else {
            bucket
        };

        let m = retained.len() as f64;
        let (mut xm, mut ym, mut zm) = (0.0, 0.0, 0.0);
        for &i in &retained {
            let p = cloud.points[i];
            xm += p.x;
            ym += p.y;
            zm += p.z;
        }
        xm /= m;
        ym /= m;
        zm /= m;
        let [pcx, pcy] = config.pillar_center(ix, iy);

        for (row, &i) in retained.iter().enumerate() {
            let p = cloud.points[i];
            let base = (pi * n_cap + row) * FEATURE_DIM;
            features[base] = p.x;
            features[base + 1] = p.y;
            features[base + 2] = p.z;
            features[base + 3] = p.intensity;
            features[base + 4] = p.x - xm;
            features[base + 5] = p.y - ym;
            features[base + 6] = p.z - zm;
            features[base + 7] = p.x - pcx;
            features[base + 8] = p.y - pcy;
        }
        coords.push([ix, iy]);
        num_points.push(retained.len());
    }

    Ok(PillarTensor {
        features,
        coords,
        num_points,
        config: *config,
    })
}

/// Pseudo-image dimensions and the pillar -> (iy, ix) placements.
pub fn scatter_indices(tensor: &PillarTensor) -> PseudoImageIndex {
    let (w, h) = tensor.config.grid_dims();
    PseudoImageIndex {
        height: h,
        width: w,
        mapping: tensor
            .coords
            .iter()
            .enumerate()
            .map(|(p, &[ix, iy])| (p, [iy, ix]))
            .collect(),
    }
}
