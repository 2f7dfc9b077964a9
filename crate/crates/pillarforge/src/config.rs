//! Run configuration shared by all subcommands, loaded from JSON.
//!
//! Every section has working defaults so `pillarforge <cmd>` runs without a
//! config file; unknown keys are rejected to catch typos.

use pillarforge_core::{EvalConfig, MatchPlan, NmsParams, PillarConfig, SensorSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; per-frame seeds are `seed ^ frame_index`.
    pub seed: u64,
    pub sensor: SensorSpec,
    pub generate: GenerateConfig,
    pub augment: AugmentConfig,
    /// Density-matching plan applied by `augment` when present.
    pub match_plan: Option<MatchPlan>,
    /// Pillarization grid; required by `pillarize`.
    pub pillars: Option<PillarSection>,
    pub nms: NmsParams,
    pub eval: EvalConfig,
    pub convert: ConvertConfig,
    /// Extra simulator-class → category entries for `convert`.
    pub class_map: BTreeMap<String, String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 42,
            sensor: SensorSpec::default(),
            generate: GenerateConfig::default(),
            augment: AugmentConfig::default(),
            match_plan: None,
            pillars: None,
            nms: NmsParams::default(),
            eval: EvalConfig::default(),
            convert: ConvertConfig::default(),
            class_map: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    /// Minimum gap between a placed box and surviving background points.
    pub clearance: f64,
    pub ransac_iterations: usize,
    pub ransac_threshold: f64,
    /// Height-profile cell edge length in meters.
    pub profile_cell: f64,
    /// Vertical band above the ground plane contributing to the profile.
    pub profile_band: f64,
    /// Apply dropout + range noise to every k-th frame (0 disables).
    pub augment_every: usize,
    pub dropout_range: [f64; 2],
    pub noise_fraction_range: [f64; 2],
    pub noise_sigma: f64,
    pub noise_mu: f64,
    /// Write binary instead of ASCII PCD payloads.
    pub binary_pcd: bool,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            clearance: 0.05,
            ransac_iterations: 1000,
            ransac_threshold: 0.1,
            profile_cell: 1.0,
            profile_band: 0.3,
            augment_every: 2,
            dropout_range: [0.0, 0.2],
            noise_fraction_range: [0.2, 0.4],
            noise_sigma: 0.2,
            noise_mu: 0.0,
            binary_pcd: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    /// Global yaw rotation drawn uniformly from this range per frame.
    pub rotation_range: [f64; 2],
    pub flip_probability: f64,
    /// Global scale drawn uniformly from this range per frame.
    pub scale_range: [f64; 2],
    pub shape_dropout: f64,
    pub shape_swap: f64,
    pub shape_sparsify: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            rotation_range: [0.0, 0.0],
            flip_probability: 0.0,
            scale_range: [1.0, 1.0],
            shape_dropout: 0.0,
            shape_swap: 0.0,
            shape_sparsify: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PillarSection {
    /// `[x_min, x_max, y_min, y_max, z_min, z_max]` crop in meters.
    pub range: [f64; 6],
    pub voxel_size: Option<[f64; 3]>,
    pub max_points_per_pillar: Option<usize>,
    pub max_pillars: Option<usize>,
}

impl PillarSection {
    pub fn to_config(&self) -> PillarConfig {
        let mut config = PillarConfig::new(self.range);
        if let Some(v) = self.voxel_size {
            config.voxel_size = v;
        }
        if let Some(n) = self.max_points_per_pillar {
            config.max_points_per_pillar = n;
        }
        if let Some(p) = self.max_pillars {
            config.max_pillars = p;
        }
        config
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvertConfig {
    /// Simulator extents are half sizes (CARLA convention).
    pub half_extents: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let display = path.display().to_string();
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: display.clone(),
            source,
        })?;
        let config: RunConfig = serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: display,
            source,
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        let unit = |name: &str, v: f64| -> Result<(), ConfigError> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} = {v} outside [0, 1]")))
            }
        };
        let ordered_unit = |name: &str, r: [f64; 2]| -> Result<(), ConfigError> {
            if r[0] <= r[1] && (0.0..=1.0).contains(&r[0]) && (0.0..=1.0).contains(&r[1]) {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} = {r:?} is not an ordered range within [0, 1]")))
            }
        };

        let g = &self.generate;
        if g.clearance < 0.0 {
            return bad(format!("generate.clearance = {} is negative", g.clearance));
        }
        if g.ransac_iterations == 0 {
            return bad("generate.ransac_iterations must be positive".into());
        }
        // comparisons below are spelled negated so NaN values fail validation
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(g.ransac_threshold > 0.0) {
            return bad(format!("generate.ransac_threshold = {} must be positive", g.ransac_threshold));
        }
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(g.profile_cell > 0.0) || !(g.profile_band > 0.0) {
            return bad("generate.profile_cell and profile_band must be positive".into());
        }
        ordered_unit("generate.dropout_range", g.dropout_range)?;
        ordered_unit("generate.noise_fraction_range", g.noise_fraction_range)?;
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(g.noise_sigma >= 0.0) {
            return bad(format!("generate.noise_sigma = {} must be non-negative", g.noise_sigma));
        }

        let a = &self.augment;
        if a.rotation_range[0] > a.rotation_range[1] {
            return bad(format!("augment.rotation_range = {:?} is not ordered", a.rotation_range));
        }
        unit("augment.flip_probability", a.flip_probability)?;
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(a.scale_range[0] > 0.0) || a.scale_range[0] > a.scale_range[1] {
            return bad(format!("augment.scale_range = {:?} must be ordered and positive", a.scale_range));
        }
        unit("augment.shape_dropout", a.shape_dropout)?;
        unit("augment.shape_swap", a.shape_swap)?;
        unit("augment.shape_sparsify", a.shape_sparsify)?;

        if let Some(plan) = &self.match_plan {
            unit("match_plan.background_dropout_rate", plan.background_dropout_rate)?;
            for (category, &f) in &plan.object_upsample_factor {
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(f > 0.0) || !f.is_finite() {
                    return bad(format!("match_plan.object_upsample_factor[{category:?}] = {f} must be positive"));
                }
            }
        }

        if let Some(pillars) = &self.pillars {
            pillars
                .to_config()
                .validate()
                .map_err(|e| ConfigError::Invalid(format!("pillars: {e}")))?;
        }

        let n = &self.nms;
        unit("nms.iou_threshold", n.iou_threshold)?;
        unit("nms.score_threshold", n.score_threshold)?;
        unit("nms.beta", n.beta)?;
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(n.d_ref > 0.0) {
            return bad(format!("nms.d_ref = {} must be positive", n.d_ref));
        }

        let e = &self.eval;
        if !(e.iou_threshold > 0.0 && e.iou_threshold <= 1.0) {
            return bad(format!("eval.iou_threshold = {} outside (0, 1]", e.iou_threshold));
        }
        if e.recall_positions == 0 {
            return bad("eval.recall_positions must be at least 1".into());
        }
        unit("eval.score_threshold", e.score_threshold)?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical (serialized) config, recorded in run
    /// manifests so outputs can be traced back to their exact settings.
    pub fn sha256(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serialization cannot fail");
        let digest = Sha256::digest(&canonical);
        let mut hex = String::with_capacity(64);
        for b in digest {
            use std::fmt::Write as _;
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }
}
