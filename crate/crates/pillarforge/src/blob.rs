//! Binary export of pillar tensors for training pipelines.
//!
//! Layout (all little-endian):
//! - header: `P, N, C, H, W` as u32 (pillar count, points per pillar, feature
//!   channels, pseudo-image height, width)
//! - coords: `P × 2` u32 (`ix, iy` per pillar)
//! - num_points: `P` u32 (real points per pillar before padding)
//! - features: `P × N × C` f32, pillar-major

use pillarforge_core::pillars::FEATURE_DIM;
use pillarforge_core::PillarTensor;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BlobError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: truncated blob: need {expected} bytes, found {found}")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlobTensor {
    pub pillars: usize,
    pub max_points: usize,
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub coords: Vec<[u32; 2]>,
    pub num_points: Vec<u32>,
    pub features: Vec<f32>,
}

pub fn write_blob(tensor: &PillarTensor, path: &Path) -> Result<(), BlobError> {
    let p = tensor.pillar_count();
    let n = tensor.config.max_points_per_pillar;
    let (width, height) = tensor.config.grid_dims();
    let mut bytes = Vec::with_capacity(20 + p * 12 + tensor.features.len() * 4);
    for v in [p as u32, n as u32, FEATURE_DIM as u32, height as u32, width as u32] {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    for c in &tensor.coords {
        bytes.extend_from_slice(&c[0].to_le_bytes());
        bytes.extend_from_slice(&c[1].to_le_bytes());
    }
    for &k in &tensor.num_points {
        bytes.extend_from_slice(&(k as u32).to_le_bytes());
    }
    for &f in &tensor.features {
        bytes.extend_from_slice(&(f as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|source| BlobError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn read_blob(path: &Path) -> Result<BlobTensor, BlobError> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| BlobError::Io {
        path: display.clone(),
        source,
    })?;
    let need = |expected: usize| -> Result<(), BlobError> {
        if bytes.len() < expected {
            Err(BlobError::Truncated {
                path: display.clone(),
                expected,
                found: bytes.len(),
            })
        } else {
            Ok(())
        }
    };
    need(20)?;
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let (p, n, c) = (u32_at(0) as usize, u32_at(4) as usize, u32_at(8) as usize);
    let (height, width) = (u32_at(12) as usize, u32_at(16) as usize);
    let total = 20 + p * 12 + p * n * c * 4;
    need(total)?;
    let mut at = 20;
    let mut coords = Vec::with_capacity(p);
    for _ in 0..p {
        coords.push([u32_at(at), u32_at(at + 4)]);
        at += 8;
    }
    let mut num_points = Vec::with_capacity(p);
    for _ in 0..p {
        num_points.push(u32_at(at));
        at += 4;
    }
    let mut features = Vec::with_capacity(p * n * c);
    for _ in 0..p * n * c {
        features.push(f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap()));
        at += 4;
    }
    Ok(BlobTensor {
        pillars: p,
        max_points: n,
        channels: c,
        height,
        width,
        coords,
        num_points,
        features,
    })
}
