//! PCD v0.7 reader/writer for `x y z intensity` clouds.
//!
//! Reading accepts ASCII and binary payloads, 4- or 8-byte floats for the
//! coordinate fields, and integer intensity columns (rescaled to [0, 1] by the
//! declared type's maximum). Writing always emits the 4-float layout; `DATA
//! binary` stores little-endian f32 in field order, so clouds whose values are
//! f32-representable round-trip bit-exactly.

use pillarforge_core::{Point, PointCloud};
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PcdError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Header {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: truncated payload: expected {expected} points, found {found}")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("{path}:{line}: bad point record: {message}")]
    BadRecord {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FieldKind {
    F32,
    F64,
    /// Integer column rescaled to [0, 1] by the declared type's maximum.
    Int { width: usize, signed: bool },
}

impl FieldKind {
    fn width(self) -> usize {
        match self {
            FieldKind::F32 => 4,
            FieldKind::F64 => 8,
            FieldKind::Int { width, .. } => width,
        }
    }

    fn int_max(self) -> f64 {
        match self {
            FieldKind::Int { width, signed } => {
                let bits = width as u32 * 8 - u32::from(signed);
                (2f64.powi(bits as i32)) - 1.0
            }
            _ => 1.0,
        }
    }
}

struct Header {
    fields: Vec<String>,
    kinds: Vec<FieldKind>,
    points: usize,
    viewpoint: [f64; 3],
    binary: bool,
    /// Byte offset of the payload (first byte after the DATA line).
    payload_start: usize,
    /// Line number of the DATA line; ASCII records start on the next line.
    data_line: usize,
}

fn field_kind(ty: &str, size: usize, path: &str, line: usize) -> Result<FieldKind, PcdError> {
    let bad = |message: String| PcdError::Header {
        path: path.into(),
        line,
        message,
    };
    if !matches!(size, 1 | 2 | 4 | 8) {
        return Err(bad(format!("unsupported field size {size}")));
    }
    match ty {
        "F" => match size {
            4 => Ok(FieldKind::F32),
            8 => Ok(FieldKind::F64),
            _ => Err(bad(format!("unsupported float size {size}"))),
        },
        "U" => Ok(FieldKind::Int { width: size, signed: false }),
        "I" => Ok(FieldKind::Int { width: size, signed: true }),
        other => Err(bad(format!("unsupported field type {other:?}"))),
    }
}

fn parse_header(bytes: &[u8], path: &str) -> Result<Header, PcdError> {
    let mut fields: Option<Vec<String>> = None;
    let mut sizes: Option<Vec<usize>> = None;
    let mut types: Option<Vec<String>> = None;
    let mut counts: Option<Vec<usize>> = None;
    let mut width: Option<usize> = None;
    let mut height: Option<usize> = None;
    let mut points: Option<usize> = None;
    let mut viewpoint = [0.0; 3];
    let mut line_no = 0usize;
    let mut offset = 0usize;

    let err = |line: usize, message: String| PcdError::Header {
        path: path.into(),
        line,
        message,
    };

    while offset < bytes.len() {
        let rest = &bytes[offset..];
        let eol = rest.iter().position(|&b| b == b'\n').map_or(rest.len(), |p| p + 1);
        let raw = &rest[..eol];
        offset += eol;
        line_no += 1;

        let line = std::str::from_utf8(raw)
            .map_err(|_| err(line_no, "non-UTF-8 header line".into()))?
            .trim_end_matches(['\n', '\r'])
            .trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let value = value.trim();
        let ints = |v: &str| -> Result<Vec<usize>, PcdError> {
            v.split_whitespace()
                .map(|t| t.parse::<usize>().map_err(|_| err(line_no, format!("expected integer, got {t:?}"))))
                .collect()
        };
        match key {
            "VERSION" => {
                if !value.starts_with("0.7") && !value.starts_with(".7") {
                    return Err(err(line_no, format!("unsupported PCD version {value:?}")));
                }
            }
            "FIELDS" | "COLUMNS" => fields = Some(value.split_whitespace().map(str::to_owned).collect()),
            "SIZE" => sizes = Some(ints(value)?),
            "TYPE" => types = Some(value.split_whitespace().map(str::to_owned).collect()),
            "COUNT" => counts = Some(ints(value)?),
            "WIDTH" => width = Some(ints(value)?.first().copied().ok_or_else(|| err(line_no, "missing WIDTH value".into()))?),
            "HEIGHT" => height = Some(ints(value)?.first().copied().ok_or_else(|| err(line_no, "missing HEIGHT value".into()))?),
            "POINTS" => points = Some(ints(value)?.first().copied().ok_or_else(|| err(line_no, "missing POINTS value".into()))?),
            "VIEWPOINT" => {
                let vals: Vec<f64> = value
                    .split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|_| err(line_no, format!("bad VIEWPOINT component {t:?}"))))
                    .collect::<Result<_, _>>()?;
                if vals.len() != 7 {
                    return Err(err(line_no, format!("VIEWPOINT needs 7 values, got {}", vals.len())));
                }
                viewpoint = [vals[0], vals[1], vals[2]];
            }
            "DATA" => {
                let binary = match value {
                    "ascii" => false,
                    "binary" => true,
                    other => return Err(err(line_no, format!("unsupported DATA mode {other:?}"))),
                };
                let fields = fields.ok_or_else(|| err(line_no, "missing FIELDS before DATA".into()))?;
                let sizes = sizes.ok_or_else(|| err(line_no, "missing SIZE before DATA".into()))?;
                let types = types.ok_or_else(|| err(line_no, "missing TYPE before DATA".into()))?;
                let counts = counts.unwrap_or_else(|| vec![1; fields.len()]);
                let points = points
                    .or_else(|| width.and_then(|w| height.map(|h| w * h)))
                    .ok_or_else(|| err(line_no, "missing POINTS before DATA".into()))?;
                if sizes.len() != fields.len() || types.len() != fields.len() || counts.len() != fields.len() {
                    return Err(err(line_no, "FIELDS/SIZE/TYPE/COUNT lengths disagree".into()));
                }
                if counts.iter().any(|&c| c != 1) {
                    return Err(err(line_no, "COUNT values other than 1 are not supported".into()));
                }
                if let (Some(w), Some(h)) = (width, height) {
                    if w * h != points {
                        return Err(err(line_no, format!("WIDTH*HEIGHT = {} but POINTS = {points}", w * h)));
                    }
                }
                for need in ["x", "y", "z"] {
                    if !fields.iter().any(|f| f == need) {
                        return Err(err(line_no, format!("required field {need:?} missing from FIELDS")));
                    }
                }
                let kinds = types
                    .iter()
                    .zip(&sizes)
                    .map(|(t, &s)| field_kind(t, s, path, line_no))
                    .collect::<Result<Vec<_>, _>>()?;
                for (f, k) in fields.iter().zip(&kinds) {
                    if matches!(f.as_str(), "x" | "y" | "z") && matches!(k, FieldKind::Int { .. }) {
                        return Err(err(line_no, format!("coordinate field {f:?} must be float typed")));
                    }
                }
                return Ok(Header {
                    fields,
                    kinds,
                    points,
                    viewpoint,
                    binary,
                    payload_start: offset,
                    data_line: line_no,
                });
            }
            other => return Err(err(line_no, format!("unknown header key {other:?}"))),
        }
    }
    Err(err(line_no, "header ended before DATA line".into()))
}

fn read_binary_value(kind: FieldKind, bytes: &[u8]) -> f64 {
    match kind {
        FieldKind::F32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
        FieldKind::F64 => f64::from_le_bytes(bytes.try_into().unwrap()),
        FieldKind::Int { width, signed } => {
            let mut buf = [0u8; 16];
            buf[..width].copy_from_slice(bytes);
            let raw = if signed {
                // Sign-extend from the declared width.
                let shift = 128 - width as u32 * 8;
                ((u128::from_le_bytes(buf) << shift) as i128 >> shift) as f64
            } else {
                u128::from_le_bytes(buf) as f64
            };
            (raw / kind.int_max()).clamp(0.0, 1.0)
        }
    }
}

/// Reads a PCD file. `frame_id` is taken from the file stem since the format
/// itself carries no identifier; `sensor_origin` comes from the VIEWPOINT
/// translation. A missing intensity column yields zeros.
pub fn load_pcd(path: &Path) -> Result<PointCloud, PcdError> {
    let display = path.display().to_string();
    let bytes = fs::read(path).map_err(|source| PcdError::Io {
        path: display.clone(),
        source,
    })?;
    let header = parse_header(&bytes, &display)?;

    let idx = |name: &str| header.fields.iter().position(|f| f == name);
    let (ix, iy, iz) = (idx("x").unwrap(), idx("y").unwrap(), idx("z").unwrap());
    let ii = idx("intensity");

    let mut points = Vec::with_capacity(header.points);
    if header.binary {
        let record: usize = header.kinds.iter().map(|k| k.width()).sum();
        let payload = &bytes[header.payload_start..];
        let found = payload.len() / record.max(1);
        if payload.len() < header.points * record {
            return Err(PcdError::Truncated {
                path: display,
                expected: header.points,
                found,
            });
        }
        for p in 0..header.points {
            let mut values = Vec::with_capacity(header.kinds.len());
            let mut at = p * record;
            for &kind in &header.kinds {
                values.push(read_binary_value(kind, &payload[at..at + kind.width()]));
                at += kind.width();
            }
            points.push(make_point(&values, ix, iy, iz, ii));
        }
    } else {
        let text = std::str::from_utf8(&bytes[header.payload_start..]).map_err(|_| PcdError::BadRecord {
            path: display.clone(),
            line: header.data_line + 1,
            message: "non-UTF-8 ASCII payload".into(),
        })?;
        let mut found = 0usize;
        for (i, line) in text.lines().enumerate() {
            let line_no = header.data_line + 1 + i;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if found == header.points {
                return Err(PcdError::BadRecord {
                    path: display,
                    line: line_no,
                    message: format!("more data rows than the declared {} points", header.points),
                });
            }
            let mut values = Vec::with_capacity(header.kinds.len());
            for (tok, &kind) in trimmed.split_whitespace().zip(&header.kinds) {
                let v = tok.parse::<f64>().map_err(|_| PcdError::BadRecord {
                    path: display.clone(),
                    line: line_no,
                    message: format!("bad number {tok:?}"),
                })?;
                values.push(match kind {
                    FieldKind::Int { .. } => (v / kind.int_max()).clamp(0.0, 1.0),
                    _ => v,
                });
            }
            if values.len() != header.kinds.len() {
                return Err(PcdError::BadRecord {
                    path: display,
                    line: line_no,
                    message: format!("expected {} columns, got {}", header.kinds.len(), values.len()),
                });
            }
            points.push(make_point(&values, ix, iy, iz, ii));
            found += 1;
        }
        if found < header.points {
            return Err(PcdError::Truncated {
                path: display,
                expected: header.points,
                found,
            });
        }
    }

    let frame_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(PointCloud {
        frame_id,
        sensor_origin: header.viewpoint,
        points,
    })
}

fn make_point(values: &[f64], ix: usize, iy: usize, iz: usize, ii: Option<usize>) -> Point {
    let intensity = ii.map_or(0.0, |i| values[i].clamp(0.0, 1.0));
    Point::new(values[ix], values[iy], values[iz], intensity)
}

/// Writes a PCD v0.7 file with fields `x y z intensity` as 4-byte floats.
pub fn save_pcd(cloud: &PointCloud, path: &Path, binary: bool) -> Result<(), PcdError> {
    let display = path.display().to_string();
    let io_err = |source| PcdError::Io {
        path: display.clone(),
        source,
    };
    let n = cloud.points.len();
    let [ox, oy, oz] = cloud.sensor_origin;
    let mut header = String::new();
    let _ = writeln!(header, "# .PCD v0.7 - Point Cloud Data file format");
    let _ = writeln!(header, "VERSION 0.7");
    let _ = writeln!(header, "FIELDS x y z intensity");
    let _ = writeln!(header, "SIZE 4 4 4 4");
    let _ = writeln!(header, "TYPE F F F F");
    let _ = writeln!(header, "COUNT 1 1 1 1");
    let _ = writeln!(header, "WIDTH {n}");
    let _ = writeln!(header, "HEIGHT 1");
    let _ = writeln!(header, "VIEWPOINT {ox} {oy} {oz} 1 0 0 0");
    let _ = writeln!(header, "POINTS {n}");
    let _ = writeln!(header, "DATA {}", if binary { "binary" } else { "ascii" });

    let mut out = fs::File::create(path).map_err(io_err)?;
    out.write_all(header.as_bytes()).map_err(io_err)?;
    if binary {
        let mut payload = Vec::with_capacity(n * 16);
        for p in &cloud.points {
            for v in [p.x, p.y, p.z, p.intensity] {
                payload.extend_from_slice(&(v as f32).to_le_bytes());
            }
        }
        out.write_all(&payload).map_err(io_err)?;
    } else {
        let mut body = String::new();
        for p in &cloud.points {
            let _ = writeln!(body, "{} {} {} {}", p.x, p.y, p.z, p.intensity);
        }
        out.write_all(body.as_bytes()).map_err(io_err)?;
    }
    Ok(())
}
