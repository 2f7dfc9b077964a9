//! Fixture builders shared by the integration and acceptance tests.
#![allow(dead_code)]

use pillarforge::openlabel::{write_openlabel_file, FrameLabels};
use pillarforge::pcd::save_pcd;
use pillarforge_core::{Annotation, Box3D, Point, PointCloud};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_pillarforge");

pub fn run_cli(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env("PILLARFORGE_LOG", "error")
        .output()
        .expect("spawn pillarforge")
}

pub fn assert_success(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (status {:?})\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Gently undulating ground on a 0.5 m grid over [-20, 20]^2 plus a few
/// poles, so RANSAC has a dominant plane and the height profile has
/// structure above it.
pub fn write_background(dir: &Path, stem: &str, phase: f64) -> PathBuf {
    let mut points = Vec::new();
    let n = 81;
    for iy in 0..n {
        for ix in 0..n {
            let x = -20.0 + ix as f64 * 0.5;
            let y = -20.0 + iy as f64 * 0.5;
            let z = 0.02 * ((x * 0.7 + phase).sin() * (y * 0.5 - phase).cos());
            points.push(Point::new(x, y, z, 0.3));
        }
    }
    for (px, py) in [(-15.0, -15.0), (12.0, -14.0), (-13.0, 11.0)] {
        for k in 0..20 {
            points.push(Point::new(px, py, 0.4 + k as f64 * 0.2, 0.9));
        }
    }
    let cloud = PointCloud {
        frame_id: stem.to_owned(),
        sensor_origin: [0.0, 0.0, 4.0],
        points,
    };
    let path = dir.join(format!("{stem}.pcd"));
    save_pcd(&cloud, &path, true).unwrap();
    path
}

/// Lattice of points filling 80% of a box's extent, rotated into the world.
pub fn box_lattice_points(b: &Box3D, nx: usize, ny: usize, nz: usize) -> Vec<Point> {
    let (s, c) = b.yaw.sin_cos();
    let mut points = Vec::with_capacity(nx * ny * nz);
    let step = |k: usize, n: usize, extent: f64| {
        if n == 1 {
            0.0
        } else {
            (k as f64 / (n - 1) as f64 - 0.5) * 0.8 * extent
        }
    };
    for kz in 0..nz {
        for ky in 0..ny {
            for kx in 0..nx {
                let u = step(kx, nx, b.l);
                let v = step(ky, ny, b.w);
                let w = step(kz, nz, b.h);
                points.push(Point::new(
                    b.cx + c * u - s * v,
                    b.cy + s * u + c * v,
                    b.cz + w,
                    0.5,
                ));
            }
        }
    }
    points
}

pub struct SynthObject {
    pub id: String,
    pub category: String,
    pub box3d: Box3D,
    pub lattice: (usize, usize, usize),
}

pub fn car(id: &str, cx: f64, cy: f64, yaw: f64) -> SynthObject {
    SynthObject {
        id: id.to_owned(),
        category: "Car".to_owned(),
        box3d: Box3D::new(cx, cy, 1.05, 4.2, 1.9, 1.5, yaw),
        lattice: (5, 4, 3),
    }
}

pub fn pedestrian(id: &str, cx: f64, cy: f64) -> SynthObject {
    SynthObject {
        id: id.to_owned(),
        category: "Pedestrian".to_owned(),
        box3d: Box3D::new(cx, cy, 1.15, 0.6, 0.6, 1.7, 0.0),
        lattice: (2, 2, 6),
    }
}

/// Writes a simulated frame: a cloud made of the object lattices plus its
/// OpenLABEL labels.
pub fn write_synthetic(dir: &Path, stem: &str, objects: &[SynthObject]) {
    let mut points = Vec::new();
    let mut annotations = Vec::new();
    for obj in objects {
        let (nx, ny, nz) = obj.lattice;
        points.extend(box_lattice_points(&obj.box3d, nx, ny, nz));
        annotations.push(Annotation {
            object_id: obj.id.clone(),
            category: obj.category.clone(),
            box3d: obj.box3d,
        });
    }
    let cloud = PointCloud {
        frame_id: stem.to_owned(),
        sensor_origin: [0.0, 0.0, 4.0],
        points,
    };
    save_pcd(&cloud, &dir.join(format!("{stem}.pcd")), true).unwrap();
    let mut labels = FrameLabels::new();
    labels.insert(stem.to_owned(), annotations);
    write_openlabel_file(&labels, &dir.join(format!("{stem}.json"))).unwrap();
}

/// A standard 10-frame fixture: `n` synthetic frames with a car and a
/// pedestrian in per-frame positions, over 3 rotating backgrounds.
pub fn build_generate_fixture(root: &Path, n: usize) -> (PathBuf, PathBuf) {
    let bg_dir = root.join("backgrounds");
    let syn_dir = root.join("synthetic");
    std::fs::create_dir_all(&bg_dir).unwrap();
    std::fs::create_dir_all(&syn_dir).unwrap();
    for b in 0..3 {
        write_background(&bg_dir, &format!("bg_{b:03}"), b as f64 * 1.3);
    }
    for i in 0..n {
        let f = i as f64;
        write_synthetic(
            &syn_dir,
            &format!("{i:03}"),
            &[
                car("car_1", 5.0 + 0.4 * f, 3.0 - 0.3 * f, 0.2 * f),
                pedestrian("ped_1", -6.0, 2.0 + 0.4 * f),
            ],
        );
    }
    (bg_dir, syn_dir)
}

pub fn write_config(path: &Path, mutate: impl FnOnce(&mut pillarforge::RunConfig)) {
    let mut config = pillarforge::RunConfig::default();
    config.pillars = Some(pillarforge::config::PillarSection {
        range: [-20.0, 20.0, -20.0, 20.0, -3.0, 5.0],
        voxel_size: None,
        max_points_per_pillar: None,
        max_pillars: None,
    });
    mutate(&mut config);
    let text = serde_json::to_string_pretty(&config).unwrap();
    std::fs::write(path, text).unwrap();
}

/// Byte-compares every file in two directories (non-recursive).
pub fn assert_dirs_identical(a: &Path, b: &Path) {
    let list = |d: &Path| {
        let mut names: Vec<String> = std::fs::read_dir(d)
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();
        names
    };
    let names = list(a);
    assert_eq!(names, list(b), "directory listings differ");
    for name in names {
        let bytes_a = std::fs::read(a.join(&name)).unwrap();
        let bytes_b = std::fs::read(b.join(&name)).unwrap();
        assert_eq!(bytes_a, bytes_b, "{name} differs between runs");
    }
}
