mod common;

use common::*;
use pillarforge::manifest::Manifest;
use std::fs;
use tempfile::tempdir;

#[test]
fn generate_writes_manifest_and_reruns_are_byte_identical() {
    let dir = tempdir().unwrap();
    let (bg, syn) = build_generate_fixture(dir.path(), 4);
    let config = dir.path().join("config.json");
    write_config(&config, |_| {});
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");

    for out in [&out1, &out2] {
        let result = run_cli(&[
            "generate",
            "--config",
            config.to_str().unwrap(),
            "--background",
            bg.to_str().unwrap(),
            "--synthetic",
            syn.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_success(&result, "generate");
    }
    for i in 0..4 {
        assert!(out1.join(format!("{i:03}.pcd")).exists());
        assert!(out1.join(format!("{i:03}.json")).exists());
    }

    let manifest = Manifest::load(&out1.join("manifest.json")).unwrap();
    assert_eq!(manifest.root_seed, 42);
    assert_eq!(manifest.frames.len(), 4);
    for (i, frame) in manifest.frames.iter().enumerate() {
        assert_eq!(frame.seed, 42 ^ i as u64);
        assert_eq!(frame.augmented, i % 2 == 0);
        if frame.augmented {
            assert!((0.0..=0.2).contains(&frame.dropout_rate), "{}", frame.dropout_rate);
            assert!((0.2..=0.4).contains(&frame.noise_fraction), "{}", frame.noise_fraction);
        } else {
            assert_eq!(frame.dropout_rate, 0.0);
            assert_eq!(frame.noise_fraction, 0.0);
        }
    }

    assert_dirs_identical(&out1, &out2);

    // Re-running into a populated directory leaves bytes unchanged.
    let result = run_cli(&[
        "generate",
        "--config",
        config.to_str().unwrap(),
        "--background",
        bg.to_str().unwrap(),
        "--synthetic",
        syn.to_str().unwrap(),
        "--out",
        out1.to_str().unwrap(),
    ]);
    assert_success(&result, "generate rerun");
    assert_dirs_identical(&out1, &out2);
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempdir().unwrap();
    let (bg, syn) = build_generate_fixture(dir.path(), 2);
    let out = dir.path().join("out");
    let result = run_cli(&[
        "generate",
        "--seed",
        "7",
        "--background",
        bg.to_str().unwrap(),
        "--synthetic",
        syn.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_success(&result, "generate");
    let manifest = Manifest::load(&out.join("manifest.json")).unwrap();
    assert_eq!(manifest.root_seed, 7);
    assert_eq!(manifest.frames[1].seed, 7 ^ 1);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempdir().unwrap();
    let (bg, syn) = build_generate_fixture(dir.path(), 2);
    let out = dir.path().join("never_created");
    let result = run_cli(&[
        "generate",
        "--dry-run",
        "--background",
        bg.to_str().unwrap(),
        "--synthetic",
        syn.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_success(&result, "generate --dry-run");
    assert!(!out.exists(), "dry run must not create outputs");
}

#[test]
fn failed_frames_are_enumerated_and_partials_removed() {
    let dir = tempdir().unwrap();
    let (bg, syn) = build_generate_fixture(dir.path(), 1);
    // Second frame's car sits far outside the height profile.
    write_synthetic(&syn, "bad", &[car("car_1", 1000.0, 1000.0, 0.0)]);
    let out = dir.path().join("out");
    let result = run_cli(&[
        "generate",
        "--background",
        bg.to_str().unwrap(),
        "--synthetic",
        syn.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!result.status.success(), "bad frame must fail the run");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("frame bad"), "stderr should name the frame:\n{stderr}");
    assert!(stderr.contains("1 of 2"), "stderr should count failures:\n{stderr}");
    // The good frame's outputs stay; the bad frame leaves nothing behind.
    assert!(out.join("000.pcd").exists());
    assert!(!out.join("bad.pcd").exists());
    assert!(!out.join("bad.json").exists());
    assert!(!out.join("manifest.json").exists(), "manifest only on full success");
}

#[test]
fn missing_input_directory_fails_cleanly() {
    let dir = tempdir().unwrap();
    let result = run_cli(&[
        "stats",
        "--dataset",
        dir.path().join("nope").to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("error"), "{stderr}");
}

#[test]
fn convert_maps_unknown_classes_unless_strict() {
    let dir = tempdir().unwrap();
    let export = dir.path().join("sim.json");
    fs::write(
        &export,
        r#"{"frames": [{"frame_id": "000", "objects": [
            {"id": "a", "class": "car", "position": [1, 2, 0.75], "yaw": 0.0, "extent": [4.0, 2.0, 1.5]},
            {"id": "b", "class": "hovercraft", "position": [8, 2, 0.5], "yaw": 0.1, "extent": [3.0, 2.0, 1.0]}
        ]}]}"#,
    )
    .unwrap();
    let out = dir.path().join("labels");

    let result = run_cli(&["convert", "--input", export.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_success(&result, "convert");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("1 unknown class(es)"), "{stdout}");
    let labels = pillarforge::openlabel::parse_openlabel_file(&out.join("000.json")).unwrap();
    assert_eq!(labels["000"][0].category, "Car");
    assert_eq!(labels["000"][1].category, "Other");

    let strict_out = dir.path().join("labels_strict");
    let result = run_cli(&[
        "convert",
        "--strict-classes",
        "--input",
        export.to_str().unwrap(),
        "--out",
        strict_out.to_str().unwrap(),
    ]);
    assert!(!result.status.success(), "strict mode must fail on unknown class");
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("hovercraft"), "{stderr}");

    let dry_out = dir.path().join("labels_dry");
    let result = run_cli(&[
        "convert",
        "--dry-run",
        "--input",
        export.to_str().unwrap(),
        "--out",
        dry_out.to_str().unwrap(),
    ]);
    assert_success(&result, "convert --dry-run");
    assert!(!dry_out.exists());
}

#[test]
fn stats_compares_domains_and_writes_plan() {
    let dir = tempdir().unwrap();
    let source = dir.path().join("source");
    let target = dir.path().join("target");
    fs::create_dir_all(&source).unwrap();
    fs::create_dir_all(&target).unwrap();
    // Target cars carry denser lattices than source cars.
    for i in 0..3 {
        let mut sparse = car("car_1", 5.0, 3.0, 0.1);
        sparse.lattice = (3, 2, 2);
        write_synthetic(&source, &format!("{i:03}"), &[sparse]);
        write_synthetic(&target, &format!("{i:03}"), &[car("car_1", 5.0, 3.0, 0.1)]);
    }
    let plan_path = dir.path().join("plan.json");
    let result = run_cli(&[
        "stats",
        "--dataset",
        source.to_str().unwrap(),
        "--target",
        target.to_str().unwrap(),
        "--plan-out",
        plan_path.to_str().unwrap(),
    ]);
    assert_success(&result, "stats");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("points/object"), "{stdout}");
    let plan: pillarforge_core::MatchPlan =
        serde_json::from_str(&fs::read_to_string(&plan_path).unwrap()).unwrap();
    let factor = plan.object_upsample_factor["Car"];
    assert!((factor - 5.0).abs() < 1e-9, "60/12 = 5, got {factor}");
}

#[test]
fn plan_out_without_target_is_an_error() {
    let dir = tempdir().unwrap();
    let (_, syn) = build_generate_fixture(dir.path(), 1);
    let result = run_cli(&[
        "stats",
        "--dataset",
        syn.to_str().unwrap(),
        "--plan-out",
        dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert!(!result.status.success());
}
