//! Command-line interface. Every subcommand validates inputs up front,
//! processes items independently (parallel where it pays), enumerates
//! per-item failures on stderr, and exits non-zero if any item failed.
//! Re-running a command with the same inputs and seed is byte-identical.

use crate::blob::write_blob;
use crate::config::RunConfig;
use crate::dataset::{
    list_stems, load_dataset, load_frame, pcd_path, remove_frame_outputs, write_frame,
};
use crate::detections::{read_detections, write_detections};
use crate::manifest::{FrameRecord, Manifest};
use crate::openlabel::{write_openlabel_file, FrameLabels};
use crate::pcd::load_pcd;
use crate::report::{render_comparison, render_eval, render_stats};
use crate::simlabels::{convert_sim_labels, ConvertOptions};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pillarforge_core::augment::{
    apply_match_plan, compute_stats, global_transform, match_domains, normalize_box_sizes,
    shape_aware_augment,
};
use pillarforge_core::eval::{dataset_report, evaluate};
use pillarforge_core::geometry::{build_height_profile, ransac_plane};
use pillarforge_core::pillars::pillarize;
use pillarforge_core::postprocess::{di_nms, rectify_confidence};
use pillarforge_core::semisynth::{compose_frame, derive_seed};
use pillarforge_core::{Annotation, ClassSizeTable, Detection, NoiseSpec};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

// derive_seed tags for the CLI's own sub-streams; the library reserves
// single-digit tags for its internal draws. Public because they are part of
// the reproducibility contract: together with a manifest's per-frame seed
// they let external tooling replay any frame's draws.
pub const TAG_SCHEDULE: u64 = 11;
pub const TAG_RANSAC: u64 = 12;
pub const TAG_NOISE: u64 = 13;
pub const TAG_GLOBAL_AUG: u64 = 14;
pub const TAG_SHAPE_AUG: u64 = 15;
pub const TAG_MATCH_PLAN: u64 = 16;

#[derive(Parser)]
#[command(
    name = "pillarforge",
    version,
    about = "Roadside LiDAR dataset toolkit: semi-synthetic generation, domain matching, pillar preprocessing, NMS and evaluation"
)]
pub struct Cli {
    /// JSON run configuration; defaults are used when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Override the config's root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Validate configuration and inputs without writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    /// Error on unknown simulator classes instead of mapping them to Other.
    #[arg(long, global = true)]
    pub strict_classes: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Compose semi-synthetic frames from background scans and simulated objects.
    Generate {
        /// Directory of background .pcd scans.
        #[arg(long, value_name = "DIR")]
        background: PathBuf,
        /// Directory of simulated frames (.pcd + OpenLABEL .json pairs).
        #[arg(long, value_name = "DIR")]
        synthetic: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Dataset statistics; with --target, a domain comparison and match plan.
    Stats {
        #[arg(long, value_name = "DIR")]
        dataset: PathBuf,
        /// Target-domain dataset to compare against.
        #[arg(long, value_name = "DIR")]
        target: Option<PathBuf>,
        /// Write the derived match plan here (requires --target).
        #[arg(long, value_name = "FILE")]
        plan_out: Option<PathBuf>,
        /// Write the dataset statistics as JSON.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Apply global, shape-aware, and match-plan augmentations.
    Augment {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Convert clouds to pillar feature tensors.
    Pillarize {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Rectify confidences and run distance-aware IoU NMS.
    Nms {
        /// Detections JSONL.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Evaluate detections against ground truth (mAP / AOS).
    Eval {
        /// Detections JSONL.
        #[arg(long, value_name = "FILE")]
        preds: PathBuf,
        /// Ground-truth dataset directory.
        #[arg(long, value_name = "DIR")]
        gt: PathBuf,
        /// Write the evaluation report as JSON.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Rewrite annotation boxes to per-class mean sizes.
    Normalize {
        #[arg(long, value_name = "DIR")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Existing class-size table; computed from the input when omitted.
        #[arg(long, value_name = "FILE")]
        table: Option<PathBuf>,
        /// Where to write the class-size table (default: <out>/class_sizes.json).
        #[arg(long, value_name = "FILE")]
        table_out: Option<PathBuf>,
    },
    /// Convert a simulator label export to per-frame OpenLABEL files.
    Convert {
        /// Simulator export JSON.
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

pub fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PILLARFORGE_LOG", "warn"))
        .format_timestamp(None)
        .try_init()
        .ok();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let ctx = Ctx {
        config,
        dry_run: cli.dry_run,
        strict_classes: cli.strict_classes,
    };
    pool.install(|| match cli.command {
        Command::Generate {
            background,
            synthetic,
            out,
        } => cmd_generate(&ctx, &background, &synthetic, &out),
        Command::Stats {
            dataset,
            target,
            plan_out,
            out,
        } => cmd_stats(&ctx, &dataset, target.as_deref(), plan_out.as_deref(), out.as_deref()),
        Command::Augment { input, out } => cmd_augment(&ctx, &input, &out),
        Command::Pillarize { input, out } => cmd_pillarize(&ctx, &input, &out),
        Command::Nms { input, out } => cmd_nms(&ctx, &input, &out),
        Command::Eval { preds, gt, out } => cmd_eval(&ctx, &preds, &gt, out.as_deref()),
        Command::Normalize {
            input,
            out,
            table,
            table_out,
        } => cmd_normalize(&ctx, &input, &out, table.as_deref(), table_out.as_deref()),
        Command::Convert { input, out } => cmd_convert(&ctx, &input, &out),
    })
}

struct Ctx {
    config: RunConfig,
    dry_run: bool,
    strict_classes: bool,
}

/// Runs `work` per item in parallel, reports failures, and errors out if any
/// item failed. Results come back in input order.
fn for_each_item<T, R>(
    items: Vec<T>,
    work: impl Fn(&T) -> Result<R> + Sync,
    describe: impl Fn(&T) -> String,
) -> Result<Vec<R>>
where
    T: Sync,
    R: Send,
{
    let results: Vec<Result<R>> = items.par_iter().map(&work).collect();
    let mut ok = Vec::with_capacity(results.len());
    let mut failures = 0usize;
    for (item, result) in items.iter().zip(results) {
        match result {
            Ok(r) => ok.push(r),
            Err(e) => {
                failures += 1;
                eprintln!("{}: {e:#}", describe(item));
            }
        }
    }
    if failures > 0 {
        bail!("{failures} of {} item(s) failed", items.len());
    }
    Ok(ok)
}

fn ensure_out_dir(path: &Path, dry_run: bool) -> Result<()> {
    if !dry_run {
        fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))?;
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn cmd_generate(ctx: &Ctx, background: &Path, synthetic: &Path, out: &Path) -> Result<()> {
    let backgrounds = list_stems(background)?;
    if backgrounds.is_empty() {
        bail!("{}: no background scans found", background.display());
    }
    let synthetics = list_stems(synthetic)?;
    if synthetics.is_empty() {
        bail!("{}: no synthetic frames found", synthetic.display());
    }
    ensure_out_dir(out, ctx.dry_run)?;

    // Backgrounds cycle when there are fewer scans than synthetic frames.
    let items: Vec<(usize, String, String)> = synthetics
        .into_iter()
        .enumerate()
        .map(|(i, stem)| {
            let bg = backgrounds[i % backgrounds.len()].clone();
            (i, stem, bg)
        })
        .collect();
    let records = for_each_item(
        items,
        |(index, stem, bg_stem)| {
            let result = generate_one(ctx, background, synthetic, out, *index, stem, bg_stem);
            if result.is_err() && !ctx.dry_run {
                remove_frame_outputs(out, stem);
            }
            result
        },
        |(_, stem, _)| format!("frame {stem}"),
    )?;

    let mut manifest = Manifest::new(ctx.config.sha256(), ctx.config.seed);
    manifest.frames = records;
    if !ctx.dry_run {
        manifest.save(&out.join("manifest.json"))?;
    }
    log::info!("generated {} frame(s) into {}", manifest.frames.len(), out.display());
    Ok(())
}

fn generate_one(
    ctx: &Ctx,
    background_dir: &Path,
    synthetic_dir: &Path,
    out: &Path,
    index: usize,
    stem: &str,
    bg_stem: &str,
) -> Result<FrameRecord> {
    let g = &ctx.config.generate;
    let frame_seed = ctx.config.seed ^ index as u64;
    let scheduled = g.augment_every > 0 && index.is_multiple_of(g.augment_every);
    let (dropout_rate, noise_fraction) = if scheduled {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(frame_seed, TAG_SCHEDULE));
        (
            rng.random_range(g.dropout_range[0]..=g.dropout_range[1]),
            rng.random_range(g.noise_fraction_range[0]..=g.noise_fraction_range[1]),
        )
    } else {
        (0.0, 0.0)
    };

    let bg_cloud = load_pcd(&pcd_path(background_dir, bg_stem))?;
    let plane = ransac_plane(
        &bg_cloud,
        g.ransac_iterations,
        g.ransac_threshold,
        derive_seed(frame_seed, TAG_RANSAC),
    )?;
    let profile = build_height_profile(&bg_cloud, &plane, g.profile_cell, g.profile_band)?;
    let synthetic = load_frame(synthetic_dir, stem)?;
    let noise = NoiseSpec {
        mu: g.noise_mu,
        sigma: g.noise_sigma,
        apply_fraction: noise_fraction,
        seed: derive_seed(frame_seed, TAG_NOISE),
    };
    let composed = compose_frame(
        &bg_cloud,
        &synthetic,
        &profile,
        &noise,
        dropout_rate,
        g.clearance,
        frame_seed,
    )?;
    if !ctx.dry_run {
        write_frame(out, &composed.frame, g.binary_pcd)?;
    }
    Ok(FrameRecord {
        frame_id: stem.to_owned(),
        seed: frame_seed,
        background: bg_stem.to_owned(),
        augmented: scheduled,
        dropout_rate,
        noise_fraction,
        noise_sigma: if scheduled { g.noise_sigma } else { 0.0 },
        background_points: composed.stats.background_points,
        object_points: composed.stats.object_points,
        dropped_points: composed.stats.dropped_points,
        cleared_points: composed.stats.cleared_points,
    })
}

fn cmd_stats(
    ctx: &Ctx,
    dataset: &Path,
    target: Option<&Path>,
    plan_out: Option<&Path>,
    out: Option<&Path>,
) -> Result<()> {
    if plan_out.is_some() && target.is_none() {
        bail!("--plan-out requires --target");
    }
    let frames = load_dataset(dataset)?;
    let stats = compute_stats(&frames)?;
    print!("{}", render_stats(&stats));
    if let (Some(path), false) = (out, ctx.dry_run) {
        write_json(&stats, path)?;
    }
    if let Some(target_dir) = target {
        let target_frames = load_dataset(target_dir)?;
        let target_stats = compute_stats(&target_frames)?;
        let comparison = dataset_report(&stats, &target_stats);
        print!("{}", render_comparison(&comparison));
        let plan = match_domains(&stats, &target_stats);
        println!(
            "match plan: background dropout {:.4}, {} upsample factor(s)",
            plan.background_dropout_rate,
            plan.object_upsample_factor.len()
        );
        if let (Some(path), false) = (plan_out, ctx.dry_run) {
            write_json(&plan, path)?;
        }
    }
    Ok(())
}

fn cmd_augment(ctx: &Ctx, input: &Path, out: &Path) -> Result<()> {
    let stems = list_stems(input)?;
    if stems.is_empty() {
        bail!("{}: no frames found", input.display());
    }
    ensure_out_dir(out, ctx.dry_run)?;
    let items: Vec<(usize, String)> = stems.into_iter().enumerate().collect();
    for_each_item(
        items,
        |(index, stem)| {
            let result = augment_one(ctx, input, out, *index, stem);
            if result.is_err() && !ctx.dry_run {
                remove_frame_outputs(out, stem);
            }
            result
        },
        |(_, stem)| format!("frame {stem}"),
    )?;
    Ok(())
}

fn augment_one(ctx: &Ctx, input: &Path, out: &Path, index: usize, stem: &str) -> Result<()> {
    let a = &ctx.config.augment;
    let frame_seed = ctx.config.seed ^ index as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(frame_seed, TAG_GLOBAL_AUG));
    let rotation = rng.random_range(a.rotation_range[0]..=a.rotation_range[1]);
    let flip = rng.random_bool(a.flip_probability);
    let scale = rng.random_range(a.scale_range[0]..=a.scale_range[1]);

    let mut frame = load_frame(input, stem)?;
    frame = global_transform(&frame, rotation, flip, scale);
    if a.shape_dropout > 0.0 || a.shape_swap > 0.0 || a.shape_sparsify > 0.0 {
        frame = shape_aware_augment(
            &frame,
            a.shape_dropout,
            a.shape_swap,
            a.shape_sparsify,
            derive_seed(frame_seed, TAG_SHAPE_AUG),
        );
    }
    if let Some(plan) = &ctx.config.match_plan {
        frame = apply_match_plan(&frame, plan, None, derive_seed(frame_seed, TAG_MATCH_PLAN));
    }
    if !ctx.dry_run {
        write_frame(out, &frame, ctx.config.generate.binary_pcd)?;
    }
    Ok(())
}

fn cmd_pillarize(ctx: &Ctx, input: &Path, out: &Path) -> Result<()> {
    let Some(section) = &ctx.config.pillars else {
        bail!("config has no `pillars` section (range is required to pillarize)");
    };
    let pillar_config = section.to_config();
    pillar_config.validate().map_err(|e| anyhow::anyhow!("pillars: {e}"))?;
    let stems = list_stems(input)?;
    if stems.is_empty() {
        bail!("{}: no frames found", input.display());
    }
    ensure_out_dir(out, ctx.dry_run)?;
    for_each_item(
        stems,
        |stem| {
            let cloud = load_pcd(&pcd_path(input, stem))?;
            let tensor = pillarize(&cloud, &pillar_config)?;
            let blob_path = out.join(format!("{stem}.pillars.bin"));
            if !ctx.dry_run {
                if let Err(e) = write_blob(&tensor, &blob_path) {
                    let _ = fs::remove_file(&blob_path);
                    return Err(e.into());
                }
            }
            log::debug!("{stem}: {} pillar(s)", tensor.pillar_count());
            Ok(())
        },
        |stem| format!("frame {stem}"),
    )?;
    Ok(())
}

fn cmd_nms(ctx: &Ctx, input: &Path, out: &Path) -> Result<()> {
    let params = &ctx.config.nms;
    let detections = read_detections(input)?;
    let frames: Vec<(String, Vec<Detection>)> = detections.into_iter().collect();
    let kept: Vec<(String, Vec<Detection>)> = frames
        .into_par_iter()
        .map(|(frame_id, dets)| {
            let rectified: Vec<Detection> = dets
                .into_iter()
                .map(|mut d| {
                    d.score = rectify_confidence(d.score, d.iou_pred, params.beta);
                    d
                })
                .collect();
            (frame_id, di_nms(&rectified, params))
        })
        .collect();
    let mut result: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    let mut total = 0usize;
    for (frame_id, dets) in kept {
        total += dets.len();
        if !dets.is_empty() {
            result.insert(frame_id, dets);
        }
    }
    if !ctx.dry_run {
        write_detections(&result, out)?;
    }
    log::info!("kept {total} detection(s) across {} frame(s)", result.len());
    Ok(())
}

fn cmd_eval(ctx: &Ctx, preds: &Path, gt: &Path, out: Option<&Path>) -> Result<()> {
    let predictions = read_detections(preds)?;
    let stems = list_stems(gt)?;
    if stems.is_empty() {
        bail!("{}: no ground-truth frames found", gt.display());
    }
    let mut gts: BTreeMap<String, Vec<Annotation>> = BTreeMap::new();
    for stem in &stems {
        gts.insert(stem.clone(), load_frame(gt, stem)?.annotations);
    }
    let report = evaluate(&predictions, &gts, &ctx.config.eval)?;
    print!("{}", render_eval(&report, &ctx.config.eval));
    if let (Some(path), false) = (out, ctx.dry_run) {
        write_json(&report, path)?;
    }
    Ok(())
}

fn cmd_normalize(
    ctx: &Ctx,
    input: &Path,
    out: &Path,
    table: Option<&Path>,
    table_out: Option<&Path>,
) -> Result<()> {
    let frames = load_dataset(input)?;
    let loaded_table: Option<ClassSizeTable> = match table {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Some(serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        None => None,
    };
    let (normalized, table_used) = normalize_box_sizes(&frames, loaded_table.as_ref())?;
    ensure_out_dir(out, ctx.dry_run)?;
    if !ctx.dry_run {
        for frame in &normalized {
            write_frame(out, frame, ctx.config.generate.binary_pcd)?;
        }
        let table_path = table_out
            .map(Path::to_path_buf)
            .unwrap_or_else(|| out.join("class_sizes.json"));
        write_json(&table_used, &table_path)?;
    }
    log::info!("normalized {} frame(s)", normalized.len());
    Ok(())
}

fn cmd_convert(ctx: &Ctx, input: &Path, out: &Path) -> Result<()> {
    let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let options = ConvertOptions {
        half_extents: ctx.config.convert.half_extents,
        strict: ctx.strict_classes,
        class_map: ctx.config.class_map.clone(),
    };
    let (frames, summary) = convert_sim_labels(&text, &options)?;
    ensure_out_dir(out, ctx.dry_run)?;
    if !ctx.dry_run {
        for (frame_id, annotations) in &frames {
            let mut single = FrameLabels::new();
            single.insert(frame_id.clone(), annotations.clone());
            write_openlabel_file(&single, &out.join(format!("{frame_id}.json")))?;
        }
    }
    println!(
        "converted {} frame(s), {} object(s); {} unknown class(es)",
        summary.frames,
        summary.objects,
        summary.unmapped.len()
    );
    Ok(())
}
