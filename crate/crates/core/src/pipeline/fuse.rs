use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use super::config::{Fallback, PipelineConfig};
use crate::error::{Error, Result};
use crate::eval::{
    export_colored_mesh, pixel_accuracy, read_label_png, select_frames, write_label_png, EvalReport,
    Palette, UNKNOWN,
};
use crate::eval::render::labels_from_ids;
use crate::fusion::{compute_pixel_weights, init_texture, read_smpb, write_smtx, ProbabilityImage, ProbabilityTexture};
use crate::geometry::{build_texel_layout, compute_worst_case_areas, load_mesh, load_trajectory, CameraFrame, Mesh, TexelLayout};
use crate::raster::rasterize;

/// What a fusion run produced.
#[derive(Debug, Clone)]
pub struct FuseOutcome {
    pub total_texels: u64,
    pub triangles: usize,
    /// Frame ids accumulated, in accumulation order.
    pub frames_used: Vec<u32>,
    pub frames_rendered: usize,
    pub observations: u64,
    /// Texels per observation-count bucket: 0, 1, 2-3, 4-7, ...
    pub histogram: Vec<u64>,
    /// Network argmax against ground truth, all frames.
    pub baseline: Option<EvalReport>,
    /// Fused render-back against ground truth, all frames.
    pub fused: Option<EvalReport>,
    /// Same as `baseline`, restricted to mesh-covered pixels.
    pub baseline_covered: Option<EvalReport>,
    /// Same as `fused`, restricted to mesh-covered pixels.
    pub fused_covered: Option<EvalReport>,
    pub texture_path: PathBuf,
    pub labels_dir: PathBuf,
}

pub(crate) fn prediction_path(dir: &Path, frame_id: u32) -> PathBuf {
    dir.join(format!("{frame_id}.smpb"))
}

pub(crate) fn label_path(dir: &Path, frame_id: u32) -> PathBuf {
    dir.join(format!("{frame_id}.png"))
}

fn load_prediction(dir: &Path, frame: &CameraFrame, classes: usize) -> Result<ProbabilityImage> {
    let path = prediction_path(dir, frame.frame_id);
    if !path.exists() {
        return Err(Error::data(format!(
            "missing prediction for frame {}: {}",
            frame.frame_id,
            path.display()
        )));
    }
    let p = read_smpb(&path)?;
    if p.classes() != classes {
        return Err(Error::data(format!(
            "frame {}: prediction has {} classes, expected {classes}",
            frame.frame_id,
            p.classes()
        )));
    }
    if (p.width(), p.height()) != (frame.width(), frame.height()) {
        return Err(Error::data(format!(
            "frame {}: prediction is {}x{} but the camera is {}x{}",
            frame.frame_id,
            p.width(),
            p.height(),
            frame.width(),
            frame.height()
        )));
    }
    Ok(p)
}

/// Accumulates `frames` (in order) into a fresh texture.
fn accumulate_sequential(
    cfg: &PipelineConfig,
    mesh: &Mesh,
    layout: &TexelLayout,
    frames: &[&CameraFrame],
    classes: usize,
    budget: u64,
) -> Result<(ProbabilityTexture, u64)> {
    let mut texture = init_texture(layout, classes, cfg.aggregator, budget)?;
    let mut added = 0;
    // prepare a batch in parallel, fold it in order
    let batch = rayon::current_num_threads().max(1) * 2;
    for chunk in frames.chunks(batch) {
        let prepared: Vec<_> = chunk
            .par_iter()
            .map(|f| -> Result<_> {
                let probs = load_prediction(&cfg.predictions, f, classes)?;
                let ids = rasterize(mesh, layout, f);
                let weights = compute_pixel_weights(&ids, cfg.weight_mode)?;
                Ok((ids, probs, weights))
            })
            .collect();
        for item in prepared {
            let (ids, probs, weights) = item?;
            added += texture.accumulate_frame(layout, &ids, &probs, &weights)?;
        }
    }
    Ok((texture, added))
}

/// Accumulates into independent partial textures and merges them. The
/// result matches a sequential pass up to floating-point reassociation.
fn accumulate_parallel(
    cfg: &PipelineConfig,
    mesh: &Mesh,
    layout: &TexelLayout,
    frames: &[&CameraFrame],
    classes: usize,
) -> Result<(ProbabilityTexture, u64)> {
    let bytes = layout.total_texels() * (classes as u64 * 8 + 4);
    let affordable = (cfg.memory_budget / bytes.max(1)).max(1) as usize;
    let groups = rayon::current_num_threads().min(frames.len()).min(affordable).max(1);
    if groups == 1 {
        return accumulate_sequential(cfg, mesh, layout, frames, classes, cfg.memory_budget);
    }
    let size = frames.len().div_ceil(groups);
    let share = cfg.memory_budget / groups as u64;
    let parts: Vec<Result<(ProbabilityTexture, u64)>> = frames
        .par_chunks(size)
        .map(|chunk| {
            let mut texture = init_texture(layout, classes, cfg.aggregator, share)?;
            let mut added = 0;
            for f in chunk {
                let probs = load_prediction(&cfg.predictions, f, classes)?;
                let ids = rasterize(mesh, layout, f);
                let weights = compute_pixel_weights(&ids, cfg.weight_mode)?;
                added += texture.accumulate_frame(layout, &ids, &probs, &weights)?;
            }
            Ok((texture, added))
        })
        .collect();
    let mut parts = parts.into_iter();
    let (mut texture, mut added) = parts.next().expect("at least one group")?;
    for part in parts {
        let (t, a) = part?;
        texture.merge(&t)?;
        added += a;
    }
    Ok((texture, added))
}

/// Runs the full pipeline described by `cfg`: worst-case areas over every
/// trajectory frame, texel layout, fusion of the selected frames, render-back
/// to every frame, and evaluation when ground truth is configured.
///
/// Writes `texture.smtx`, `labels/<frame_id>.png`, `mesh_labels.ply`,
/// `report.txt`, `report.json` and the resolved `config.txt` into the output
/// directory.
pub fn cmd_fuse(cfg: &PipelineConfig) -> Result<FuseOutcome> {
    cfg.validate()?;
    let load = load_mesh(&cfg.mesh)?;
    if load.dropped_degenerate > 0 {
        warn!("dropped {} degenerate triangles", load.dropped_degenerate);
    }
    let mesh = load.mesh;
    let frames = load_trajectory(&cfg.trajectory)?;
    let selected_idx = select_frames(frames.len(), cfg.frame_fraction)?;
    let mut selected: Vec<&CameraFrame> = selected_idx.iter().map(|&i| &frames[i]).collect();
    if cfg.deterministic {
        selected.sort_by_key(|f| f.frame_id);
    }
    info!("using {} of {} frames", selected.len(), frames.len());

    // fail fast before the area pass
    if let Some(f) = selected
        .iter()
        .find(|f| !prediction_path(&cfg.predictions, f.frame_id).exists())
    {
        return Err(Error::data(format!(
            "missing prediction for frame {}: {}",
            f.frame_id,
            prediction_path(&cfg.predictions, f.frame_id).display()
        )));
    }
    let classes = match cfg.classes {
        Some(c) => c,
        None => read_smpb(&prediction_path(&cfg.predictions, selected[0].frame_id))?.classes(),
    };

    let areas = compute_worst_case_areas(&mesh, &frames);
    let layout = build_texel_layout(&mesh, &areas, cfg.gamma);
    println!(
        "texels: {} over {} triangles (gamma {})",
        layout.total_texels(),
        mesh.num_triangles(),
        cfg.gamma
    );

    let (mut texture, observations) = if cfg.deterministic {
        accumulate_sequential(cfg, &mesh, &layout, &selected, classes, cfg.memory_budget)?
    } else {
        accumulate_parallel(cfg, &mesh, &layout, &selected, classes)?
    };
    texture.finalize()?;
    let histogram = texture.observation_histogram();
    println!("observations: {observations} from {} frames", selected.len());
    println!("texels by observation count: {}", format_histogram(&histogram));

    fs::create_dir_all(&cfg.output).map_err(|e| Error::io(&cfg.output, e))?;
    let texture_path = cfg.output.join("texture.smtx");
    write_smtx(&texture_path, &layout, &texture)?;

    let texel_labels = texture.texel_argmax()?;
    let labels_dir = cfg.output.join("labels");
    fs::create_dir_all(&labels_dir).map_err(|e| Error::io(&labels_dir, e))?;
    let results: Vec<Result<Option<[EvalReport; 4]>>> = frames
        .par_iter()
        .map(|f| render_and_score(cfg, &mesh, &layout, &texel_labels, f, classes, &labels_dir))
        .collect();

    let mut reports: Option<[EvalReport; 4]> = None;
    let mut rendered = 0;
    for r in results {
        rendered += 1;
        if let Some(e) = r? {
            match reports.as_mut() {
                None => reports = Some(e),
                Some(acc) => {
                    for (a, b) in acc.iter_mut().zip(&e) {
                        a.merge(b);
                    }
                }
            }
        }
    }
    let [baseline, fused, baseline_covered, fused_covered] = match reports {
        Some([a, b, c, d]) => [Some(a), Some(b), Some(c), Some(d)],
        None => [None, None, None, None],
    };

    let palette = match &cfg.palette {
        Some(p) => Palette::load(p)?,
        None => Palette::generated(classes),
    };
    export_colored_mesh(&mesh, &layout, &texture, &palette, &cfg.output.join("mesh_labels.ply"))?;

    let mut resolved = cfg.clone();
    resolved.classes = Some(classes);
    write(&cfg.output.join("config.txt"), resolved.to_text())?;

    let outcome = FuseOutcome {
        total_texels: layout.total_texels(),
        triangles: mesh.num_triangles(),
        frames_used: selected.iter().map(|f| f.frame_id).collect(),
        frames_rendered: rendered,
        observations,
        histogram,
        baseline,
        fused,
        baseline_covered,
        fused_covered,
        texture_path,
        labels_dir,
    };
    write(&cfg.output.join("report.txt"), report_text(&outcome))?;
    write(&cfg.output.join("report.json"), report_json(&outcome))?;
    if let (Some(b), Some(f)) = (&outcome.baseline, &outcome.fused) {
        println!(
            "pixel accuracy: network {:.4}, fused {:.4}",
            b.pixel_accuracy, f.pixel_accuracy
        );
    }
    Ok(outcome)
}

fn render_and_score(
    cfg: &PipelineConfig,
    mesh: &Mesh,
    layout: &TexelLayout,
    texel_labels: &[u16],
    frame: &CameraFrame,
    classes: usize,
    labels_dir: &Path,
) -> Result<Option<[EvalReport; 4]>> {
    let needs_network = cfg.fallback == Fallback::Network || cfg.gt.is_some();
    let network = if needs_network {
        Some(load_prediction(&cfg.predictions, frame, classes)?.argmax())
    } else {
        None
    };
    let fallback = match cfg.fallback {
        Fallback::Network => network.as_ref(),
        Fallback::Unknown => None,
    };
    let ids = rasterize(mesh, layout, frame);
    let labels = labels_from_ids(&ids, layout, texel_labels, fallback);
    write_label_png(&label_path(labels_dir, frame.frame_id), &labels, classes)?;

    let eval = match (&cfg.gt, &network) {
        (Some(dir), Some(net)) => {
            let path = label_path(dir, frame.frame_id);
            let gt = read_label_png(&path)?;
            if !gt.same_size(&labels) {
                return Err(Error::data(format!(
                    "frame {}: ground truth {} is {}x{}, expected {}x{}",
                    frame.frame_id,
                    path.display(),
                    gt.width(),
                    gt.height(),
                    labels.width(),
                    labels.height()
                )));
            }
            let mut covered_gt = gt.clone();
            for (g, p) in covered_gt.labels_mut().iter_mut().zip(ids.pixels()) {
                if !p.is_covered() {
                    *g = UNKNOWN;
                }
            }
            Some([
                pixel_accuracy(net, &gt, &cfg.ignore, classes)?,
                pixel_accuracy(&labels, &gt, &cfg.ignore, classes)?,
                pixel_accuracy(net, &covered_gt, &cfg.ignore, classes)?,
                pixel_accuracy(&labels, &covered_gt, &cfg.ignore, classes)?,
            ])
        }
        _ => None,
    };
    Ok(eval)
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn format_histogram(h: &[u64]) -> String {
    h.iter()
        .enumerate()
        .map(|(k, n)| format!("{}:{n}", bucket_name(k)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn bucket_name(k: usize) -> String {
    match k {
        0 => "0".into(),
        1 => "1".into(),
        _ => format!("{}-{}", 1u64 << (k - 1), (1u64 << k) - 1),
    }
}

fn report_text(o: &FuseOutcome) -> String {
    let mut s = format!(
        "texels={}\ntriangles={}\nframes_used={}\nframes_rendered={}\nobservations={}\n",
        o.total_texels,
        o.triangles,
        o.frames_used.len(),
        o.frames_rendered,
        o.observations
    );
    for (k, n) in o.histogram.iter().enumerate() {
        s.push_str(&format!("texels_observed_{}={n}\n", bucket_name(k)));
    }
    let sections = [
        ("baseline", &o.baseline),
        ("fused", &o.fused),
        ("baseline_covered", &o.baseline_covered),
        ("fused_covered", &o.fused_covered),
    ];
    for (name, r) in sections {
        if let Some(r) = r {
            for line in r.to_key_value().lines() {
                s.push_str(&format!("{name}.{line}\n"));
            }
        }
    }
    s
}

fn report_json(o: &FuseOutcome) -> String {
    let v = json!({
        "texels": o.total_texels,
        "triangles": o.triangles,
        "frames_used": o.frames_used,
        "frames_rendered": o.frames_rendered,
        "observations": o.observations,
        "observation_histogram": o.histogram,
        "baseline": o.baseline,
        "fused": o.fused,
        "baseline_covered": o.baseline_covered,
        "fused_covered": o.fused_covered,
    });
    serde_json::to_string_pretty(&v).expect("report serializes") + "\n"
}
