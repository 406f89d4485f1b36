use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use nalgebra::Point3;
use rayon::prelude::*;

use super::fuse::{label_path, prediction_path};
use crate::error::{Error, Result};
use crate::eval::{pixel_accuracy, read_label_png, write_label_png, EvalReport, LabelImage, Palette, UNKNOWN};
use crate::eval::render::labels_from_ids;
use crate::fusion::{read_smtx, write_smpb};
use crate::geometry::{load_mesh, load_trajectory, write_ply, write_trajectory, Intrinsics};
use crate::raster::{rasterize, write_debug_pngs};
use crate::synth::{corrupt, make_orbit_trajectory, make_scene, render_ground_truth, NoiseModel, SceneKind};

/// Label PNGs in `dir` keyed by file stem.
fn label_dir(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                out.insert(stem.to_string(), path);
            }
        }
    }
    Ok(out)
}

/// Compares label PNGs in `pred_dir` against same-named ones in `gt_dir`
/// and pools the counts. The class count defaults to one past the largest
/// label seen.
pub fn cmd_eval(pred_dir: &Path, gt_dir: &Path, ignore: &[u16], classes: Option<usize>) -> Result<EvalReport> {
    let preds = label_dir(pred_dir)?;
    let gts = label_dir(gt_dir)?;
    let missing_pred: Vec<&str> = gts.keys().filter(|k| !preds.contains_key(*k)).map(String::as_str).collect();
    let missing_gt: Vec<&str> = preds.keys().filter(|k| !gts.contains_key(*k)).map(String::as_str).collect();
    if !missing_pred.is_empty() || !missing_gt.is_empty() {
        return Err(Error::data(format!(
            "frame sets differ: missing predictions [{}], missing ground truth [{}]",
            missing_pred.join(", "),
            missing_gt.join(", ")
        )));
    }
    if gts.is_empty() {
        return Err(Error::data(format!("no label images in {}", gt_dir.display())));
    }
    let pairs: Vec<(LabelImage, LabelImage)> = gts
        .par_iter()
        .map(|(k, g)| Ok((read_label_png(&preds[k])?, read_label_png(g)?)))
        .collect::<Result<_>>()?;
    let classes = match classes {
        Some(c) => c,
        None => {
            let max = pairs
                .iter()
                .flat_map(|(p, g)| p.labels().iter().chain(g.labels()))
                .filter(|&&l| l != UNKNOWN)
                .max()
                .copied()
                .unwrap_or(0);
            (max as usize + 1).max(2)
        }
    };
    let mut total = EvalReport::empty(classes);
    for ((name, _), (p, g)) in gts.iter().zip(&pairs) {
        let r = pixel_accuracy(p, g, ignore, classes)
            .map_err(|e| Error::data(format!("frame {name}: {e}")))?;
        total.merge(&r);
    }
    Ok(total)
}

/// Parameters of a synthetic scene directory.
#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub kind: SceneKind,
    pub classes: usize,
    pub tessellation: u32,
    pub frames: usize,
    pub radius: f64,
    pub tilt_deg: f64,
    pub width: u32,
    pub height: u32,
    pub focal: f64,
    pub noise: NoiseModel,
    pub output: PathBuf,
}

impl SynthOptions {
    /// Defaults for `kind`: 30 frames of 320x240 on an orbit around the
    /// origin, flip noise with epsilon 0.3 and confidence 0.8.
    pub fn new(kind: SceneKind, output: PathBuf) -> Self {
        let (classes, tessellation, radius, tilt_deg) = match kind {
            SceneKind::Cube => (6, 0, 3.0, crate::synth::DEFAULT_TILT_DEG),
            SceneKind::Room => (3, 2, 1.0, 15.0),
            SceneKind::CheckerSphere => (2, 2, 3.0, crate::synth::DEFAULT_TILT_DEG),
        };
        Self {
            kind,
            classes,
            tessellation,
            frames: 30,
            radius,
            tilt_deg,
            width: 320,
            height: 240,
            focal: 300.0,
            noise: NoiseModel::flip(0.3, 0.8, 0),
            output,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthSummary {
    pub triangles: usize,
    pub frames: usize,
    pub classes: usize,
    /// Network argmax accuracy over covered pixels, all frames pooled.
    pub network_accuracy: f64,
}

/// Writes a scene directory: `mesh.ply`, `trajectory.txt`, `gt/<id>.png`,
/// `probs/<id>.smpb`, `palette.txt` and a ready-to-run `fuse.cfg`.
pub fn cmd_synth(opts: &SynthOptions) -> Result<SynthSummary> {
    if opts.frames == 0 {
        return Err(Error::config("synth needs at least one frame"));
    }
    if !(opts.radius > 0.0 && opts.focal > 0.0) || opts.width == 0 || opts.height == 0 {
        return Err(Error::config("radius, focal length and image size must be positive"));
    }
    opts.noise.validate(opts.classes)?;
    let scene = make_scene(opts.kind, opts.classes, opts.tessellation)?;
    let intrinsics = Intrinsics::centered(opts.focal, opts.width, opts.height);
    let frames = make_orbit_trajectory(Point3::origin(), opts.radius, opts.frames, intrinsics, opts.tilt_deg);

    let out = &opts.output;
    let gt_dir = out.join("gt");
    let probs_dir = out.join("probs");
    for d in [out, &gt_dir, &probs_dir] {
        fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    write_ply(&out.join("mesh.ply"), &scene.mesh, None)?;
    write_trajectory(&out.join("trajectory.txt"), &frames)?;
    Palette::generated(opts.classes).save(&out.join("palette.txt"))?;
    let cfg = "mesh = mesh.ply\ntrajectory = trajectory.txt\npredictions = probs\ngt = gt\npalette = palette.txt\noutput = fused\n";
    fs::write(out.join("fuse.cfg"), cfg).map_err(|e| Error::io(out.join("fuse.cfg"), e))?;

    let counts: Vec<(u64, u64)> = frames
        .par_iter()
        .map(|f| {
            let gt = render_ground_truth(&scene, f);
            let probs = corrupt(&gt, &opts.noise, opts.classes, f.frame_id)?;
            write_label_png(&label_path(&gt_dir, f.frame_id), &gt, opts.classes)?;
            write_smpb(&prediction_path(&probs_dir, f.frame_id), &probs)?;
            let net = probs.argmax();
            let covered = gt.labels().iter().filter(|&&l| l != UNKNOWN).count() as u64;
            let hits = gt
                .labels()
                .iter()
                .zip(net.labels())
                .filter(|(g, p)| **g != UNKNOWN && g == p)
                .count() as u64;
            Ok((hits, covered))
        })
        .collect::<Result<_>>()?;
    let (hits, covered) = counts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let summary = SynthSummary {
        triangles: scene.mesh.num_triangles(),
        frames: frames.len(),
        classes: opts.classes,
        network_accuracy: if covered == 0 { 0.0 } else { hits as f64 / covered as f64 },
    };
    info!(
        "synth {}: {} triangles, {} frames, network accuracy {:.4}",
        opts.kind, summary.triangles, summary.frames, summary.network_accuracy
    );
    Ok(summary)
}

#[derive(Debug, Clone)]
pub struct RenderOptions {
    pub texture: PathBuf,
    pub mesh: PathBuf,
    pub trajectory: PathBuf,
    pub output: PathBuf,
    /// Only these frame ids; all when `None`.
    pub frames: Option<Vec<u32>>,
    /// Also dump triangle, texel and depth PNGs per frame.
    pub debug_ids: bool,
}

/// Renders the fused labels of a stored texture into trajectory frames,
/// writing `<output>/<frame_id>.png`. Returns the number of frames rendered.
pub fn cmd_render(opts: &RenderOptions) -> Result<usize> {
    let (layout, texture) = read_smtx(&opts.texture)?;
    let mesh = load_mesh(&opts.mesh)?.mesh;
    if layout.num_triangles() != mesh.num_triangles() {
        return Err(Error::data(format!(
            "texture covers {} triangles but the mesh has {}",
            layout.num_triangles(),
            mesh.num_triangles()
        )));
    }
    let mut frames = load_trajectory(&opts.trajectory)?;
    if let Some(ids) = &opts.frames {
        let missing: Vec<String> = ids
            .iter()
            .filter(|id| !frames.iter().any(|f| f.frame_id == **id))
            .map(|id| id.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::data(format!("frames not in trajectory: {}", missing.join(", "))));
        }
        frames.retain(|f| ids.contains(&f.frame_id));
    }
    fs::create_dir_all(&opts.output).map_err(|e| Error::io(&opts.output, e))?;
    let texel_labels = texture.texel_argmax()?;
    frames.par_iter().try_for_each(|f| {
        let ids = rasterize(&mesh, &layout, f);
        let labels = labels_from_ids(&ids, &layout, &texel_labels, None);
        write_label_png(&label_path(&opts.output, f.frame_id), &labels, texture.classes())?;
        if opts.debug_ids {
            write_debug_pngs(&ids, &opts.output.join(format!("{}_ids", f.frame_id)))?;
        }
        Ok::<_, Error>(())
    })?;
    Ok(frames.len())
}
