use std::fs;
use std::path::Path;

use labelfuse::eval::{read_label_png, write_label_png, LabelImage};
use labelfuse::pipeline::{cmd_eval, cmd_fuse, cmd_render, cmd_synth, ConfigBuilder, PipelineConfig, RenderOptions, SynthOptions};
use labelfuse::synth::SceneKind;
use labelfuse::Error;
use tempfile::TempDir;

fn small_synth(dir: &Path, kind: SceneKind, frames: usize) -> SynthOptions {
    let mut opts = SynthOptions::new(kind, dir.to_path_buf());
    opts.frames = frames;
    opts.width = 96;
    opts.height = 72;
    opts.focal = 90.0;
    cmd_synth(&opts).unwrap();
    opts
}

fn config_for(scene: &Path, out: &str) -> PipelineConfig {
    let mut b = ConfigBuilder::new();
    b.apply_file(&scene.join("fuse.cfg")).unwrap();
    b.set("output", scene.join(out).to_str().unwrap()).unwrap();
    b.build().unwrap()
}

#[test]
fn synth_directory_layout() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 4);
    for f in ["mesh.ply", "trajectory.txt", "palette.txt", "fuse.cfg", "gt/0.png", "gt/3.png", "probs/0.smpb", "probs/3.smpb"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let mesh = labelfuse::geometry::load_mesh(&tmp.path().join("mesh.ply")).unwrap();
    assert_eq!(mesh.mesh.num_triangles(), 12);
    assert_eq!(mesh.mesh.num_vertices(), 8);
}

#[test]
fn fuse_beats_network_on_cube() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 12);
    let cfg = config_for(tmp.path(), "fused");
    let out = cmd_fuse(&cfg).unwrap();
    assert_eq!(out.frames_used.len(), 12);
    assert_eq!(out.frames_rendered, 12);
    let (base, fused) = (out.baseline.unwrap(), out.fused.unwrap());
    assert!(fused.pixel_accuracy > base.pixel_accuracy + 0.1, "{} vs {}", fused.pixel_accuracy, base.pixel_accuracy);
    for f in ["texture.smtx", "labels/0.png", "labels/11.png", "report.txt", "report.json", "config.txt", "mesh_labels.ply"] {
        assert!(cfg.output.join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(cfg.output.join("report.txt")).unwrap();
    assert!(report.contains("fused.pixel_accuracy="));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(cfg.output.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["texels"].as_u64().unwrap(), out.total_texels);
}

#[test]
fn echoed_config_reproduces_run() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 6);
    let cfg = config_for(tmp.path(), "a");
    cmd_fuse(&cfg).unwrap();
    let mut b = ConfigBuilder::new();
    b.apply_file(&cfg.output.join("config.txt")).unwrap();
    b.set("output", tmp.path().join("b").to_str().unwrap()).unwrap();
    let again = b.build().unwrap();
    assert_eq!(again.classes, Some(6));
    cmd_fuse(&again).unwrap();
    let read = |d: &str, f: &str| fs::read(tmp.path().join(d).join(f)).unwrap();
    assert_eq!(read("a", "texture.smtx"), read("b", "texture.smtx"));
    assert_eq!(read("a", "labels/5.png"), read("b", "labels/5.png"));
}

#[test]
fn frame_fraction_selects_subset() {
    let tmp = TempDir::new().unwrap();
    let mut opts = SynthOptions::new(SceneKind::Cube, tmp.path().to_path_buf());
    opts.frames = 100;
    opts.width = 24;
    opts.height = 18;
    opts.focal = 24.0;
    cmd_synth(&opts).unwrap();
    let mut cfg = config_for(tmp.path(), "fused");
    cfg.frame_fraction = 0.2;
    let out = cmd_fuse(&cfg).unwrap();
    assert_eq!(out.frames_used.len(), 20);
    assert_eq!(out.frames_used[..3], [0, 5, 10]);
    assert_eq!(out.frames_rendered, 100);
}

#[test]
fn missing_predictions_fail_fast() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 3);
    fs::remove_dir_all(tmp.path().join("probs")).unwrap();
    fs::create_dir(tmp.path().join("probs")).unwrap();
    let err = cmd_fuse(&config_for(tmp.path(), "fused")).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    assert!(err.to_string().contains("frame 0"), "{err}");
    assert!(!tmp.path().join("fused").exists());
}

#[test]
fn class_count_mismatch_is_data_error() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 2);
    let mut cfg = config_for(tmp.path(), "fused");
    cfg.classes = Some(4);
    let err = cmd_fuse(&cfg).unwrap_err();
    assert!(matches!(err, Error::Data(_)), "{err}");
}

#[test]
fn capacity_error_exit_code() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 2);
    let mut cfg = config_for(tmp.path(), "fused");
    cfg.memory_budget = 64;
    let err = cmd_fuse(&cfg).unwrap_err();
    assert_eq!(err.exit_code(), 4);
}

#[test]
fn parallel_mode_matches_sequential() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 10);
    let seq = cmd_fuse(&config_for(tmp.path(), "seq")).unwrap();
    let mut cfg = config_for(tmp.path(), "par");
    cfg.deterministic = false;
    let par = cmd_fuse(&cfg).unwrap();
    assert_eq!(seq.observations, par.observations);
    let (a, b) = (seq.fused.unwrap(), par.fused.unwrap());
    assert!((a.pixel_accuracy - b.pixel_accuracy).abs() < 1e-3);
    let (la, ta) = labelfuse::fusion::read_smtx(&seq.texture_path).unwrap();
    let (lb, tb) = labelfuse::fusion::read_smtx(&par.texture_path).unwrap();
    assert_eq!(la, lb);
    for r in 0..ta.num_rows() {
        for (x, y) in ta.row(r).iter().zip(tb.row(r)) {
            assert!((x - y).abs() < 1e-6);
        }
    }
}

#[test]
fn eval_pools_frames() {
    let tmp = TempDir::new().unwrap();
    let (p, g) = (tmp.path().join("p"), tmp.path().join("g"));
    fs::create_dir_all(&p).unwrap();
    fs::create_dir_all(&g).unwrap();
    let gt = LabelImage::filled(10, 10, 1);
    let mut a = gt.clone();
    a.labels_mut()[..40].fill(0);
    let mut b = gt.clone();
    b.labels_mut()[..20].fill(0);
    write_label_png(&g.join("0.png"), &gt, 2).unwrap();
    write_label_png(&g.join("1.png"), &gt, 2).unwrap();
    write_label_png(&p.join("0.png"), &a, 2).unwrap();
    write_label_png(&p.join("1.png"), &b, 2).unwrap();
    let r = cmd_eval(&p, &g, &[], Some(2)).unwrap();
    assert!((r.pixel_accuracy - 0.7).abs() < 1e-12);
    assert_eq!(cmd_eval(&g, &g, &[], None).unwrap().pixel_accuracy, 1.0);

    write_label_png(&p.join("7.png"), &gt, 2).unwrap();
    fs::remove_file(g.join("1.png")).unwrap();
    let err = cmd_eval(&p, &g, &[], None).unwrap_err().to_string();
    assert!(err.contains('1') && err.contains('7'), "{err}");
}

#[test]
fn render_matches_fuse_without_fallback() {
    let tmp = TempDir::new().unwrap();
    small_synth(tmp.path(), SceneKind::Cube, 4);
    let mut cfg = config_for(tmp.path(), "fused");
    cfg.fallback = labelfuse::pipeline::Fallback::Unknown;
    cmd_fuse(&cfg).unwrap();
    let out = tmp.path().join("rendered");
    let n = cmd_render(&RenderOptions {
        texture: cfg.output.join("texture.smtx"),
        mesh: cfg.mesh.clone(),
        trajectory: cfg.trajectory.clone(),
        output: out.clone(),
        frames: Some(vec![1, 3]),
        debug_ids: true,
    })
    .unwrap();
    assert_eq!(n, 2);
    assert!(!out.join("0.png").exists());
    assert!(out.join("3_ids_texel.png").exists());
    assert_eq!(
        read_label_png(&out.join("3.png")).unwrap(),
        read_label_png(&cfg.output.join("labels/3.png")).unwrap()
    );
}
