use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labelfuse"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn synth(dir: &Path, frames: &str) {
    let out = run(&[
        "synth", "--scene", "cube", "--output", dir.to_str().unwrap(), "--frames", frames, "--width", "80",
        "--height", "60", "--focal", "80", "--seed", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_fuse_eval_render() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene, "8");
    let cfg = scene.join("fuse.cfg");
    let out = run(&["fuse", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("texels:"), "{stdout}");
    assert!(stdout.contains("texels by observation count"), "{stdout}");

    let fused = scene.join("fused");
    let out = run(&["eval", "--pred", fused.join("labels").to_str().unwrap(), "--gt", scene.join("gt").to_str().unwrap()]);
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    let acc: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("pixel_accuracy="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(acc > 0.9, "{stdout}");

    let rendered = tmp.path().join("rendered");
    let out = run(&[
        "render", "--texture", fused.join("texture.smtx").to_str().unwrap(), "--mesh",
        scene.join("mesh.ply").to_str().unwrap(), "--trajectory", scene.join("trajectory.txt").to_str().unwrap(),
        "--output", rendered.to_str().unwrap(), "--frames", "0,2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(rendered.join("2.png").exists() && !rendered.join("1.png").exists());
}

#[test]
fn flags_override_config() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene, "4");
    let out_dir = tmp.path().join("o");
    let out = run(&[
        "fuse", "--config", scene.join("fuse.cfg").to_str().unwrap(), "--gamma", "0", "--aggregator", "sum",
        "--weight_mode", "blend(0.5)", "--output", out_dir.to_str().unwrap(), "--deterministic",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echoed = std::fs::read_to_string(out_dir.join("config.txt")).unwrap();
    assert!(echoed.contains("gamma = 0\n"), "{echoed}");
    assert!(echoed.contains("aggregator = sum\n"));
    assert!(echoed.contains("weight_mode = blend(0.5)\n"));
    assert!(echoed.contains("deterministic = true\n"));
    // one texel per triangle
    assert!(String::from_utf8_lossy(&out.stdout).contains("texels: 12 "));
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let scene = tmp.path().join("scene");
    synth(&scene, "2");
    let cfg = scene.join("fuse.cfg");
    let cfg = cfg.to_str().unwrap();

    let bad_key = run(&["fuse", "--config", cfg, "--aggregator", "median"]);
    assert_eq!(bad_key.status.code(), Some(2));
    let no_mesh = run(&["fuse", "--config", cfg, "--mesh", "/nonexistent/mesh.ply"]);
    assert_eq!(no_mesh.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&no_mesh.stderr).contains("/nonexistent/mesh.ply"));

    std::fs::remove_file(scene.join("probs/1.smpb")).unwrap();
    let missing = run(&["fuse", "--config", cfg]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("frame 1"));

    let tiny = run(&["fuse", "--config", cfg, "--frame_fraction", "0.5", "--memory_budget", "16"]);
    assert_eq!(tiny.status.code(), Some(4));

    let bad_scene = run(&["synth", "--scene", "torus", "--output", tmp.path().join("t").to_str().unwrap()]);
    assert_eq!(bad_scene.status.code(), Some(2));
}
