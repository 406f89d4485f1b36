//! Benchmark fixtures: a synthetic sphere scene with noisy predictions.

use labelfuse::eval::LabelImage;
use labelfuse::geometry::{build_texel_layout, compute_worst_case_areas};
use labelfuse::raster::rasterize;
use labelfuse::synth::{corrupt, make_orbit_trajectory, make_scene, render_ground_truth, SceneKind, SyntheticScene};
use labelfuse::{CameraFrame, IdImage, Intrinsics, NoiseModel, ProbabilityImage, TexelLayout};
use nalgebra::Point3;

pub const CLASSES: usize = 4;

pub struct Fixture {
    pub scene: SyntheticScene,
    pub layout: TexelLayout,
    pub frames: Vec<CameraFrame>,
    pub ids: Vec<IdImage>,
    pub gt: Vec<LabelImage>,
    pub probs: Vec<ProbabilityImage>,
    pub noise: NoiseModel,
}

/// Checker sphere at icosphere `level`, observed by an orbit of `n_frames`
/// 320x240 views.
pub fn sphere_fixture(level: u32, n_frames: usize, gamma: f64) -> Fixture {
    let scene = make_scene(SceneKind::CheckerSphere, CLASSES, level).expect("valid scene");
    let frames = make_orbit_trajectory(Point3::origin(), 3.0, n_frames, Intrinsics::centered(300.0, 320, 240), 30.0);
    let layout = build_texel_layout(&scene.mesh, &compute_worst_case_areas(&scene.mesh, &frames), gamma);
    let ids: Vec<IdImage> = frames.iter().map(|f| rasterize(&scene.mesh, &layout, f)).collect();
    let gt: Vec<LabelImage> = frames.iter().map(|f| render_ground_truth(&scene, f)).collect();
    let noise = NoiseModel::flip(0.3, 0.8, 1);
    let probs = gt
        .iter()
        .zip(&frames)
        .map(|(g, f)| corrupt(g, &noise, CLASSES, f.frame_id).expect("valid noise"))
        .collect();
    Fixture {
        scene,
        layout,
        frames,
        ids,
        gt,
        probs,
        noise,
    }
}
