//! Deterministic synthetic scenes, camera orbits, ground-truth renders and
//! controllable noisy predictions.

mod noise;
mod rng;
mod scene;
mod trajectory;

pub use noise::{corrupt, NoiseKind, NoiseModel};
pub use rng::PixelRng;
pub use scene::{make_scene, render_ground_truth, Painter, SceneKind, SyntheticScene};
pub use trajectory::{make_orbit_trajectory, DEFAULT_TILT_DEG};
