//! Multi-view semantic label fusion on texel-subdivided triangle meshes.
//!
//! Per-frame class probability maps are projected onto a reconstructed mesh
//! whose triangles are subdivided into texels, aggregated per texel, and
//! rendered back into every camera frame to produce consistent annotations.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: meshes, pinhole cameras, worst-case triangle areas and the
//!   texel layout.
//! * [`raster`]: a z-buffered software rasterizer producing per-pixel
//!   triangle/texel correspondences.
//! * [`fusion`]: packed per-texel probability storage, pixel weights and the
//!   `maxsum` / `sum` / `mul` aggregators.
//! * [`eval`]: render-back of fused labels, pixel accuracy, frame selection
//!   and colored mesh export.
//! * [`synth`]: deterministic synthetic scenes with ground truth and noisy
//!   predictions.
//! * [`pipeline`]: the end-to-end `fuse` / `eval` / `synth` / `render` jobs
//!   driven by a flat key=value configuration.

pub mod error;
pub mod eval;
pub mod fusion;
pub mod geometry;
pub mod pipeline;
pub mod raster;
pub mod synth;

pub use error::{Error, Result};


pub use geometry::{CameraFrame, Intrinsics, Mesh, Pose, TexelLayout, TriangleArea};
pub use raster::{IdImage, PixelRef};
pub use eval::{EvalReport, LabelImage, UNKNOWN};
pub use fusion::{Aggregator, ProbabilityImage, ProbabilityTexture, WeightImage, WeightMode};
pub use pipeline::{Fallback, PipelineConfig};
pub use synth::{NoiseModel, SceneKind, SyntheticScene};
