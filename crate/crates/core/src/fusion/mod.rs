//! Label fusion: packed per-texel class distributions, per-pixel weights and
//! the weighted `maxsum`, `sum` and `mul` aggregators.

mod image;
mod texture;
mod weights;

pub use image::{read_smpb, write_smpb, ProbabilityImage};
pub use texture::{
    init_texture, read_smtx, write_smtx, Aggregator, ProbabilityTexture, DEFAULT_MEMORY_BUDGET, PROB_FLOOR,
};
pub use weights::{compute_pixel_weights, WeightImage, WeightMode};
