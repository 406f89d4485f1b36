//! Render-back of fused labels and evaluation against ground truth.

mod export;
mod frames;
mod labels;
mod metrics;
mod palette;
pub(crate) mod render;

pub use export::{export_colored_mesh, face_majority_labels, UNOBSERVED_COLOR};
pub use frames::select_frames;
pub use labels::{read_label_png, write_label_png, LabelImage, UNKNOWN};
pub use metrics::{pixel_accuracy, EvalReport};
pub use palette::Palette;
pub use render::{render_labels, render_with_texel_labels};
