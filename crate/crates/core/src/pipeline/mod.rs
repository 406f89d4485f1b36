//! End-to-end orchestration: configuration, fusion runs, evaluation,
//! synthetic scene export and rendering of stored textures.

mod commands;
mod config;
mod fuse;

pub use commands::{cmd_eval, cmd_render, cmd_synth, RenderOptions, SynthOptions, SynthSummary};
pub use config::{ConfigBuilder, Fallback, PipelineConfig, CONFIG_KEYS};
pub use fuse::{cmd_fuse, FuseOutcome};
