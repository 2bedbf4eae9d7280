//! Texture suppression by edge enhancing diffusion with orientation
//! smoothing, plus the tooling around it: batch duplication of image
//! datasets and network-free segmentation analysis.

pub mod analysis;
pub mod diffusion;
pub mod error;
pub mod image;
pub mod io;
pub mod metrics;
pub mod params;
pub mod pipeline;

pub use diffusion::{eed_run, Diffuser, Snapshot};
pub use error::{Error, Result};
pub use image::Image;
pub use params::{builtin_presets, preset, DiffusionParams, NamedPreset, ParamsOverride};
