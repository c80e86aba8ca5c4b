//! File formats, geostrophic conversion, pipeline orchestration and plotting
//! on top of [`oecs_core`].

pub mod config;
pub mod error;
pub mod geostrophic;
pub mod grid_io;
pub mod pipeline;
pub mod svg;

pub use config::RunConfig;
pub use error::{OecsError, Result};
pub use oecs_core as core;
pub use pipeline::{run_pipeline, PipelineOutput};
