//! File formats, configuration, scenario presets and the end-to-end pipeline
//! around [`geochart_core`].

pub mod config;
pub mod error;
pub mod io;
pub mod pipeline;
pub mod presets;
pub mod report;

pub use error::{Error, Result};
