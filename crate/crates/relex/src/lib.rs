//! File formats, stage orchestration and the command-line front end over
//! `relex-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;
pub mod manifest;
pub mod pipeline;
pub mod synth;

pub use error::{Error, Result};
