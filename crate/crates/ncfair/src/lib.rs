//! File formats, experiment drivers and the command-line front end for
//! `ncfair-core`.

pub mod cli;
pub mod compas;
pub mod csvio;
pub mod error;
pub mod experiments;
pub mod report;
pub mod sdpa;

pub use error::{IoError, Result};
