//! File formats, parallel batch drivers and the `refpose` command line
//! around [`refpose_core`].

pub mod cli;
pub mod error;
pub mod estimate;
pub mod evaluate;
pub mod format;
pub mod refine_batch;
pub mod scene;
pub mod sensitivity;
pub mod simulate;

pub use error::{Error, Result};
