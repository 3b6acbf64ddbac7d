//! Stage orchestration with file handoff: each stage reads its inputs
//! from the configured paths or the output directory, writes its
//! artifacts there and records a manifest.

mod config;
mod manifest;
mod stages;

pub use config::{Dataset, Params, Paths, PipelineConfig, Toggles, CONFIG_ENV};
pub use manifest::{digest_file, sha256_hex, FileDigest, Manifest};
pub use stages::*;
