//! Domain model, workflow engine and dataset export for a crowdsourced
//! sign-language video corpus.

pub mod annotation;
pub mod assignment;
pub mod config;
pub mod domain;
pub mod error;
pub mod ingest;
pub mod keypoints;
pub mod lifecycle;
pub mod platform;
pub mod repo;
pub mod srt;
pub mod stats;
pub mod text;

#[cfg(feature = "testing")]
pub mod testkit;

pub use error::{Error, Result};
pub use platform::Platform;
