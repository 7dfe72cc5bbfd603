//! Command-line and HTTP front ends for the `isabel-core` pipeline.

pub mod config;
pub mod render;
pub mod service;

pub use config::{LoadError, ServiceConfig};
pub use service::{router, AppState};
