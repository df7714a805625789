//! Command-line and HTTP front ends over `msti-core` and `msti-judge`.

pub mod config_file;
pub mod service;

/// Crate version, reported by `/healthz` and `--version`.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// Wire schema version; also the URL prefix of the service routes.
pub const SCHEMA_VERSION: &str = "v1";
