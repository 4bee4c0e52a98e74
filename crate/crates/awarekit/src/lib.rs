//! File formats, run artifacts and the command line for `awarekit-core`.

pub mod cli;
pub mod formats;
pub mod output;

pub use awarekit_core as core;

/// Directory of the bundled map, scenario and catalog fixtures.
pub fn data_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}
