//! File formats: flat key=value configs, the SLC1 binary raster, scene
//! descriptions, CSV exports and run manifests. All multi-byte binary
//! values are little-endian; all text is UTF-8 with `#` comments.

mod config;
mod csvio;
mod manifest;
mod scene;
mod slc_file;

pub use config::{
    load_affine, load_geometry, load_grid, load_sonic, load_track_config, save_geometry,
    Affine, GridConfig, KvFile, SonicConfig, TimeScale,
};
pub use csvio::{
    read_shift_series, read_stream, read_tomogram, read_topo, read_trajectory, write_geo_csv,
    write_pgm16, write_shift_series, write_stream, write_tomogram_csv, write_trajectory,
};
pub use manifest::{
    read_manifest_outputs, read_stack_manifest, sha256_file, write_run_manifest,
    write_stack_manifest, RunManifest, StackManifest,
};
pub use scene::{load_scene, write_scene_text, SceneFile};
pub use slc_file::{read_slc, write_slc, SLC_MAGIC, SLC_VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: missing key `{key}`")]
    MissingKey { path: String, key: String },
    #[error("{path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("not an SLC file (bad magic)")]
    BadMagic,
    #[error("unsupported SLC version {0}")]
    BadVersion(u16),
    #[error("SLC payload truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IoError {
    pub(crate) fn invalid(path: &std::path::Path, msg: impl Into<String>) -> Self {
        IoError::Invalid {
            path: path.display().to_string(),
            msg: msg.into(),
        }
    }
}

/// Resolve `relative` against the directory containing `base`.
pub fn resolve_relative(base: &std::path::Path, relative: &str) -> std::path::PathBuf {
    let p = std::path::Path::new(relative);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.parent().unwrap_or(std::path::Path::new(".")).join(p)
    }
}
