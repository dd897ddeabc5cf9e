//! File formats and the command-line driver for `g2l-core`.

pub mod checkpoint;
pub mod cli;
pub mod dataset_io;
pub mod error;
pub mod game_json;
pub mod geodesic_json;
pub mod manifest;
pub mod report;

pub use error::{Error, Result};

use std::io::Write;
use std::path::Path;

/// Writes `bytes` to a temporary file in the target directory, then renames
/// it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
