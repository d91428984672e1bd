//! Dataset ingestion and artifact persistence.

mod idx;
mod persist;
mod pgm;

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub use idx::{load_idx, parse_idx, IdxKind, IdxTensor};
pub use persist::{persist_run, Artifact, Manifest, RunInfo};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};

/// Write through a sibling temporary file and rename into place, creating
/// parent directories as needed.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut file = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    file.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    file.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
