//! Output file helpers.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{GrnnError, Result};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| GrnnError::io(dir, e))?;
        }
    }
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| GrnnError::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| GrnnError::io(&tmp, e))?;
        f.sync_all().map_err(|e| GrnnError::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| GrnnError::io(path, e))
}

/// Serializes each item as one JSON line.
pub fn to_json_lines<T: serde::Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it)?);
        out.push('\n');
    }
    Ok(out)
}
