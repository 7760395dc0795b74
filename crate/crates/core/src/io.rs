//! File output helpers.

use std::io::Write;
use std::path::Path;

/// Writes `path` through a temporary sibling file and renames it into place,
/// so readers never observe a partially written file.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        write(&mut buf)?;
        buf.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_string_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    write_atomic(path, |w| w.write_all(contents.as_bytes()))
}
