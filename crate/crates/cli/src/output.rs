//! Atomic output files: everything is staged in temporary files next to its
//! destination and renamed into place only once all of them are complete.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

#[derive(Default)]
pub struct Staged {
    files: Vec<(NamedTempFile, PathBuf)>,
}

impl Staged {
    pub fn add(&mut self, dest: &Path, bytes: &[u8]) -> Result<()> {
        let dir = match dest.parent() {
            Some(d) if !d.as_os_str().is_empty() => d,
            _ => Path::new("."),
        };
        let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("cannot write to {}", dir.display()))?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        self.files.push((tmp, dest.to_path_buf()));
        Ok(())
    }

    /// Renames every staged file to its destination.
    pub fn commit(self) -> Result<()> {
        for (tmp, dest) in self.files {
            tmp.persist(&dest)
                .with_context(|| format!("cannot create {}", dest.display()))?;
        }
        Ok(())
    }
}

/// Writes one file atomically.
pub fn write_atomic(dest: &Path, bytes: &[u8]) -> Result<()> {
    let mut staged = Staged::default();
    staged.add(dest, bytes)?;
    staged.commit()
}
