//! All-or-nothing output staging.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Files to be written together. Nothing touches the filesystem until
/// [`Outputs::commit`], which writes every file to a temporary sibling first
/// and renames them into place only once all writes have succeeded.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.into(), bytes.into()));
    }

    pub fn commit(self) -> CliResult<()> {
        let io = |path: &Path, e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, bytes) in &self.files {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
            let mut tmp = NamedTempFile::new_in(&dir).map_err(|e| io(path, e))?;
            tmp.write_all(bytes).map_err(|e| io(path, e))?;
            tmp.flush().map_err(|e| io(path, e))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path).map_err(|e| io(path, e.error))?;
        }
        Ok(())
    }
}
