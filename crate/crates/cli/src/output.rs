use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Files written by one command. Every write goes to a temporary file in
/// the destination directory and is renamed into place; [`discard`]
/// removes everything written so far.
///
/// [`discard`]: OutputDir::discard
pub struct OutputDir {
    root: PathBuf,
    created_root: bool,
    created_dirs: Vec<PathBuf>,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn open(root: &Path) -> CliResult<Self> {
        let created_root = !root.exists();
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            created_root,
            created_dirs: Vec::new(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Relative paths written so far, in write order.
    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write_bytes(&mut self, rel: impl AsRef<Path>, bytes: &[u8]) -> CliResult<PathBuf> {
        let rel = rel.as_ref();
        let path = self.root.join(rel);
        let parent = path.parent().unwrap_or(&self.root).to_path_buf();
        if !parent.exists() {
            fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
            self.created_dirs.push(parent.clone());
        }
        let mut tmp = NamedTempFile::new_in(&parent).map_err(|e| CliError::io(&parent, e))?;
        tmp.write_all(bytes).map_err(|e| CliError::io(&path, e))?;
        tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        if !self.written.iter().any(|w| w == rel) {
            self.written.push(rel.to_path_buf());
        }
        Ok(path)
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, rel: impl AsRef<Path>, value: &T) -> CliResult<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    /// Removes every file and directory this instance created.
    pub fn discard(self) {
        for rel in &self.written {
            let _ = fs::remove_file(self.root.join(rel));
        }
        for dir in self.created_dirs.iter().rev() {
            let _ = fs::remove_dir(dir);
        }
        if self.created_root {
            let _ = fs::remove_dir(&self.root);
        }
    }
}
