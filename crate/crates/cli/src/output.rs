//! Artifacts are rendered in memory and written only once every run of a
//! command has succeeded, each through a temporary file and a rename.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

/// Writes every artifact under `dir`, creating it if needed. Returns the paths written.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(&a.name);
        let tmp = dir.join(format!(".{}.tmp", a.name));
        let io_err = |source| CliError::Write {
            path: path.clone(),
            source,
        };
        fs::write(&tmp, &a.contents).map_err(io_err)?;
        fs::rename(&tmp, &path).map_err(|source| {
            let _ = fs::remove_file(&tmp);
            CliError::Write {
                path: path.clone(),
                source,
            }
        })?;
        written.push(path);
    }
    Ok(written)
}
