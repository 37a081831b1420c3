//! Output directory handling and the JSON run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const INCOMPLETE_MARKER: &str = ".incomplete";
pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config: &'a RunConfig,
    inputs: &'a [FileDigest],
    outputs: &'a [FileDigest],
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Output directory that stays marked incomplete until [`OutputDir::finish`].
pub struct OutputDir {
    root: PathBuf,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(io_err(root))?;
        let marker = root.join(INCOMPLETE_MARKER);
        fs::write(&marker, b"").map_err(io_err(&marker))?;
        let _ = fs::remove_file(root.join(MANIFEST));
        Ok(Self {
            root: root.to_path_buf(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn record_input(&mut self, path: &Path) -> Result<(), CliError> {
        let d = FileDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        };
        if !self.inputs.iter().any(|x| x.path == d.path) {
            self.inputs.push(d);
        }
        Ok(())
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = T>) -> Result<PathBuf, CliError> {
        let path = self.root.join(name);
        let csv_err = |source| CliError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        let mut any = false;
        for r in rows {
            w.serialize(r).map_err(csv_err)?;
            any = true;
        }
        if !any {
            // header-less empty file rather than nothing at all
            w.write_record(None::<&[u8]>).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        drop(w);
        self.record_output(name)?;
        Ok(path)
    }

    fn record_output(&mut self, name: &str) -> Result<(), CliError> {
        let sha256 = sha256_file(&self.root.join(name))?;
        self.outputs.retain(|d| d.path != name);
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256,
        });
        Ok(())
    }

    /// Writes the manifest and clears the incomplete marker.
    pub fn finish(mut self, command: &str, config: &RunConfig) -> Result<PathBuf, CliError> {
        self.outputs.sort_by(|a, b| a.path.cmp(&b.path));
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: config.seed,
            config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.root.join(MANIFEST);
        fs::write(&path, text).map_err(io_err(&path))?;
        let marker = self.root.join(INCOMPLETE_MARKER);
        fs::remove_file(&marker).map_err(io_err(&marker))?;
        Ok(path)
    }
}
