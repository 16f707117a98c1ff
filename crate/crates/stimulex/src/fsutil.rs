//! Input digests, atomic output writes and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::Effective;
use crate::error::Error;

pub const MANIFEST_NAME: &str = "run.manifest";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write to a temporary file in the target directory, then rename over
/// `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let werr = |e: std::io::Error| Error::Write(path.to_path_buf(), e);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(werr)?;
    tmp.write_all(contents).map_err(werr)?;
    tmp.as_file().sync_all().map_err(werr)?;
    tmp.persist(path).map_err(|e| werr(e.error))?;
    Ok(())
}

/// Bookkeeping for one command: which files it read and wrote.
#[derive(Debug, Default)]
pub struct Run {
    command: String,
    inputs: Vec<(PathBuf, String)>,
    outputs: Vec<(PathBuf, Vec<u8>)>,
}

impl Run {
    pub fn new(command: &str) -> Run {
        Run {
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn read(&mut self, path: &Path) -> Result<String, Error> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let bytes = fs::read(path).map_err(|e| Error::Read(path.to_path_buf(), e))?;
        self.inputs.push((path.to_path_buf(), sha256_hex(&bytes)));
        String::from_utf8(bytes).map_err(|e| {
            Error::Read(
                path.to_path_buf(),
                std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            )
        })
    }

    /// Queue an output; nothing touches the disk until [`Run::commit`].
    pub fn output(&mut self, path: &Path, contents: impl Into<Vec<u8>>) {
        self.outputs.push((path.to_path_buf(), contents.into()));
    }

    fn check_outputs(&self, inputs: &[PathBuf]) -> Result<(), Error> {
        for (out, _) in &self.outputs {
            let out_c = fs::canonicalize(out).ok();
            for i in inputs {
                if out == i || (out_c.is_some() && out_c == fs::canonicalize(i).ok()) {
                    return Err(Error::OutputIsInput(out.clone()));
                }
            }
        }
        Ok(())
    }

    /// Write all outputs atomically, then the manifest beside the first.
    pub fn commit(self, settings: &Effective) -> Result<(), Error> {
        let inputs: Vec<PathBuf> = self.inputs.iter().map(|(p, _)| p.clone()).collect();
        self.check_outputs(&inputs)?;
        for (p, bytes) in &self.outputs {
            write_atomic(p, bytes)?;
        }
        if let Some((first, _)) = self.outputs.first() {
            let dir = first.parent().unwrap_or(Path::new(""));
            write_atomic(&dir.join(MANIFEST_NAME), self.manifest(settings).as_bytes())?;
        }
        Ok(())
    }

    pub fn manifest(&self, settings: &Effective) -> String {
        let mut m = String::new();
        let _ = writeln!(m, "command={}", self.command);
        let _ = writeln!(m, "version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(m, "config_hash={}", settings.hash());
        for (k, v) in settings.values() {
            let _ = writeln!(m, "setting.{k}={}", v.replace('\u{1f}', "|"));
        }
        for (p, d) in &self.inputs {
            let _ = writeln!(m, "input={d} {}", p.display());
        }
        for (p, bytes) in &self.outputs {
            let _ = writeln!(m, "output={} {}", sha256_hex(bytes), p.display());
        }
        m
    }
}
