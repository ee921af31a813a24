//! Output directory handling: an exclusive lock per run and a sha256
//! manifest of every file written there.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{HarnessError, HarnessResult};

pub const LOCK_FILE: &str = ".gnlab.lock";
pub const MANIFEST_FILE: &str = "manifest.txt";

pub struct OutDir {
    root: PathBuf,
    written: Vec<String>,
    _lock: Lock,
}

struct Lock(PathBuf);

impl Drop for Lock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

impl OutDir {
    /// Creates the directory if needed and takes the lock.
    pub fn open(root: impl Into<PathBuf>) -> HarnessResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(HarnessError::io(&root))?;
        let lock = root.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(_) => {}
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => return Err(HarnessError::Busy(lock)),
            Err(e) => return Err(HarnessError::io(&lock)(e)),
        }
        Ok(Self {
            root,
            written: Vec::new(),
            _lock: Lock(lock),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> HarnessResult<PathBuf> {
        let path = self.path(name);
        fs::write(&path, bytes).map_err(HarnessError::io(&path))?;
        self.record(name);
        Ok(path)
    }

    /// Registers a file written by other means.
    pub fn record(&mut self, name: &str) {
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
    }

    /// Rewrites the manifest: existing entries are kept, files from this run
    /// are (re)hashed, and entries whose file is gone are dropped.
    pub fn finish(self) -> HarnessResult<PathBuf> {
        let manifest = self.path(MANIFEST_FILE);
        let mut entries = BTreeMap::new();
        if let Ok(text) = fs::read_to_string(&manifest) {
            for line in text.lines() {
                if let Some((hash, name)) = line.split_once("  ") {
                    entries.insert(name.to_string(), hash.to_string());
                }
            }
        }
        for name in &self.written {
            let path = self.path(name);
            let bytes = fs::read(&path).map_err(HarnessError::io(&path))?;
            entries.insert(name.clone(), hex::encode(Sha256::digest(&bytes)));
        }
        entries.retain(|name, _| self.path(name).is_file());
        let text: String = entries.iter().map(|(n, h)| format!("{h}  {n}\n")).collect();
        fs::write(&manifest, text).map_err(HarnessError::io(&manifest))?;
        Ok(manifest)
    }
}

/// Parses `manifest.txt` into `(file, sha256)` pairs.
pub fn read_manifest(dir: &Path) -> HarnessResult<Vec<(String, String)>> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(HarnessError::io(&path))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once("  ").map(|(h, n)| (n.to_string(), h.to_string())))
        .collect())
}

pub fn sha256_file(path: &Path) -> HarnessResult<String> {
    let bytes = fs::read(path).map_err(HarnessError::io(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}
