use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::kv::KvMap;

pub const MANIFEST_FILE: &str = "manifest.txt";

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Record of one command run: the resolved configuration, the seed, and the
/// SHA-256 of every file read or written.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config: KvMap,
    pub inputs: Vec<(String, PathBuf, String)>,
    pub outputs: Vec<(String, PathBuf, String)>,
    pub notes: KvMap,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: KvMap) -> Self {
        Manifest {
            command: command.into(),
            seed,
            config,
            ..Self::default()
        }
    }

    pub fn input(&mut self, name: &str, path: &Path) -> Result<String> {
        let hash = sha256_file(path)?;
        self.inputs.push((name.into(), path.to_path_buf(), hash.clone()));
        Ok(hash)
    }

    pub fn output(&mut self, name: &str, path: &Path) -> Result<String> {
        let hash = sha256_file(path)?;
        self.outputs.push((name.into(), path.to_path_buf(), hash.clone()));
        Ok(hash)
    }

    pub fn to_kv(&self) -> KvMap {
        let mut kv = KvMap::new();
        kv.set("command", &self.command);
        kv.set("seed", self.seed);
        kv.set("version", env!("CARGO_PKG_VERSION"));
        for (kind, list) in [("input", &self.inputs), ("output", &self.outputs)] {
            for (name, path, hash) in list {
                kv.set(&format!("{kind}.{name}.path"), path.display());
                kv.set(&format!("{kind}.{name}.sha256"), hash);
            }
        }
        for (k, v) in self.notes.iter() {
            kv.set(&format!("note.{k}"), v);
        }
        for (k, v) in self.config.iter() {
            kv.set(&format!("config.{k}"), v);
        }
        kv
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_kv().render()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
