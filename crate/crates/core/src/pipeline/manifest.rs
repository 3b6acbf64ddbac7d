use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{NedError, Result};
use crate::text;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Record of one stage run. Contains no timestamps so identical reruns
/// produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub counts: BTreeMap<String, u64>,
    pub metrics: BTreeMap<String, f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path, shown_as: String) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| NedError::io(path, e))?;
    Ok(FileDigest {
        path: shown_as,
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

impl Manifest {
    pub fn new(stage: &str, config_json: &str) -> Self {
        Manifest {
            stage: stage.to_owned(),
            config_sha256: sha256_hex(config_json.as_bytes()),
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
            metrics: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let shown = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.inputs.push(digest_file(path, shown)?);
        Ok(())
    }

    /// Outputs are recorded relative to the output directory.
    pub fn output(&mut self, out_dir: &Path, path: &Path) -> Result<()> {
        let shown = path.strip_prefix(out_dir).unwrap_or(path).display().to_string();
        self.outputs.push(digest_file(path, shown)?);
        Ok(())
    }

    pub fn count(&mut self, key: &str, n: usize) {
        self.counts.insert(key.to_owned(), n as u64);
    }

    pub fn metric(&mut self, key: &str, v: f64) {
        self.metrics.insert(key.to_owned(), v);
    }

    pub fn path(out_dir: &Path, stage: &str) -> PathBuf {
        out_dir.join("manifests").join(format!("{stage}.json"))
    }

    pub fn save(&self, out_dir: &Path) -> Result<PathBuf> {
        let p = Self::path(out_dir, &self.stage);
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        text::write_file(&p, &s)?;
        Ok(p)
    }
}
