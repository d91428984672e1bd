//! Run directories: artifact files plus a manifest of seeds, config and
//! SHA-256 checksums.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coding::Dictionary;
use crate::error::Result;
use crate::sampleset::SampleSet;
use crate::strategies::ChainTrace;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Something that serializes to a fixed set of named files.
pub trait Artifact {
    fn files(&self) -> Vec<(String, Vec<u8>)>;
}

impl Artifact for SampleSet {
    fn files(&self) -> Vec<(String, Vec<u8>)> {
        vec![
            ("samples.json".into(), self.to_json().into_bytes()),
            ("samples.csv".into(), self.to_csv().into_bytes()),
        ]
    }
}

impl Artifact for ChainTrace {
    fn files(&self) -> Vec<(String, Vec<u8>)> {
        vec![
            ("trace.json".into(), self.to_json().into_bytes()),
            ("trace.csv".into(), self.to_csv().into_bytes()),
        ]
    }
}

impl Artifact for Dictionary {
    fn files(&self) -> Vec<(String, Vec<u8>)> {
        vec![("dictionary.json".into(), self.to_json().into_bytes())]
    }
}

impl<A: Artifact + ?Sized> Artifact for &A {
    fn files(&self) -> Vec<(String, Vec<u8>)> {
        (**self).files()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub command: String,
    pub seeds: BTreeMap<String, u64>,
    pub config: serde_json::Value,
}

impl RunInfo {
    pub fn new(command: impl Into<String>, seed: u64, config: serde_json::Value) -> Self {
        let mut seeds = BTreeMap::new();
        seeds.insert("master".to_string(), seed);
        Self {
            command: command.into(),
            seeds,
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    #[serde(flatten)]
    pub run: RunInfo,
    pub checksums: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| crate::Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Names of files whose current contents no longer match the manifest.
    pub fn verify(&self, dir: impl AsRef<Path>) -> Result<Vec<String>> {
        let mut stale = Vec::new();
        for (name, sum) in &self.checksums {
            let path = dir.as_ref().join(name);
            let bytes = std::fs::read(&path).map_err(|e| crate::Error::io(&path, e))?;
            if &sha256_hex(&bytes) != sum {
                stale.push(name.clone());
            }
        }
        Ok(stale)
    }
}

pub fn version_string() -> String {
    match option_env!("SPARSEQUBO_GIT_DESCRIBE") {
        Some(describe) => describe.to_string(),
        None => format!("v{}", env!("CARGO_PKG_VERSION")),
    }
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write every artifact file into `dir` (created if missing) and a manifest
/// recording the checksums.
pub fn persist_run(artifact: &dyn Artifact, dir: impl AsRef<Path>, run: &RunInfo) -> Result<Manifest> {
    let dir = dir.as_ref();
    let mut checksums = BTreeMap::new();
    for (name, bytes) in artifact.files() {
        super::write_atomic(&dir.join(&name), &bytes)?;
        checksums.insert(name, sha256_hex(&bytes));
    }
    let manifest = Manifest {
        version: version_string(),
        run: run.clone(),
        checksums,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    super::write_atomic(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}
