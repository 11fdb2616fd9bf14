//! Input loading and hashed artifact output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use edgeward_core::dataset::{read_lke, FeatureSchema};
use edgeward_core::{Dataset, MlpModel, PcaModel};
use sha2::{Digest, Sha256};

/// A problem with how the command was invoked (exit code 2).
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Reads a user-named input file; an unreadable path is a usage error.
pub fn read_input(path: &Path, what: &str) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Usage(format!("cannot read {what} {}: {e}", path.display())).into())
}

fn read_text(path: &Path, what: &str) -> Result<String> {
    String::from_utf8(read_input(path, what)?)
        .map_err(|_| Usage(format!("{what} {} is not UTF-8", path.display())).into())
}

pub fn load_schema(path: &Path) -> Result<FeatureSchema> {
    let text = read_text(path, "schema file")?;
    FeatureSchema::from_json(&text).map_err(|e| Usage(format!("invalid schema file {}: {e}", path.display())).into())
}

pub fn load_lke(path: &Path) -> Result<Dataset> {
    let bytes = read_input(path, "matrix file")?;
    read_lke(bytes.as_slice()).with_context(|| format!("decoding {}", path.display()))
}

pub fn load_model(path: &Path) -> Result<MlpModel> {
    MlpModel::from_json(&read_text(path, "model file")?).with_context(|| format!("decoding {}", path.display()))
}

pub fn load_pca(path: &Path) -> Result<PcaModel> {
    PcaModel::from_json(&read_text(path, "PCA file")?).with_context(|| format!("decoding {}", path.display()))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory where every file gets a `<name>.sha256` sibling in
/// `sha256sum` format.
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` and its hash file; returns the hex digest.
    pub fn write(&self, name: &str, bytes: &[u8]) -> Result<String> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        let digest = sha256_hex(bytes);
        let hash_path = self.dir.join(format!("{name}.sha256"));
        fs::write(&hash_path, format!("{digest}  {name}\n"))
            .with_context(|| format!("writing {}", hash_path.display()))?;
        Ok(digest)
    }

    pub fn write_with(
        &self,
        name: &str,
        fill: impl FnOnce(&mut Vec<u8>) -> edgeward_core::Result<()>,
    ) -> Result<String> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write(name, &buf)
    }
}
