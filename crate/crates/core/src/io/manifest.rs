use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// What a run wrote and how it was configured. Timings are the only
/// non-reproducible content of a run directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub artifacts: Vec<PathBuf>,
    pub version: String,
    pub timings: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, seed: u64) -> Self {
        RunManifest {
            command: command.to_owned(),
            config_hash: config_hash(config),
            seed,
            artifacts: Vec::new(),
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_owned(),
            timings: Vec::new(),
        }
    }

    /// Writes `manifest.json` into `dir` after checking that every artifact
    /// (relative to `dir`) exists.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        for a in &self.artifacts {
            let p = dir.join(a);
            if !p.is_file() {
                return Err(Error::io(
                    &p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "listed artifact is missing"),
                ));
            }
        }
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, self)?;
        Ok(path)
    }
}

/// SHA-256 of the canonical JSON form (object keys sorted, no whitespace).
pub fn config_hash(config: &impl Serialize) -> String {
    // serde_json's default map is ordered, so going through Value sorts keys
    let value = serde_json::to_value(config).expect("configs serialize to JSON");
    let canonical = serde_json::to_string(&value).expect("values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::format(path, e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Parses a TOML config; unknown keys are rejected by the target types.
pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use tempfile::tempdir;

    #[test]
    fn hash_ignores_key_order() {
        let a = json!({"alpha": 0.5, "size": [64, 64], "mask": {"kind": "full"}});
        let b: serde_json::Value =
            serde_json::from_str(r#"{"mask": {"kind": "full"}, "size": [64, 64], "alpha": 0.5}"#).unwrap();
        assert_eq!(config_hash(&a), config_hash(&b));
        assert_ne!(config_hash(&a), config_hash(&json!({"alpha": 0.25})));
        assert_eq!(config_hash(&a).len(), 64);
    }

    #[test]
    fn manifest_requires_artifacts() {
        let dir = tempdir().unwrap();
        let mut m = RunManifest::new("phantom", &json!({}), 0);
        m.artifacts.push("missing.pgm".into());
        assert!(m.write(dir.path()).is_err());
        fs::write(dir.path().join("missing.pgm"), b"x").unwrap();
        let p = m.write(dir.path()).unwrap();
        let back: RunManifest = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[derive(Debug, Deserialize)]
    #[serde(deny_unknown_fields)]
    #[allow(dead_code)]
    struct Small {
        a: u32,
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.toml");
        fs::write(&p, "a = 1\nb = 2\n").unwrap();
        assert!(matches!(load_toml::<Small>(&p), Err(Error::Config(_))));
        fs::write(&p, "a = 1\n").unwrap();
        assert!(load_toml::<Small>(&p).is_ok());
    }
}
