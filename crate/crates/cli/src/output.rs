//! Result files and the run manifest.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Serialize)]
struct FileEntry {
    file: String,
    sha256: String,
}

/// Collects output files of one command and writes them with a manifest.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl Outputs {
    pub fn new(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.files.push(FileEntry { file: name.to_string(), sha256: sha256_hex(bytes) });
        Ok(path)
    }

    /// `config` is the fully resolved run description; its hash covers
    /// everything but the timestamp.
    pub fn finish(self, command: &str, config: Value, seed: Option<u64>) -> std::io::Result<PathBuf> {
        let canonical = serde_json::to_vec(&config).expect("config serializes");
        let manifest = json!({
            "command": command,
            "config": config,
            "config_sha256": sha256_hex(&canonical),
            "seed": seed,
            "versions": {
                "optomech": optomech::VERSION,
                "optomech-cli": env!("CARGO_PKG_VERSION"),
            },
            "outputs": self.files,
            "timestamp": SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        });
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
        Ok(path)
    }
}
