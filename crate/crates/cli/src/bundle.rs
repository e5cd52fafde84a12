//! Output directories and the run manifest written next to them.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Reproducibility record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub config_digest: String,
    pub seed: u64,
    pub tool_version: String,
    /// RFC 3339, UTC. The only field that differs between identical runs.
    pub timestamp: String,
    pub outputs: Vec<OutputFile>,
}

/// What a command can print on stdout, one entry per `--format`.
#[derive(Debug, Clone, Default)]
pub struct Rendered {
    pub text: String,
    pub csv: Option<String>,
    pub svg: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one command's output bundle.
pub struct Bundle {
    dir: PathBuf,
    outputs: Vec<OutputFile>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Bundle { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let bytes = contents.as_ref();
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(name, bytes);
        Ok(path)
    }

    /// Registers a file some other writer already put into the bundle.
    pub fn adopt(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.path(name)).with_context(|| format!("reading back {name}"))?;
        self.record(name, &bytes);
        Ok(())
    }

    fn record(&mut self, name: &str, bytes: &[u8]) {
        self.outputs.retain(|o| o.file != name);
        self.outputs.push(OutputFile { file: name.to_string(), sha256: sha256_hex(bytes) });
    }

    pub fn finish(mut self, command: &str, inputs: &[PathBuf], config_digest: String, seed: u64) -> Result<RunManifest> {
        self.outputs.sort_by(|a, b| a.file.cmp(&b.file));
        let manifest = RunManifest {
            command: command.to_string(),
            inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
            config_digest,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            outputs: self.outputs,
        };
        let json = serde_json::to_string_pretty(&manifest)?;
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_outputs_with_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = Bundle::create(dir.path()).unwrap();
        b.write("b.txt", "two").unwrap();
        b.write("a.txt", "one").unwrap();
        b.write("a.txt", "one").unwrap();
        let m = b.finish("test", &[PathBuf::from("in.csv")], "d".into(), 3).unwrap();
        let names: Vec<&str> = m.outputs.iter().map(|o| o.file.as_str()).collect();
        assert_eq!(names, ["a.txt", "b.txt"]);
        assert_eq!(m.outputs[0].sha256, sha256_hex(b"one"));
        let back: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
