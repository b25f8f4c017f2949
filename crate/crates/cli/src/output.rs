//! Per-run output directories named by a content hash of the resolved config.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "OVERSMOOTH_OUT";
/// Output root used when neither `--out` nor the environment sets one.
pub const DEFAULT_OUT: &str = "runs";
/// Hex digits of the config hash kept in directory names.
const HASH_PREFIX: usize = 16;

/// Output root: explicit flag, then environment, then the default.
pub fn output_root(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// `<command>-<first 16 hex digits of sha256(command \n config json)>`.
pub fn run_dir_name<T: Serialize>(command: &str, config: &T) -> anyhow::Result<String> {
    let json = serde_json::to_string(config)?;
    let mut hasher = Sha256::new();
    hasher.update(command.as_bytes());
    hasher.update(b"\n");
    hasher.update(json.as_bytes());
    let digest = hex::encode(hasher.finalize());
    Ok(format!("{command}-{}", &digest[..HASH_PREFIX]))
}

/// A directory receiving a run's files.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
}

impl RunDir {
    /// Creates `<root>/<name>` and records the resolved config in `config.json`.
    pub fn create<T: Serialize>(root: &Path, command: &str, config: &T) -> anyhow::Result<Self> {
        let path = root.join(run_dir_name(command, config)?);
        let dir = Self::at(path)?;
        dir.write_json("config.json", config)?;
        Ok(dir)
    }

    pub fn at(path: PathBuf) -> anyhow::Result<Self> {
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self { path })
    }

    pub fn write(&self, name: &str, contents: impl AsRef<[u8]>) -> anyhow::Result<PathBuf> {
        let p = self.path.join(name);
        fs::write(&p, contents).with_context(|| format!("writing {}", p.display()))?;
        Ok(p)
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text)
    }
}
