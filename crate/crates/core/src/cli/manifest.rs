//! Append-only run log: one tab-separated line per completed command.
//!
//! ```text
//! command=align	args=align	config_sha256=…	seed=0	inputs=a,b	outputs=c	wall_ms=812
//! ```

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub command: String,
    /// Command-line arguments after the global flags, space separated.
    pub args: String,
    pub config_path: PathBuf,
    pub config_sha256: String,
    pub seed: u64,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_ms: u128,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn join(paths: &[PathBuf]) -> String {
    paths.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(",")
}

impl ManifestEntry {
    pub fn to_line(&self) -> String {
        format!(
            "command={}\targs={}\tconfig={}\tconfig_sha256={}\tseed={}\tinputs={}\toutputs={}\twall_ms={}",
            self.command,
            self.args,
            self.config_path.display(),
            self.config_sha256,
            self.seed,
            join(&self.inputs),
            join(&self.outputs),
            self.wall_ms
        )
    }

    pub fn parse_line(line: &str) -> Result<Self> {
        let mut fields = std::collections::HashMap::new();
        for part in line.split('\t') {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::format(format!("manifest field {part:?} is not key=value")))?;
            fields.insert(k, v);
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| Error::format(format!("manifest line lacks {k:?}")));
        let paths = |v: &str| if v.is_empty() { Vec::new() } else { v.split(',').map(PathBuf::from).collect() };
        Ok(ManifestEntry {
            command: get("command")?.to_string(),
            args: get("args")?.to_string(),
            config_path: PathBuf::from(get("config")?),
            config_sha256: get("config_sha256")?.to_string(),
            seed: get("seed")?.parse().map_err(|_| Error::format("manifest seed is not an integer"))?,
            inputs: paths(get("inputs")?),
            outputs: paths(get("outputs")?),
            wall_ms: get("wall_ms")?.parse().map_err(|_| Error::format("manifest wall_ms is not an integer"))?,
        })
    }
}

pub fn append(path: &Path, entry: &ManifestEntry) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io_path(dir, e))?;
    }
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io_path(path, e))?;
    writeln!(f, "{}", entry.to_line()).map_err(|e| Error::io_path(path, e))
}

pub fn read(path: &Path) -> Result<Vec<ManifestEntry>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io_path(path, e))?;
    text.lines().map(ManifestEntry::parse_line).collect()
}
