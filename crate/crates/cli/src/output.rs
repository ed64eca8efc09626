//! Output directory plumbing: deterministic file bodies, sorted-key JSON,
//! and a content-hash manifest.
//!
//! `timing.json` is the only file excluded from the manifest, because it is
//! the only one whose bytes may differ between identical runs.

use crate::CliError;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub struct OutDir {
    path: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl OutDir {
    pub fn create(path: &Path) -> Result<OutDir, CliError> {
        std::fs::create_dir_all(path)
            .map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
        Ok(OutDir { path: path.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.path.join(name);
        std::fs::write(&target, bytes)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", target.display())))?;
        if name != "timing.json" {
            let mut h = Sha256::new();
            h.update(bytes);
            self.hashes.insert(name.to_string(), format!("{:x}", h.finalize()));
        }
        Ok(())
    }

    /// JSON with sorted keys, pretty-printed, trailing newline.
    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let v = serde_json::to_value(value)
            .map_err(|e| CliError::Numerical(format!("cannot serialize {name}: {e}")))?;
        let mut body = serde_json::to_string_pretty(&v)
            .map_err(|e| CliError::Numerical(format!("cannot serialize {name}: {e}")))?;
        body.push('\n');
        self.write_bytes(name, body.as_bytes())
    }

    pub fn write_csv_with(
        &mut self,
        name: &str,
        write: impl FnOnce(&mut Vec<u8>) -> exhjb::error::Result<()>,
    ) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write(&mut buf).map_err(CliError::from)?;
        self.write_bytes(name, &buf)
    }

    /// Write `manifest.json` listing the sha256 of every recorded file.
    pub fn finish(mut self) -> Result<(), CliError> {
        let manifest = serde_json::json!({ "files": self.hashes });
        let mut body = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Numerical(format!("cannot serialize manifest: {e}")))?;
        body.push('\n');
        let target = self.path.join("manifest.json");
        std::fs::write(&target, body)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", target.display())))?;
        self.hashes.clear();
        Ok(())
    }
}
