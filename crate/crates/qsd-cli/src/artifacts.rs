//! Run-directory plumbing.
//!
//! Handlers stage artifacts in memory; [`RunArtifacts::write`] then creates
//! `<command>-<UTC timestamp>` under the output root and writes every file
//! plus `manifest.json`. Staging first means a failed run leaves no
//! directory behind, and the manifest can only ever list files that exist.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::CliError;

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    parameters: &'a BTreeMap<String, Value>,
    seed: Option<u64>,
    files: Vec<&'a str>,
    versions: BTreeMap<&'static str, &'static str>,
}

#[derive(Default)]
pub struct RunArtifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl RunArtifacts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn push_json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut text =
            serde_json::to_string_pretty(value).expect("artifact values are serializable");
        text.push('\n');
        self.files.push((name.to_owned(), text.into_bytes()));
    }

    pub fn push_text(&mut self, name: &str, text: String) {
        self.files.push((name.to_owned(), text.into_bytes()));
    }

    /// Writes all staged files and the manifest; returns the run directory.
    pub fn write(
        self,
        out_root: &Path,
        command: &str,
        parameters: &BTreeMap<String, Value>,
        seed: Option<u64>,
    ) -> Result<PathBuf, CliError> {
        fs::create_dir_all(out_root).map_err(|e| CliError::io(e, out_root))?;
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = format!("{command}-{stamp}");
        let mut dir = out_root.join(&base);
        let mut attempt = 0u32;
        // sub-second reruns collide on the name; suffix instead of clobbering
        while let Err(e) = fs::create_dir(&dir) {
            if e.kind() != std::io::ErrorKind::AlreadyExists || attempt >= 1000 {
                return Err(CliError::io(e, &dir));
            }
            attempt += 1;
            dir = out_root.join(format!("{base}-{attempt}"));
        }

        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| CliError::io(e, &path))?;
        }
        let manifest = Manifest {
            command,
            parameters,
            seed,
            files: self.files.iter().map(|(name, _)| name.as_str()).collect(),
            versions: BTreeMap::from([
                ("qsd-cli", env!("CARGO_PKG_VERSION")),
                ("qsd-core", qsd_core::VERSION),
            ]),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(e, &path))?;
        log::info!("wrote {} artifacts to {}", self.files.len() + 1, dir.display());
        Ok(dir)
    }
}
