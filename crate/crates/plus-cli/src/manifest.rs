//! Run manifest and the output-directory bookkeeping behind it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::Config;

/// The declared output directory; every file written is registered here.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("cannot create output directory {}", root.display()))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Path for `name` inside the directory (not yet registered).
    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Records `name` as written.
    pub fn register(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    /// Runs `write` on the path for `name` and registers it on success.
    pub fn write(&mut self, name: &str, write: impl FnOnce(&Path) -> Result<()>) -> Result<PathBuf> {
        let p = self.path(name);
        write(&p)?;
        self.register(name);
        Ok(p)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Versions {
    pub plus_core: &'static str,
    pub plus_cli: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub status: &'static str,
    pub exit_code: i32,
    pub error: Option<String>,
    pub seed: u64,
    pub config_path: String,
    /// absent when the config could not be loaded
    pub config: Option<Config>,
    pub versions: Versions,
    pub jobs: Option<usize>,
    pub outputs: Vec<String>,
    pub duration_s: f64,
}

pub const MANIFEST: &str = "manifest.json";

/// Writes `manifest.json` listing everything registered so far (the manifest
/// itself included).
#[allow(clippy::too_many_arguments)]
pub fn write_manifest(
    out: &mut OutputDir,
    command: &str,
    config_path: &Path,
    config: Option<&Config>,
    seed: u64,
    jobs: Option<usize>,
    started: Instant,
    failure: Option<(i32, String)>,
) -> Result<()> {
    out.register(MANIFEST);
    let (exit_code, error) = match failure {
        Some((c, e)) => (c, Some(e)),
        None => (0, None),
    };
    let m = RunManifest {
        command: command.to_string(),
        status: if error.is_none() { "ok" } else { "failed" },
        exit_code,
        error,
        seed,
        config_path: config_path.display().to_string(),
        config: config.cloned(),
        versions: Versions { plus_core: plus_core::VERSION, plus_cli: env!("CARGO_PKG_VERSION") },
        jobs,
        outputs: out.files().to_vec(),
        duration_s: started.elapsed().as_secs_f64(),
    };
    crate::io::write_json(&out.path(MANIFEST), &m)
}
