//! Run manifest: everything needed to reproduce a fit, serialized as JSON
//! into the model directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use mvgfa::gibbs::SamplingSchedule;
use mvgfa::model::ModelConfig;
use mvgfa::{GfaError, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewSpec {
    pub name: String,
    pub path: String,
    pub role: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub merge_replicates: bool,
    /// Keep this many top up-regulated features per row; `None` disables.
    pub top_up: Option<usize>,
    pub top_down: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(default)]
    pub tool_version: String,
    pub views: Vec<ViewSpec>,
    #[serde(default)]
    pub preprocessing: Preprocessing,
    pub model: ModelConfig<f64>,
    pub schedule: SamplingSchedule,
    #[serde(default = "default_activity_threshold")]
    pub activity_threshold: f64,
    /// sha256 hex digests of the input view files, keyed by view name.
    /// Empty on a fresh manifest; filled by `fit` and verified on reload.
    #[serde(default)]
    pub input_hashes: BTreeMap<String, String>,
    #[serde(default)]
    pub output_dir: Option<String>,
}

fn default_activity_threshold() -> f64 {
    mvgfa::components::DEFAULT_ACTIVITY_THRESHOLD
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.views.len() < 2 {
            return Err(GfaError::invalid(format!(
                "manifest lists {} views, need at least 2",
                self.views.len()
            )));
        }
        let mut names = std::collections::HashSet::new();
        for v in &self.views {
            // View names become file names inside the model directory.
            if v.name.is_empty()
                || !v
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
            {
                return Err(GfaError::invalid(format!(
                    "view name '{}' must be non-empty and use only ASCII letters, digits, '-' or '_'",
                    v.name
                )));
            }
            if !names.insert(v.name.as_str()) {
                return Err(GfaError::invalid(format!("duplicate view name '{}'", v.name)));
            }
            if v.role.trim().is_empty() {
                return Err(GfaError::invalid(format!("view '{}' has no role", v.name)));
            }
        }
        self.model.validate()?;
        self.schedule.validate()?;
        if !(0.0..=1.0).contains(&self.activity_threshold) {
            return Err(GfaError::invalid(
                "activity threshold must lie in [0, 1]",
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            GfaError::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| GfaError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        manifest.validate()?;
        Ok(manifest)
    }

    /// Resolves a view path relative to the manifest's own directory.
    pub fn resolve_view_path(&self, base: &Path, view: &ViewSpec) -> PathBuf {
        let p = Path::new(&view.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }

    /// Hashes every input view file. Hashes already present must match
    /// (stale inputs are an integrity error); missing ones are recorded.
    pub fn check_input_hashes(&mut self, base: &Path) -> Result<()> {
        for view in self.views.clone() {
            let path = self.resolve_view_path(base, &view);
            let digest = sha256_file(&path)?;
            match self.input_hashes.get(&view.name) {
                Some(expected) if *expected != digest => {
                    return Err(GfaError::Integrity(format!(
                        "input hash mismatch for view '{}': manifest records {expected}, file has {digest}",
                        view.name
                    )));
                }
                Some(_) => {}
                None => {
                    self.input_hashes.insert(view.name.clone(), digest);
                }
            }
        }
        Ok(())
    }

    pub fn roles(&self) -> Result<mvgfa::components::ViewRoleMap> {
        mvgfa::components::ViewRoleMap::new(self.views.iter().map(|v| v.role.clone()).collect())
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| {
        GfaError::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Ok(sha256_bytes(&bytes))
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Seed streams derived from the schedule seed, so reports and validation
/// are reproducible and steady across `fit` / `summarize` reruns.
pub fn report_seed(schedule_seed: u64) -> u64 {
    mvgfa::gibbs::derive_stream_seed(schedule_seed, 0x5245504f5254) // "REPORT"
}

pub fn validation_seed(schedule_seed: u64) -> u64 {
    mvgfa::gibbs::derive_stream_seed(schedule_seed, 0x56414c4944) // "VALID"
}
