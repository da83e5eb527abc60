//! Run configuration: a TOML file of optional keys, overridden by flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub annotations: Option<PathBuf>,
    pub features_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
    /// "mock" or "live".
    pub client: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub window_s: Option<f64>,
    pub stride_s: Option<f64>,
    pub segments: Option<usize>,
    pub top_k: Option<usize>,
    pub nms: Option<f64>,
    pub dim: Option<usize>,
    pub seed: Option<u64>,
    pub ranks: Option<Vec<usize>>,
    pub iou_thresholds: Option<Vec<f64>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))
    }
}
