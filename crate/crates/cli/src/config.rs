//! Optional TOML configuration. Values given on the command line win over
//! the file, and the file wins over built-in defaults.
//!
//! ```toml
//! seed = 7
//! format = "json"
//!
//! [experiment]          # any ExperimentConfig field
//! host = "data/ecoli.fa"
//! phage = "data/lambda.fa"
//! iterations = 20
//!
//! [scan]
//! overlapping = false
//! learn_on_alert = false
//!
//! [corpus]
//! packets = 16
//! addresses = [16, 32, 48]
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use cadeft_core::bitfmt::CorpusParams;
use cadeft_core::cadeft::ScanConfig;
use cadeft_core::experiments::ExperimentConfig;
use serde::Deserialize;

use crate::Format;

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub experiment: ExperimentConfig,
    pub scan: ScanConfig,
    pub corpus: CorpusParams,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}
