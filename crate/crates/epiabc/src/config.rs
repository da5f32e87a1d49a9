//! Run configuration file (TOML).
//!
//! Sections: `[data]`, `[prior]`, `[model]`, `[abc]`, `[runtime]`,
//! `[output]`. `[data]` and `[abc]` fields are required; the rest
//! default to the standard values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::abc::{FilterMode, RunConfig};
use crate::error::{Error, Result};
use crate::model::GaussianSpread;
use crate::prior::PriorSpec;

#[derive(Debug, Clone, Deserialize)]
pub struct AppConfig {
    pub data: DataSection,
    #[serde(default)]
    pub prior: PriorSection,
    #[serde(default)]
    pub model: ModelSection,
    pub abc: AbcSection,
    #[serde(default)]
    pub runtime: RuntimeSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
pub struct DataSection {
    /// Directory holding the ingested per-country series files.
    pub series_dir: PathBuf,
    pub country: String,
    /// Inputs for the `ingest` subcommand (JHU wide-format CSVs).
    pub confirmed: Option<PathBuf>,
    pub recovered: Option<PathBuf>,
    pub deaths: Option<PathBuf>,
    pub population: Option<PathBuf>,
    #[serde(default = "default_onset_threshold")]
    pub onset_threshold: f64,
}

fn default_onset_threshold() -> f64 {
    crate::ingest::DEFAULT_ONSET_THRESHOLD
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct PriorSection {
    pub lower: Option<[f64; 8]>,
    pub upper: Option<[f64; 8]>,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct ModelSection {
    #[serde(default)]
    pub gaussian_spread: GaussianSpread,
}

#[derive(Debug, Clone, Deserialize)]
pub struct AbcSection {
    pub tolerance: f64,
    pub batch_size: usize,
    pub target_accepted: usize,
    #[serde(default = "default_chunk_size")]
    pub chunk_size: usize,
    #[serde(default)]
    pub filter_mode: FilterMode,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    pub fit_days: usize,
    #[serde(default = "default_max_runs")]
    pub max_runs: u64,
}

fn default_chunk_size() -> usize {
    10_000
}
fn default_top_k() -> usize {
    5
}
fn default_max_runs() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, Deserialize)]
pub struct RuntimeSection {
    #[serde(default = "default_workers")]
    pub num_workers: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for RuntimeSection {
    fn default() -> Self {
        Self {
            num_workers: default_workers(),
            seed: default_seed(),
        }
    }
}

fn default_workers() -> usize {
    1
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Clone, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::ConfigFile(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::ConfigFile(format!("{}: {e}", path.display())))
    }

    pub fn prior_spec(&self) -> PriorSpec {
        let mut spec = PriorSpec::default();
        if let Some(lower) = self.prior.lower {
            spec.lower = lower;
        }
        if let Some(upper) = self.prior.upper {
            spec.upper = upper;
        }
        spec
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            tolerance: self.abc.tolerance,
            batch_size: self.abc.batch_size,
            target_accepted: self.abc.target_accepted,
            chunk_size: self.abc.chunk_size,
            filter_mode: self.abc.filter_mode,
            top_k: self.abc.top_k,
            num_workers: self.runtime.num_workers,
            seed: self.runtime.seed,
            fit_days: self.abc.fit_days,
            max_runs: self.abc.max_runs,
            gaussian_spread: self.model.gaussian_spread,
            prior: self.prior_spec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const MINIMAL: &str = r#"
[data]
series_dir = "out/series"
country = "Italy"

[abc]
tolerance = 2e5
batch_size = 100000
target_accepted = 100
fit_days = 49
"#;

    fn load_str(text: &str) -> Result<AppConfig> {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.toml");
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(text.as_bytes()).unwrap();
        AppConfig::load(&path)
    }

    #[test]
    fn minimal_config_with_defaults() {
        let cfg = load_str(MINIMAL).unwrap();
        let rc = cfg.run_config();
        assert_eq!(rc.tolerance, 2e5);
        assert_eq!(rc.chunk_size, 10_000);
        assert_eq!(rc.top_k, 5);
        assert_eq!(rc.seed, 42);
        assert_eq!(rc.num_workers, 1);
        assert_eq!(rc.prior.upper, [1.0, 100.0, 2.0, 1.0, 1.0, 1.0, 1.0, 2.0]);
        assert_eq!(rc.gaussian_spread, GaussianSpread::VarianceSqrtH);
    }

    #[test]
    fn missing_key_names_the_key() {
        let err = load_str("[data]\nseries_dir = \"x\"\ncountry = \"Italy\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("abc"), "message should name the missing section: {msg}");
    }

    #[test]
    fn prior_override() {
        let text = format!("{MINIMAL}\n[prior]\nupper = [1,50,2,1,1,1,1,2]\n");
        let cfg = load_str(&text).unwrap();
        assert_eq!(cfg.prior_spec().upper[1], 50.0);
    }
}
