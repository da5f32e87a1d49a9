//! Posterior CSV and stats sidecar I/O.

use std::fs;
use std::path::Path;

use crate::abc::{PosteriorSample, RunStats};
use crate::error::{Error, Result};
use crate::model::{ModelParams, PARAM_NAMES};

pub const POSTERIOR_HEADER: &str = "run,index,distance,alpha0,alpha,n,beta,gamma,delta,eta,kappa";

/// Render accepted samples in canonical order as CSV.
pub fn posterior_csv(samples: &[PosteriorSample]) -> String {
    let mut out = String::from(POSTERIOR_HEADER);
    out.push('\n');
    for s in samples {
        out.push_str(&format!("{},{},{}", s.run_index, s.in_batch_index, s.distance));
        for v in s.params.as_array() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Write a file atomically (write to a sibling tmp file, then rename).
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_posterior_csv(path: &Path, samples: &[PosteriorSample]) -> Result<()> {
    write_atomic(path, &posterior_csv(samples))
}

pub fn read_posterior_csv(path: &Path) -> Result<Vec<PosteriorSample>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 11 {
            return Err(Error::MalformedCsv(format!(
                "{}: expected 11 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        let field = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse()
                .map_err(|_| Error::MalformedCsv(format!("{}: bad field `{}`", path.display(), &record[i])))
        };
        let mut v = [0.0; 8];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = field(3 + k)?;
        }
        samples.push(PosteriorSample {
            run_index: field(0)? as u64,
            in_batch_index: field(1)? as usize,
            distance: field(2)?,
            params: ModelParams::from_array(v),
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    Ok(samples)
}

/// Per-parameter mean of the accepted samples.
pub fn posterior_means(samples: &[PosteriorSample]) -> serde_json::Map<String, serde_json::Value> {
    let n = samples.len().max(1) as f64;
    let mut sums = [0.0; 8];
    for s in samples {
        for (k, v) in s.params.as_array().iter().enumerate() {
            sums[k] += v;
        }
    }
    PARAM_NAMES
        .iter()
        .zip(sums.iter())
        .map(|(name, sum)| (name.to_string(), serde_json::json!(sum / n)))
        .collect()
}

/// Stats sidecar: every stats field plus the posterior parameter means.
pub fn stats_json(stats: &RunStats, samples: &[PosteriorSample]) -> String {
    let mut root = match serde_json::to_value(stats).unwrap() {
        serde_json::Value::Object(m) => m,
        _ => unreachable!(),
    };
    root.insert(
        "posterior_means".into(),
        serde_json::Value::Object(posterior_means(samples)),
    );
    serde_json::to_string_pretty(&serde_json::Value::Object(root)).unwrap()
}
