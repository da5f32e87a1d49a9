//! Batched ABC rejection kernel.
//!
//! Each run simulates a batch of prior draws, computes Euclidean
//! distances against the observed series and accepts samples within
//! tolerance. Two result-filtering strategies mirror how accepted
//! samples would be shipped off an accelerator: chunked transfer (ship
//! any fixed-size slice containing an acceptance) and top-k (keep the k
//! lowest distances per run, post-filter on the host). A sequential
//! single-sample engine with identical substream consumption serves as
//! the equivalence oracle for the batched path.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::ObservedSeries;
use crate::model::{self, GaussianSpread, ModelParams};
use crate::prior::PriorSpec;
use crate::rng::{SimRng, DOMAIN_INFER};

/// How accepted samples are extracted from a finished batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterMode {
    #[default]
    Chunked,
    TopK,
}

/// All inference knobs for one ABC run loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Acceptance tolerance epsilon (Euclidean distance, persons).
    pub tolerance: f64,
    /// Samples simulated per run.
    pub batch_size: usize,
    /// Stop once this many samples are accepted (final-run overshoot kept).
    pub target_accepted: usize,
    /// Samples per transfer chunk; 0 means "ship the whole batch when it
    /// contains at least one acceptance".
    pub chunk_size: usize,
    pub filter_mode: FilterMode,
    /// Samples kept per run in top-k mode.
    pub top_k: usize,
    pub num_workers: usize,
    pub seed: u64,
    /// Days of observed data the distance is computed over.
    pub fit_days: usize,
    /// Safety cap on the number of runs.
    pub max_runs: u64,
    pub gaussian_spread: GaussianSpread,
    pub prior: PriorSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            tolerance: 2e5,
            batch_size: 100_000,
            target_accepted: 100,
            chunk_size: 10_000,
            filter_mode: FilterMode::Chunked,
            top_k: 5,
            num_workers: 1,
            seed: 42,
            fit_days: 49,
            max_runs: 1_000_000,
            gaussian_spread: GaussianSpread::default(),
            prior: PriorSpec::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidConfig("tolerance must be > 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if self.chunk_size != 0 && self.batch_size % self.chunk_size != 0 {
            return Err(Error::InvalidConfig(format!(
                "chunk_size {} must divide batch_size {}",
                self.chunk_size, self.batch_size
            )));
        }
        if self.filter_mode == FilterMode::TopK && self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be >= 1 in top_k mode".into()));
        }
        if self.filter_mode == FilterMode::TopK && self.top_k > self.batch_size {
            return Err(Error::InvalidConfig("top_k must be <= batch_size".into()));
        }
        if self.target_accepted == 0 {
            return Err(Error::InvalidConfig("target_accepted must be >= 1".into()));
        }
        if self.num_workers == 0 {
            return Err(Error::InvalidConfig("num_workers must be >= 1".into()));
        }
        if self.fit_days == 0 {
            return Err(Error::InvalidConfig("fit_days must be >= 1".into()));
        }
        if self.max_runs == 0 {
            return Err(Error::InvalidConfig("max_runs must be >= 1".into()));
        }
        self.prior.validate()
    }
}

/// An accepted parameter vector with provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSample {
    pub params: ModelParams,
    pub distance: f64,
    pub run_index: u64,
    pub in_batch_index: usize,
}

/// Measured throughput and bookkeeping for one inference.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub runs_executed: u64,
    pub samples_simulated: u64,
    pub samples_accepted: u64,
    pub acceptance_rate: f64,
    pub wall_time_total_s: f64,
    pub wall_time_per_run_mean_ms: f64,
    pub wall_time_per_run_std_ms: f64,
    /// Host-side post-filtering time, kept separate from the run times.
    pub host_postprocess_time_s: f64,
    /// Number of samples shipped through the transfer filter.
    pub samples_transferred: u64,
    /// Accepted samples lost to top-k truncation (0 in chunked mode).
    pub truncation_loss: u64,
}

impl RunStats {
    pub(crate) fn finish(&mut self, run_times_ms: &[f64]) {
        self.acceptance_rate = if self.samples_simulated > 0 {
            self.samples_accepted as f64 / self.samples_simulated as f64
        } else {
            0.0
        };
        if !run_times_ms.is_empty() {
            let n = run_times_ms.len() as f64;
            let mean = run_times_ms.iter().sum::<f64>() / n;
            let var = run_times_ms.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n;
            self.wall_time_per_run_mean_ms = mean;
            self.wall_time_per_run_std_ms = var.sqrt();
        }
    }
}

/// The result of a completed (or truncated) inference.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InferResult {
    pub samples: Vec<PosteriorSample>,
    pub stats: RunStats,
}

/// Plain Euclidean distance over two equally-shaped flat arrays.
pub fn euclidean_distance(sim: &[f64], obs: &[f64]) -> Result<f64> {
    if sim.len() != obs.len() {
        return Err(Error::ShapeMismatch {
            left: sim.len(),
            right: obs.len(),
        });
    }
    Ok(sim
        .iter()
        .zip(obs.iter())
        .map(|(s, o)| (s - o) * (s - o))
        .sum::<f64>()
        .sqrt())
}

/// Everything a worker needs to evaluate one run; immutable and shared.
#[derive(Debug, Clone)]
pub struct InferContext {
    pub day0: (f64, f64, f64),
    pub population: f64,
    /// Observed target, flat `[3 * fit_days]`.
    pub obs_flat: Vec<f64>,
}

impl InferContext {
    pub fn new(config: &RunConfig, obs: &ObservedSeries) -> Result<Self> {
        Ok(Self {
            day0: obs.day0(),
            population: obs.population,
            obs_flat: obs.observed_flat(config.fit_days)?,
        })
    }
}

/// Raw output of one batched run before any filtering.
#[derive(Debug, Clone)]
pub struct BatchResult {
    pub run_index: u64,
    pub params: Vec<ModelParams>,
    pub distances: Vec<f64>,
    pub accepted: Vec<bool>,
}

/// Evaluate one sample: prior draw, then simulation, from the substream
/// of its flattened index.
fn evaluate_sample(
    config: &RunConfig,
    ctx: &InferContext,
    global_index: u64,
) -> Result<(ModelParams, f64)> {
    let mut rng = SimRng::substream(config.seed, DOMAIN_INFER, global_index);
    let params = config.prior.sample_one(&mut rng);
    let init = model::init_state(ctx.day0, params.kappa, ctx.population)?;
    let distance = model::simulate_distance(
        &params,
        &init,
        config.fit_days,
        ctx.population,
        config.gaussian_spread,
        &mut rng,
        &ctx.obs_flat,
    );
    Ok((params, distance))
}

/// Simulate one full batch and evaluate acceptance. Deterministic given
/// `(seed, run_index)`; sample `b` uses flattened index
/// `run_index * batch_size + b`.
pub fn run_batch(config: &RunConfig, ctx: &InferContext, run_index: u64) -> Result<BatchResult> {
    let base = run_index * config.batch_size as u64;
    let mut params = Vec::with_capacity(config.batch_size);
    let mut distances = Vec::with_capacity(config.batch_size);
    let mut accepted = Vec::with_capacity(config.batch_size);
    for b in 0..config.batch_size {
        let (p, dist) = evaluate_sample(config, ctx, base + b as u64)?;
        accepted.push(dist <= config.tolerance);
        params.push(p);
        distances.push(dist);
    }
    Ok(BatchResult {
        run_index,
        params,
        distances,
        accepted,
    })
}

/// A contiguous slice of a batch that contained at least one acceptance.
#[derive(Debug, Clone)]
pub struct Chunk {
    /// In-batch index of the first sample in the chunk.
    pub start: usize,
    pub params: Vec<ModelParams>,
    pub distances: Vec<f64>,
}

/// Split the batch into fixed-size chunks and keep only those containing
/// an accepted sample. `chunk_size` 0 ships the whole batch as one chunk.
pub fn chunk_filter(batch: &BatchResult, chunk_size: usize) -> Vec<Chunk> {
    let n = batch.params.len();
    let size = if chunk_size == 0 { n } else { chunk_size };
    debug_assert_eq!(n % size, 0);
    let mut chunks = Vec::new();
    for start in (0..n).step_by(size) {
        let end = start + size;
        if batch.accepted[start..end].iter().any(|&a| a) {
            chunks.push(Chunk {
                start,
                params: batch.params[start..end].to_vec(),
                distances: batch.distances[start..end].to_vec(),
            });
        }
    }
    chunks
}

/// The k lowest-distance samples of a run plus the exact accepted count.
#[derive(Debug, Clone)]
pub struct TopKResult {
    /// `(in_batch_index, params, distance)`, ascending by distance
    /// (ties broken by index).
    pub entries: Vec<(usize, ModelParams, f64)>,
    /// Acceptances counted on the full batch, before truncation.
    pub accepted_count: usize,
}

pub fn top_k_filter(batch: &BatchResult, k: usize) -> TopKResult {
    assert!(k <= batch.params.len());
    let accepted_count = batch.accepted.iter().filter(|&&a| a).count();
    let mut order: Vec<usize> = (0..batch.params.len()).collect();
    order.sort_by(|&a, &b| {
        batch.distances[a]
            .partial_cmp(&batch.distances[b])
            .unwrap()
            .then(a.cmp(&b))
    });
    order.truncate(k);
    TopKResult {
        entries: order
            .into_iter()
            .map(|i| (i, batch.params[i], batch.distances[i]))
            .collect(),
        accepted_count,
    }
}

/// What one run contributes after host post-filtering.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_index: u64,
    /// Accepted samples in in-batch order.
    pub accepted: Vec<PosteriorSample>,
    /// Exact acceptance count of the batch (before any truncation).
    pub accepted_count: usize,
    /// Samples shipped through the filter.
    pub transferred: usize,
    pub run_time_ms: f64,
    pub postprocess_time_s: f64,
}

impl RunOutcome {
    pub fn truncation_loss(&self) -> u64 {
        (self.accepted_count - self.accepted.len()) as u64
    }
}

/// Execute one run end to end: batch simulation, transfer filter, host
/// post-filter. Pure function of `(config, ctx, run_index)`.
pub fn execute_run(config: &RunConfig, ctx: &InferContext, run_index: u64) -> Result<RunOutcome> {
    let t0 = Instant::now();
    let batch = run_batch(config, ctx, run_index)?;
    let run_time_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let mut accepted = Vec::new();
    let accepted_count;
    let transferred;
    match config.filter_mode {
        FilterMode::Chunked => {
            let chunks = chunk_filter(&batch, config.chunk_size);
            transferred = chunks.iter().map(|c| c.params.len()).sum();
            for chunk in &chunks {
                for (offset, (&dist, p)) in
                    chunk.distances.iter().zip(chunk.params.iter()).enumerate()
                {
                    if dist <= config.tolerance {
                        accepted.push(PosteriorSample {
                            params: *p,
                            distance: dist,
                            run_index,
                            in_batch_index: chunk.start + offset,
                        });
                    }
                }
            }
            accepted_count = accepted.len();
        }
        FilterMode::TopK => {
            let top = top_k_filter(&batch, config.top_k);
            transferred = top.entries.len();
            accepted_count = top.accepted_count;
            let mut kept: Vec<PosteriorSample> = top
                .entries
                .iter()
                .filter(|(_, _, dist)| *dist <= config.tolerance)
                .map(|(i, p, dist)| PosteriorSample {
                    params: *p,
                    distance: *dist,
                    run_index,
                    in_batch_index: *i,
                })
                .collect();
            kept.sort_by_key(|s| s.in_batch_index);
            accepted = kept;
        }
    }
    let postprocess_time_s = t1.elapsed().as_secs_f64();
    Ok(RunOutcome {
        run_index,
        accepted,
        accepted_count,
        transferred,
        run_time_ms,
        postprocess_time_s,
    })
}

/// Sequential run loop: execute runs in index order until the target
/// number of accepted samples is reached. All acceptances of the final
/// run are kept, so the result can overshoot the target.
pub fn infer(config: &RunConfig, obs: &ObservedSeries) -> Result<InferResult> {
    config.validate()?;
    let ctx = InferContext::new(config, obs)?;
    let t0 = Instant::now();
    let mut samples = Vec::new();
    let mut stats = RunStats::default();
    let mut run_times = Vec::new();
    for run_index in 0..config.max_runs {
        let outcome = execute_run(config, &ctx, run_index)?;
        accumulate(&mut stats, &mut run_times, &mut samples, outcome, config);
        if samples.len() >= config.target_accepted {
            stats.finish(&run_times);
            stats.wall_time_total_s = t0.elapsed().as_secs_f64();
            return Ok(InferResult { samples, stats });
        }
    }
    stats.finish(&run_times);
    stats.wall_time_total_s = t0.elapsed().as_secs_f64();
    let accepted = samples.len();
    Err(Error::MaxRunsExceeded {
        runs: config.max_runs,
        accepted,
        target: config.target_accepted,
        partial: Box::new(InferResult { samples, stats }),
    })
}

pub(crate) fn accumulate(
    stats: &mut RunStats,
    run_times: &mut Vec<f64>,
    samples: &mut Vec<PosteriorSample>,
    outcome: RunOutcome,
    config: &RunConfig,
) {
    stats.runs_executed += 1;
    stats.samples_simulated += config.batch_size as u64;
    stats.samples_accepted += outcome.accepted.len() as u64;
    stats.samples_transferred += outcome.transferred as u64;
    stats.truncation_loss += outcome.truncation_loss();
    stats.host_postprocess_time_s += outcome.postprocess_time_s;
    run_times.push(outcome.run_time_ms);
    samples.extend(outcome.accepted);
}

/// Vanilla single-sample ABC with the same acceptance semantics and the
/// same substream consumption as the batched engine's flattened order.
///
/// The engine stops at run granularity; to be set-equivalent the oracle
/// checks the target only at virtual run boundaries (every `batch_size`
/// samples). Each sample's recorded run index is its global index.
pub fn infer_sequential_oracle(config: &RunConfig, obs: &ObservedSeries) -> Result<InferResult> {
    config.validate()?;
    let ctx = InferContext::new(config, obs)?;
    let t0 = Instant::now();
    let mut samples = Vec::new();
    let mut stats = RunStats::default();
    let total = config
        .max_runs
        .saturating_mul(config.batch_size as u64);
    for global_index in 0..total {
        let (params, distance) = evaluate_sample(config, &ctx, global_index)?;
        stats.samples_simulated += 1;
        if distance <= config.tolerance {
            samples.push(PosteriorSample {
                params,
                distance,
                run_index: global_index,
                in_batch_index: 0,
            });
            stats.samples_accepted += 1;
        }
        let run_boundary = (global_index + 1) % config.batch_size as u64 == 0;
        if run_boundary {
            stats.runs_executed += 1;
            if samples.len() >= config.target_accepted {
                stats.finish(&[]);
                stats.wall_time_total_s = t0.elapsed().as_secs_f64();
                return Ok(InferResult { samples, stats });
            }
        }
    }
    stats.finish(&[]);
    stats.wall_time_total_s = t0.elapsed().as_secs_f64();
    let accepted = samples.len();
    Err(Error::MaxRunsExceeded {
        runs: config.max_runs,
        accepted,
        target: config.target_accepted,
        partial: Box::new(InferResult { samples, stats }),
    })
}

/// Key used to compare accepted sets across engines and filter modes.
pub fn accepted_set_key(samples: &[PosteriorSample]) -> Vec<([u64; 8], u64)> {
    let mut keys: Vec<([u64; 8], u64)> = samples
        .iter()
        .map(|s| {
            (
                s.params.as_array().map(f64::to_bits),
                s.distance.to_bits(),
            )
        })
        .collect();
    keys.sort();
    keys
}
