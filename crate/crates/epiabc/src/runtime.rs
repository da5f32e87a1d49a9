//! Multi-worker execution of the ABC run loop.
//!
//! Runs are the unit of work. A fixed pool of threads claims run indices
//! from a shared counter; because every sample's substream is keyed by
//! its flattened index alone, the worker count changes scheduling but
//! never results. The collector replays outcomes in run-index order, so
//! the stopping decision (first run whose cumulative acceptances reach
//! the target) is identical to the sequential loop; speculative runs
//! beyond the stopping run are discarded.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::time::Instant;

use serde::Serialize;

use crate::abc::{self, InferContext, InferResult, RunConfig, RunOutcome, RunStats};
use crate::error::{Error, Result};
use crate::ingest::ObservedSeries;

/// Run the inference loop on `config.num_workers` threads.
///
/// Output is identical (samples and deterministic stats fields) to
/// `num_workers = 1` for the same seed.
pub fn run_parallel(config: &RunConfig, obs: &ObservedSeries) -> Result<InferResult> {
    config.validate()?;
    if config.num_workers == 1 {
        return abc::infer(config, obs);
    }
    let ctx = InferContext::new(config, obs)?;
    let t0 = Instant::now();

    let next_run = AtomicU64::new(0);
    // Exclusive upper bound on run indices workers may claim; lowered
    // once the stopping run is known.
    let run_limit = AtomicU64::new(config.max_runs);
    let (tx, rx) = mpsc::channel::<(u64, Result<RunOutcome>)>();

    let mut samples = Vec::new();
    let mut stats = RunStats::default();
    let mut run_times = Vec::new();
    let mut outcome_result: Option<Result<bool>> = None; // Ok(reached_target)

    std::thread::scope(|scope| {
        for _ in 0..config.num_workers {
            let tx = tx.clone();
            let next_run = &next_run;
            let run_limit = &run_limit;
            let ctx = &ctx;
            scope.spawn(move || loop {
                let run_index = next_run.fetch_add(1, Ordering::Relaxed);
                if run_index >= run_limit.load(Ordering::Acquire) {
                    break;
                }
                let outcome = abc::execute_run(config, ctx, run_index);
                if tx.send((run_index, outcome)).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        let mut pending = std::collections::BTreeMap::new();
        let mut next_expected: u64 = 0;
        'collect: for (run_index, outcome) in rx.iter() {
            match outcome {
                Ok(o) => {
                    pending.insert(run_index, o);
                }
                Err(e) => {
                    run_limit.store(0, Ordering::Release);
                    outcome_result = Some(Err(e));
                    break 'collect;
                }
            }
            while let Some(o) = pending.remove(&next_expected) {
                abc::accumulate(&mut stats, &mut run_times, &mut samples, o, config);
                next_expected += 1;
                if samples.len() >= config.target_accepted {
                    run_limit.store(next_expected, Ordering::Release);
                    outcome_result = Some(Ok(true));
                    break 'collect;
                }
                if next_expected >= config.max_runs {
                    outcome_result = Some(Ok(false));
                    break 'collect;
                }
            }
        }
        // Drain so workers never block on a full channel (unbounded, but
        // keep the receiver alive until they notice the lowered limit).
        drop(rx);
    });

    stats.finish(&run_times);
    stats.wall_time_total_s = t0.elapsed().as_secs_f64();
    match outcome_result {
        Some(Ok(true)) => Ok(InferResult { samples, stats }),
        Some(Ok(false)) | None => {
            let accepted = samples.len();
            Err(Error::MaxRunsExceeded {
                runs: config.max_runs,
                accepted,
                target: config.target_accepted,
                partial: Box::new(InferResult { samples, stats }),
            })
        }
        Some(Err(e)) => Err(e),
    }
}

/// Execute exactly `runs` runs on `workers` threads, ignoring the
/// acceptance target. Returns (wall seconds, total accepted).
fn run_fixed(config: &RunConfig, ctx: &InferContext, runs: u64, workers: usize) -> Result<(f64, u64)> {
    let t0 = Instant::now();
    let next_run = AtomicU64::new(0);
    let total_accepted = AtomicU64::new(0);
    let mut first_err: Option<Error> = None;
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                let next_run = &next_run;
                let total_accepted = &total_accepted;
                scope.spawn(move || -> Result<()> {
                    loop {
                        let run_index = next_run.fetch_add(1, Ordering::Relaxed);
                        if run_index >= runs {
                            return Ok(());
                        }
                        let outcome = abc::execute_run(config, ctx, run_index)?;
                        total_accepted.fetch_add(outcome.accepted.len() as u64, Ordering::Relaxed);
                    }
                })
            })
            .collect();
        for h in handles {
            if let Err(e) = h.join().expect("worker panicked") {
                first_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = first_err {
        return Err(e);
    }
    Ok((t0.elapsed().as_secs_f64(), total_accepted.load(Ordering::Relaxed)))
}

/// One row of the scaling study.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingEntry {
    pub workers: usize,
    pub time_per_run_ms: f64,
    pub time_per_run_std_ms: f64,
    pub total_time_s: f64,
    /// Relative to the first worker count in the report.
    pub speedup: f64,
    /// 1 - speedup / ideal_speedup.
    pub overhead_fraction: f64,
}

/// Speedup and overhead across worker counts, fixed-run mode.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub runs_per_measurement: u64,
    pub repetitions: usize,
    pub batch_size: usize,
    pub entries: Vec<ScalingEntry>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("workers,time_per_run_ms,total_s,speedup,overhead\n");
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.workers, e.time_per_run_ms, e.total_time_s, e.speedup, e.overhead_fraction
            ));
        }
        out
    }
}

/// Time a fixed number of runs for each worker count.
///
/// Fixed run count rather than a fixed accepted target removes the
/// stochastic run-count noise from the comparison. Mean and std come
/// from `repetitions` repeated measurements.
pub fn benchmark_scaling(
    config: &RunConfig,
    obs: &ObservedSeries,
    worker_counts: &[usize],
    runs: u64,
    repetitions: usize,
) -> Result<ScalingReport> {
    assert!(!worker_counts.is_empty());
    assert!(repetitions >= 1);
    config.validate()?;
    let ctx = InferContext::new(config, obs)?;
    let cores = available_cores();

    let mut entries = Vec::new();
    for &workers in worker_counts {
        if workers > cores {
            log::warn!("benchmarking {workers} workers on {cores} available core(s)");
        }
        let mut totals = Vec::with_capacity(repetitions);
        for _ in 0..repetitions {
            let (secs, _accepted) = run_fixed(config, &ctx, runs, workers)?;
            totals.push(secs);
        }
        let n = totals.len() as f64;
        let mean_s = totals.iter().sum::<f64>() / n;
        let var = totals.iter().map(|t| (t - mean_s) * (t - mean_s)).sum::<f64>() / n;
        entries.push(ScalingEntry {
            workers,
            time_per_run_ms: mean_s * 1e3 / runs as f64,
            time_per_run_std_ms: var.sqrt() * 1e3 / runs as f64,
            total_time_s: mean_s,
            speedup: 0.0,
            overhead_fraction: 0.0,
        });
    }
    let base_time = entries[0].total_time_s;
    let base_workers = entries[0].workers as f64;
    for e in &mut entries {
        e.speedup = base_time / e.total_time_s;
        let ideal = e.workers as f64 / base_workers;
        e.overhead_fraction = 1.0 - e.speedup / ideal;
    }
    Ok(ScalingReport {
        runs_per_measurement: runs,
        repetitions,
        batch_size: config.batch_size,
        entries,
    })
}

pub fn available_cores() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn synthetic_series(days: usize) -> ObservedSeries {
        let mut a = Vec::new();
        let mut r = Vec::new();
        let mut d = Vec::new();
        let mut active = 120.0f64;
        for t in 0..days {
            a.push(active.floor());
            r.push((t as f64 * 7.0).floor());
            d.push((t as f64 * 1.5).floor());
            active *= 1.25;
        }
        ObservedSeries {
            country: "Synthetic".into(),
            population: 1_000_000.0,
            start_date: NaiveDate::from_ymd_opt(2020, 2, 23).unwrap(),
            a,
            r,
            d,
        }
    }

    fn cfg(workers: usize) -> RunConfig {
        RunConfig {
            tolerance: 4e3,
            batch_size: 200,
            target_accepted: 8,
            chunk_size: 50,
            fit_days: 14,
            max_runs: 500,
            seed: 21,
            num_workers: workers,
            ..RunConfig::default()
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let obs = synthetic_series(14);
        let one = run_parallel(&cfg(1), &obs).unwrap();
        assert!(one.samples.len() >= 8);
        for workers in [2, 4] {
            let many = run_parallel(&cfg(workers), &obs).unwrap();
            assert_eq!(one.samples, many.samples, "workers = {workers}");
            assert_eq!(one.stats.runs_executed, many.stats.runs_executed);
            assert_eq!(one.stats.samples_accepted, many.stats.samples_accepted);
            assert_eq!(one.stats.samples_transferred, many.stats.samples_transferred);
        }
    }

    #[test]
    fn parallel_max_runs_exceeded() {
        let obs = synthetic_series(14);
        let config = RunConfig {
            tolerance: 1e-12,
            max_runs: 6,
            ..cfg(3)
        };
        match run_parallel(&config, &obs) {
            Err(Error::MaxRunsExceeded { accepted: 0, runs: 6, .. }) => {}
            other => panic!("expected MaxRunsExceeded, got {other:?}"),
        }
    }

    #[test]
    fn single_entry_scaling_report() {
        let obs = synthetic_series(14);
        let report = benchmark_scaling(&cfg(1), &obs, &[1], 4, 2).unwrap();
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].speedup, 1.0);
        assert!(report.entries[0].overhead_fraction.abs() < 1e-12);
        let csv = report.to_csv();
        assert!(csv.starts_with("workers,time_per_run_ms,total_s,speedup,overhead\n"));
        assert_eq!(csv.lines().count(), 2);
    }
}
