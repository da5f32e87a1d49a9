//! Posterior projections and histogram exports.
//!
//! One forward simulation per posterior sample from the day-0 observed
//! state (re-initialized with each sample's own kappa), with empirical
//! nearest-rank percentile bands per day and observable.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::ObservedSeries;
use crate::model::{self, GaussianSpread, ModelParams, PARAM_NAMES};
use crate::prior::PriorSpec;
use crate::rng::{SimRng, DOMAIN_PROJECT};
use crate::stats::percentile_nearest_rank;

/// The three observables, in band/CSV order.
pub const OBSERVABLES: [&str; 3] = ["A", "R", "D"];

/// Per-day percentile envelope of projected trajectories.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectionBands {
    pub days: usize,
    /// Indexed `[observable][day]`; observables ordered as A, R, D.
    pub p05: [Vec<f64>; 3],
    pub p50: [Vec<f64>; 3],
    pub p95: [Vec<f64>; 3],
}

impl ProjectionBands {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("day,observable,p05,p50,p95\n");
        for day in 0..self.days {
            for (k, name) in OBSERVABLES.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    day, name, self.p05[k][day], self.p50[k][day], self.p95[k][day]
                ));
            }
        }
        out
    }
}

/// Simulate every posterior sample forward `days` days and compute the
/// 5th/50th/95th nearest-rank percentile bands.
pub fn project_bands(
    posterior: &[ModelParams],
    obs: &ObservedSeries,
    days: usize,
    spread: GaussianSpread,
    seed: u64,
) -> Result<ProjectionBands> {
    if posterior.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    let day0 = obs.day0();
    // trajectories[sample] = flat [3 * days]
    let mut trajectories = Vec::with_capacity(posterior.len());
    for (idx, params) in posterior.iter().enumerate() {
        let init = model::init_state(day0, params.kappa, obs.population)?;
        let mut rng = SimRng::substream(seed, DOMAIN_PROJECT, idx as u64);
        let traj = model::simulate(params, &init, days, obs.population, spread, &mut rng);
        trajectories.push(traj.observed_flat());
    }
    let mut bands = ProjectionBands {
        days,
        p05: [vec![0.0; days], vec![0.0; days], vec![0.0; days]],
        p50: [vec![0.0; days], vec![0.0; days], vec![0.0; days]],
        p95: [vec![0.0; days], vec![0.0; days], vec![0.0; days]],
    };
    let mut column = vec![0.0; trajectories.len()];
    for k in 0..3 {
        for day in 0..days {
            for (s, t) in trajectories.iter().enumerate() {
                column[s] = t[k * days + day];
            }
            column.sort_by(|a, b| a.partial_cmp(b).unwrap());
            bands.p05[k][day] = percentile_nearest_rank(&column, 5.0);
            bands.p50[k][day] = percentile_nearest_rank(&column, 50.0);
            bands.p95[k][day] = percentile_nearest_rank(&column, 95.0);
        }
    }
    Ok(bands)
}

/// Fraction of fit-window days on which the observed value lies inside
/// the [p05, p95] band, averaged over the three observables.
pub fn band_coverage(bands: &ProjectionBands, obs: &ObservedSeries, days: usize) -> f64 {
    let days = days.min(bands.days).min(obs.days());
    let series = [&obs.a, &obs.r, &obs.d];
    let mut hits = 0usize;
    for k in 0..3 {
        for day in 0..days {
            let v = series[k][day];
            if v >= bands.p05[k][day] && v <= bands.p95[k][day] {
                hits += 1;
            }
        }
    }
    hits as f64 / (3 * days) as f64
}

/// Per-parameter histogram of posterior samples over the prior support.
#[derive(Debug, Clone, Serialize)]
pub struct HistogramExport {
    pub sample_count: usize,
    pub parameters: Vec<ParamHistogram>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamHistogram {
    pub name: String,
    /// `bins + 1` edges spanning the prior support.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

pub fn histogram(
    posterior: &[ModelParams],
    prior: &PriorSpec,
    bins: usize,
) -> Result<HistogramExport> {
    if posterior.is_empty() {
        return Err(Error::EmptyPosterior);
    }
    assert!(bins >= 1);
    let mut parameters = Vec::with_capacity(8);
    for k in 0..8 {
        let (lo, hi) = (prior.lower[k], prior.upper[k]);
        let width = (hi - lo) / bins as f64;
        let edges: Vec<f64> = (0..=bins).map(|b| lo + width * b as f64).collect();
        let mut counts = vec![0u64; bins];
        for p in posterior {
            let v = p.as_array()[k];
            let b = (((v - lo) / width) as usize).min(bins - 1);
            counts[b] += 1;
        }
        parameters.push(ParamHistogram {
            name: PARAM_NAMES[k].to_string(),
            edges,
            counts,
        });
    }
    Ok(HistogramExport {
        sample_count: posterior.len(),
        parameters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn obs() -> ObservedSeries {
        ObservedSeries {
            country: "X".into(),
            population: 1_000_000.0,
            start_date: NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
            a: vec![150.0, 180.0, 220.0],
            r: vec![10.0, 12.0, 15.0],
            d: vec![2.0, 3.0, 4.0],
        }
    }

    #[test]
    fn empty_posterior_is_an_error() {
        assert!(matches!(
            project_bands(&[], &obs(), 10, GaussianSpread::default(), 0),
            Err(Error::EmptyPosterior)
        ));
        assert!(matches!(
            histogram(&[], &PriorSpec::default(), 20),
            Err(Error::EmptyPosterior)
        ));
    }

    #[test]
    fn single_sample_degenerate_bands() {
        let mut p = ModelParams::zeros();
        p.kappa = 0.5;
        let bands = project_bands(&[p], &obs(), 10, GaussianSpread::default(), 0).unwrap();
        for k in 0..3 {
            for day in 0..10 {
                assert_eq!(bands.p05[k][day], bands.p50[k][day]);
                assert_eq!(bands.p50[k][day], bands.p95[k][day]);
            }
        }
    }

    #[test]
    fn zero_rate_bands_are_flat_at_initial_state() {
        let bands =
            project_bands(&[ModelParams::zeros()], &obs(), 5, GaussianSpread::default(), 0)
                .unwrap();
        for day in 0..5 {
            assert_eq!(bands.p50[0][day], 150.0);
            assert_eq!(bands.p50[1][day], 10.0);
            assert_eq!(bands.p50[2][day], 2.0);
        }
    }

    #[test]
    fn band_ordering_over_random_posterior() {
        let prior = PriorSpec::default();
        let posterior = crate::prior::sample_prior(&prior, 50, 3, 0).unwrap();
        let bands = project_bands(&posterior, &obs(), 20, GaussianSpread::default(), 1).unwrap();
        for k in 0..3 {
            for day in 0..20 {
                assert!(bands.p05[k][day] <= bands.p50[k][day]);
                assert!(bands.p50[k][day] <= bands.p95[k][day]);
            }
        }
        let csv = bands.to_csv();
        assert_eq!(csv.lines().count(), 1 + 3 * 20);
    }

    #[test]
    fn histogram_counts_sum_to_sample_count() {
        let prior = PriorSpec::default();
        let posterior = crate::prior::sample_prior(&prior, 100, 4, 0).unwrap();
        let h = histogram(&posterior, &prior, 20).unwrap();
        assert_eq!(h.parameters.len(), 8);
        for ph in &h.parameters {
            assert_eq!(ph.counts.iter().sum::<u64>(), 100);
            assert_eq!(ph.edges.len(), 21);
        }
    }

    #[test]
    fn histogram_identical_samples_hit_one_bin() {
        let p = ModelParams::from_array([0.5, 50.0, 1.0, 0.5, 0.5, 0.5, 0.5, 1.0]);
        let h = histogram(&vec![p; 100], &PriorSpec::default(), 20).unwrap();
        for ph in &h.parameters {
            assert_eq!(ph.counts.iter().filter(|&&c| c > 0).count(), 1);
        }
    }

    #[test]
    fn histogram_single_bin() {
        let prior = PriorSpec::default();
        let posterior = crate::prior::sample_prior(&prior, 30, 5, 0).unwrap();
        let h = histogram(&posterior, &prior, 1).unwrap();
        for ph in &h.parameters {
            assert_eq!(ph.counts, vec![30]);
        }
    }
}
