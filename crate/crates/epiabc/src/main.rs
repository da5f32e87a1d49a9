//! Command-line front end: ingest data, run inference, project
//! trajectories, export histograms and benchmark scaling.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use epiabc::config::AppConfig;
use epiabc::error::Error;
use epiabc::{ingest, output, project, runtime};

#[derive(Parser)]
#[command(name = "epiabc", version, about = "Batched ABC inference for a stochastic epidemic model")]
struct Cli {
    /// Path to the TOML run configuration.
    #[arg(long, global = true, default_value = "config.toml")]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default, Clone)]
struct Overrides {
    /// Override the acceptance tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Override the per-run batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Override the worker count.
    #[arg(long)]
    workers: Option<usize>,
    /// Override the seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the country.
    #[arg(long)]
    country: Option<String>,
}

impl Overrides {
    fn apply(&self, cfg: &mut AppConfig) {
        if let Some(v) = self.tolerance {
            cfg.abc.tolerance = v;
        }
        if let Some(v) = self.batch_size {
            cfg.abc.batch_size = v;
        }
        if let Some(v) = self.workers {
            cfg.runtime.num_workers = v;
        }
        if let Some(v) = self.seed {
            cfg.runtime.seed = v;
        }
        if let Some(v) = &self.country {
            cfg.data.country = v.clone();
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse the JHU CSVs and write the internal per-country series.
    Ingest {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run ABC inference; writes the posterior CSV and a stats JSON.
    Infer {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Project posterior samples forward and write percentile bands.
    Project {
        #[command(flatten)]
        overrides: Overrides,
        /// Projection horizon in days.
        #[arg(long, default_value_t = 120)]
        days: usize,
        /// Posterior CSV to project from (default: the infer output).
        #[arg(long)]
        posterior: Option<PathBuf>,
    },
    /// Export per-parameter posterior histograms as JSON.
    Histogram {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        #[arg(long)]
        posterior: Option<PathBuf>,
    },
    /// Time a fixed number of runs across worker counts.
    Benchmark {
        #[command(flatten)]
        overrides: Overrides,
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        workers_list: Vec<usize>,
        /// Runs per measurement.
        #[arg(long, default_value_t = 50)]
        runs: u64,
        /// Measurement repetitions per worker count.
        #[arg(long, default_value_t = 5)]
        reps: usize,
    },
}

fn slug(country: &str) -> String {
    country
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

fn cmd_ingest(cfg: &AppConfig) -> epiabc::Result<()> {
    let need = |name: &str, v: &Option<PathBuf>| -> epiabc::Result<PathBuf> {
        v.clone()
            .ok_or_else(|| Error::ConfigFile(format!("missing key `data.{name}`")))
    };
    let confirmed = need("confirmed", &cfg.data.confirmed)?;
    let recovered = need("recovered", &cfg.data.recovered)?;
    let deaths = need("deaths", &cfg.data.deaths)?;
    let population_table = need("population", &cfg.data.population)?;
    let country = &cfg.data.country;
    let raw = ingest::parse_jhu_csv(&confirmed, &recovered, &deaths, country)?;
    let population = ingest::load_population(&population_table, country)?;
    let series = ingest::derive_observed(&raw, country, population, cfg.data.onset_threshold)?;
    let path = ingest::write_series(&cfg.data.series_dir, &series)?;
    println!(
        "ingested {country}: {} days from {}, population {population}",
        series.days(),
        series.start_date
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_infer(cfg: &AppConfig) -> epiabc::Result<()> {
    let series = ingest::read_series(&cfg.data.series_dir, &cfg.data.country)?;
    let run_config = cfg.run_config();
    let result = runtime::run_parallel(&run_config, &series)?;
    let base = slug(&cfg.data.country);
    let csv_path = cfg.output.dir.join(format!("posterior_{base}.csv"));
    let json_path = cfg.output.dir.join(format!("stats_{base}.json"));
    output::write_posterior_csv(&csv_path, &result.samples)?;
    output::write_atomic(&json_path, &output::stats_json(&result.stats, &result.samples))?;
    println!(
        "accepted {} samples in {} runs ({:.3e} acceptance rate, {:.1}s)",
        result.samples.len(),
        result.stats.runs_executed,
        result.stats.acceptance_rate,
        result.stats.wall_time_total_s
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(())
}

fn cmd_project(cfg: &AppConfig, days: usize, posterior: Option<PathBuf>) -> epiabc::Result<()> {
    let series = ingest::read_series(&cfg.data.series_dir, &cfg.data.country)?;
    let base = slug(&cfg.data.country);
    let posterior_path =
        posterior.unwrap_or_else(|| cfg.output.dir.join(format!("posterior_{base}.csv")));
    let samples = output::read_posterior_csv(&posterior_path)?;
    let params: Vec<_> = samples.iter().map(|s| s.params).collect();
    let bands = project::project_bands(
        &params,
        &series,
        days,
        cfg.model.gaussian_spread,
        cfg.runtime.seed,
    )?;
    let bands_path = cfg.output.dir.join(format!("bands_{base}.csv"));
    output::write_atomic(&bands_path, &bands.to_csv())?;
    let coverage = project::band_coverage(&bands, &series, cfg.abc.fit_days);
    println!(
        "projected {} samples over {days} days; fit-window band coverage {:.0}%",
        params.len(),
        100.0 * coverage
    );
    println!("wrote {}", bands_path.display());
    Ok(())
}

fn cmd_histogram(cfg: &AppConfig, bins: usize, posterior: Option<PathBuf>) -> epiabc::Result<()> {
    let base = slug(&cfg.data.country);
    let posterior_path =
        posterior.unwrap_or_else(|| cfg.output.dir.join(format!("posterior_{base}.csv")));
    let samples = output::read_posterior_csv(&posterior_path)?;
    let params: Vec<_> = samples.iter().map(|s| s.params).collect();
    let hist = project::histogram(&params, &cfg.prior_spec(), bins)?;
    let path = cfg.output.dir.join(format!("histogram_{base}.json"));
    output::write_atomic(&path, &serde_json::to_string_pretty(&hist).unwrap())?;
    println!("histogrammed {} samples into {bins} bins", hist.sample_count);
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_benchmark(
    cfg: &AppConfig,
    workers_list: &[usize],
    runs: u64,
    reps: usize,
) -> epiabc::Result<()> {
    let series = ingest::read_series(&cfg.data.series_dir, &cfg.data.country)?;
    let run_config = cfg.run_config();
    let report = runtime::benchmark_scaling(&run_config, &series, workers_list, runs, reps)?;
    let csv_path = cfg.output.dir.join("scaling.csv");
    let json_path = cfg.output.dir.join("scaling.json");
    output::write_atomic(&csv_path, &report.to_csv())?;
    output::write_atomic(&json_path, &serde_json::to_string_pretty(&report).unwrap())?;
    for e in &report.entries {
        println!(
            "workers {:>2}: {:.2} ms/run, total {:.2}s, speedup {:.2}, overhead {:.1}%",
            e.workers,
            e.time_per_run_ms,
            e.total_time_s,
            e.speedup,
            100.0 * e.overhead_fraction
        );
    }
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(())
}

fn run(cli: Cli) -> epiabc::Result<()> {
    let mut cfg = AppConfig::load(&cli.config)?;
    match &cli.command {
        Command::Ingest { overrides } => {
            overrides.apply(&mut cfg);
            cmd_ingest(&cfg)
        }
        Command::Infer { overrides } => {
            overrides.apply(&mut cfg);
            cfg.run_config().validate()?;
            cmd_infer(&cfg)
        }
        Command::Project {
            overrides,
            days,
            posterior,
        } => {
            overrides.apply(&mut cfg);
            cmd_project(&cfg, *days, posterior.clone())
        }
        Command::Histogram {
            overrides,
            bins,
            posterior,
        } => {
            overrides.apply(&mut cfg);
            cmd_histogram(&cfg, *bins, posterior.clone())
        }
        Command::Benchmark {
            overrides,
            workers_list,
            runs,
            reps,
        } => {
            overrides.apply(&mut cfg);
            cmd_benchmark(&cfg, workers_list, *runs, *reps)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::ConfigFile(_) | Error::InvalidConfig(_) | Error::InvalidPrior { .. })) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
