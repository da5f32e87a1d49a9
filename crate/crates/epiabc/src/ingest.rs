//! Johns-Hopkins-format time-series ingestion.
//!
//! Reads the wide global CSVs (one row per province, one column per date),
//! aggregates provinces per country, fixes up non-monotone cumulative
//! counts, aligns day 0 to the epidemic onset and produces the internal
//! per-country series files consumed by the inference engine.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default onset threshold: day 0 is the first day with at least this
/// many confirmed cases.
pub const DEFAULT_ONSET_THRESHOLD: f64 = 100.0;

/// Observed per-day (A, R, D) counts for one country, aligned to onset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservedSeries {
    pub country: String,
    /// Total population P.
    pub population: f64,
    /// Calendar date of day 0.
    pub start_date: NaiveDate,
    /// Active confirmed cases per day.
    pub a: Vec<f64>,
    /// Confirmed recovered (cumulative) per day.
    pub r: Vec<f64>,
    /// Confirmed deaths (cumulative) per day.
    pub d: Vec<f64>,
}

impl ObservedSeries {
    pub fn days(&self) -> usize {
        self.a.len()
    }

    /// Flat `[3 * days]` target for the distance computation, laid out as
    /// all A values, then all R, then all D, over the first `days` days.
    pub fn observed_flat(&self, days: usize) -> Result<Vec<f64>> {
        if days > self.days() {
            return Err(Error::ShapeMismatch {
                left: days,
                right: self.days(),
            });
        }
        let mut out = Vec::with_capacity(3 * days);
        out.extend_from_slice(&self.a[..days]);
        out.extend_from_slice(&self.r[..days]);
        out.extend_from_slice(&self.d[..days]);
        Ok(out)
    }

    /// Observed (A0, R0, D0) at day 0, used to initialize simulations.
    pub fn day0(&self) -> (f64, f64, f64) {
        (self.a[0], self.r[0], self.d[0])
    }
}

/// Raw cumulative country series, not yet aligned to onset.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub dates: Vec<NaiveDate>,
    pub confirmed: Vec<f64>,
    pub recovered: Vec<f64>,
    pub deaths: Vec<f64>,
}

fn parse_jhu_date(s: &str) -> Result<NaiveDate> {
    let parts: Vec<&str> = s.trim().split('/').collect();
    if parts.len() != 3 {
        return Err(Error::MalformedCsv(format!("bad date column `{s}`")));
    }
    let m: u32 = parts[0]
        .parse()
        .map_err(|_| Error::MalformedCsv(format!("bad month in `{s}`")))?;
    let d: u32 = parts[1]
        .parse()
        .map_err(|_| Error::MalformedCsv(format!("bad day in `{s}`")))?;
    let y: i32 = parts[2]
        .parse()
        .map_err(|_| Error::MalformedCsv(format!("bad year in `{s}`")))?;
    NaiveDate::from_ymd_opt(2000 + y, m, d)
        .ok_or_else(|| Error::MalformedCsv(format!("invalid date `{s}`")))
}

/// Parse one wide-format file and sum the rows of `country` across
/// provinces. Returns (dates, cumulative counts).
fn parse_one_jhu_file(path: &Path, country: &str) -> Result<(Vec<NaiveDate>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 5
        || headers.get(1) != Some("Country/Region")
        || headers.get(0) != Some("Province/State")
    {
        return Err(Error::MalformedCsv(format!(
            "{}: expected leading columns Province/State, Country/Region, Lat, Long",
            path.display()
        )));
    }
    let dates: Vec<NaiveDate> = headers
        .iter()
        .skip(4)
        .map(parse_jhu_date)
        .collect::<Result<_>>()?;

    let mut totals = vec![0.0; dates.len()];
    let mut found = false;
    for record in reader.records() {
        let record = record?;
        if record.get(1) != Some(country) {
            continue;
        }
        found = true;
        if record.len() != headers.len() {
            return Err(Error::MalformedCsv(format!(
                "{}: row has {} columns, header has {}",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        for (t, field) in record.iter().skip(4).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::MalformedCsv(format!("{}: non-numeric count `{field}`", path.display()))
            })?;
            totals[t] += v;
        }
    }
    if !found {
        return Err(Error::CountryNotFound(country.to_string()));
    }
    Ok((dates, totals))
}

/// Clamp cumulative dips to the running max. JHU data contains revisions,
/// so this is a warning, not an error.
fn fix_cumulative(label: &str, country: &str, xs: &mut [f64]) {
    let mut running = f64::NEG_INFINITY;
    let mut fixed = 0usize;
    for x in xs.iter_mut() {
        if *x < running {
            *x = running;
            fixed += 1;
        } else {
            running = *x;
        }
    }
    if fixed > 0 {
        warn!("{country}/{label}: clamped {fixed} non-monotone cumulative entries to running max");
    }
}

/// Read the three JHU global files and aggregate `country` across
/// provinces into cumulative (confirmed, recovered, deaths) series.
pub fn parse_jhu_csv(
    confirmed_path: &Path,
    recovered_path: &Path,
    deaths_path: &Path,
    country: &str,
) -> Result<RawSeries> {
    let (dates, mut confirmed) = parse_one_jhu_file(confirmed_path, country)?;
    let (dates_r, mut recovered) = parse_one_jhu_file(recovered_path, country)?;
    let (dates_d, mut deaths) = parse_one_jhu_file(deaths_path, country)?;
    if dates_r != dates || dates_d != dates {
        return Err(Error::MalformedCsv(
            "date columns differ between confirmed/recovered/deaths files".into(),
        ));
    }
    fix_cumulative("confirmed", country, &mut confirmed);
    fix_cumulative("recovered", country, &mut recovered);
    fix_cumulative("deaths", country, &mut deaths);
    Ok(RawSeries {
        dates,
        confirmed,
        recovered,
        deaths,
    })
}

/// Align to onset and derive the observed series.
///
/// Day 0 is the first day with confirmed >= `onset_threshold`; active
/// cases are confirmed minus recovered minus deaths (clamped at 0 with a
/// warning when revisions make the difference negative).
pub fn derive_observed(
    raw: &RawSeries,
    country: &str,
    population: f64,
    onset_threshold: f64,
) -> Result<ObservedSeries> {
    let onset = raw
        .confirmed
        .iter()
        .position(|&c| c >= onset_threshold)
        .ok_or(Error::OnsetNotReached {
            threshold: onset_threshold,
        })?;
    let days = raw.confirmed.len() - onset;
    let mut a = Vec::with_capacity(days);
    let mut clamped = 0usize;
    for t in onset..raw.confirmed.len() {
        let active = raw.confirmed[t] - raw.recovered[t] - raw.deaths[t];
        if active < 0.0 {
            clamped += 1;
            a.push(0.0);
        } else {
            a.push(active);
        }
    }
    if clamped > 0 {
        warn!("{country}: clamped {clamped} negative active-case values to 0");
    }
    let series = ObservedSeries {
        country: country.to_string(),
        population,
        start_date: raw.dates[onset],
        a,
        r: raw.recovered[onset..].to_vec(),
        d: raw.deaths[onset..].to_vec(),
    };
    let max_observed = (0..series.days())
        .map(|t| series.a[t] + series.r[t] + series.d[t])
        .fold(0.0, f64::max);
    if population <= max_observed {
        return Err(Error::MalformedCsv(format!(
            "{country}: population {population} does not exceed peak observed total {max_observed}"
        )));
    }
    Ok(series)
}

/// Look up a country in a `country,population` CSV. On duplicate rows the
/// first wins, with a warning.
pub fn load_population(table_path: &Path, country: &str) -> Result<f64> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(table_path)?;
    let mut result: Option<f64> = None;
    for record in reader.records() {
        let record = record?;
        if record.get(0) != Some(country) {
            continue;
        }
        let p: f64 = record
            .get(1)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::MalformedCsv(format!("bad population for {country}")))?;
        if result.is_some() {
            warn!("{country}: duplicate population rows; first wins");
        } else {
            result = Some(p);
        }
    }
    result.ok_or_else(|| Error::CountryNotFound(country.to_string()))
}

fn series_basename(country: &str) -> String {
    country
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

/// Write the internal cached format: `<country>.csv` with `day,A,R,D`
/// rows plus a `<country>.json` header (country, population, start date).
pub fn write_series(dir: &Path, series: &ObservedSeries) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let base = series_basename(&series.country);
    let csv_path = dir.join(format!("{base}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(["day", "A", "R", "D"])?;
    for t in 0..series.days() {
        w.write_record([
            t.to_string(),
            series.a[t].to_string(),
            series.r[t].to_string(),
            series.d[t].to_string(),
        ])?;
    }
    w.flush()?;

    #[derive(Serialize)]
    struct Header<'a> {
        country: &'a str,
        population: f64,
        start_date: NaiveDate,
        days: usize,
    }
    let header = Header {
        country: &series.country,
        population: series.population,
        start_date: series.start_date,
        days: series.days(),
    };
    let json_path = dir.join(format!("{base}.json"));
    fs::write(&json_path, serde_json::to_string_pretty(&header).unwrap())?;
    Ok(csv_path)
}

/// Read a series back from the internal cached format.
pub fn read_series(dir: &Path, country: &str) -> Result<ObservedSeries> {
    let base = series_basename(country);
    let json_path = dir.join(format!("{base}.json"));
    #[derive(Deserialize)]
    struct Header {
        country: String,
        population: f64,
        start_date: NaiveDate,
        days: usize,
    }
    let header: Header = serde_json::from_str(&fs::read_to_string(&json_path)?)
        .map_err(|e| Error::MalformedCsv(format!("{}: {e}", json_path.display())))?;

    let csv_path = dir.join(format!("{base}.csv"));
    let mut reader = csv::Reader::from_path(&csv_path)?;
    let (mut a, mut r, mut d) = (Vec::new(), Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record?;
        let get = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::MalformedCsv(format!("{}: bad row", csv_path.display())))
        };
        a.push(get(1)?);
        r.push(get(2)?);
        d.push(get(3)?);
    }
    if a.len() != header.days {
        return Err(Error::MalformedCsv(format!(
            "{}: {} rows but header says {} days",
            csv_path.display(),
            a.len(),
            header.days
        )));
    }
    Ok(ObservedSeries {
        country: header.country,
        population: header.population,
        start_date: header.start_date,
        a,
        r,
        d,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(dir: &Path, name: &str, contents: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = fs::File::create(&path).unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        path
    }

    const HEADER: &str = "Province/State,Country/Region,Lat,Long,1/22/20,1/23/20,1/24/20\n";

    #[test]
    fn single_row_country() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "c.csv", &format!("{HEADER},Freedonia,0,0,1,2,4\n"));
        let (dates, totals) = parse_one_jhu_file(&p, "Freedonia").unwrap();
        assert_eq!(totals, vec![1.0, 2.0, 4.0]);
        assert_eq!(dates[0], NaiveDate::from_ymd_opt(2020, 1, 22).unwrap());
    }

    #[test]
    fn provinces_are_summed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            dir.path(),
            "c.csv",
            &format!("{HEADER}North,Freedonia,0,0,1,2,3\nSouth,Freedonia,0,0,0,1,1\n"),
        );
        let (_, totals) = parse_one_jhu_file(&p, "Freedonia").unwrap();
        assert_eq!(totals, vec![1.0, 3.0, 4.0]);
    }

    #[test]
    fn cumulative_dip_is_clamped() {
        let mut xs = vec![5.0, 4.0, 6.0];
        fix_cumulative("confirmed", "X", &mut xs);
        assert_eq!(xs, vec![5.0, 5.0, 6.0]);
    }

    #[test]
    fn missing_country() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "c.csv", &format!("{HEADER},Freedonia,0,0,1,2,4\n"));
        assert!(matches!(
            parse_one_jhu_file(&p, "Sylvania"),
            Err(Error::CountryNotFound(_))
        ));
    }

    #[test]
    fn bad_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(dir.path(), "c.csv", "a,b,c\n1,2,3\n");
        assert!(matches!(
            parse_one_jhu_file(&p, "X"),
            Err(Error::MalformedCsv(_))
        ));
    }

    fn raw(confirmed: &[f64], recovered: &[f64], deaths: &[f64]) -> RawSeries {
        let start = NaiveDate::from_ymd_opt(2020, 1, 22).unwrap();
        RawSeries {
            dates: (0..confirmed.len() as i64)
                .map(|k| start + chrono::Duration::days(k))
                .collect(),
            confirmed: confirmed.to_vec(),
            recovered: recovered.to_vec(),
            deaths: deaths.to_vec(),
        }
    }

    #[test]
    fn derive_observed_hand_arithmetic() {
        let raw = raw(&[50.0, 120.0, 200.0], &[0.0, 10.0, 30.0], &[0.0, 0.0, 5.0]);
        let s = derive_observed(&raw, "X", 1_000_000.0, 100.0).unwrap();
        assert_eq!(s.a, vec![110.0, 165.0]);
        assert_eq!(s.r, vec![10.0, 30.0]);
        assert_eq!(s.d, vec![0.0, 5.0]);
        assert_eq!(s.start_date, NaiveDate::from_ymd_opt(2020, 1, 23).unwrap());
    }

    #[test]
    fn derive_observed_no_removals() {
        let raw = raw(&[150.0, 300.0], &[0.0, 0.0], &[0.0, 0.0]);
        let s = derive_observed(&raw, "X", 1_000_000.0, 100.0).unwrap();
        assert_eq!(s.a, vec![150.0, 300.0]);
    }

    #[test]
    fn derive_observed_onset_not_reached() {
        let raw = raw(&[10.0, 50.0, 99.0], &[0.0; 3], &[0.0; 3]);
        assert!(matches!(
            derive_observed(&raw, "X", 1_000_000.0, 100.0),
            Err(Error::OnsetNotReached { .. })
        ));
    }

    #[test]
    fn onset_alignment_day_minus_one_below_threshold() {
        let raw = raw(&[99.0, 100.0, 150.0], &[0.0; 3], &[0.0; 3]);
        let s = derive_observed(&raw, "X", 1_000_000.0, 100.0).unwrap();
        assert_eq!(s.a[0], 100.0);
        assert_eq!(s.days(), 2);
    }

    #[test]
    fn population_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(
            dir.path(),
            "pop.csv",
            "country,population\nItaly,60360000\nItaly,1\n",
        );
        assert_eq!(load_population(&p, "Italy").unwrap(), 60_360_000.0);
        assert!(matches!(
            load_population(&p, "Atlantis"),
            Err(Error::CountryNotFound(_))
        ));
    }

    #[test]
    fn internal_format_round_trip() {
        let raw = raw(&[50.0, 120.0, 200.0], &[0.0, 10.0, 30.0], &[0.0, 0.0, 5.0]);
        let s = derive_observed(&raw, "Freedonia Land", 1_000_000.0, 100.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_series(dir.path(), &s).unwrap();
        let back = read_series(dir.path(), "Freedonia Land").unwrap();
        assert_eq!(s, back);
    }
}
