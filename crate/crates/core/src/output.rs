//! Result files: fixed column order, 17 significant digits, `NA` for missing.

use std::fs;
use std::path::Path;

use csv::StringRecord;

use crate::error::{Error, Result};
use crate::learners::LearnerId;
use crate::simgen::Mode;

pub const NA: &str = "NA";

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        NA.to_string()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), fmt_f64)
}

fn parse_f64(field: &str, name: &str) -> Result<f64> {
    field
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Malformed(format!("column {name}: bad number '{field}'")))
}

fn parse_opt(field: &str, name: &str) -> Result<Option<f64>> {
    if field == NA {
        Ok(None)
    } else {
        parse_f64(field, name).map(Some)
    }
}

fn parse_usize(field: &str, name: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::Malformed(format!("column {name}: bad count '{field}'")))
}

fn parse_flag(field: &str, name: &str) -> Result<Option<bool>> {
    match field {
        "1" => Ok(Some(true)),
        "0" => Ok(Some(false)),
        NA => Ok(None),
        _ => Err(Error::Malformed(format!("column {name}: bad flag '{field}'"))),
    }
}

fn fmt_flag(v: Option<bool>) -> String {
    v.map_or_else(|| NA.to_string(), |b| (b as u8).to_string())
}

/// One CSV file's row type.
pub trait Table: Sized {
    const HEADER: &'static [&'static str];
    fn to_record(&self) -> Vec<String>;
    fn from_record(record: &StringRecord) -> Result<Self>;
}

pub fn to_csv_string<T: Table>(rows: &[T]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(T::HEADER)?;
    for row in rows {
        w.write_record(row.to_record())?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Malformed(e.to_string()))
}

pub fn parse_csv<T: Table>(text: &str) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = r.headers()?.clone();
    if header.iter().ne(T::HEADER.iter().copied()) {
        return Err(Error::Malformed(format!(
            "unexpected header, expected {}",
            T::HEADER.join(",")
        )));
    }
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != T::HEADER.len() {
            return Err(Error::Malformed(format!(
                "row has {} fields, expected {}",
                record.len(),
                T::HEADER.len()
            )));
        }
        rows.push(T::from_record(&record)?);
    }
    Ok(rows)
}

pub fn write_table<T: Table>(path: &Path, rows: &[T]) -> Result<()> {
    let text = to_csv_string(rows)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_table<T: Table>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text)
}

/// Scenario coordinates shared by every file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioKey {
    pub mode: Mode,
    pub mu_delta: f64,
    pub rho: f64,
    pub p: usize,
    pub n: usize,
}

impl ScenarioKey {
    pub fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        self.mode
            .cmp(&other.mode)
            .then(self.mu_delta.total_cmp(&other.mu_delta))
            .then(self.rho.total_cmp(&other.rho))
            .then(self.p.cmp(&other.p))
            .then(self.n.cmp(&other.n))
    }

    fn push(&self, out: &mut Vec<String>) {
        out.push(self.mode.to_string());
        out.push(fmt_f64(self.mu_delta));
        out.push(fmt_f64(self.rho));
        out.push(self.p.to_string());
        out.push(self.n.to_string());
    }

    fn parse(r: &StringRecord) -> Result<Self> {
        Ok(ScenarioKey {
            mode: r[0].parse().map_err(|e: Error| Error::Malformed(e.to_string()))?,
            mu_delta: parse_f64(&r[1], "mu_delta")?,
            rho: parse_f64(&r[2], "rho")?,
            p: parse_usize(&r[3], "p")?,
            n: parse_usize(&r[4], "n")?,
        })
    }
}

fn parse_learner(field: &str) -> Result<LearnerId> {
    field.parse().map_err(|e: Error| Error::Malformed(e.to_string()))
}

/// One (scenario, learner, replication) outcome. A failed fit keeps its row
/// with every metric missing and the reason in `error`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub key: ScenarioKey,
    pub learner: LearnerId,
    pub replication: usize,
    pub n_scored: usize,
    pub rmse: Option<f64>,
    pub mae: Option<f64>,
    pub r2: Option<f64>,
    pub dir: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub se_alpha: Option<f64>,
    pub se_beta: Option<f64>,
    pub alpha_covered: Option<bool>,
    pub beta_covered: Option<bool>,
    /// RMSE against the observed pair differences; external modes only.
    pub rmse_obs: Option<f64>,
    pub error: String,
}

impl ResultRow {
    pub fn failed(key: ScenarioKey, learner: LearnerId, replication: usize, error: String) -> Self {
        ResultRow {
            key,
            learner,
            replication,
            n_scored: 0,
            rmse: None,
            mae: None,
            r2: None,
            dir: None,
            alpha: None,
            beta: None,
            se_alpha: None,
            se_beta: None,
            alpha_covered: None,
            beta_covered: None,
            rmse_obs: None,
            error,
        }
    }

    pub fn is_failure(&self) -> bool {
        !self.error.is_empty()
    }

    pub fn cmp_key(&self, other: &Self) -> std::cmp::Ordering {
        self.key
            .cmp_key(&other.key)
            .then(self.learner.cmp(&other.learner))
            .then(self.replication.cmp(&other.replication))
    }
}

impl Table for ResultRow {
    const HEADER: &'static [&'static str] = &[
        "mode", "mu_delta", "rho", "p", "n", "learner", "replication", "n_scored", "rmse", "mae", "r2", "dir",
        "alpha", "beta", "se_alpha", "se_beta", "alpha_covered", "beta_covered", "rmse_obs", "error",
    ];

    fn to_record(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(Self::HEADER.len());
        self.key.push(&mut out);
        out.push(self.learner.to_string());
        out.push(self.replication.to_string());
        out.push(self.n_scored.to_string());
        for v in [
            self.rmse,
            self.mae,
            self.r2,
            self.dir,
            self.alpha,
            self.beta,
            self.se_alpha,
            self.se_beta,
        ] {
            out.push(fmt_opt(v));
        }
        out.push(fmt_flag(self.alpha_covered));
        out.push(fmt_flag(self.beta_covered));
        out.push(fmt_opt(self.rmse_obs));
        out.push(self.error.clone());
        out
    }

    fn from_record(r: &StringRecord) -> Result<Self> {
        Ok(ResultRow {
            key: ScenarioKey::parse(r)?,
            learner: parse_learner(&r[5])?,
            replication: parse_usize(&r[6], "replication")?,
            n_scored: parse_usize(&r[7], "n_scored")?,
            rmse: parse_opt(&r[8], "rmse")?,
            mae: parse_opt(&r[9], "mae")?,
            r2: parse_opt(&r[10], "r2")?,
            dir: parse_opt(&r[11], "dir")?,
            alpha: parse_opt(&r[12], "alpha")?,
            beta: parse_opt(&r[13], "beta")?,
            se_alpha: parse_opt(&r[14], "se_alpha")?,
            se_beta: parse_opt(&r[15], "se_beta")?,
            alpha_covered: parse_flag(&r[16], "alpha_covered")?,
            beta_covered: parse_flag(&r[17], "beta_covered")?,
            rmse_obs: parse_opt(&r[18], "rmse_obs")?,
            error: r[19].to_string(),
        })
    }
}

/// Summary of one metric over the non-missing replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub count: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = Option<f64>>) -> Self {
        let mut v: Vec<f64> = values.into_iter().flatten().collect();
        if v.is_empty() {
            return Summary {
                count: 0,
                mean: None,
                median: None,
                min: None,
                max: None,
            };
        }
        v.sort_by(f64::total_cmp);
        let k = v.len();
        let median = if k % 2 == 1 {
            v[k / 2]
        } else {
            (v[k / 2 - 1] + v[k / 2]) / 2.0
        };
        Summary {
            count: k,
            mean: Some(v.iter().sum::<f64>() / k as f64),
            median: Some(median),
            min: Some(v[0]),
            max: Some(v[k - 1]),
        }
    }
}

pub const SUMMARY_METRICS: [&str; 7] = ["rmse", "mae", "r2", "dir", "alpha", "beta", "rmse_obs"];

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub key: ScenarioKey,
    pub learner: LearnerId,
    pub replications: usize,
    pub failures: usize,
    /// In the order of [`SUMMARY_METRICS`].
    pub metrics: [Summary; 7],
    /// Fraction of calibrated replications whose 95% interval covers 0 (intercept) and 1 (slope).
    pub alpha_coverage: Option<f64>,
    pub beta_coverage: Option<f64>,
}

impl AggregateRow {
    pub fn metric(&self, name: &str) -> Option<&Summary> {
        SUMMARY_METRICS.iter().position(|m| *m == name).map(|i| &self.metrics[i])
    }
}

const AGG_HEADER: &[&str] = &[
    "mode", "mu_delta", "rho", "p", "n", "learner", "replications", "failures",
    "rmse_count", "rmse_mean", "rmse_median", "rmse_min", "rmse_max",
    "mae_count", "mae_mean", "mae_median", "mae_min", "mae_max",
    "r2_count", "r2_mean", "r2_median", "r2_min", "r2_max",
    "dir_count", "dir_mean", "dir_median", "dir_min", "dir_max",
    "alpha_count", "alpha_mean", "alpha_median", "alpha_min", "alpha_max",
    "beta_count", "beta_mean", "beta_median", "beta_min", "beta_max",
    "rmse_obs_count", "rmse_obs_mean", "rmse_obs_median", "rmse_obs_min", "rmse_obs_max",
    "alpha_coverage", "beta_coverage",
];

impl Table for AggregateRow {
    const HEADER: &'static [&'static str] = AGG_HEADER;

    fn to_record(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(Self::HEADER.len());
        self.key.push(&mut out);
        out.push(self.learner.to_string());
        out.push(self.replications.to_string());
        out.push(self.failures.to_string());
        for s in &self.metrics {
            out.push(s.count.to_string());
            for v in [s.mean, s.median, s.min, s.max] {
                out.push(fmt_opt(v));
            }
        }
        out.push(fmt_opt(self.alpha_coverage));
        out.push(fmt_opt(self.beta_coverage));
        out
    }

    fn from_record(r: &StringRecord) -> Result<Self> {
        let mut metrics = [Summary::of([]); 7];
        for (i, s) in metrics.iter_mut().enumerate() {
            let base = 8 + 5 * i;
            let name = SUMMARY_METRICS[i];
            *s = Summary {
                count: parse_usize(&r[base], name)?,
                mean: parse_opt(&r[base + 1], name)?,
                median: parse_opt(&r[base + 2], name)?,
                min: parse_opt(&r[base + 3], name)?,
                max: parse_opt(&r[base + 4], name)?,
            };
        }
        Ok(AggregateRow {
            key: ScenarioKey::parse(r)?,
            learner: parse_learner(&r[5])?,
            replications: parse_usize(&r[6], "replications")?,
            failures: parse_usize(&r[7], "failures")?,
            metrics,
            alpha_coverage: parse_opt(&r[43], "alpha_coverage")?,
            beta_coverage: parse_opt(&r[44], "beta_coverage")?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Zone {
    Failure,
    Success,
    Neither,
}

impl Zone {
    pub fn as_str(&self) -> &'static str {
        match self {
            Zone::Failure => "failure",
            Zone::Success => "success",
            Zone::Neither => "neither",
        }
    }
}

impl std::str::FromStr for Zone {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "failure" => Ok(Zone::Failure),
            "success" => Ok(Zone::Success),
            "neither" => Ok(Zone::Neither),
            _ => Err(Error::Malformed(format!("unknown zone '{s}'"))),
        }
    }
}

/// Zone of the median RMSE/DIR point for one (scenario, learner).
#[derive(Debug, Clone, PartialEq)]
pub struct ZoneRow {
    pub key: ScenarioKey,
    pub learner: LearnerId,
    pub median_rmse: Option<f64>,
    pub median_dir: Option<f64>,
    pub zone: Option<Zone>,
}

impl Table for ZoneRow {
    const HEADER: &'static [&'static str] = &["mode", "mu_delta", "rho", "p", "n", "learner", "median_rmse", "median_dir", "zone"];

    fn to_record(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(Self::HEADER.len());
        self.key.push(&mut out);
        out.push(self.learner.to_string());
        out.push(fmt_opt(self.median_rmse));
        out.push(fmt_opt(self.median_dir));
        out.push(self.zone.map_or(NA, |z| z.as_str()).to_string());
        out
    }

    fn from_record(r: &StringRecord) -> Result<Self> {
        Ok(ZoneRow {
            key: ScenarioKey::parse(r)?,
            learner: parse_learner(&r[5])?,
            median_rmse: parse_opt(&r[6], "median_rmse")?,
            median_dir: parse_opt(&r[7], "median_dir")?,
            zone: if &r[8] == NA { None } else { Some(r[8].parse()?) },
        })
    }
}

/// Long-format complexity table: one row per (scenario, class, learner).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityRow {
    pub key: ScenarioKey,
    pub class: String,
    pub patients: usize,
    pub learner: LearnerId,
    pub accuracy: Option<f64>,
}

impl Table for ComplexityRow {
    const HEADER: &'static [&'static str] = &["mode", "mu_delta", "rho", "p", "n", "class", "patients", "learner", "accuracy"];

    fn to_record(&self) -> Vec<String> {
        let mut out = Vec::with_capacity(Self::HEADER.len());
        self.key.push(&mut out);
        out.push(self.class.clone());
        out.push(self.patients.to_string());
        out.push(self.learner.to_string());
        out.push(fmt_opt(self.accuracy));
        out
    }

    fn from_record(r: &StringRecord) -> Result<Self> {
        let class = r[5].to_string();
        if !crate::metrics::COMPLEXITY_CLASSES.contains(&class.as_str()) {
            return Err(Error::Malformed(format!("unknown complexity class '{class}'")));
        }
        Ok(ComplexityRow {
            key: ScenarioKey::parse(r)?,
            class,
            patients: parse_usize(&r[6], "patients")?,
            learner: parse_learner(&r[7])?,
            accuracy: parse_opt(&r[8], "accuracy")?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn float_format_keeps_seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::NAN), "NA");
        assert_eq!(fmt_opt(None), "NA");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }

    fn key() -> ScenarioKey {
        ScenarioKey {
            mode: Mode::ExternalCorrelated,
            mu_delta: 0.25,
            rho: 0.5,
            p: 15,
            n: 500,
        }
    }

    #[test]
    fn failed_row_round_trips() {
        let rows = vec![ResultRow::failed(key(), LearnerId::Pls, 3, "treated arm: rank, \"quoted\"".into())];
        let text = to_csv_string(&rows).unwrap();
        let back: Vec<ResultRow> = parse_csv(&text).unwrap();
        assert_eq!(back, rows);
        assert_eq!(to_csv_string(&back).unwrap(), text);
    }

    #[test]
    fn wrong_header_rejected() {
        assert!(parse_csv::<ResultRow>("a,b\n1,2\n").is_err());
        assert!(parse_csv::<ZoneRow>("").is_err());
    }

    #[test]
    fn summary_even_and_odd() {
        let s = Summary::of([Some(3.0), None, Some(1.0), Some(2.0)]);
        assert_eq!((s.count, s.median, s.mean), (3, Some(2.0), Some(2.0)));
        assert_eq!(Summary::of([Some(1.0), Some(4.0)]).median, Some(2.5));
        assert_eq!(Summary::of([None]).count, 0);
    }

    proptest! {
        #[test]
        fn float_text_round_trips(v in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), v.to_bits());
            prop_assert_eq!(fmt_f64(back), s);
        }

        #[test]
        fn result_rows_round_trip(
            vals in prop::collection::vec(prop::option::of(-1e6f64..1e6), 9),
            rep in 0usize..1000,
            cover in prop::option::of(any::<bool>()),
        ) {
            let mut row = ResultRow::failed(key(), LearnerId::Gbm, rep, String::new());
            row.rmse = vals[0];
            row.mae = vals[1];
            row.r2 = vals[2];
            row.dir = vals[3];
            row.alpha = vals[4];
            row.beta = vals[5];
            row.se_alpha = vals[6];
            row.se_beta = vals[7];
            row.rmse_obs = vals[8];
            row.alpha_covered = cover;
            let text = to_csv_string(std::slice::from_ref(&row)).unwrap();
            let back: Vec<ResultRow> = parse_csv(&text).unwrap();
            prop_assert_eq!(&back[0], &row);
            prop_assert_eq!(to_csv_string(&back).unwrap(), text);
        }
    }
}
