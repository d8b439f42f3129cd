//! Entry points behind the `pite` binary.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::harness::{self, classify_zones};
use crate::learners::LearnerId;
use crate::metrics::{self, ArmErrors, COMPLEXITY_CLASSES};
use crate::output::{self, fmt_f64, fmt_opt, ComplexityRow, ResultRow, ScenarioKey, Table, Zone, NA};
use crate::rng::Stream;
use crate::simgen::Mode;

pub const OUTPUT_DIR_ENV: &str = "PITE_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "results";

pub const RESULTS_FILE: &str = "results.csv";
pub const AGGREGATES_FILE: &str = "aggregates.csv";
pub const ZONES_FILE: &str = "zones.csv";
pub const COMPLEXITY_FILE: &str = "complexity.csv";
pub const CONFIG_ECHO_FILE: &str = "config_echo.toml";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_DIR: &str = "report";

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    master_seed: u64,
    replications: usize,
    modes: Vec<Mode>,
    learners: Vec<LearnerId>,
    scenarios: usize,
    rows: usize,
    failures: usize,
    workers: usize,
    files: Vec<&'a str>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Takes precedence over the config's `output_dir`.
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
}

/// Runs the configured grid and writes every result file; returns the output directory.
pub fn cmd_run(config_path: &Path, opts: &RunOptions) -> Result<PathBuf> {
    let text = fs::read_to_string(config_path).map_err(|e| Error::io(config_path, e))?;
    let cfg = RunConfig::parse(&text)?;
    if opts.workers == Some(0) {
        return Err(Error::Config("workers: must be positive".into()));
    }
    let out = opts
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let workers = opts
        .workers
        .or(cfg.workers)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let scenarios = cfg.scenarios()?;
    let specs = cfg.learner_specs()?;
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    log::info!(
        "running {} scenarios x {} replications x {} learners on {workers} workers",
        scenarios.len(),
        cfg.replications,
        specs.len()
    );
    let dump_dir = cfg.dump.then(|| out.join("dumps"));
    let grid = harness::run_all(&scenarios, &specs, workers, dump_dir.as_deref())?;
    let aggregates = grid.aggregates();
    let zones = classify_zones(&aggregates);

    output::write_table(&out.join(RESULTS_FILE), &grid.rows)?;
    output::write_table(&out.join(AGGREGATES_FILE), &aggregates)?;
    output::write_table(&out.join(ZONES_FILE), &zones)?;
    output::write_table(&out.join(COMPLEXITY_FILE), &grid.complexity)?;
    let echo = out.join(CONFIG_ECHO_FILE);
    fs::write(&echo, &text).map_err(|e| Error::io(&echo, e))?;

    let mut modes = cfg.modes.clone();
    modes.sort();
    modes.dedup();
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        master_seed: cfg.master_seed,
        replications: cfg.replications,
        modes,
        learners: cfg.learner_ids()?,
        scenarios: scenarios.len(),
        rows: grid.rows.len(),
        failures: grid.rows.iter().filter(|r| r.is_failure()).count(),
        workers,
        files: vec![RESULTS_FILE, AGGREGATES_FILE, ZONES_FILE, COMPLEXITY_FILE, CONFIG_ECHO_FILE],
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Malformed(e.to_string()))?;
    let path = out.join(MANIFEST_FILE);
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(out)
}

/// Deliberate defects for checking that the identity suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Adds the bias cross term instead of subtracting it.
    Prop1Sign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub gap: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.gap <= self.tolerance
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub instances: usize,
    pub subjects: usize,
    pub mc_replications: usize,
    pub fault: Option<Fault>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 20240,
            instances: 1000,
            subjects: 100,
            mc_replications: 10_000,
            fault: None,
        }
    }
}

fn normals(rng: &mut impl rand::Rng, m: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..m).map(|_| StandardNormal.sample(rng)).collect()
}

/// Runs the metric identity suites. Each check reports its worst gap against its tolerance.
pub fn cmd_verify(opts: &VerifyOptions) -> Result<Vec<IdentityCheck>> {
    let root = Stream::new(opts.seed);
    let m = opts.subjects;
    let mut r2_gap = 0.0f64;
    let mut mae_gap = 0.0f64;
    let mut cal_gap = 0.0f64;
    let mut rng = root.tagged("identities").rng();
    for _ in 0..opts.instances {
        let (f1, f0, h1, h0) = (normals(&mut rng, m), normals(&mut rng, m), normals(&mut rng, m), normals(&mut rng, m));
        let errs = ArmErrors::from_predictions(&f1, &f0, &h1, &h0)?;
        let d = metrics::r2_decompose(&errs.e1, &errs.e0, &errs.eps1, &errs.eps0)?;
        let truth: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let est: Vec<f64> = h1.iter().zip(&h0).map(|(a, b)| a - b).collect();
        let direct = metrics::r2(&est, &truth)?;
        r2_gap = r2_gap.max(match (d.r2, direct) {
            (Some(a), Some(b)) => (a - b).abs(),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        });
        let b = metrics::mae_bounds(&errs.e1, &errs.e0)?;
        mae_gap = mae_gap.max((b.lower - b.mae_pite).max(b.mae_pite - b.upper).max(0.0));
        cal_gap = cal_gap.max(match metrics::calibration(&est, &est)? {
            Some(c) => c.alpha.abs().max((c.beta - 1.0).abs()),
            None => f64::INFINITY,
        });
    }

    // Synthetic arm predictors with known biases and spreads; the worst
    // standardized gap must stay within 3 Monte Carlo standard errors.
    let mut rng = root.tagged("prop1").rng();
    let (sd_t, sd_c) = (0.5, 0.3);
    let mut prop1_gap = 0.0f64;
    for (b_t, b_c) in [(0.0, 0.0), (1.0, -1.0), (0.5, 0.5)] {
        let k = 5;
        let truth_t = normals(&mut rng, k);
        let truth_c = normals(&mut rng, k);
        let draw = |rng: &mut crate::rng::StreamRng, truth: &[f64], bias: f64, sd: f64| -> Vec<Vec<f64>> {
            (0..opts.mc_replications)
                .map(|_| truth.iter().zip(normals(rng, k)).map(|(t, z)| t + bias + sd * z).collect())
                .collect()
        };
        let ft = draw(&mut rng, &truth_t, b_t, sd_t);
        let fc = draw(&mut rng, &truth_c, b_c, sd_c);
        let r = metrics::prop1_decompose(&ft, &fc, &truth_t, &truth_c)?;
        let rhs = match opts.fault {
            Some(Fault::Prop1Sign) => r.mse_t + r.mse_c + 2.0 * r.bias_product,
            None => r.rhs,
        };
        prop1_gap = prop1_gap.max((r.mse_pite - rhs).abs() / r.se_mse_pite);
    }

    Ok(vec![
        IdentityCheck {
            name: "r2-reconstruction",
            gap: r2_gap,
            tolerance: 1e-10,
        },
        IdentityCheck {
            name: "mae-bounds",
            gap: mae_gap,
            tolerance: 1e-12,
        },
        IdentityCheck {
            name: "calibration-identity",
            gap: cal_gap,
            tolerance: 1e-12,
        },
        IdentityCheck {
            name: "prop1-monte-carlo (gap in standard errors)",
            gap: prop1_gap,
            tolerance: 3.0,
        },
    ])
}

/// Files written by [`cmd_report`], relative to the results directory.
pub const REPORT_FILES: [&str; 5] = [
    "failure_table.csv",
    "success_matrix.csv",
    "scatter.csv",
    "zone_rects.csv",
    "complexity_table.csv",
];

fn write_rows(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Malformed(e.to_string()))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn key_fields(k: &ScenarioKey) -> Vec<String> {
    vec![k.mode.to_string(), fmt_f64(k.mu_delta), fmt_f64(k.rho), k.p.to_string(), k.n.to_string()]
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Derives report tables from `results.csv` and `complexity.csv` into
/// `<dir>/report`; neither input is modified. Returns the failure-table rows.
pub fn cmd_report(dir: &Path) -> Result<Vec<Vec<String>>> {
    let rows: Vec<ResultRow> = output::read_table(&dir.join(RESULTS_FILE))?;
    let complexity: Vec<ComplexityRow> = output::read_table(&dir.join(COMPLEXITY_FILE))?;
    let out = dir.join(REPORT_DIR);
    fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let aggregates = harness::aggregate(&rows);
    let zones = classify_zones(&aggregates);

    let mut failures = Vec::new();
    for (a, z) in aggregates.iter().zip(&zones) {
        if z.zone == Some(Zone::Failure) {
            let median = |name: &str| fmt_opt(a.metric(name).and_then(|s| s.median));
            failures.push(vec![
                a.key.mode.to_string(),
                fmt_f64(a.key.mu_delta),
                fmt_f64(a.key.rho),
                a.learner.to_string(),
                a.key.p.to_string(),
                a.key.n.to_string(),
                median("rmse"),
                median("r2"),
                median("mae"),
                median("dir"),
                fmt_opt(a.alpha_coverage),
                fmt_opt(a.beta_coverage),
            ]);
        }
    }
    write_rows(
        &out.join(REPORT_FILES[0]),
        &strings(&["mode", "mu_delta", "rho", "learner", "p", "n", "rmse", "r2", "mae", "dir", "alpha", "beta"]),
        &failures,
    )?;

    // Learner x condition incidence, one condition per scenario in canonical order.
    let mut scenarios: Vec<ScenarioKey> = Vec::new();
    for z in &zones {
        if scenarios.last().is_none_or(|k| !k.cmp_key(&z.key).is_eq()) {
            scenarios.push(z.key);
        }
    }
    let learners: BTreeSet<LearnerId> = zones.iter().map(|z| z.learner).collect();
    let mut header = strings(&["condition", "mode", "mu_delta", "rho", "p", "n"]);
    header.extend(learners.iter().map(|l| l.to_string()));
    let matrix: Vec<Vec<String>> = scenarios
        .iter()
        .enumerate()
        .map(|(c, k)| {
            let mut row = vec![(c + 1).to_string()];
            row.extend(key_fields(k));
            for l in &learners {
                let cell = zones
                    .iter()
                    .find(|z| z.key.cmp_key(k).is_eq() && z.learner == *l)
                    .map_or(NA.to_string(), |z| match z.zone {
                        Some(Zone::Success) => "1".to_string(),
                        Some(_) => "0".to_string(),
                        None => NA.to_string(),
                    });
                row.push(cell);
            }
            row
        })
        .collect();
    write_rows(&out.join(REPORT_FILES[1]), &header, &matrix)?;

    let scatter: Vec<Vec<String>> = rows
        .iter()
        .filter_map(|r| {
            let (rmse, dir) = (r.rmse?, r.dir?);
            let mut row = key_fields(&r.key);
            row.push(r.learner.to_string());
            row.push(r.replication.to_string());
            row.push(fmt_f64(rmse));
            row.push(fmt_f64(dir));
            row.push(harness::classify_zone(r.key.mode, rmse, dir).as_str().to_string());
            Some(row)
        })
        .collect();
    write_rows(
        &out.join(REPORT_FILES[2]),
        &strings(&["mode", "mu_delta", "rho", "p", "n", "learner", "replication", "rmse", "dir", "zone"]),
        &scatter,
    )?;

    let rect = |mode: &str, zone: &str, r: (f64, f64), d: (f64, f64)| {
        let f = |v: f64| if v.is_finite() { fmt_f64(v) } else { "inf".to_string() };
        vec![mode.to_string(), zone.to_string(), f(r.0), f(r.1), f(d.0), f(d.1)]
    };
    let inf = f64::INFINITY;
    let rects = vec![
        rect("internal", "failure", (5.0, inf), (0.0, 0.8)),
        rect("internal", "success", (0.0, 1.0), (0.95, 1.0)),
        rect("external-correlated", "failure", (5.0, inf), (0.0, 0.8)),
        rect("external-correlated", "success", (0.0, 2.0), (0.95, 1.0)),
        rect("external-interaction", "failure", (2.0, inf), (0.0, 0.55)),
        rect("external-interaction", "success", (0.0, 1.6), (0.65, 1.0)),
    ];
    write_rows(
        &out.join(REPORT_FILES[3]),
        &strings(&["mode", "zone", "rmse_min", "rmse_max", "dir_min", "dir_max"]),
        &rects,
    )?;

    let c_learners: BTreeSet<LearnerId> = complexity.iter().map(|c| c.learner).collect();
    let mut header = strings(&["mode", "mu_delta", "rho", "p", "n", "class", "patients"]);
    header.extend(c_learners.iter().map(|l| l.to_string()));
    let mut table = Vec::new();
    let mut keys: Vec<ScenarioKey> = Vec::new();
    for c in &complexity {
        if !keys.iter().any(|k| k.cmp_key(&c.key).is_eq()) {
            keys.push(c.key);
        }
    }
    for k in &keys {
        for class in COMPLEXITY_CLASSES {
            let cells: Vec<&ComplexityRow> = complexity
                .iter()
                .filter(|c| c.key.cmp_key(k).is_eq() && c.class == class)
                .collect();
            let Some(first) = cells.first() else { continue };
            let mut row = key_fields(k);
            row.push(class.to_string());
            row.push(first.patients.to_string());
            for l in &c_learners {
                row.push(
                    cells
                        .iter()
                        .find(|c| c.learner == *l)
                        .map_or(NA.to_string(), |c| c.accuracy.map_or(NA.to_string(), |a| format!("{a:.1}"))),
                );
            }
            table.push(row);
        }
    }
    write_rows(&out.join(REPORT_FILES[4]), &header, &table)?;
    Ok(failures)
}

/// Re-serializes a results file; the output equals the input for files written by [`cmd_run`].
pub fn reserialize<T: Table>(text: &str) -> Result<String> {
    output::to_csv_string(&output::parse_csv::<T>(text)?)
}
