//! Grid execution: one task per (scenario, replication), run on a fixed-size
//! pool and merged into canonically sorted rows.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learners::{LearnerId, LearnerSpec};
use crate::matcher::{self, MatchedPairs};
use crate::metrics::{self, ComplexityTable, MetricReport, COMPLEXITY_CLASSES};
use crate::output::{AggregateRow, ComplexityRow, ResultRow, ScenarioKey, Summary, Zone, ZoneRow};
use crate::pite::{self, split_by_arm, FittedPair};
use crate::simgen::{self, Mode, Population, ScenarioConfig};

pub const CALIBRATION_LEVEL: f64 = 0.95;

pub fn scenario_key(s: &ScenarioConfig) -> ScenarioKey {
    ScenarioKey {
        mode: s.mode,
        mu_delta: s.mu_delta,
        rho: s.rho,
        p: s.p,
        n: s.n,
    }
}

/// Scores for one learner in one replication.
#[derive(Debug, Clone)]
pub struct LearnerOutcome {
    pub learner: LearnerId,
    pub result: std::result::Result<Scored, String>,
}

#[derive(Debug, Clone)]
pub struct Scored {
    pub report: MetricReport,
    pub rmse_obs: Option<f64>,
    pub n_scored: usize,
}

#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub key: ScenarioKey,
    pub replication: usize,
    pub learners: Vec<LearnerOutcome>,
}

impl ReplicationOutcome {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.learners
            .iter()
            .map(|o| match &o.result {
                Ok(s) => scored_row(self.key, o.learner, self.replication, s),
                Err(e) => ResultRow::failed(self.key, o.learner, self.replication, e.clone()),
            })
            .collect()
    }

    /// Direction indicators of the learners that produced scores.
    pub fn dir_flags(&self) -> Vec<(LearnerId, Vec<u8>)> {
        self.learners
            .iter()
            .filter_map(|o| o.result.as_ref().ok().map(|s| (o.learner, s.report.dir_flags.clone())))
            .collect()
    }
}

fn scored_row(key: ScenarioKey, learner: LearnerId, replication: usize, s: &Scored) -> ResultRow {
    let r = &s.report;
    let cover = r.calibration.map(|c| c.coverage(CALIBRATION_LEVEL));
    ResultRow {
        key,
        learner,
        replication,
        n_scored: s.n_scored,
        rmse: Some(r.rmse),
        mae: Some(r.mae),
        r2: r.r2,
        dir: Some(r.dir),
        alpha: r.alpha(),
        beta: r.beta(),
        se_alpha: r.calibration.map(|c| c.se_alpha),
        se_beta: r.calibration.map(|c| c.se_beta),
        alpha_covered: cover.map(|c| c.0),
        beta_covered: cover.map(|c| c.1),
        rmse_obs: s.rmse_obs,
        error: String::new(),
    }
}

fn file_stem(key: &ScenarioKey, rep: usize) -> String {
    format!("{}_mu{}_rho{}_p{}_n{}_rep{}", key.mode, key.mu_delta, key.rho, key.p, key.n, rep)
}

fn dump_csv(dir: &Path, name: &str, write: impl FnOnce(BufWriter<File>) -> Result<()>) -> Result<()> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    write(BufWriter::new(f))
}

fn fit_learner(spec: &LearnerSpec, train: &Population, stream: crate::rng::Stream) -> Result<FittedPair> {
    let (control, treated) = split_by_arm(train)?;
    pite::fit_pair(spec, &control, &treated, stream.tagged(&format!("learner-{}", spec.id)))
}

/// Runs every learner on one replication. Data generation errors abort the
/// replication; learner errors are recorded per learner.
pub fn run_replication(scenario: &ScenarioConfig, replication: usize, specs: &[LearnerSpec]) -> Result<ReplicationOutcome> {
    execute(scenario, replication, specs, None)
}

/// As [`run_replication`], also writing population and pair CSVs into `dir`.
pub fn run_replication_with_dump(
    scenario: &ScenarioConfig,
    replication: usize,
    specs: &[LearnerSpec],
    dir: &Path,
) -> Result<ReplicationOutcome> {
    execute(scenario, replication, specs, Some(dir))
}

fn execute(scenario: &ScenarioConfig, replication: usize, specs: &[LearnerSpec], dump: Option<&Path>) -> Result<ReplicationOutcome> {
    scenario.validate()?;
    let key = scenario_key(scenario);
    let stream = scenario.stream(replication);
    let stem = file_stem(&key, replication);
    let mut pop_rng = stream.tagged("population").rng();
    let structure = simgen::draw_structure(scenario, &mut pop_rng)?;
    let population = simgen::generate_with(scenario, &structure, &mut pop_rng)?;
    if let Some(dir) = dump {
        dump_csv(dir, &format!("{stem}_population.csv"), |w| population.write_csv(w))?;
    }

    let learners = match scenario.mode {
        Mode::Internal => {
            let (train, test) = pite::internal_split(&population, &mut stream.tagged("split").rng())?;
            specs
                .iter()
                .map(|spec| {
                    let result = fit_learner(spec, &train, stream)
                        .and_then(|pair| pite::predict_pite(&pair, &test.x))
                        .and_then(|est| score(&est, &test.delta_true, None));
                    outcome(spec.id, &key, replication, result)
                })
                .collect()
        }
        Mode::ExternalCorrelated | Mode::ExternalInteraction => {
            let mut ext_rng = stream.tagged("external").rng();
            let ext_structure = simgen::redraw_effects(scenario, &structure, &mut ext_rng);
            let validation = simgen::generate_with(scenario, &ext_structure, &mut ext_rng)?;
            let pairs = matcher::match_population(&validation)?;
            if let Some(dir) = dump {
                dump_csv(dir, &format!("{stem}_validation.csv"), |w| validation.write_csv(w))?;
            }
            specs
                .iter()
                .map(|spec| {
                    let result = fit_learner(spec, &population, stream).and_then(|pair| {
                        score_pairs(&pair, &validation, &pairs, dump.map(|d| d.join(format!("{stem}_pairs_{}.csv", spec.id))))
                    });
                    outcome(spec.id, &key, replication, result)
                })
                .collect()
        }
    };
    Ok(ReplicationOutcome {
        key,
        replication,
        learners,
    })
}

fn outcome(learner: LearnerId, key: &ScenarioKey, rep: usize, result: Result<Scored>) -> LearnerOutcome {
    let result = result.map_err(|e| {
        let msg = e.to_string();
        log::warn!("{} rep {rep} {learner}: {msg}", file_stem(key, rep));
        msg
    });
    LearnerOutcome { learner, result }
}

fn score(est: &DVector<f64>, truth: &DVector<f64>, observed: Option<&DVector<f64>>) -> Result<Scored> {
    if est.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite predictions"));
    }
    let report = MetricReport::compute(est.as_slice(), truth.as_slice())?;
    let rmse_obs = observed
        .map(|o| metrics::rmse(est.as_slice(), o.as_slice()))
        .transpose()?;
    Ok(Scored {
        report,
        rmse_obs,
        n_scored: est.len(),
    })
}

fn score_pairs(pair: &FittedPair, validation: &Population, pairs: &MatchedPairs, dump: Option<PathBuf>) -> Result<Scored> {
    let pred_t = pair.model_t().predict(&validation.x)?;
    let pred_c = pair.model_c().predict(&validation.x)?;
    let effects = matcher::pairwise_effects(pairs, &validation.y_obs, &pred_t, &pred_c, &validation.delta_true)?;
    if let Some(path) = dump {
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        matcher::write_pairs_csv(pairs, &effects, BufWriter::new(f))?;
    }
    score(&effects.predicted, &effects.truth, Some(&effects.observed))
}

/// Rows of a full run plus the replication-0 complexity tables.
#[derive(Debug, Clone)]
pub struct GridResult {
    pub rows: Vec<ResultRow>,
    pub complexity: Vec<ComplexityRow>,
}

impl GridResult {
    pub fn aggregates(&self) -> Vec<AggregateRow> {
        aggregate(&self.rows)
    }
}

/// Runs every (scenario, replication) task on `workers` threads. Output is
/// independent of the worker count.
pub fn run_all(
    scenarios: &[ScenarioConfig],
    specs: &[LearnerSpec],
    workers: usize,
    dump_dir: Option<&Path>,
) -> Result<GridResult> {
    if workers == 0 {
        return Err(Error::invalid("workers must be at least 1"));
    }
    if let Some(dir) = dump_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tasks: Vec<(usize, usize)> = scenarios
        .iter()
        .enumerate()
        .flat_map(|(i, s)| (0..s.replications).map(move |r| (i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<ReplicationOutcome>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, rep)| {
                let s = &scenarios[i];
                match dump_dir {
                    Some(dir) if rep == 0 => run_replication_with_dump(s, rep, specs, dir),
                    _ => run_replication(s, rep, specs),
                }
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut complexity = Vec::new();
    for (&(i, rep), outcome) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(o) => {
                rows.extend(o.rows());
                if rep == 0 {
                    complexity.extend(complexity_rows(&o)?);
                }
            }
            Err(Error::Io { path, source }) => return Err(Error::Io { path, source }),
            Err(e) => {
                let key = scenario_key(&scenarios[i]);
                log::warn!("{}: replication failed: {e}", file_stem(&key, rep));
                rows.extend(specs.iter().map(|s| ResultRow::failed(key, s.id, rep, e.to_string())));
            }
        }
    }
    rows.sort_by(|a, b| a.cmp_key(b));
    complexity.sort_by(|a, b| {
        a.key
            .cmp_key(&b.key)
            .then(class_index(&a.class).cmp(&class_index(&b.class)))
            .then(a.learner.cmp(&b.learner))
    });
    Ok(GridResult { rows, complexity })
}

fn class_index(label: &str) -> usize {
    COMPLEXITY_CLASSES.iter().position(|c| *c == label).unwrap_or(usize::MAX)
}

/// Long-format complexity rows for one replication; empty when no learner
/// produced scores.
pub fn complexity_rows(o: &ReplicationOutcome) -> Result<Vec<ComplexityRow>> {
    let flags = o.dir_flags();
    if flags.is_empty() {
        return Ok(Vec::new());
    }
    let matrix: Vec<Vec<u8>> = flags.iter().map(|(_, f)| f.clone()).collect();
    let table: ComplexityTable = metrics::complexity_table(&matrix)?;
    let mut rows = Vec::new();
    for (c, label) in COMPLEXITY_CLASSES.iter().enumerate() {
        for (k, (learner, _)) in flags.iter().enumerate() {
            rows.push(ComplexityRow {
                key: o.key,
                class: label.to_string(),
                patients: table.counts[c],
                learner: *learner,
                accuracy: table.accuracy[k][c],
            });
        }
    }
    Ok(rows)
}

fn coverage(rows: &[&ResultRow], pick: impl Fn(&ResultRow) -> Option<bool>) -> Option<f64> {
    let flags: Vec<bool> = rows.iter().filter_map(|r| pick(r)).collect();
    (!flags.is_empty()).then(|| flags.iter().filter(|&&b| b).count() as f64 / flags.len() as f64)
}

/// Groups sorted rows by (scenario, learner). Missing values are excluded
/// from each metric's count.
pub fn aggregate(rows: &[ResultRow]) -> Vec<AggregateRow> {
    let mut sorted: Vec<&ResultRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.cmp_key(b));
    sorted
        .chunk_by(|a, b| a.key.cmp_key(&b.key).is_eq() && a.learner == b.learner)
        .map(|group| {
            let metric = |f: fn(&ResultRow) -> Option<f64>| Summary::of(group.iter().map(|r| f(r)));
            AggregateRow {
                key: group[0].key,
                learner: group[0].learner,
                replications: group.len(),
                failures: group.iter().filter(|r| r.is_failure()).count(),
                metrics: [
                    metric(|r| r.rmse),
                    metric(|r| r.mae),
                    metric(|r| r.r2),
                    metric(|r| r.dir),
                    metric(|r| r.alpha),
                    metric(|r| r.beta),
                    metric(|r| r.rmse_obs),
                ],
                alpha_coverage: coverage(group, |r| r.alpha_covered),
                beta_coverage: coverage(group, |r| r.beta_covered),
            }
        })
        .collect()
}

/// Threshold zones per mode. Failure and success regions never overlap.
pub fn classify_zone(mode: Mode, rmse: f64, dir: f64) -> Zone {
    let (failure, success) = match mode {
        Mode::Internal => (rmse >= 5.0 && dir <= 0.8, rmse < 1.0 && dir > 0.95),
        Mode::ExternalCorrelated => (rmse >= 5.0 && dir <= 0.8, rmse < 2.0 && dir > 0.95),
        Mode::ExternalInteraction => (rmse >= 2.0 && dir <= 0.55, rmse < 1.6 && dir > 0.65),
    };
    assert!(!(failure && success), "zones overlap at rmse={rmse}, dir={dir}");
    if failure {
        Zone::Failure
    } else if success {
        Zone::Success
    } else {
        Zone::Neither
    }
}

/// Zone of each (scenario, learner) median point.
pub fn classify_zones(aggregates: &[AggregateRow]) -> Vec<ZoneRow> {
    aggregates
        .iter()
        .map(|a| {
            let median_rmse = a.metrics[0].median;
            let median_dir = a.metrics[3].median;
            let zone = median_rmse.zip(median_dir).map(|(r, d)| classify_zone(a.key.mode, r, d));
            ZoneRow {
                key: a.key,
                learner: a.learner,
                median_rmse,
                median_dir,
                zone,
            }
        })
        .collect()
}
