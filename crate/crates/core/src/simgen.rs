//! Synthetic trial populations.
//!
//! Correlated mode: `X ~ N_p(0, Σ)` with an equicorrelation `Σ`, control mean
//! `f0 = X·β0`, individual effect `Δ = X·βΔ`, `β0 ~ N(0, 0.1²)`,
//! `βΔ ~ N(μ, 0.01²)`, unit Gaussian noise, and an exact half/half treatment
//! split drawn by random permutation.
//!
//! Interaction mode: six independent base covariates are expanded into all
//! 63 products of nonempty subsets. Learners see the full expansion, the
//! control mean stays linear in the base covariates, and `Δ = W·βΔ` where `W`
//! is a random subset of the expansion columns.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learners::LearnerId;
use crate::rng::{fnv1a, Stream};

/// Number of base covariates in interaction mode.
pub const INTERACTION_BASE: usize = 6;
/// Columns of the full interaction expansion, `2^6 - 1`.
pub const INTERACTION_COLUMNS: usize = (1 << INTERACTION_BASE) - 1;

pub const BETA0_SD: f64 = 0.1;
pub const BETA_DELTA_SD: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Internal,
    ExternalCorrelated,
    ExternalInteraction,
}

impl Mode {
    pub const ALL: [Mode; 3] = [
        Mode::Internal,
        Mode::ExternalCorrelated,
        Mode::ExternalInteraction,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Internal => "internal",
            Mode::ExternalCorrelated => "external-correlated",
            Mode::ExternalInteraction => "external-interaction",
        }
    }

    pub fn is_external(&self) -> bool {
        !matches!(self, Mode::Internal)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown mode '{s}'")))
    }
}

/// One cell of the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub n: usize,
    /// Covariate dimension, or the size of the interaction subset `W`.
    pub p: usize,
    pub rho: f64,
    pub mu_delta: f64,
    pub mode: Mode,
    pub n_base: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub learners: Vec<LearnerId>,
    pub cv_folds: usize,
    /// Standard deviation of the outcome noise; 1 everywhere except in
    /// degenerate test scenarios.
    pub noise_sd: f64,
    /// Force `βΔ = 0` exactly.
    pub null_effect: bool,
}

impl ScenarioConfig {
    pub fn new(mode: Mode, n: usize, p: usize, rho: f64, mu_delta: f64) -> Self {
        ScenarioConfig {
            n,
            p,
            rho: if mode == Mode::ExternalInteraction { 0.0 } else { rho },
            mu_delta,
            mode,
            n_base: INTERACTION_BASE,
            replications: 1,
            master_seed: 0,
            learners: Vec::new(),
            cv_folds: 10,
            noise_sd: 1.0,
            null_effect: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 4 || self.n % 2 != 0 {
            return Err(Error::invalid(format!(
                "n must be even and at least 4, got {}",
                self.n
            )));
        }
        if self.p == 0 {
            return Err(Error::invalid("p must be positive"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if !self.mu_delta.is_finite() {
            return Err(Error::invalid("mu_delta must be finite"));
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::invalid("noise_sd must be finite and nonnegative"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be positive"));
        }
        if self.cv_folds < 2 {
            return Err(Error::invalid("cv_folds must be at least 2"));
        }
        if self.mode == Mode::ExternalInteraction {
            if self.n_base != INTERACTION_BASE {
                return Err(Error::invalid(format!(
                    "interaction mode uses {INTERACTION_BASE} base covariates, got {}",
                    self.n_base
                )));
            }
            if self.p > INTERACTION_COLUMNS {
                return Err(Error::invalid(format!(
                    "interaction subset size {} exceeds {INTERACTION_COLUMNS}",
                    self.p
                )));
            }
        }
        Ok(())
    }

    /// Dimension of the learner-facing feature matrix.
    pub fn feature_dim(&self) -> usize {
        match self.mode {
            Mode::ExternalInteraction => INTERACTION_COLUMNS,
            _ => self.p,
        }
    }

    /// Stable label for seed derivation, independent of grid position.
    pub fn seed_label(&self) -> u64 {
        let desc = format!(
            "{}|{}|{}|{:016x}|{:016x}|{:016x}|{}",
            self.mode,
            self.n,
            self.p,
            self.rho.to_bits(),
            self.mu_delta.to_bits(),
            self.noise_sd.to_bits(),
            self.null_effect
        );
        fnv1a(desc.as_bytes())
    }

    pub fn stream(&self, replication: usize) -> Stream {
        Stream::new(self.master_seed)
            .child(self.seed_label())
            .child(replication as u64)
    }
}

/// Structural coefficients shared by training and external populations.
#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub beta0: DVector<f64>,
    pub beta_delta: DVector<f64>,
    /// Selected expansion columns in interaction mode.
    pub subset: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Population {
    /// Learner-facing features (the 63-column expansion in interaction mode).
    pub x: DMatrix<f64>,
    /// Base covariates when they differ from `x`.
    pub base: Option<DMatrix<f64>>,
    pub treated: Vec<bool>,
    pub y_obs: DVector<f64>,
    pub delta_true: DVector<f64>,
    pub f0_true: DVector<f64>,
    pub beta0: DVector<f64>,
    pub beta_delta: DVector<f64>,
    pub subset: Option<Vec<usize>>,
}

impl Population {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Covariates used for matching: the base covariates.
    pub fn covariates(&self) -> &DMatrix<f64> {
        self.base.as_ref().unwrap_or(&self.x)
    }

    pub fn n_treated(&self) -> usize {
        self.treated.iter().filter(|&&t| t).count()
    }

    /// Effect design `W` (or `X`) such that `delta_true = W·beta_delta`.
    pub fn effect_design(&self) -> DMatrix<f64> {
        match &self.subset {
            Some(cols) => self.x.select_columns(cols.iter()),
            None => self.x.clone(),
        }
    }

    /// Row subset, keeping the structural coefficients.
    pub fn select(&self, rows: &[usize]) -> Population {
        Population {
            x: self.x.select_rows(rows.iter()),
            base: self.base.as_ref().map(|b| b.select_rows(rows.iter())),
            treated: rows.iter().map(|&i| self.treated[i]).collect(),
            y_obs: self.y_obs.select_rows(rows.iter()),
            delta_true: self.delta_true.select_rows(rows.iter()),
            f0_true: self.f0_true.select_rows(rows.iter()),
            beta0: self.beta0.clone(),
            beta_delta: self.beta_delta.clone(),
            subset: self.subset.clone(),
        }
    }

    /// CSV dump: `id,T,y_obs,delta_true,x1..xq`, floats at 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "id".to_string(),
            "T".to_string(),
            "y_obs".to_string(),
            "delta_true".to_string(),
        ];
        header.extend((1..=self.x.ncols()).map(|j| format!("x{j}")));
        w.write_record(&header)?;
        for i in 0..self.n() {
            let mut rec = vec![
                i.to_string(),
                (self.treated[i] as u8).to_string(),
                crate::output::fmt_f64(self.y_obs[i]),
                crate::output::fmt_f64(self.delta_true[i]),
            ];
            rec.extend(self.x.row(i).iter().map(|&v| crate::output::fmt_f64(v)));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("population csv", e))?;
        Ok(())
    }
}

/// Lower Cholesky factor of the `p×p` equicorrelation matrix.
pub fn equicorrelation_factor(p: usize, rho: f64) -> Result<DMatrix<f64>> {
    if p == 0 {
        return Err(Error::invalid("p must be positive"));
    }
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid(format!(
            "rho must lie in [0, 1), got {rho}"
        )));
    }
    let sigma = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 } else { rho });
    let chol = sigma
        .cholesky()
        .ok_or_else(|| Error::invalid(format!("equicorrelation matrix not positive definite at rho={rho}")))?;
    Ok(chol.l())
}

/// Draws `n` rows i.i.d. from `N_p(0, Σ)` with unit variances and pairwise correlation `rho`.
pub fn sample_covariates<R: Rng + ?Sized>(
    n: usize,
    p: usize,
    rho: f64,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let l = equicorrelation_factor(p, rho)?;
    let mut z = DMatrix::<f64>::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = StandardNormal.sample(rng);
        }
    }
    if rho == 0.0 {
        return Ok(z);
    }
    Ok(z * l.transpose())
}

fn normal_vector<R: Rng + ?Sized>(len: usize, mean: f64, sd: f64, rng: &mut R) -> DVector<f64> {
    let dist = Normal::new(mean, sd).expect("sd is a positive constant");
    DVector::from_iterator(len, (0..len).map(|_| dist.sample(rng)))
}

/// `β0_j ~ N(0, 0.1²)` then `βΔ_j ~ N(mu_delta, 0.01²)`.
pub fn draw_coefficients<R: Rng + ?Sized>(
    p: usize,
    mu_delta: f64,
    rng: &mut R,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if p == 0 {
        return Err(Error::invalid("p must be positive"));
    }
    let beta0 = normal_vector(p, 0.0, BETA0_SD, rng);
    let beta_delta = draw_effect_coefficients(p, mu_delta, rng);
    Ok((beta0, beta_delta))
}

pub fn draw_effect_coefficients<R: Rng + ?Sized>(p: usize, mu_delta: f64, rng: &mut R) -> DVector<f64> {
    normal_vector(p, mu_delta, BETA_DELTA_SD, rng)
}

/// Products of every nonempty subset of six base columns; column `k - 1`
/// holds the product for bitmask `k`, with bit `j` selecting base column `j`.
pub fn expand_interactions(x6: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x6.ncols() != INTERACTION_BASE {
        return Err(Error::invalid(format!(
            "interaction expansion needs {INTERACTION_BASE} columns, got {}",
            x6.ncols()
        )));
    }
    let n = x6.nrows();
    let mut out = DMatrix::<f64>::zeros(n, INTERACTION_COLUMNS);
    for i in 0..n {
        for mask in 1..=INTERACTION_COLUMNS {
            let lowest = mask.trailing_zeros() as usize;
            let rest = mask & (mask - 1);
            // Every proper sub-mask has a smaller index, so it is already filled.
            let v = if rest == 0 {
                x6[(i, lowest)]
            } else {
                out[(i, rest - 1)] * x6[(i, lowest)]
            };
            out[(i, mask - 1)] = v;
        }
    }
    Ok(out)
}

/// `p` distinct expansion columns, uniform without replacement, sorted.
pub fn select_interaction_subset<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<Vec<usize>> {
    if p == 0 || p > INTERACTION_COLUMNS {
        return Err(Error::invalid(format!(
            "interaction subset size must be in 1..={INTERACTION_COLUMNS}, got {p}"
        )));
    }
    let mut cols = rand::seq::index::sample(rng, INTERACTION_COLUMNS, p).into_vec();
    cols.sort_unstable();
    Ok(cols)
}

/// Draws the structural coefficients for a scenario.
pub fn draw_structure<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Structure> {
    cfg.validate()?;
    let (beta0, mut beta_delta, subset) = match cfg.mode {
        Mode::ExternalInteraction => {
            let subset = select_interaction_subset(cfg.p, rng)?;
            let beta0 = normal_vector(INTERACTION_BASE, 0.0, BETA0_SD, rng);
            let beta_delta = draw_effect_coefficients(cfg.p, cfg.mu_delta, rng);
            (beta0, beta_delta, Some(subset))
        }
        _ => {
            let (b0, bd) = draw_coefficients(cfg.p, cfg.mu_delta, rng)?;
            (b0, bd, None)
        }
    };
    if cfg.null_effect {
        beta_delta.fill(0.0);
    }
    Ok(Structure {
        beta0,
        beta_delta,
        subset,
    })
}

/// Same structure with a fresh `βΔ` realization, for an external population.
pub fn redraw_effects<R: Rng + ?Sized>(cfg: &ScenarioConfig, structure: &Structure, rng: &mut R) -> Structure {
    let mut beta_delta = draw_effect_coefficients(structure.beta_delta.len(), cfg.mu_delta, rng);
    if cfg.null_effect {
        beta_delta.fill(0.0);
    }
    Structure {
        beta0: structure.beta0.clone(),
        beta_delta,
        subset: structure.subset.clone(),
    }
}

/// Draws covariates, noise and treatment assignment for a fixed structure.
pub fn generate_with<R: Rng + ?Sized>(
    cfg: &ScenarioConfig,
    structure: &Structure,
    rng: &mut R,
) -> Result<Population> {
    cfg.validate()?;
    let n = cfg.n;
    let (x, base) = match cfg.mode {
        Mode::ExternalInteraction => {
            let x6 = sample_covariates(n, INTERACTION_BASE, 0.0, rng)?;
            (expand_interactions(&x6)?, Some(x6))
        }
        _ => (sample_covariates(n, cfg.p, cfg.rho, rng)?, None),
    };
    let cov = base.as_ref().unwrap_or(&x);
    if structure.beta0.len() != cov.ncols() {
        return Err(Error::DimensionMismatch {
            expected: cov.ncols(),
            got: structure.beta0.len(),
        });
    }
    let f0_true = cov * &structure.beta0;
    let delta_true = match &structure.subset {
        Some(cols) => x.select_columns(cols.iter()) * &structure.beta_delta,
        None => &x * &structure.beta_delta,
    };
    let noise: DVector<f64> = if cfg.noise_sd == 0.0 {
        DVector::zeros(n)
    } else {
        normal_vector(n, 0.0, cfg.noise_sd, rng)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut treated = vec![false; n];
    for &i in &order[..n / 2] {
        treated[i] = true;
    }
    let y_obs = DVector::from_fn(n, |i, _| {
        f0_true[i] + noise[i] + if treated[i] { delta_true[i] } else { 0.0 }
    });
    Ok(Population {
        x,
        base,
        treated,
        y_obs,
        delta_true,
        f0_true,
        beta0: structure.beta0.clone(),
        beta_delta: structure.beta_delta.clone(),
        subset: structure.subset.clone(),
    })
}

pub fn generate_population<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<Population> {
    let structure = draw_structure(cfg, rng)?;
    generate_with(cfg, &structure, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use statrs::distribution::{ContinuousCDF, Normal as SNormal};

    fn rng(seed: u64) -> crate::rng::StreamRng {
        Stream::new(seed).rng()
    }

    #[test]
    fn factor_identity_at_zero_rho() {
        let l = equicorrelation_factor(2, 0.0).unwrap();
        assert_eq!(l, DMatrix::identity(2, 2));
    }

    #[test]
    fn factor_matches_hand_cholesky() {
        let l = equicorrelation_factor(2, 0.95).unwrap();
        let expected = (1.0f64 - 0.95 * 0.95).sqrt();
        assert!((expected - 0.312_249).abs() < 1e-6);
        assert!((l[(0, 0)] - 1.0).abs() < 1e-15);
        assert_eq!(l[(0, 1)], 0.0);
        assert!((l[(1, 0)] - 0.95).abs() < 1e-15);
        assert!((l[(1, 1)] - expected).abs() < 1e-15);
    }

    #[test]
    fn singular_rho_rejected() {
        assert!(matches!(
            sample_covariates(10, 3, 1.0, &mut rng(1)),
            Err(Error::InvalidParameter(_))
        ));
        assert!(sample_covariates(10, 3, -0.1, &mut rng(1)).is_err());
    }

    #[test]
    fn covariance_converges_to_equicorrelation() {
        let n = 100_000;
        let x = sample_covariates(n, 4, 0.5, &mut rng(3)).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let c: f64 = x.column(a).dot(&x.column(b)) / n as f64;
                let target = if a == b { 1.0 } else { 0.5 };
                assert!((c - target).abs() < 0.02, "({a},{b}) = {c}");
            }
        }
    }

    #[test]
    fn effect_coefficients_mean_and_sd() {
        let mut r = rng(11);
        let draws = 100_000;
        let b = draw_effect_coefficients(draws, 0.0, &mut r);
        let mean = b.mean();
        assert!(mean.abs() < 3.0 * 0.01 / (draws as f64).sqrt());

        let b = draw_effect_coefficients(draws, 0.5, &mut r);
        let mean = b.mean();
        let sd = (b.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (draws - 1) as f64).sqrt();
        assert!((0.0099..=0.0101).contains(&sd), "sd {sd}");
    }

    #[test]
    fn coefficients_deterministic() {
        let a = draw_coefficients(45, 0.5, &mut rng(5)).unwrap();
        let b = draw_coefficients(45, 0.5, &mut rng(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn population_invariants() {
        let cfg = ScenarioConfig::new(Mode::Internal, 500, 5, 0.5, 0.5);
        let pop = generate_population(&cfg, &mut rng(2)).unwrap();
        assert_eq!(pop.n_treated(), 250);
        let recomputed = &pop.x * &pop.beta_delta;
        for i in 0..pop.n() {
            let scale = pop.delta_true[i].abs().max(1.0);
            assert!((recomputed[i] - pop.delta_true[i]).abs() / scale <= 1e-12);
        }
    }

    #[test]
    fn odd_n_rejected() {
        let cfg = ScenarioConfig::new(Mode::Internal, 501, 5, 0.0, 0.5);
        assert!(generate_population(&cfg, &mut rng(2)).is_err());
    }

    #[test]
    fn noise_is_standard_normal() {
        let cfg = ScenarioConfig::new(Mode::Internal, 2000, 5, 0.5, 0.25);
        let pop = generate_population(&cfg, &mut rng(9)).unwrap();
        let mut resid: Vec<f64> = (0..pop.n())
            .map(|i| {
                pop.y_obs[i]
                    - pop.f0_true[i]
                    - if pop.treated[i] { pop.delta_true[i] } else { 0.0 }
            })
            .collect();
        resid.sort_by(f64::total_cmp);
        // Kolmogorov-Smirnov against N(0,1); critical value at 0.001 is 1.949/sqrt(n).
        let nd = SNormal::new(0.0, 1.0).unwrap();
        let n = resid.len() as f64;
        let d = resid
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = nd.cdf(v);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.949 / n.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn null_effect_population() {
        let mut cfg = ScenarioConfig::new(Mode::Internal, 100, 5, 0.0, 0.5);
        cfg.null_effect = true;
        let pop = generate_population(&cfg, &mut rng(4)).unwrap();
        assert!(pop.delta_true.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn noiseless_zero_baseline_outcome_is_effect() {
        let mut cfg = ScenarioConfig::new(Mode::Internal, 100, 3, 0.0, 0.5);
        cfg.noise_sd = 0.0;
        let structure = Structure {
            beta0: DVector::zeros(3),
            beta_delta: DVector::from_vec(vec![0.5, -0.2, 0.1]),
            subset: None,
        };
        let pop = generate_with(&cfg, &structure, &mut rng(4)).unwrap();
        for i in 0..pop.n() {
            let expected = if pop.treated[i] { pop.delta_true[i] } else { 0.0 };
            assert_eq!(pop.y_obs[i], expected);
        }
    }

    #[test]
    fn mean_effect_is_centered() {
        // E[Δ] = 0 because X is centered: Monte Carlo over 200 populations.
        let cfg = ScenarioConfig::new(Mode::Internal, 500, 5, 0.0, 0.5);
        let means: Vec<f64> = (0..200)
            .map(|k| generate_population(&cfg, &mut rng(1000 + k)).unwrap().delta_true.mean())
            .collect();
        let m = means.iter().sum::<f64>() / means.len() as f64;
        let sd = (means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt();
        let se = sd / (means.len() as f64).sqrt();
        assert!(m.abs() < 3.0 * se, "mean {m}, se {se}");
    }

    #[test]
    fn expansion_identities() {
        let ones = DMatrix::from_element(3, 6, 1.0);
        let e = expand_interactions(&ones).unwrap();
        assert_eq!(e.ncols(), 63);
        assert!(e.iter().all(|&v| v == 1.0));

        let row = DMatrix::from_row_slice(1, 6, &[2.0, 3.0, 1.0, 1.0, 1.0, 1.0]);
        let e = expand_interactions(&row).unwrap();
        // subset {1,2} is bitmask 0b11
        assert_eq!(e[(0, 0b11 - 1)], 6.0);
        assert_eq!(e[(0, 0)], 2.0);
        assert_eq!(e[(0, 1)], 3.0);

        assert!(expand_interactions(&DMatrix::zeros(2, 5)).is_err());
    }

    #[test]
    fn zero_coordinate_kills_its_subsets() {
        let x = sample_covariates(20, 6, 0.0, &mut rng(8)).unwrap();
        for j in 0..6 {
            let mut xz = x.clone();
            xz.column_mut(j).fill(0.0);
            let e = expand_interactions(&xz).unwrap();
            let mut zeros = 0;
            for mask in 1..=63usize {
                if mask & (1 << j) != 0 {
                    assert!(e.column(mask - 1).iter().all(|&v| v == 0.0));
                    zeros += 1;
                }
            }
            assert_eq!(zeros, 32);
        }
    }

    #[test]
    fn subset_selection() {
        let all = select_interaction_subset(63, &mut rng(1)).unwrap();
        assert_eq!(all, (0..63).collect::<Vec<_>>());
        let a = select_interaction_subset(5, &mut rng(2)).unwrap();
        let b = select_interaction_subset(5, &mut rng(2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(select_interaction_subset(64, &mut rng(2)).is_err());
    }

    #[test]
    fn interaction_population() {
        for &n in &[500, 750, 1000] {
            let cfg = ScenarioConfig::new(Mode::ExternalInteraction, n, 45, 0.0, 0.5);
            let pop = generate_population(&cfg, &mut rng(n as u64)).unwrap();
            assert_eq!(pop.x.ncols(), 63);
            assert_eq!(pop.covariates().ncols(), 6);
            assert_eq!(pop.beta_delta.len(), 45);
            assert_eq!(pop.beta0.len(), 6);
            let w = pop.effect_design();
            assert_eq!(w.ncols(), 45);
            let recomputed = w * &pop.beta_delta;
            for i in 0..n {
                assert!((recomputed[i] - pop.delta_true[i]).abs() <= 1e-12 * pop.delta_true[i].abs().max(1.0));
            }
        }
    }

    #[test]
    fn csv_dump_header_and_rows() {
        let cfg = ScenarioConfig::new(Mode::Internal, 4, 2, 0.0, 0.5);
        let pop = generate_population(&cfg, &mut rng(1)).unwrap();
        let mut buf = Vec::new();
        pop.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "id,T,y_obs,delta_true,x1,x2");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 6);
        assert_eq!(first[2].parse::<f64>().unwrap(), pop.y_obs[0]);
    }
}
