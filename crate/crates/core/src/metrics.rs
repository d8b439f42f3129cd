//! Scoring of effect estimates against the truth, and the decomposition
//! identities linking PITE error to the two arm models' errors.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

fn check_pair(est: &[f64], truth: &[f64]) -> Result<()> {
    if est.len() != truth.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} estimates, {} truths",
            est.len(),
            truth.len()
        )));
    }
    if est.is_empty() {
        return Err(Error::invalid("empty input"));
    }
    Ok(())
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn rmse(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth)?;
    if est.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite input"));
    }
    let sse: f64 = est.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum();
    Ok((sse / est.len() as f64).sqrt())
}

pub fn mae(est: &[f64], truth: &[f64]) -> Result<f64> {
    check_pair(est, truth)?;
    Ok(est.iter().zip(truth).map(|(e, t)| (e - t).abs()).sum::<f64>() / est.len() as f64)
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Fraction of subjects whose estimated and true effects share a
/// three-valued sign, with the per-subject indicators.
pub fn direction(est: &[f64], truth: &[f64]) -> Result<(f64, Vec<u8>)> {
    check_pair(est, truth)?;
    let flags: Vec<u8> = est
        .iter()
        .zip(truth)
        .map(|(&e, &t)| (sign(e) == sign(t)) as u8)
        .collect();
    let dir = flags.iter().map(|&f| f as f64).sum::<f64>() / flags.len() as f64;
    Ok((dir, flags))
}

/// `1 - SSE / SST` with the truth centered on its own mean; `None` when the
/// truth is constant.
pub fn r2(est: &[f64], truth: &[f64]) -> Result<Option<f64>> {
    check_pair(est, truth)?;
    let m = mean(truth);
    let sst: f64 = truth.iter().map(|t| (t - m).powi(2)).sum();
    if sst <= 0.0 {
        return Ok(None);
    }
    let sse: f64 = est.iter().zip(truth).map(|(e, t)| (t - e).powi(2)).sum();
    Ok(Some(1.0 - sse / sst))
}

/// Least-squares fit `truth = alpha + beta * est + noise`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub alpha: f64,
    pub beta: f64,
    pub se_alpha: f64,
    pub se_beta: f64,
    pub df: usize,
}

impl Calibration {
    /// Whether the two-sided `level` confidence intervals contain 0 (intercept)
    /// and 1 (slope).
    pub fn coverage(&self, level: f64) -> (bool, bool) {
        let t = StudentsT::new(0.0, 1.0, self.df as f64)
            .map(|d| d.inverse_cdf(0.5 + level / 2.0))
            .unwrap_or(f64::INFINITY);
        (
            self.alpha.abs() <= t * self.se_alpha,
            (self.beta - 1.0).abs() <= t * self.se_beta,
        )
    }
}

/// `None` when the estimates are constant or there are fewer than three points.
pub fn calibration(est: &[f64], truth: &[f64]) -> Result<Option<Calibration>> {
    check_pair(est, truth)?;
    let m = est.len();
    if m < 3 {
        return Ok(None);
    }
    let me = mean(est);
    let mt = mean(truth);
    let sxx: f64 = est.iter().map(|e| (e - me).powi(2)).sum();
    if sxx <= 0.0 {
        return Ok(None);
    }
    let sxy: f64 = est.iter().zip(truth).map(|(e, t)| (e - me) * (t - mt)).sum();
    let beta = sxy / sxx;
    let alpha = mt - beta * me;
    let sse: f64 = est
        .iter()
        .zip(truth)
        .map(|(e, t)| (t - alpha - beta * e).powi(2))
        .sum();
    let df = m - 2;
    let s2 = sse / df as f64;
    let se_beta = (s2 / sxx).sqrt();
    let se_alpha = (s2 * (1.0 / m as f64 + me * me / sxx)).sqrt();
    Ok(Some(Calibration {
        alpha,
        beta,
        se_alpha,
        se_beta,
        df,
    }))
}

/// All scores for one estimate vector.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub rmse: f64,
    pub mae: f64,
    pub r2: Option<f64>,
    pub dir: f64,
    pub calibration: Option<Calibration>,
    pub dir_flags: Vec<u8>,
}

impl MetricReport {
    pub fn compute(est: &[f64], truth: &[f64]) -> Result<Self> {
        let (dir, dir_flags) = direction(est, truth)?;
        Ok(MetricReport {
            rmse: rmse(est, truth)?,
            mae: mae(est, truth)?,
            r2: r2(est, truth)?,
            dir,
            calibration: calibration(est, truth)?,
            dir_flags,
        })
    }

    pub fn alpha(&self) -> Option<f64> {
        self.calibration.map(|c| c.alpha)
    }

    pub fn beta(&self) -> Option<f64> {
        self.calibration.map(|c| c.beta)
    }
}

/// Monte Carlo terms of `MSE_PITE = MSE_t + MSE_c - 2·bias_t·bias_c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionReport {
    pub replications: usize,
    pub mse_pite: f64,
    /// Standard error of `mse_pite` across replications.
    pub se_mse_pite: f64,
    pub mse_t: f64,
    pub mse_c: f64,
    pub bias_t: f64,
    pub bias_c: f64,
    /// Subject average of `bias_t(x) · bias_c(x)`; equals `bias_t · bias_c`
    /// for a single subject.
    pub bias_product: f64,
    pub rhs: f64,
    pub gap: f64,
}

/// Prediction ensembles are `R × m` (replication by subject); `truth_t` and
/// `truth_c` hold the arm means at each subject.
pub fn prop1_decompose(
    f_t_hat: &[Vec<f64>],
    f_c_hat: &[Vec<f64>],
    truth_t: &[f64],
    truth_c: &[f64],
) -> Result<DecompositionReport> {
    let r = f_t_hat.len();
    if r < 2 || f_c_hat.len() != r {
        return Err(Error::invalid("need at least 2 matching replications"));
    }
    let m = truth_t.len();
    if m == 0 || truth_c.len() != m || f_t_hat.iter().chain(f_c_hat).any(|row| row.len() != m) {
        return Err(Error::invalid("ensemble rows must match the subject count"));
    }
    let rf = r as f64;
    let mut bias_t = vec![0.0; m];
    let mut bias_c = vec![0.0; m];
    let (mut sq_t, mut sq_c) = (0.0, 0.0);
    let mut per_rep = Vec::with_capacity(r);
    for (ft, fc) in f_t_hat.iter().zip(f_c_hat) {
        let mut rep = 0.0;
        for i in 0..m {
            let et = ft[i] - truth_t[i];
            let ec = fc[i] - truth_c[i];
            bias_t[i] += et / rf;
            bias_c[i] += ec / rf;
            sq_t += et * et;
            sq_c += ec * ec;
            rep += (et - ec).powi(2);
        }
        per_rep.push(rep / m as f64);
    }
    let cells = rf * m as f64;
    let mse_pite = mean(&per_rep);
    let var = per_rep.iter().map(|v| (v - mse_pite).powi(2)).sum::<f64>() / (rf - 1.0);
    let mse_t = sq_t / cells;
    let mse_c = sq_c / cells;
    let bias_product = bias_t.iter().zip(&bias_c).map(|(a, b)| a * b).sum::<f64>() / m as f64;
    let rhs = mse_t + mse_c - 2.0 * bias_product;
    Ok(DecompositionReport {
        replications: r,
        mse_pite,
        se_mse_pite: (var / rf).sqrt(),
        mse_t,
        mse_c,
        bias_t: mean(&bias_t),
        bias_c: mean(&bias_c),
        bias_product,
        rhs,
        gap: mse_pite - rhs,
    })
}

/// Arm-level errors `e = f - f̂` and centered truths `ε = f - mean(f)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmErrors {
    pub e1: Vec<f64>,
    pub e0: Vec<f64>,
    pub eps1: Vec<f64>,
    pub eps0: Vec<f64>,
}

impl ArmErrors {
    pub fn from_predictions(f1: &[f64], f0: &[f64], f1_hat: &[f64], f0_hat: &[f64]) -> Result<Self> {
        check_pair(f1_hat, f1)?;
        check_pair(f0_hat, f0)?;
        check_pair(f1, f0)?;
        let center = |v: &[f64]| {
            let m = mean(v);
            v.iter().map(|x| x - m).collect::<Vec<_>>()
        };
        Ok(ArmErrors {
            e1: f1.iter().zip(f1_hat).map(|(a, b)| a - b).collect(),
            e0: f0.iter().zip(f0_hat).map(|(a, b)| a - b).collect(),
            eps1: center(f1),
            eps0: center(f0),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct R2Decomposition {
    pub mse_1: f64,
    pub mse_0: f64,
    pub cov_e: f64,
    pub var_1: f64,
    pub var_0: f64,
    pub cov_eps: f64,
    pub r2: Option<f64>,
}

/// `R² = 1 - (MSE₁ + MSE₀ - 2·Cov(e₁,e₀)) / (VAR₁ + VAR₀ - 2·Cov(ε₁,ε₀))`,
/// all moments uncentered averages over subjects.
pub fn r2_decompose(e1: &[f64], e0: &[f64], eps1: &[f64], eps0: &[f64]) -> Result<R2Decomposition> {
    check_pair(e1, e0)?;
    check_pair(eps1, eps0)?;
    check_pair(e1, eps1)?;
    let n = e1.len() as f64;
    let avg = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / n;
    let mse_1 = avg(e1, e1);
    let mse_0 = avg(e0, e0);
    let cov_e = avg(e1, e0);
    let var_1 = avg(eps1, eps1);
    let var_0 = avg(eps0, eps0);
    let cov_eps = avg(eps1, eps0);
    let den = var_1 + var_0 - 2.0 * cov_eps;
    let r2 = (den > 0.0).then(|| 1.0 - (mse_1 + mse_0 - 2.0 * cov_e) / den);
    Ok(R2Decomposition {
        mse_1,
        mse_0,
        cov_e,
        var_1,
        var_0,
        cov_eps,
        r2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaeBounds {
    pub lower: f64,
    pub upper: f64,
    pub mae_pite: f64,
}

impl MaeBounds {
    pub fn holds(&self, tol: f64) -> bool {
        self.lower <= self.mae_pite + tol && self.mae_pite <= self.upper + tol
    }
}

/// `|MAE₁ - MAE₀| ≤ MAE_PITE ≤ MAE₁ + MAE₀` with `MAE_PITE = mean|e₁ - e₀|`.
pub fn mae_bounds(e1: &[f64], e0: &[f64]) -> Result<MaeBounds> {
    check_pair(e1, e0)?;
    let n = e1.len() as f64;
    let mae1 = e1.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mae0 = e0.iter().map(|v| v.abs()).sum::<f64>() / n;
    let mae_pite = e1.iter().zip(e0).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    Ok(MaeBounds {
        lower: (mae1 - mae0).abs(),
        upper: mae1 + mae0,
        mae_pite,
    })
}

pub const COMPLEXITY_CLASSES: [&str; 12] = [
    "0%", "(0-10]", "(10-20]", "(20-30]", "(30-40]", "(40-50]", "(50-60]", "(60-70]", "(70-80]", "(80-90]",
    "(90-100)", "100%",
];

/// Bin of `correct / k`: 0 and 1 are their own classes, the rest are
/// right-closed deciles with the top one open at 1.
pub fn complexity_class(correct: usize, k: usize) -> usize {
    if correct == 0 {
        0
    } else if correct == k {
        11
    } else {
        (10 * correct).div_ceil(k)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityTable {
    /// Consensus fraction `C_i` per patient.
    pub consensus: Vec<f64>,
    pub class_of: Vec<usize>,
    pub counts: [usize; 12],
    /// Per learner, percentage of the class's patients the learner got right;
    /// `None` for empty classes.
    pub accuracy: Vec<[Option<f64>; 12]>,
}

/// `flags[k][i]` is learner `k`'s direction indicator for patient `i`.
pub fn complexity_table(flags: &[Vec<u8>]) -> Result<ComplexityTable> {
    let k = flags.len();
    if k == 0 || flags[0].is_empty() {
        return Err(Error::invalid("complexity table needs at least one learner and one patient"));
    }
    let m = flags[0].len();
    if flags.iter().any(|row| row.len() != m) {
        return Err(Error::invalid("learners disagree on patient count"));
    }
    let correct: Vec<usize> = (0..m)
        .map(|i| flags.iter().filter(|row| row[i] != 0).count())
        .collect();
    let class_of: Vec<usize> = correct.iter().map(|&c| complexity_class(c, k)).collect();
    let mut counts = [0usize; 12];
    for &c in &class_of {
        counts[c] += 1;
    }
    let accuracy = flags
        .iter()
        .map(|row| {
            let mut hits = [0usize; 12];
            for i in 0..m {
                if row[i] != 0 {
                    hits[class_of[i]] += 1;
                }
            }
            std::array::from_fn(|c| (counts[c] > 0).then(|| 100.0 * hits[c] as f64 / counts[c] as f64))
        })
        .collect();
    Ok(ComplexityTable {
        consensus: correct.iter().map(|&c| c as f64 / k as f64).collect(),
        class_of,
        counts,
        accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal, StandardNormal};

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((rmse(&[1.0, 2.0], &[0.0, 0.0]).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((2.5f64.sqrt() - 1.58114).abs() < 1e-5);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
    }

    #[test]
    fn direction_examples() {
        assert_eq!(direction(&[0.5, -0.2, 1.0], &[1.0, -1.0, 3.0]).unwrap().0, 1.0);
        let (d, flags) = direction(&[1.0, 1.0, -1.0, 1.0], &[1.0, -1.0, -1.0, 1.0]).unwrap();
        assert_eq!(d, 0.75);
        assert_eq!(flags, vec![1, 0, 1, 1]);
        assert_eq!(direction(&[0.0], &[0.0]).unwrap().0, 1.0);
        assert_eq!(direction(&[0.0], &[1.0]).unwrap().0, 0.0);
    }

    #[test]
    fn mae_and_r2_examples() {
        let t = [0.3, -1.0, 2.0];
        assert_eq!(mae(&t, &t).unwrap(), 0.0);
        assert_eq!(r2(&t, &t).unwrap(), Some(1.0));
        let m = t.iter().sum::<f64>() / 3.0;
        assert!(r2(&[m; 3], &t).unwrap().unwrap().abs() < 1e-15);
        assert_eq!(mae(&[1.0, 2.0], &[0.0, 0.0]).unwrap(), 1.5);
        assert_eq!(r2(&[1.0, 2.0], &[3.0, 3.0]).unwrap(), None);
    }

    #[test]
    fn calibration_examples() {
        let est = [0.1, -0.4, 1.3, 2.2, -0.7];
        let c = calibration(&est, &est).unwrap().unwrap();
        assert!(c.alpha.abs() < 1e-12 && (c.beta - 1.0).abs() < 1e-12);
        let truth: Vec<f64> = est.iter().map(|e| 2.0 * e + 3.0).collect();
        let c = calibration(&est, &truth).unwrap().unwrap();
        assert!((c.alpha - 3.0).abs() < 1e-12 && (c.beta - 2.0).abs() < 1e-12);
        assert_eq!(calibration(&[1.0; 4], &[0.0, 1.0, 2.0, 3.0]).unwrap(), None);
    }

    #[test]
    fn noisy_calibration_slope() {
        let mut rng = Stream::new(3).rng();
        let noise = Normal::new(0.0, 0.1).unwrap();
        let est: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let truth: Vec<f64> = est.iter().map(|e| e + noise.sample(&mut rng)).collect();
        let c = calibration(&est, &truth).unwrap().unwrap();
        assert!((c.beta - 1.0).abs() < 0.02);
        let (a_cov, b_cov) = c.coverage(0.95);
        assert!(a_cov && b_cov);
    }

    #[test]
    fn prop1_constant_predictors() {
        let (bt, bc) = (0.7, -0.3);
        let ft = vec![vec![1.0 + bt]; 5];
        let fc = vec![vec![2.0 + bc]; 5];
        let r = prop1_decompose(&ft, &fc, &[1.0], &[2.0]).unwrap();
        assert!(r.gap.abs() < 1e-15);
        let expected = bt * bt + bc * bc - 2.0 * bt * bc;
        assert!((r.mse_pite - expected).abs() < 1e-14);
        assert_eq!(r.se_mse_pite, 0.0);
    }

    #[test]
    fn prop1_opposite_biases_amplify() {
        let ft = vec![vec![1.0]; 3];
        let fc = vec![vec![-1.0]; 3];
        let r = prop1_decompose(&ft, &fc, &[0.0], &[0.0]).unwrap();
        assert!((r.mse_pite - 4.0).abs() < 1e-15);
        assert!((r.rhs - 4.0).abs() < 1e-15);
    }

    #[test]
    fn prop1_independent_noise_adds_variances() {
        let mut rng = Stream::new(5).rng();
        let (st, sc) = (0.8, 0.5);
        let reps = 10_000;
        let ft: Vec<Vec<f64>> = (0..reps).map(|_| vec![st * Distribution::<f64>::sample(&StandardNormal, &mut rng)]).collect();
        let fc: Vec<Vec<f64>> = (0..reps).map(|_| vec![sc * Distribution::<f64>::sample(&StandardNormal, &mut rng)]).collect();
        let r = prop1_decompose(&ft, &fc, &[0.0], &[0.0]).unwrap();
        let theory = st * st + sc * sc;
        assert!((r.mse_pite - theory).abs() < 3.0 * r.se_mse_pite);
    }

    #[test]
    fn prop1_needs_two_replications() {
        assert!(prop1_decompose(&[vec![1.0]], &[vec![1.0]], &[0.0], &[0.0]).is_err());
    }

    #[test]
    fn r2_decomposition_cases() {
        let e = [0.1, -0.3, 0.2, 0.05];
        let eps1 = [1.0, -0.5, 0.2, -0.7];
        let eps0 = [0.1, 0.1, -0.3, 0.1];
        let d = r2_decompose(&e, &e, &eps1, &eps0).unwrap();
        assert_eq!(d.r2, Some(1.0));

        let zero = [0.0; 4];
        let d = r2_decompose(&e, &zero, &eps1, &zero).unwrap();
        let single = 1.0 - d.mse_1 / d.var_1;
        assert!((d.r2.unwrap() - single).abs() < 1e-15);

        assert_eq!(r2_decompose(&e, &e, &zero, &zero).unwrap().r2, None);
    }

    #[test]
    fn r2_reconstruction_matches_direct() {
        let mut rng = Stream::new(6).rng();
        let mut draw = |k: usize| -> Vec<f64> { (0..k).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let (f1, f0, h1, h0) = (draw(100), draw(100), draw(100), draw(100));
        let errs = ArmErrors::from_predictions(&f1, &f0, &h1, &h0).unwrap();
        let d = r2_decompose(&errs.e1, &errs.e0, &errs.eps1, &errs.eps0).unwrap();
        let truth: Vec<f64> = f1.iter().zip(&f0).map(|(a, b)| a - b).collect();
        let est: Vec<f64> = h1.iter().zip(&h0).map(|(a, b)| a - b).collect();
        let direct = r2(&est, &truth).unwrap().unwrap();
        assert!((d.r2.unwrap() - direct).abs() < 1e-10);
    }

    #[test]
    fn mae_bounds_tight_cases() {
        let e1 = [2.0, -3.0, 1.0];
        let e0 = [1.0, -1.0, 0.5];
        let b = mae_bounds(&e1, &e0).unwrap();
        assert!((b.mae_pite - b.lower).abs() < 1e-15);
        let neg: Vec<f64> = e1.iter().map(|v| -v).collect();
        let b = mae_bounds(&e1, &neg).unwrap();
        assert!((b.mae_pite - b.upper).abs() < 1e-15);
    }

    #[test]
    fn complexity_bins() {
        assert_eq!(complexity_class(0, 11), 0);
        assert_eq!(complexity_class(11, 11), 11);
        assert_eq!(complexity_class(1, 10), 1);
        assert_eq!(complexity_class(2, 20), 1);
        assert_eq!(complexity_class(3, 20), 2);
        assert_eq!(complexity_class(19, 20), 10);
        assert_eq!(COMPLEXITY_CLASSES[complexity_class(19, 20)], "(90-100)");
        assert_eq!(complexity_class(9, 10), 9);
    }

    #[test]
    fn complexity_unanimous_and_none() {
        let flags = vec![vec![1, 0, 1], vec![1, 0, 0], vec![1, 0, 1]];
        let t = complexity_table(&flags).unwrap();
        assert_eq!(t.class_of, vec![11, 0, 7]);
        assert_eq!(t.counts[11], 1);
        for acc in &t.accuracy {
            assert_eq!(acc[11], Some(100.0));
            assert_eq!(acc[0], Some(0.0));
            assert_eq!(acc[5], None);
        }
        assert_eq!(t.accuracy[1][7], Some(0.0));
        assert_eq!(t.accuracy[0][7], Some(100.0));
        assert!(complexity_table(&[]).is_err());
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(v in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..50)) {
            let (est, truth): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(mae(&est, &truth).unwrap() <= rmse(&est, &truth).unwrap() * (1.0 + 1e-12) + 1e-12);
        }

        #[test]
        fn direction_is_scale_invariant(v in prop::collection::vec((-10f64..10.0, -10f64..10.0), 1..50), c in 1e-3f64..1e3) {
            let (est, truth): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let scaled: Vec<f64> = est.iter().map(|e| c * e).collect();
            prop_assert_eq!(direction(&est, &truth).unwrap(), direction(&scaled, &truth).unwrap());
        }

        #[test]
        fn rmse_translation_invariant(v in prop::collection::vec((-10f64..10.0, -10f64..10.0), 1..50), c in -100f64..100.0) {
            let (est, truth): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let a = rmse(&est, &truth).unwrap();
            let est2: Vec<f64> = est.iter().map(|e| e + c).collect();
            let truth2: Vec<f64> = truth.iter().map(|t| t + c).collect();
            prop_assert!((a - rmse(&est2, &truth2).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn mae_bounds_hold(v in prop::collection::vec((-10f64..10.0, -10f64..10.0), 1..100)) {
            let (e1, e0): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(mae_bounds(&e1, &e0).unwrap().holds(1e-12));
        }

        #[test]
        fn direction_mean_of_flags(v in prop::collection::vec((-1f64..1.0, -1f64..1.0), 1..60)) {
            let (est, truth): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let (d, flags) = direction(&est, &truth).unwrap();
            let m = flags.iter().map(|&f| f as f64).sum::<f64>() / flags.len() as f64;
            prop_assert_eq!(d, m);
        }
    }
}
