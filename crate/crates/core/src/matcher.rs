//! Greedy one-to-one Mahalanobis matching of treated to control subjects.
//!
//! Treated units are visited in data order; each takes the nearest control
//! not yet used, with distance ties going to the lowest control index.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::simgen::Population;

/// Condition number above which the pooled covariance is ridge-regularized.
pub const MAX_CONDITION: f64 = 1e10;
/// Diagonal loading, as a fraction of the mean variance.
pub const RIDGE_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPairs {
    /// `(control, treated)` index pairs.
    pub pairs: Vec<(usize, usize)>,
    pub distances: Vec<f64>,
    pub cov_inv: DMatrix<f64>,
}

impl MatchedPairs {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_distance(&self) -> f64 {
        self.distances.iter().sum()
    }
}

/// `sqrt((x-y)ᵀ M (x-y))` for a symmetric positive definite `M`.
pub fn mahalanobis(x: &DVector<f64>, y: &DVector<f64>, cov_inv: &DMatrix<f64>) -> Result<f64> {
    let p = x.len();
    if y.len() != p || cov_inv.shape() != (p, p) {
        return Err(Error::invalid("mahalanobis: inconsistent dimensions"));
    }
    check_spd(cov_inv)?;
    let d = x - y;
    Ok(d.dot(&(cov_inv * &d)).max(0.0).sqrt())
}

fn check_spd(m: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.amax().max(f64::MIN_POSITIVE);
    if (m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid("inverse covariance is not symmetric"));
    }
    m.clone()
        .cholesky()
        .ok_or_else(|| Error::invalid("inverse covariance is not positive definite"))
}

/// Sample covariance (n - 1 denominator) of the stacked rows, diagonally
/// loaded when its condition number exceeds [`MAX_CONDITION`].
pub fn pooled_covariance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let p = a.ncols();
    if p == 0 {
        return Err(Error::invalid("matching needs at least one covariate"));
    }
    if b.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: b.ncols(),
        });
    }
    let n = a.nrows() + b.nrows();
    if n < 2 {
        return Err(Error::invalid("pooled covariance needs two rows"));
    }
    let mean = DVector::from_fn(p, |j, _| (a.column(j).sum() + b.column(j).sum()) / n as f64);
    let mut cov = DMatrix::<f64>::zeros(p, p);
    for rows in [a, b] {
        for i in 0..rows.nrows() {
            let d = rows.row(i).transpose() - &mean;
            cov.ger(1.0, &d, &d, 1.0);
        }
    }
    cov /= (n - 1) as f64;

    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if min <= 0.0 || max / min > MAX_CONDITION {
        let load = RIDGE_FRACTION * cov.trace() / p as f64;
        let load = if load > 0.0 { load } else { RIDGE_FRACTION };
        for j in 0..p {
            cov[(j, j)] += load;
        }
    }
    Ok(cov)
}

/// Matching with the pooled covariance of the stacked treated and control rows.
pub fn match_nn(x_treated: &DMatrix<f64>, x_control: &DMatrix<f64>) -> Result<MatchedPairs> {
    let cov = pooled_covariance(x_treated, x_control)?;
    let cov_inv = cov
        .cholesky()
        .ok_or_else(|| Error::invalid("pooled covariance not positive definite"))?
        .inverse();
    let cov_inv = (&cov_inv + cov_inv.transpose()) * 0.5;
    match_with_precision(x_treated, x_control, &cov_inv)
}

/// Matching with a given inverse covariance. Indices are local to the inputs.
pub fn match_with_precision(
    x_treated: &DMatrix<f64>,
    x_control: &DMatrix<f64>,
    cov_inv: &DMatrix<f64>,
) -> Result<MatchedPairs> {
    let p = x_treated.ncols();
    if p == 0 {
        return Err(Error::invalid("matching needs at least one covariate"));
    }
    if x_control.ncols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            got: x_control.ncols(),
        });
    }
    if x_treated.nrows() == 0 || x_control.nrows() == 0 {
        return Err(Error::invalid("matching needs treated and control subjects"));
    }
    if cov_inv.shape() != (p, p) {
        return Err(Error::invalid("inverse covariance has the wrong shape"));
    }
    // With M = L Lᵀ, (x-y)ᵀ M (x-y) = |Lᵀx - Lᵀy|².
    let l = check_spd(cov_inv)?.l();
    let ut = x_treated * &l;
    let uc = x_control * &l;

    let m0 = uc.nrows();
    let mut used = vec![false; m0];
    let mut pairs = Vec::with_capacity(x_treated.nrows().min(m0));
    let mut distances = Vec::with_capacity(pairs.capacity());
    for t in 0..ut.nrows() {
        if pairs.len() == m0 {
            break;
        }
        let mut best: Option<(usize, f64)> = None;
        for c in 0..m0 {
            if used[c] {
                continue;
            }
            let d2: f64 = (0..p).map(|j| (ut[(t, j)] - uc[(c, j)]).powi(2)).sum();
            if best.is_none_or(|(_, b)| d2 < b) {
                best = Some((c, d2));
            }
        }
        let (c, d2) = best.expect("an unused control exists");
        used[c] = true;
        pairs.push((c, t));
        distances.push(d2.sqrt());
    }
    Ok(MatchedPairs {
        pairs,
        distances,
        cov_inv: cov_inv.clone(),
    })
}

/// Matches within a population on its base covariates; indices are global.
pub fn match_population(pop: &Population) -> Result<MatchedPairs> {
    let (treated, control): (Vec<usize>, Vec<usize>) = (0..pop.n()).partition(|&i| pop.treated[i]);
    let x = pop.covariates();
    let mut m = match_nn(&x.select_rows(treated.iter()), &x.select_rows(control.iter()))?;
    for pair in &mut m.pairs {
        *pair = (control[pair.0], treated[pair.1]);
    }
    Ok(m)
}

/// Per-pair effect differences.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEffects {
    /// `y[treated] - y[control]`.
    pub observed: DVector<f64>,
    /// Treated-arm prediction at the treated subject minus control-arm
    /// prediction at the control subject.
    pub predicted: DVector<f64>,
    /// True effect of the treated subject.
    pub truth: DVector<f64>,
}

/// `pred_t`, `pred_c`, `y` and `delta_true` are indexed like the population
/// the pairs refer to.
pub fn pairwise_effects(
    pairs: &MatchedPairs,
    y: &DVector<f64>,
    pred_t: &DVector<f64>,
    pred_c: &DVector<f64>,
    delta_true: &DVector<f64>,
) -> Result<PairEffects> {
    let n = y.len();
    if pred_t.len() != n || pred_c.len() != n || delta_true.len() != n {
        return Err(Error::invalid("pairwise_effects: vectors differ in length"));
    }
    if let Some(&(c, t)) = pairs.pairs.iter().find(|&&(c, t)| c >= n || t >= n) {
        return Err(Error::invalid(format!(
            "pair ({c}, {t}) out of range for {n} subjects"
        )));
    }
    let m = pairs.len();
    let at = |f: &dyn Fn(usize, usize) -> f64| DVector::from_fn(m, |k, _| {
        let (c, t) = pairs.pairs[k];
        f(c, t)
    });
    Ok(PairEffects {
        observed: at(&|c, t| y[t] - y[c]),
        predicted: at(&|c, t| pred_t[t] - pred_c[c]),
        truth: at(&|_, t| delta_true[t]),
    })
}

/// CSV dump: `pair_id,i_control,i_treated,distance,O,D_hat,D_true`.
pub fn write_pairs_csv<W: Write>(pairs: &MatchedPairs, effects: &PairEffects, out: W) -> Result<()> {
    use crate::output::fmt_f64;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair_id", "i_control", "i_treated", "distance", "O", "D_hat", "D_true"])?;
    for (k, &(c, t)) in pairs.pairs.iter().enumerate() {
        w.write_record([
            k.to_string(),
            c.to_string(),
            t.to_string(),
            fmt_f64(pairs.distances[k]),
            fmt_f64(effects.observed[k]),
            fmt_f64(effects.predicted[k]),
            fmt_f64(effects.truth[k]),
        ])?;
    }
    w.flush().map_err(|e| Error::io("pairs csv", e))?;
    Ok(())
}
