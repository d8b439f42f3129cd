//! Linear learners on standardized designs.
//!
//! Every path function receives a standardized design `z` (columns centered,
//! `z_jᵀz_j / n = 1` unless the column is constant) and a centered response,
//! and returns one coefficient vector per grid candidate, on the
//! standardized scale.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Largest coefficient change, in response standard deviations, at convergence.
const CD_TOL: f64 = 1e-10;
const CD_MAX_SWEEPS: usize = 100_000;

/// Least squares on a centered (unstandardized) design via QR.
pub fn ols(xc: &DMatrix<f64>, yc: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, p) = xc.shape();
    if n <= p {
        return Err(Error::RankDeficient { rows: n, cols: p });
    }
    let qr = xc.clone().qr();
    let r = qr.r();
    let max_diag = (0..p).map(|j| r[(j, j)].abs()).fold(0.0, f64::max);
    if max_diag == 0.0 || (0..p).any(|j| r[(j, j)].abs() <= 1e-10 * max_diag) {
        return Err(Error::RankDeficient { rows: n, cols: p });
    }
    let qty = qr.q().transpose() * yc;
    r.solve_upper_triangular(&qty)
        .ok_or(Error::RankDeficient { rows: n, cols: p })
}

/// Smallest λ for which the elastic-net solution with mixing `alpha` is all zero.
pub fn lambda_max(z: &DMatrix<f64>, yc: &DVector<f64>, alpha: f64) -> f64 {
    let n = z.nrows() as f64;
    let m = (z.transpose() * yc).amax() / n;
    // Nudged up so rounding in the coordinate updates cannot leave a tiny
    // nonzero coefficient at the first grid point.
    m / alpha.max(1e-3) * (1.0 + 1e-12)
}

/// Log-spaced decreasing grid from `max` to `max * min_ratio`.
pub fn lambda_path(max: f64, count: usize, min_ratio: f64) -> Vec<f64> {
    if count == 1 {
        return vec![max];
    }
    let step = min_ratio.ln() / (count - 1) as f64;
    (0..count).map(|k| max * (step * k as f64).exp()).collect()
}

/// Ridge solutions `(zᵀz/n + λI) b = zᵀy/n` for every λ, sharing one eigendecomposition.
pub fn ridge_path(z: &DMatrix<f64>, yc: &DVector<f64>, lambdas: &[f64]) -> Vec<DVector<f64>> {
    let n = z.nrows() as f64;
    let gram = z.transpose() * z / n;
    let eig = SymmetricEigen::new(gram);
    let proj = eig.eigenvectors.transpose() * (z.transpose() * yc / n);
    let emax = eig.eigenvalues.amax();
    lambdas
        .iter()
        .map(|&lambda| {
            let scaled = DVector::from_fn(proj.len(), |k, _| {
                let d = eig.eigenvalues[k] + lambda;
                if d <= 1e-12 * emax.max(1.0) {
                    0.0
                } else {
                    proj[k] / d
                }
            });
            &eig.eigenvectors * scaled
        })
        .collect()
}

pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Elastic-net path by cyclic coordinate descent with warm starts, minimizing
/// `(1/2n)||y - zb||² + λ(α||b||₁ + (1-α)/2 ||b||²)`.
///
/// Works on the Gram matrix `zᵀz/n`, keeping the gradient `zᵀ(y - zb)/n`
/// current, so a coordinate update costs `O(p)` regardless of `n`.
pub fn elastic_net_path(
    z: &DMatrix<f64>,
    yc: &DVector<f64>,
    alpha: f64,
    lambdas: &[f64],
) -> Vec<DVector<f64>> {
    let (n, p) = z.shape();
    let nf = n as f64;
    let gram = z.transpose() * z / nf;
    let mut grad = z.transpose() * yc / nf;
    let scale = (yc.norm_squared() / nf).sqrt().max(f64::MIN_POSITIVE);
    let mut beta = DVector::<f64>::zeros(p);
    let mut out = Vec::with_capacity(lambdas.len());

    for &lambda in lambdas {
        let l1 = lambda * alpha;
        let l2 = lambda * (1.0 - alpha);
        let mut sweep = |active_only: bool, beta: &mut DVector<f64>| {
            let mut max_change: f64 = 0.0;
            for j in 0..p {
                let var = gram[(j, j)];
                if var == 0.0 || (active_only && beta[j] == 0.0) {
                    continue;
                }
                let old = beta[j];
                let new = soft_threshold(grad[j] + var * old, l1) / (var + l2);
                if new != old {
                    grad.axpy(old - new, &gram.column(j), 1.0);
                    beta[j] = new;
                    max_change = max_change.max((new - old).abs() * var.sqrt());
                }
            }
            max_change / scale
        };
        for _ in 0..CD_MAX_SWEEPS {
            if sweep(false, &mut beta) < CD_TOL {
                break;
            }
            for _ in 0..CD_MAX_SWEEPS {
                if sweep(true, &mut beta) < CD_TOL {
                    break;
                }
            }
        }
        out.push(beta.clone());
    }
    out
}

/// Principal-component regression with 1..=`count` components.
///
/// Components with numerically zero variance are never used; requests past
/// the numerical rank repeat the last full-rank solution.
pub fn pcr_path(z: &DMatrix<f64>, yc: &DVector<f64>, count: usize) -> Vec<DVector<f64>> {
    let p = z.ncols();
    let gram = z.transpose() * z;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let emax = eig.eigenvalues[order[0]].max(0.0);
    let zty = z.transpose() * yc;

    let mut coef = DVector::<f64>::zeros(p);
    let mut out = Vec::with_capacity(count);
    for &k in order.iter().take(count) {
        let e = eig.eigenvalues[k];
        if e > 1e-10 * emax {
            let v = eig.eigenvectors.column(k);
            let gamma = v.dot(&zty) / e;
            coef.axpy(gamma, &v, 1.0);
        }
        out.push(coef.clone());
    }
    while out.len() < count {
        out.push(coef.clone());
    }
    out
}

/// PLS1 by NIPALS with 1..=`count` components.
pub fn pls_path(z: &DMatrix<f64>, yc: &DVector<f64>, count: usize) -> Vec<DVector<f64>> {
    let p = z.ncols();
    let mut xk = z.clone();
    let mut yk = yc.clone();
    let mut weights: Vec<DVector<f64>> = Vec::new();
    let mut loadings: Vec<DVector<f64>> = Vec::new();
    let mut yload: Vec<f64> = Vec::new();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(count);
    let start = (z.transpose() * yc).norm();

    for _ in 0..count {
        let w = xk.transpose() * &yk;
        let wn = w.norm();
        if wn <= 1e-12 * start.max(f64::MIN_POSITIVE) {
            break;
        }
        let w = w / wn;
        let t = &xk * &w;
        let tt = t.norm_squared();
        if tt <= f64::MIN_POSITIVE {
            break;
        }
        let pl = xk.transpose() * &t / tt;
        let q = yk.dot(&t) / tt;
        xk -= &t * pl.transpose();
        yk.axpy(-q, &t, 1.0);
        weights.push(w);
        loadings.push(pl);
        yload.push(q);

        let a = weights.len();
        let wm = DMatrix::from_columns(&weights);
        let pm = DMatrix::from_columns(&loadings);
        let ptw = pm.transpose() * &wm;
        let qv = DVector::from_column_slice(&yload);
        match ptw.lu().solve(&qv) {
            Some(c) => out.push(&wm * c),
            None => {
                weights.truncate(a - 1);
                break;
            }
        }
    }
    let last = out.last().cloned().unwrap_or_else(|| DVector::zeros(p));
    while out.len() < count {
        out.push(last.clone());
    }
    out
}
