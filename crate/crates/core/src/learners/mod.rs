//! Regression learners with cross-validated hyperparameter selection.
//!
//! All learners share one contract: [`fit`] draws a fold assignment from the
//! supplied generator, scores every grid candidate by mean squared
//! cross-validation error, and refits the winner on all rows. Grids are
//! ordered from the most parsimonious candidate (strongest penalty, fewest
//! components, shallowest tree) so that exact ties resolve toward it.

pub mod ensemble;
pub mod linear;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use ensemble::{BoostParams, Boosted, Forest, ForestParams};
use tree::{Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LearnerId {
    Ols,
    Ridge,
    Lasso,
    Enet,
    Pcr,
    Pls,
    Cart,
    Rf,
    Gbm,
}

impl LearnerId {
    pub const ALL: [LearnerId; 9] = [
        LearnerId::Ols,
        LearnerId::Ridge,
        LearnerId::Lasso,
        LearnerId::Enet,
        LearnerId::Pcr,
        LearnerId::Pls,
        LearnerId::Cart,
        LearnerId::Rf,
        LearnerId::Gbm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LearnerId::Ols => "ols",
            LearnerId::Ridge => "ridge",
            LearnerId::Lasso => "lasso",
            LearnerId::Enet => "enet",
            LearnerId::Pcr => "pcr",
            LearnerId::Pls => "pls",
            LearnerId::Cart => "cart",
            LearnerId::Rf => "rf",
            LearnerId::Gbm => "gbm",
        }
    }

    /// Fits are deterministic given the fold assignment.
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, LearnerId::Rf)
    }
}

impl fmt::Display for LearnerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown learner '{s}'")))
    }
}

/// Grid defaults, overridable from the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerSettings {
    pub lambda_count: usize,
    pub lambda_min_ratio: f64,
    pub enet_alpha: f64,
    pub max_components: usize,
    pub cart_depths: Vec<usize>,
    pub min_leaf: usize,
    pub rf_trees: usize,
    pub rf_mtry: Option<usize>,
    pub gbm_trees: usize,
    pub gbm_learning_rate: f64,
    pub gbm_depth: usize,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        LearnerSettings {
            lambda_count: 50,
            lambda_min_ratio: 1e-4,
            enet_alpha: 0.2,
            max_components: 20,
            cart_depths: (2..=8).collect(),
            min_leaf: 5,
            rf_trees: 500,
            rf_mtry: None,
            gbm_trees: 200,
            gbm_learning_rate: 0.05,
            gbm_depth: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// `count` log-spaced values from the data-driven λ_max down to `λ_max * min_ratio`.
    Path { count: usize, min_ratio: f64 },
    /// Explicit values, strongest first.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Ols,
    /// Elastic net with mixing `alpha` (0 = ridge, 1 = lasso).
    Penalized { alpha: f64, lambdas: LambdaGrid },
    Pcr { max_components: usize },
    Pls { max_components: usize },
    Cart { depths: Vec<usize>, min_leaf: usize },
    Forest(ForestParams),
    Boost(BoostParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerSpec {
    pub id: LearnerId,
    pub params: Params,
    pub cv_folds: usize,
}

impl LearnerSpec {
    pub fn new(id: LearnerId, settings: &LearnerSettings, cv_folds: usize) -> Self {
        let path = LambdaGrid::Path {
            count: settings.lambda_count,
            min_ratio: settings.lambda_min_ratio,
        };
        let params = match id {
            LearnerId::Ols => Params::Ols,
            LearnerId::Ridge => Params::Penalized {
                alpha: 0.0,
                lambdas: path,
            },
            LearnerId::Lasso => Params::Penalized {
                alpha: 1.0,
                lambdas: path,
            },
            LearnerId::Enet => Params::Penalized {
                alpha: settings.enet_alpha,
                lambdas: path,
            },
            LearnerId::Pcr => Params::Pcr {
                max_components: settings.max_components,
            },
            LearnerId::Pls => Params::Pls {
                max_components: settings.max_components,
            },
            LearnerId::Cart => Params::Cart {
                depths: settings.cart_depths.clone(),
                min_leaf: settings.min_leaf,
            },
            LearnerId::Rf => Params::Forest(ForestParams {
                n_trees: settings.rf_trees,
                mtry: settings.rf_mtry,
                min_leaf: settings.min_leaf,
                max_depth: usize::MAX,
                bootstrap: true,
            }),
            LearnerId::Gbm => Params::Boost(BoostParams {
                n_trees: settings.gbm_trees,
                learning_rate: settings.gbm_learning_rate,
                max_depth: settings.gbm_depth,
                min_leaf: settings.min_leaf,
            }),
        };
        LearnerSpec {
            id,
            params,
            cv_folds,
        }
    }

    pub fn with_defaults(id: LearnerId) -> Self {
        LearnerSpec::new(id, &LearnerSettings::default(), 10)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cv_folds < 2 {
            return Err(Error::invalid("cv_folds must be at least 2"));
        }
        let ok = match (&self.id, &self.params) {
            (LearnerId::Ols, Params::Ols) => true,
            (LearnerId::Ridge | LearnerId::Lasso | LearnerId::Enet, Params::Penalized { alpha, lambdas }) => {
                (0.0..=1.0).contains(alpha)
                    && match lambdas {
                        LambdaGrid::Path { count, min_ratio } => {
                            *count >= 1 && *min_ratio > 0.0 && *min_ratio <= 1.0
                        }
                        LambdaGrid::Values(v) => !v.is_empty() && v.iter().all(|l| l.is_finite() && *l >= 0.0),
                    }
            }
            (LearnerId::Pcr, Params::Pcr { max_components }) | (LearnerId::Pls, Params::Pls { max_components }) => {
                *max_components >= 1
            }
            (LearnerId::Cart, Params::Cart { depths, .. }) => !depths.is_empty(),
            (LearnerId::Rf, Params::Forest(f)) => f.n_trees >= 1,
            (LearnerId::Gbm, Params::Boost(b)) => b.learning_rate > 0.0 && b.learning_rate.is_finite(),
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid hyperparameter grid for {}", self.id)))
        }
    }
}

/// Per-feature centering and scaling, always estimated on training rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: DVector<f64>,
    pub scale: DVector<f64>,
}

impl Standardizer {
    /// Population (1/n) standard deviation; constant columns get scale 1.
    pub fn fit(x: &DMatrix<f64>) -> Self {
        let n = x.nrows() as f64;
        let p = x.ncols();
        let mean = DVector::from_fn(p, |j, _| x.column(j).sum() / n);
        let scale = DVector::from_fn(p, |j, _| {
            let m = mean[j];
            let var = x.column(j).iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        });
        Standardizer { mean, scale }
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.mean[j]) / self.scale[j])
    }
}

/// Hyperparameters chosen by cross-validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Hyper {
    None,
    Lambda(f64),
    Components(usize),
    Depth(usize),
}

impl fmt::Display for Hyper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hyper::None => f.write_str("-"),
            Hyper::Lambda(l) => write!(f, "lambda={l:e}"),
            Hyper::Components(k) => write!(f, "components={k}"),
            Hyper::Depth(d) => write!(f, "depth={d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Model {
    Linear { intercept: f64, coef: DVector<f64> },
    Tree(Tree),
    Forest(Forest),
    Boosted(Boosted),
}

impl Model {
    fn predict_row(&self, x: &DMatrix<f64>, i: usize) -> f64 {
        match self {
            Model::Linear { intercept, coef } => {
                intercept + x.row(i).iter().zip(coef.iter()).map(|(a, b)| a * b).sum::<f64>()
            }
            Model::Tree(t) => t.predict_row(x, i),
            Model::Forest(f) => f.predict_row(x, i),
            Model::Boosted(b) => b.predict_row(x, i),
        }
    }
}

/// A fitted learner; immutable and safe to share.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedPredictor {
    id: LearnerId,
    n_features: usize,
    standardizer: Standardizer,
    hyper: Hyper,
    cv_error: Option<f64>,
    model: Model,
}

impl FittedPredictor {
    pub fn id(&self) -> LearnerId {
        self.id
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn standardizer(&self) -> &Standardizer {
        &self.standardizer
    }

    pub fn hyper(&self) -> Hyper {
        self.hyper
    }

    /// Mean squared cross-validation error of the chosen candidate, when a
    /// grid was searched.
    pub fn cv_error(&self) -> Option<f64> {
        self.cv_error
    }

    /// Intercept and slopes on the original feature scale, for linear learners.
    pub fn linear_coefficients(&self) -> Option<(f64, &DVector<f64>)> {
        match &self.model {
            Model::Linear { intercept, coef } => Some((*intercept, coef)),
            _ => None,
        }
    }

    pub fn forest(&self) -> Option<&Forest> {
        match &self.model {
            Model::Forest(f) => Some(f),
            _ => None,
        }
    }

    pub fn boosted(&self) -> Option<&Boosted> {
        match &self.model {
            Model::Boosted(b) => Some(b),
            _ => None,
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DVector<f64>> {
        if x.ncols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.ncols(),
            });
        }
        Ok(DVector::from_fn(x.nrows(), |i, _| self.model.predict_row(x, i)))
    }
}

/// Random fold labels: a shuffled row order dealt round-robin into `k` folds.
pub fn assign_folds<R: RngCore>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut folds = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        folds[row] = pos % k;
    }
    folds
}

pub fn fit<R: RngCore>(spec: &LearnerSpec, x: &DMatrix<f64>, y: &DVector<f64>, rng: &mut R) -> Result<FittedPredictor> {
    spec.validate()?;
    check_data(spec, x, y)?;
    let folds = assign_folds(x.nrows(), spec.cv_folds, rng);
    fit_with_folds(spec, x, y, &folds, rng)
}

fn check_data(spec: &LearnerSpec, x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::invalid(format!("{} rows in x but {} responses", n, y.len())));
    }
    if p == 0 {
        return Err(Error::invalid("no features"));
    }
    if n <= spec.cv_folds {
        return Err(Error::invalid(format!(
            "{n} rows is too few for {}-fold cross-validation",
            spec.cv_folds
        )));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite training data"));
    }
    Ok(())
}

/// Fit with an explicit fold assignment (`folds[i]` in `0..cv_folds`).
pub fn fit_with_folds<R: RngCore>(
    spec: &LearnerSpec,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    folds: &[usize],
    rng: &mut R,
) -> Result<FittedPredictor> {
    spec.validate()?;
    check_data(spec, x, y)?;
    let n = x.nrows();
    let k = spec.cv_folds;
    if folds.len() != n || folds.iter().any(|&f| f >= k) {
        return Err(Error::invalid("fold assignment does not match the data"));
    }
    let mut fold_sizes = vec![0usize; k];
    for &f in folds {
        fold_sizes[f] += 1;
    }
    if fold_sizes.contains(&0) {
        return Err(Error::invalid("empty cross-validation fold"));
    }
    let min_train = n - fold_sizes.iter().max().copied().unwrap_or(0);
    let grid = Grid::resolve(&spec.params, x, y, min_train);

    let (best, cv_error) = if grid.len() > 1 {
        let mut sse = vec![0.0; grid.len()];
        for f in 0..k {
            let train: Vec<usize> = (0..n).filter(|&i| folds[i] != f).collect();
            let test: Vec<usize> = (0..n).filter(|&i| folds[i] == f).collect();
            let xt = x.select_rows(train.iter());
            let yt = y.select_rows(train.iter());
            let xv = x.select_rows(test.iter());
            let models = grid.fit_all(&xt, &yt, rng)?;
            for (c, m) in models.iter().enumerate() {
                sse[c] += test
                    .iter()
                    .enumerate()
                    .map(|(r, &i)| (y[i] - m.predict_row(&xv, r)).powi(2))
                    .sum::<f64>();
            }
        }
        let mut best = 0;
        for c in 1..sse.len() {
            if sse[c] < sse[best] {
                best = c;
            }
        }
        (best, Some(sse[best] / n as f64))
    } else {
        (0, None)
    };

    let mut models = grid.fit_all(x, y, rng)?;
    Ok(FittedPredictor {
        id: spec.id,
        n_features: x.ncols(),
        standardizer: Standardizer::fit(x),
        hyper: grid.hyper(best),
        cv_error,
        model: models.swap_remove(best),
    })
}

/// Convenience wrapper matching the free-function shape of [`fit`].
pub fn predict(model: &FittedPredictor, x: &DMatrix<f64>) -> Result<DVector<f64>> {
    model.predict(x)
}

/// Concrete candidate list for one data set.
enum Grid {
    Ols,
    Penalized { alpha: f64, lambdas: Vec<f64> },
    Pcr(usize),
    Pls(usize),
    Cart { depths: Vec<usize>, min_leaf: usize },
    Forest(ForestParams),
    Boost(BoostParams),
}

/// Smallest λ / λ_max on designs with at least as many columns as rows.
const WIDE_MIN_RATIO: f64 = 0.01;

impl Grid {
    fn resolve(params: &Params, x: &DMatrix<f64>, y: &DVector<f64>, min_train: usize) -> Grid {
        match params {
            Params::Ols => Grid::Ols,
            Params::Penalized { alpha, lambdas } => {
                let lambdas = match lambdas {
                    LambdaGrid::Values(v) => v.clone(),
                    LambdaGrid::Path { count, min_ratio } => {
                        let (z, yc, _) = standardize(x, y);
                        // Ridge borrows the lasso's λ_max.
                        let mix = if *alpha == 0.0 { 1.0 } else { *alpha };
                        let lmax = linear::lambda_max(&z, &yc, mix);
                        // Near-interpolating fits converge slowly and carry no
                        // information when the training folds have no more rows
                        // than features, so the path stops earlier there.
                        let ratio = if min_train <= x.ncols() {
                            min_ratio.max(WIDE_MIN_RATIO)
                        } else {
                            *min_ratio
                        };
                        if lmax == 0.0 {
                            vec![0.0]
                        } else {
                            linear::lambda_path(lmax, *count, ratio)
                        }
                    }
                };
                Grid::Penalized { alpha: *alpha, lambdas }
            }
            Params::Pcr { max_components } => {
                Grid::Pcr((*max_components).min(x.ncols()).min(min_train.saturating_sub(1)).max(1))
            }
            Params::Pls { max_components } => {
                Grid::Pls((*max_components).min(x.ncols()).min(min_train.saturating_sub(1)).max(1))
            }
            Params::Cart { depths, min_leaf } => {
                let mut depths = depths.clone();
                depths.sort_unstable();
                depths.dedup();
                Grid::Cart {
                    depths,
                    min_leaf: *min_leaf,
                }
            }
            Params::Forest(f) => Grid::Forest(*f),
            Params::Boost(b) => Grid::Boost(*b),
        }
    }

    fn len(&self) -> usize {
        match self {
            Grid::Ols | Grid::Forest(_) | Grid::Boost(_) => 1,
            Grid::Penalized { lambdas, .. } => lambdas.len(),
            Grid::Pcr(k) | Grid::Pls(k) => *k,
            Grid::Cart { depths, .. } => depths.len(),
        }
    }

    fn hyper(&self, c: usize) -> Hyper {
        match self {
            Grid::Ols | Grid::Forest(_) | Grid::Boost(_) => Hyper::None,
            Grid::Penalized { lambdas, .. } => Hyper::Lambda(lambdas[c]),
            Grid::Pcr(_) | Grid::Pls(_) => Hyper::Components(c + 1),
            Grid::Cart { depths, .. } => Hyper::Depth(depths[c]),
        }
    }

    fn fit_all<R: RngCore>(&self, x: &DMatrix<f64>, y: &DVector<f64>, rng: &mut R) -> Result<Vec<Model>> {
        let to_models = |paths: Vec<DVector<f64>>| -> Vec<Model> {
            let st = Standardizer::fit(x);
            let ymean = y.mean();
            paths
                .into_iter()
                .map(|b| to_original_scale(&st, ymean, &b))
                .collect()
        };
        Ok(match self {
            Grid::Ols => {
                let (z, yc, _) = standardize(x, y);
                to_models(vec![linear::ols(&z, &yc)?])
            }
            Grid::Penalized { alpha, lambdas } => {
                let (z, yc, _) = standardize(x, y);
                if *alpha == 0.0 {
                    to_models(linear::ridge_path(&z, &yc, lambdas))
                } else {
                    to_models(linear::elastic_net_path(&z, &yc, *alpha, lambdas))
                }
            }
            Grid::Pcr(k) => {
                let (z, yc, _) = standardize(x, y);
                to_models(linear::pcr_path(&z, &yc, *k))
            }
            Grid::Pls(k) => {
                let (z, yc, _) = standardize(x, y);
                to_models(linear::pls_path(&z, &yc, *k))
            }
            Grid::Cart { depths, min_leaf } => depths
                .iter()
                .map(|&d| {
                    Model::Tree(Tree::fit_all(
                        x,
                        y.as_slice(),
                        TreeParams {
                            max_depth: d,
                            min_leaf: *min_leaf,
                            mtry: None,
                        },
                    ))
                })
                .collect(),
            Grid::Forest(f) => vec![Model::Forest(Forest::fit(x, y.as_slice(), *f, rng))],
            Grid::Boost(b) => vec![Model::Boosted(Boosted::fit(x, y.as_slice(), *b))],
        })
    }
}

fn standardize(x: &DMatrix<f64>, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>, Standardizer) {
    let st = Standardizer::fit(x);
    let z = st.transform(x);
    let ymean = y.mean();
    (z, y.add_scalar(-ymean), st)
}

fn to_original_scale(st: &Standardizer, ymean: f64, b: &DVector<f64>) -> Model {
    let coef = b.component_div(&st.scale);
    let intercept = ymean - coef.dot(&st.mean);
    Model::Linear { intercept, coef }
}
