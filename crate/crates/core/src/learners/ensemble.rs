//! Random forest and least-squares gradient boosting built on [`Tree`].

use nalgebra::DMatrix;
use rand::{Rng, RngCore};

use super::tree::{Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    trees: Vec<Tree>,
}

impl Forest {
    pub fn fit<R: RngCore>(x: &DMatrix<f64>, y: &[f64], params: ForestParams, rng: &mut R) -> Forest {
        let (n, p) = x.shape();
        let mtry = params.mtry.unwrap_or(p.div_ceil(3)).clamp(1, p.max(1));
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            mtry: Some(mtry),
        };
        let all: Vec<usize> = (0..n).collect();
        let trees = (0..params.n_trees.max(1))
            .map(|_| {
                let rows: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    all.clone()
                };
                Tree::fit(x, y, &rows, tree_params, Some(&mut *rng as &mut dyn RngCore))
            })
            .collect();
        Forest { trees }
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn predict_row(&self, x: &DMatrix<f64>, i: usize) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict_row(x, i)).sum();
        total / self.trees.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Boosted {
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
}

impl Boosted {
    pub fn fit(x: &DMatrix<f64>, y: &[f64], params: BoostParams) -> Boosted {
        let n = y.len();
        let init = y.iter().sum::<f64>() / n as f64;
        let tree_params = TreeParams {
            max_depth: params.max_depth,
            min_leaf: params.min_leaf,
            mtry: None,
        };
        let mut fitted = vec![init; n];
        let mut resid = vec![0.0; n];
        let mut trees = Vec::with_capacity(params.n_trees);
        for _ in 0..params.n_trees {
            for i in 0..n {
                resid[i] = y[i] - fitted[i];
            }
            let tree = Tree::fit_all(x, &resid, tree_params);
            for (i, f) in fitted.iter_mut().enumerate() {
                *f += params.learning_rate * tree.predict_row(x, i);
            }
            trees.push(tree);
        }
        Boosted {
            init,
            learning_rate: params.learning_rate,
            trees,
        }
    }

    pub fn init(&self) -> f64 {
        self.init
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn predict_row(&self, x: &DMatrix<f64>, i: usize) -> f64 {
        self.trees
            .iter()
            .fold(self.init, |acc, t| acc + self.learning_rate * t.predict_row(x, i))
    }
}
