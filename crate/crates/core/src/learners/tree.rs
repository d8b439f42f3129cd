//! Regression trees: variance-reduction splits searched exhaustively over
//! midpoints of sorted unique values.

use nalgebra::DMatrix;
use rand::RngCore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features examined per split; `None` (or `>= p`) means all, in column order.
    pub mtry: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

struct Builder<'a, 'r> {
    x: &'a DMatrix<f64>,
    y: &'a [f64],
    params: TreeParams,
    rng: Option<&'r mut dyn RngCore>,
    nodes: Vec<Node>,
    scratch: Vec<(f64, f64)>,
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl Tree {
    /// Grows a tree on `rows` of `x` (rows may repeat, as in a bootstrap sample).
    pub fn fit(
        x: &DMatrix<f64>,
        y: &[f64],
        rows: &[usize],
        params: TreeParams,
        rng: Option<&mut dyn RngCore>,
    ) -> Tree {
        assert!(!rows.is_empty(), "tree needs at least one row");
        let mut b = Builder {
            x,
            y,
            params,
            rng,
            nodes: Vec::new(),
            scratch: Vec::with_capacity(rows.len()),
        };
        let mut rows = rows.to_vec();
        b.grow(&mut rows, 0);
        Tree { nodes: b.nodes }
    }

    /// Tree over all rows.
    pub fn fit_all(x: &DMatrix<f64>, y: &[f64], params: TreeParams) -> Tree {
        let rows: Vec<usize> = (0..x.nrows()).collect();
        Tree::fit(x, y, &rows, params, None)
    }

    pub fn predict_row(&self, x: &DMatrix<f64>, i: usize) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if x[(i, feature)] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Vec<f64> {
        (0..x.nrows()).map(|i| self.predict_row(x, i)).collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], k: usize) -> usize {
            match nodes[k] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

impl Builder<'_, '_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let n = rows.len() as f64;
        let (sum, sum_sq) = rows.iter().fold((0.0, 0.0), |(s, q), &i| {
            let v = self.y[i];
            (s + v, q + v * v)
        });
        let mean = sum / n;
        self.nodes.push(Node::Leaf(mean));

        let sst = sum_sq - sum * sum / n;
        if depth >= self.params.max_depth
            || rows.len() < 2 * self.params.min_leaf.max(1)
            || sst <= 1e-12 * sum_sq.max(f64::MIN_POSITIVE)
        {
            return id;
        }
        let Some(best) = self.best_split(rows, sum, sst) else {
            return id;
        };

        let mut lo = 0;
        for k in 0..rows.len() {
            if self.x[(rows[k], best.feature)] <= best.threshold {
                rows.swap(lo, k);
                lo += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(lo);
        let left = self.grow(left_rows, depth + 1);
        let right = self.grow(right_rows, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.ncols();
        match (self.params.mtry, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < p => {
                let mut f = rand::seq::index::sample(rng, p, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..p).collect(),
        }
    }

    fn best_split(&mut self, rows: &[usize], sum: f64, sst: f64) -> Option<Best> {
        let n = rows.len();
        let min_leaf = self.params.min_leaf.max(1);
        let base = sum * sum / n as f64;
        let mut best: Option<Best> = None;

        for feature in self.candidate_features() {
            self.scratch.clear();
            self.scratch
                .extend(rows.iter().map(|&i| (self.x[(i, feature)], self.y[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));

            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.scratch[k].1;
                let nl = k + 1;
                let nr = n - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let (xl, xr) = (self.scratch[k].0, self.scratch[k + 1].0);
                if xl == xr {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - base;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (xl + xr);
                    if threshold >= xr {
                        threshold = xl;
                    }
                    best = Some(Best {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12 * sst)
    }
}
