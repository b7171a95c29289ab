//! Random forest regression: bootstrap samples, variance-reduction splits on
//! a random subset of columns per node, midpoint thresholds.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::linear::check_xy;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub ntrees: usize,
    /// Minimum number of bootstrap samples in each leaf.
    pub min_leaf: usize,
    /// Columns tried per node; `None` means `max(1, p / 3)`.
    pub mtry: Option<usize>,
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            ntrees: 100,
            min_leaf: 20,
            mtry: None,
            max_depth: None,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn mtry_for(&self, p: usize) -> usize {
        self.mtry.unwrap_or(p / 3).clamp(1, p.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf(T),
    Split {
        feature: u32,
        threshold: T,
        left: u32,
        right: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = T> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf(v) => Some(*v),
            Node::Split { .. } => None,
        })
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => {
                    1 + go(nodes, *left as usize).max(go(nodes, *right as usize))
                }
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ForestModel<T> {
    pub params: ForestParams,
    pub n_features: usize,
    pub trees: Vec<Tree<T>>,
}

impl<T: Scalar> ForestModel<T> {
    pub fn predict_row(&self, row: &[T]) -> T {
        let s: f64 = self.trees.iter().map(|t| t.predict_row(row).f64()).sum();
        T::of(s / self.trees.len() as f64)
    }

    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        if x.cols() != self.n_features {
            return Err(Error::InvalidInput(format!(
                "forest expects {} columns, matrix has {}",
                self.n_features,
                x.cols()
            )));
        }
        Ok((0..x.rows())
            .into_par_iter()
            .map(|r| self.predict_row(x.row(r)))
            .collect())
    }
}

/// Training data shared by all trees: targets plus, per column, the sorted
/// distinct values and each row's rank among them.
struct Prepared<'a, T> {
    x: &'a Matrix<T>,
    y: Vec<f64>,
    uniq: Vec<Vec<T>>,
    ranks: Vec<Vec<u32>>,
}

impl<'a, T: Scalar> Prepared<'a, T> {
    fn new(x: &'a Matrix<T>, y: &[T]) -> Self {
        let n = x.rows();
        let mut uniq = Vec::with_capacity(x.cols());
        let mut ranks = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let col = x.column(j);
            let mut u = col.clone();
            u.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
            u.dedup();
            let r: Vec<u32> = (0..n)
                .map(|i| u.partition_point(|v| *v < col[i]) as u32)
                .collect();
            uniq.push(u);
            ranks.push(r);
        }
        Self {
            x,
            y: y.iter().map(|v| v.f64()).collect(),
            uniq,
            ranks,
        }
    }
}

struct Workspace {
    cnt: Vec<u32>,
    sum: Vec<f64>,
    pairs: Vec<(u32, f64)>,
    features: Vec<usize>,
}

struct BestSplit {
    score: f64,
    feature: usize,
    rank: u32,
    next_rank: u32,
}

struct Grower<'p, 'a, T> {
    data: &'p Prepared<'a, T>,
    params: &'p ForestParams,
    mtry: usize,
    ws: Workspace,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Grower<'_, '_, T> {
    fn leaf(&mut self, idx: &[u32]) -> u32 {
        let s: f64 = idx.iter().map(|&i| self.data.y[i as usize]).sum();
        self.nodes.push(Node::Leaf(T::of(s / idx.len() as f64)));
        (self.nodes.len() - 1) as u32
    }

    /// Best split of `idx` on column `f`, or `None` if the column is constant there.
    fn scan(&mut self, f: usize, idx: &[u32], best: &mut Option<BestSplit>) -> bool {
        let m = idx.len();
        let ranks = &self.data.ranks[f];
        let nuniq = self.data.uniq[f].len();
        let min_leaf = self.params.min_leaf.max(1);
        let total: f64 = idx.iter().map(|&i| self.data.y[i as usize]).sum();
        let consider =
            |n_left: usize, s_left: f64, r: u32, r_next: u32, best: &mut Option<BestSplit>| {
                let n_right = m - n_left;
                if n_left < min_leaf || n_right < min_leaf {
                    return;
                }
                let s_right = total - s_left;
                let score = s_left * s_left / n_left as f64 + s_right * s_right / n_right as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    *best = Some(BestSplit {
                        score,
                        feature: f,
                        rank: r,
                        next_rank: r_next,
                    });
                }
            };

        let log_m = (usize::BITS - m.leading_zeros()) as usize;
        if nuniq <= m * log_m {
            let ws = &mut self.ws;
            if ws.cnt.len() < nuniq {
                ws.cnt.resize(nuniq, 0);
                ws.sum.resize(nuniq, 0.0);
            }
            let (mut lo, mut hi) = (u32::MAX, 0u32);
            for &i in idx {
                let r = ranks[i as usize];
                ws.cnt[r as usize] += 1;
                ws.sum[r as usize] += self.data.y[i as usize];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let varies = lo < hi;
            if varies {
                let (mut n_left, mut s_left) = (0usize, 0.0);
                let mut prev: Option<u32> = None;
                for r in lo..=hi {
                    let c = ws.cnt[r as usize];
                    if c == 0 {
                        continue;
                    }
                    if let Some(p) = prev {
                        consider(n_left, s_left, p, r, best);
                    }
                    n_left += c as usize;
                    s_left += ws.sum[r as usize];
                    prev = Some(r);
                }
            }
            for &i in idx {
                let r = ranks[i as usize] as usize;
                ws.cnt[r] = 0;
                ws.sum[r] = 0.0;
            }
            varies
        } else {
            let pairs = &mut self.ws.pairs;
            pairs.clear();
            pairs.extend(
                idx.iter()
                    .map(|&i| (ranks[i as usize], self.data.y[i as usize])),
            );
            pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            if pairs[0].0 == pairs[m - 1].0 {
                return false;
            }
            let (mut n_left, mut s_left) = (0usize, 0.0);
            for k in 0..m - 1 {
                n_left += 1;
                s_left += pairs[k].1;
                if pairs[k].0 != pairs[k + 1].0 {
                    consider(n_left, s_left, pairs[k].0, pairs[k + 1].0, best);
                }
            }
            true
        }
    }

    fn grow(&mut self, idx: &mut [u32], depth: usize, rng: &mut ChaCha8Rng) -> u32 {
        let m = idx.len();
        let min_leaf = self.params.min_leaf.max(1);
        let at_limit = self.params.max_depth.is_some_and(|d| depth >= d);
        if m < 2 * min_leaf || at_limit {
            return self.leaf(idx);
        }
        let first = self.data.y[idx[0] as usize];
        if idx.iter().all(|&i| self.data.y[i as usize] == first) {
            return self.leaf(idx);
        }

        // Draw columns without replacement until `mtry` non-constant ones were scanned.
        let p = self.data.x.cols();
        let mut features = std::mem::take(&mut self.ws.features);
        features.clear();
        features.extend(0..p);
        let mut best: Option<BestSplit> = None;
        let mut visited = 0;
        for k in 0..p {
            if visited >= self.mtry {
                break;
            }
            let j = rng.random_range(k..p);
            features.swap(k, j);
            if self.scan(features[k], idx, &mut best) {
                visited += 1;
            }
        }
        self.ws.features = features;

        let total: f64 = idx.iter().map(|&i| self.data.y[i as usize]).sum();
        let parent = total * total / m as f64;
        let Some(b) = best.filter(|b| b.score > parent + 1e-12 * parent.abs().max(1e-300)) else {
            return self.leaf(idx);
        };

        let ranks = &self.data.ranks[b.feature];
        let mut split = 0;
        for k in 0..m {
            if ranks[idx[k] as usize] <= b.rank {
                idx.swap(k, split);
                split += 1;
            }
        }
        let u = &self.data.uniq[b.feature];
        let (a, c) = (u[b.rank as usize], u[b.next_rank as usize]);
        let mut threshold = (a + c) / (T::one() + T::one());
        if !(threshold >= a && threshold < c) {
            threshold = a;
        }

        let me = self.nodes.len();
        self.nodes.push(Node::Leaf(T::zero()));
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1, rng);
        let right = self.grow(r, depth + 1, rng);
        self.nodes[me] = Node::Split {
            feature: b.feature as u32,
            threshold,
            left,
            right,
        };
        me as u32
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

fn grow_tree<T: Scalar>(data: &Prepared<'_, T>, params: &ForestParams, tree: usize) -> Tree<T> {
    let n = data.x.rows();
    let mut rng = tree_rng(params.seed, tree);
    let mut idx: Vec<u32> = (0..n).map(|_| rng.random_range(0..n) as u32).collect();
    let mut g = Grower {
        data,
        params,
        mtry: params.mtry_for(data.x.cols()),
        ws: Workspace {
            cnt: Vec::new(),
            sum: Vec::new(),
            pairs: Vec::with_capacity(n),
            features: Vec::new(),
        },
        nodes: Vec::new(),
    };
    g.grow(&mut idx, 0, &mut rng);
    Tree { nodes: g.nodes }
}

pub fn fit_random_forest<T: Scalar>(
    x: &Matrix<T>,
    y: &[T],
    params: &ForestParams,
) -> Result<ForestModel<T>> {
    check_xy(x, y)?;
    if params.ntrees == 0 {
        return Err(Error::InvalidConfig("ntrees must be at least 1".into()));
    }
    if x.cols() == 0 {
        return Err(Error::InvalidInput("matrix has no columns".into()));
    }
    let data = Prepared::new(x, y);
    let trees = (0..params.ntrees)
        .into_par_iter()
        .map(|t| grow_tree(&data, params, t))
        .collect();
    Ok(ForestModel {
        params: params.clone(),
        n_features: x.cols(),
        trees,
    })
}

/// Bootstrap sample indices of tree `tree`, as drawn during fitting.
pub fn bootstrap_indices(n: usize, seed: u64, tree: usize) -> Vec<usize> {
    let mut rng = tree_rng(seed, tree);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Shuffled copy of `0..n`, used by tests and subsampling.
pub(crate) fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    v
}
