//! Exhaustive hyperparameter search scored by k-fold cross-validated R².

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{cross_validate_rows, fold_assignment};
use crate::learn::ModelSpec;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub ntrees: Vec<usize>,
    pub c: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub hsize: Vec<usize>,
    pub lr: Vec<f64>,
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            ntrees: vec![50, 100, 200, 300],
            c: vec![0.1, 0.5, 1.0, 5.0, 10.0],
            epsilon: vec![0.01, 0.05, 0.1, 0.5],
            hsize: vec![10, 20, 30, 50, 100, 200],
            lr: vec![0.001, 0.005, 0.01, 0.05, 0.1],
        }
    }
}

/// Grid points for the family of `base`, in grid order. Hyperparameters not
/// covered by the grid keep their values from `base`.
pub fn grid_points(base: &ModelSpec, grid: &HyperGrid) -> Vec<ModelSpec> {
    match base {
        ModelSpec::Lr { .. } => vec![base.clone()],
        ModelSpec::Rf(p) => grid
            .ntrees
            .iter()
            .map(|&ntrees| {
                ModelSpec::Rf(crate::learn::ForestParams {
                    ntrees,
                    ..p.clone()
                })
            })
            .collect(),
        ModelSpec::Svr(p) => grid
            .c
            .iter()
            .flat_map(|&c| {
                grid.epsilon.iter().map(move |&epsilon| {
                    ModelSpec::Svr(crate::learn::SvrParams {
                        c,
                        epsilon,
                        ..p.clone()
                    })
                })
            })
            .collect(),
        ModelSpec::Mlp(p) => grid
            .hsize
            .iter()
            .flat_map(|&hidden| {
                grid.lr.iter().map(move |&lr| {
                    ModelSpec::Mlp(crate::learn::MlpParams {
                        hidden,
                        lr,
                        ..p.clone()
                    })
                })
            })
            .collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best: ModelSpec,
    pub best_score: f64,
    /// Mean CV R² of every point, in grid order.
    pub scores: Vec<(ModelSpec, f64)>,
}

/// Scores each point by mean test R² over `k` folds and returns the best.
/// Ties go to the earlier point.
pub fn grid_search_points<T: Scalar>(
    points: &[ModelSpec],
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    seed: u64,
) -> Result<GridResult> {
    if points.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    let ids: Vec<String> = (0..x.rows()).map(|i| i.to_string()).collect();
    let folds = fold_assignment(&ids, k, seed)?;
    let mut scores: Vec<(ModelSpec, f64)> = Vec::with_capacity(points.len());
    let mut best = 0;
    for (i, spec) in points.iter().enumerate() {
        let per_fold = cross_validate_rows(spec, x, y, &folds, k)?;
        let score = per_fold.iter().map(|f| f.test_r2).sum::<f64>() / k as f64;
        if i > 0 && score > scores[best].1 {
            best = i;
        }
        scores.push((spec.clone(), score));
    }
    Ok(GridResult {
        best: scores[best].0.clone(),
        best_score: scores[best].1,
        scores,
    })
}

pub fn grid_search<T: Scalar>(
    base: &ModelSpec,
    grid: &HyperGrid,
    x: &Matrix<T>,
    y: &[T],
    k: usize,
    seed: u64,
) -> Result<GridResult> {
    grid_search_points(&grid_points(base, grid), x, y, k, seed)
}
