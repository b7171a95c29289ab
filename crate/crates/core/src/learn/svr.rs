//! Epsilon-insensitive support vector regression with an RBF kernel, solved
//! by dual coordinate descent. The bias is folded into the kernel as `K + 1`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::forest::permutation;
use crate::learn::linear::check_xy;
use crate::learn::Standardizer;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF width; `None` means `1 / columns`.
    pub gamma: Option<f64>,
    pub tol: f64,
    /// Passes over all coordinates before giving up.
    pub max_iter: usize,
    /// Larger training sets are subsampled to this many rows.
    pub max_rows: usize,
    pub seed: u64,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_iter: 2000,
            max_rows: 3000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SvrModel<T> {
    pub params: SvrParams,
    pub scaler: Standardizer<T>,
    pub gamma: f64,
    /// Median of the training targets; predictions are relative to it.
    pub offset: T,
    pub support: Vec<Vec<T>>,
    pub coef: Vec<T>,
}

fn rbf<T: Scalar>(a: &[T], b: &[T], gamma: f64) -> f64 {
    let d: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x.f64() - y.f64();
            t * t
        })
        .sum();
    (-gamma * d).exp() + 1.0
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn fit_svr<T: Scalar>(x: &Matrix<T>, y: &[T], params: &SvrParams) -> Result<SvrModel<T>> {
    check_xy(x, y)?;
    if !(params.c > 0.0 && params.epsilon >= 0.0 && params.tol > 0.0) {
        return Err(Error::InvalidConfig(
            "SVR needs C > 0, epsilon >= 0, tol > 0".into(),
        ));
    }
    let (x, y) = if x.rows() > params.max_rows {
        let mut idx = permutation(x.rows(), params.seed);
        idx.truncate(params.max_rows);
        idx.sort_unstable();
        (
            x.select_rows(&idx),
            idx.iter().map(|&i| y[i]).collect::<Vec<_>>(),
        )
    } else {
        (x.clone(), y.to_vec())
    };
    let n = x.rows();
    let scaler = Standardizer::fit(&x);
    let z = scaler.transform(&x);
    let rows: Vec<Vec<T>> = (0..n).map(|r| z.row(r).to_vec()).collect();
    let gamma = params.gamma.unwrap_or(1.0 / x.cols().max(1) as f64);

    let yf: Vec<f64> = y.iter().map(|v| v.f64()).collect();
    let offset = median(&yf);
    let yc: Vec<f64> = yf.iter().map(|v| v - offset).collect();

    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(&rows[i], &rows[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }

    let mut beta = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut converged = false;
    let mut epochs = 0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    while epochs < params.max_iter {
        epochs += 1;
        let mut max_violation: f64 = 0.0;
        order.shuffle(&mut rng);
        for &i in &order {
            let qii = k[i * n + i];
            let g = f[i] - yc[i];
            let u = beta[i] - g / qii;
            let shrunk = u.signum() * (u.abs() - params.epsilon / qii).max(0.0);
            let new = shrunk.clamp(-params.c, params.c);
            let delta = new - beta[i];
            if delta != 0.0 {
                max_violation = max_violation.max(delta.abs() * qii);
                beta[i] = new;
                let col = &k[i * n..(i + 1) * n];
                for (fj, kj) in f.iter_mut().zip(col) {
                    *fj += delta * kj;
                }
            }
        }
        if !max_violation.is_finite() {
            return Err(Error::NonFinite("SVR dual became non-finite".into()));
        }
        if max_violation < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: epochs,
            message: format!(
                "SVR dual coordinate descent (C={}, epsilon={})",
                params.c, params.epsilon
            ),
        });
    }

    let mut support = Vec::new();
    let mut coef = Vec::new();
    for (i, b) in beta.iter().enumerate() {
        if *b != 0.0 {
            support.push(rows[i].clone());
            coef.push(T::of(*b));
        }
    }
    Ok(SvrModel {
        params: params.clone(),
        scaler,
        gamma,
        offset: T::of(offset),
        support,
        coef,
    })
}

impl<T: Scalar> SvrModel<T> {
    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        let z = self.scaler.check_transform(x)?;
        Ok((0..z.rows())
            .map(|r| {
                let row = z.row(r);
                let s: f64 = self
                    .support
                    .iter()
                    .zip(&self.coef)
                    .map(|(sv, b)| b.f64() * rbf(sv, row, self.gamma))
                    .sum();
                T::of(s + self.offset.f64())
            })
            .collect())
    }
}
