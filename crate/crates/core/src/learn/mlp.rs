//! One-hidden-layer perceptron with rectified-linear units, trained by Adam
//! on mini-batches of standardized inputs and targets.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::linear::check_xy;
use crate::learn::Standardizer;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch: usize,
    /// L2 penalty on weights.
    pub l2: f64,
    pub seed: u64,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: 100,
            lr: 0.001,
            epochs: 200,
            batch: 200,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MlpModel<T> {
    pub params: MlpParams,
    pub scaler: Standardizer<T>,
    pub y_mean: T,
    pub y_scale: T,
    /// Hidden weights, row-major `hidden x inputs`.
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, w: &mut [f64], g: &[f64], lr: f64) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..w.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * g[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * g[i] * g[i];
            w[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

pub fn fit_mlp<T: Scalar>(x: &Matrix<T>, y: &[T], params: &MlpParams) -> Result<MlpModel<T>> {
    check_xy(x, y)?;
    if params.hidden == 0 || params.batch == 0 || params.lr.is_nan() || params.lr <= 0.0 {
        return Err(Error::InvalidConfig(
            "MLP needs hidden >= 1, batch >= 1, lr > 0".into(),
        ));
    }
    let n = x.rows();
    let p = x.cols();
    let h = params.hidden;
    let scaler = Standardizer::fit(x);
    let z = scaler.transform(x);
    let zf: Vec<f64> = z.as_slice().iter().map(|v| v.f64()).collect();
    let yf: Vec<f64> = y.iter().map(|v| v.f64()).collect();
    let y_mean = yf.iter().sum::<f64>() / n as f64;
    let y_sd = (yf.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / n as f64).sqrt();
    let y_scale = if y_sd > 0.0 { y_sd } else { 1.0 };
    let yt: Vec<f64> = yf.iter().map(|v| (v - y_mean) / y_scale).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let bound1 = (6.0 / (p + h) as f64).sqrt();
    let bound2 = (6.0 / (h + 1) as f64).sqrt();
    let mut w1: Vec<f64> = (0..h * p)
        .map(|_| rng.random_range(-bound1..bound1))
        .collect();
    let mut b1: Vec<f64> = (0..h).map(|_| rng.random_range(-bound1..bound1)).collect();
    let mut w2: Vec<f64> = (0..h).map(|_| rng.random_range(-bound2..bound2)).collect();
    let mut b2 = [0.0f64];

    let (mut o1, mut ob1, mut o2, mut ob2) =
        (Adam::new(h * p), Adam::new(h), Adam::new(h), Adam::new(1));
    let (mut g1, mut gb1, mut g2) = (vec![0.0; h * p], vec![0.0; h], vec![0.0; h]);
    let mut act = vec![0.0; h];
    let mut order: Vec<usize> = (0..n).collect();
    let batch = params.batch.min(n);

    if y_sd > 0.0 {
        for epoch in 0..params.epochs {
            order.shuffle(&mut rng);
            let mut loss = 0.0;
            for chunk in order.chunks(batch) {
                g1.iter_mut().for_each(|v| *v = 0.0);
                gb1.iter_mut().for_each(|v| *v = 0.0);
                g2.iter_mut().for_each(|v| *v = 0.0);
                let mut gb2 = 0.0;
                for &r in chunk {
                    let xr = &zf[r * p..(r + 1) * p];
                    let mut out = b2[0];
                    for k in 0..h {
                        let wk = &w1[k * p..(k + 1) * p];
                        let s = b1[k] + wk.iter().zip(xr).map(|(a, b)| a * b).sum::<f64>();
                        act[k] = s.max(0.0);
                        out += w2[k] * act[k];
                    }
                    let err = out - yt[r];
                    loss += 0.5 * err * err;
                    gb2 += err;
                    for k in 0..h {
                        g2[k] += err * act[k];
                        if act[k] > 0.0 {
                            let d = err * w2[k];
                            gb1[k] += d;
                            for (g, xv) in g1[k * p..(k + 1) * p].iter_mut().zip(xr) {
                                *g += d * xv;
                            }
                        }
                    }
                }
                let m = chunk.len() as f64;
                for (g, w) in g1.iter_mut().zip(&w1) {
                    *g = *g / m + params.l2 * w / m;
                }
                for (g, w) in g2.iter_mut().zip(&w2) {
                    *g = *g / m + params.l2 * w / m;
                }
                gb1.iter_mut().for_each(|g| *g /= m);
                o1.step(&mut w1, &g1, params.lr);
                ob1.step(&mut b1, &gb1, params.lr);
                o2.step(&mut w2, &g2, params.lr);
                ob2.step(&mut b2, &[gb2 / m], params.lr);
            }
            if !loss.is_finite() {
                return Err(Error::NonConvergence {
                    iterations: epoch + 1,
                    message: "MLP training loss is not finite".into(),
                });
            }
        }
    } else {
        w2.iter_mut().for_each(|v| *v = 0.0);
    }

    let cast = |v: &[f64]| v.iter().map(|&a| T::of(a)).collect::<Vec<T>>();
    Ok(MlpModel {
        params: params.clone(),
        scaler,
        y_mean: T::of(y_mean),
        y_scale: T::of(y_scale),
        w1: cast(&w1),
        b1: cast(&b1),
        w2: cast(&w2),
        b2: T::of(b2[0]),
    })
}

impl<T: Scalar> MlpModel<T> {
    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        let z = self.scaler.check_transform(x)?;
        let p = z.cols();
        let h = self.b1.len();
        Ok((0..z.rows())
            .map(|r| {
                let xr = z.row(r);
                let mut out = self.b2.f64();
                for k in 0..h {
                    let s = self.b1[k].f64()
                        + self.w1[k * p..(k + 1) * p]
                            .iter()
                            .zip(xr)
                            .map(|(a, b)| a.f64() * b.f64())
                            .sum::<f64>();
                    out += self.w2[k].f64() * s.max(0.0);
                }
                T::of(out * self.y_scale.f64() + self.y_mean.f64())
            })
            .collect())
    }
}
