//! Regression models behind one interface, model files, and grid search.

pub mod forest;
pub mod grid;
pub mod linear;
pub mod mlp;
pub mod svr;

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

pub use forest::{fit_random_forest, ForestModel, ForestParams};
pub use grid::{grid_points, grid_search, GridResult, HyperGrid};
pub use linear::{fit_ols, LinearModel, DEFAULT_RIDGE};
pub use mlp::{fit_mlp, MlpModel, MlpParams};
pub use svr::{fit_svr, SvrModel, SvrParams};

/// Uniform fit/predict interface.
pub trait Regressor<T: Scalar>: Send + Sync {
    fn fit(&mut self, x: &Matrix<T>, y: &[T]) -> Result<()>;
    fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>>;
    fn descriptor(&self) -> String;
}

/// Per-column centering and scaling. Constant columns keep scale 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardizer<T> {
    pub mean: Vec<T>,
    pub scale: Vec<T>,
}

impl<T: Scalar> Standardizer<T> {
    pub fn fit(x: &Matrix<T>) -> Self {
        let n = x.rows().max(1) as f64;
        let mut mean = Vec::with_capacity(x.cols());
        let mut scale = Vec::with_capacity(x.cols());
        for j in 0..x.cols() {
            let col: Vec<f64> = x.column(j).iter().map(|v| v.f64()).collect();
            let m = col.iter().sum::<f64>() / n;
            let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt();
            mean.push(T::of(m));
            scale.push(T::of(if sd > 1e-12 * (1.0 + m.abs()) {
                sd
            } else {
                1.0
            }));
        }
        Self { mean, scale }
    }

    pub fn transform(&self, x: &Matrix<T>) -> Matrix<T> {
        let mut out = x.clone();
        for r in 0..x.rows() {
            for j in 0..x.cols() {
                out.set(r, j, (x.get(r, j) - self.mean[j]) / self.scale[j]);
            }
        }
        out
    }

    pub fn check_transform(&self, x: &Matrix<T>) -> Result<Matrix<T>> {
        if x.cols() != self.mean.len() {
            return Err(Error::InvalidInput(format!(
                "model expects {} columns, matrix has {}",
                self.mean.len(),
                x.cols()
            )));
        }
        Ok(self.transform(x))
    }
}

/// Model family and hyperparameters; enough to refit from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Lr { ridge: f64 },
    Rf(ForestParams),
    Svr(SvrParams),
    Mlp(MlpParams),
}

impl ModelSpec {
    pub fn linear() -> Self {
        Self::Lr {
            ridge: DEFAULT_RIDGE,
        }
    }

    pub fn forest(ntrees: usize, seed: u64) -> Self {
        Self::Rf(ForestParams {
            ntrees,
            seed,
            ..Default::default()
        })
    }

    /// Defaults for a family name: `lr`, `rf`, `svr` or `mlp`.
    pub fn from_name(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "lr" | "linear" => Ok(Self::linear()),
            "rf" | "forest" => Ok(Self::Rf(ForestParams::default())),
            "svr" => Ok(Self::Svr(SvrParams::default())),
            "mlp" | "nn" => Ok(Self::Mlp(MlpParams::default())),
            other => Err(Error::InvalidConfig(format!("unknown model `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Lr { .. } => "lr",
            Self::Rf(_) => "rf",
            Self::Svr(_) => "svr",
            Self::Mlp(_) => "mlp",
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Self::Lr { .. } => {}
            Self::Rf(p) => p.seed = seed,
            Self::Svr(p) => p.seed = seed,
            Self::Mlp(p) => p.seed = seed,
        }
        self
    }

    pub fn fit<T: Scalar>(&self, x: &Matrix<T>, y: &[T]) -> Result<Model<T>> {
        Ok(match self {
            Self::Lr { ridge } => Model::Lr(fit_ols(x, y, *ridge)?),
            Self::Rf(p) => Model::Rf(fit_random_forest(x, y, p)?),
            Self::Svr(p) => Model::Svr(fit_svr(x, y, p)?),
            Self::Mlp(p) => Model::Mlp(fit_mlp(x, y, p)?),
        })
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Lr { ridge } => write!(f, "lr ridge={ridge}"),
            Self::Rf(p) => {
                write!(f, "rf ntrees={} min_leaf={} mtry=", p.ntrees, p.min_leaf)?;
                match p.mtry {
                    Some(m) => write!(f, "{m}")?,
                    None => f.write_str("p/3")?,
                }
                if let Some(d) = p.max_depth {
                    write!(f, " max_depth={d}")?;
                }
                write!(f, " seed={}", p.seed)
            }
            Self::Svr(p) => {
                write!(f, "svr C={} epsilon={} gamma=", p.c, p.epsilon)?;
                match p.gamma {
                    Some(g) => write!(f, "{g}")?,
                    None => f.write_str("1/p")?,
                }
                write!(f, " max_rows={} seed={}", p.max_rows, p.seed)
            }
            Self::Mlp(p) => write!(
                f,
                "mlp hsize={} lr={} epochs={} batch={} l2={} seed={}",
                p.hidden, p.lr, p.epochs, p.batch, p.l2, p.seed
            ),
        }
    }
}

/// A fitted model of any family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "kind",
    content = "params",
    rename_all = "lowercase",
    bound = "T: Scalar"
)]
pub enum Model<T> {
    Lr(LinearModel<T>),
    Rf(ForestModel<T>),
    Svr(SvrModel<T>),
    Mlp(MlpModel<T>),
}

impl<T: Scalar> Model<T> {
    pub fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        match self {
            Self::Lr(m) => m.predict(x),
            Self::Rf(m) => m.predict(x),
            Self::Svr(m) => m.predict(x),
            Self::Mlp(m) => m.predict(x),
        }
    }
}

/// A [`ModelSpec`] plus its fitted state.
#[derive(Clone, Debug)]
pub struct Learner<T> {
    pub spec: ModelSpec,
    pub model: Option<Model<T>>,
}

impl<T: Scalar> Learner<T> {
    pub fn new(spec: ModelSpec) -> Self {
        Self { spec, model: None }
    }
}

impl<T: Scalar> Regressor<T> for Learner<T> {
    fn fit(&mut self, x: &Matrix<T>, y: &[T]) -> Result<()> {
        self.model = Some(self.spec.fit(x, y)?);
        Ok(())
    }

    fn predict(&self, x: &Matrix<T>) -> Result<Vec<T>> {
        self.model.as_ref().ok_or(Error::NotFitted)?.predict(x)
    }

    fn descriptor(&self) -> String {
        self.spec.to_string()
    }
}

pub const MODEL_FORMAT: &str = "commentvol-model";
pub const MODEL_VERSION: u32 = 1;

/// Serialized model together with what is needed to rebuild its inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelFile<T> {
    pub format: String,
    pub version: u32,
    pub spec: ModelSpec,
    pub alpha: usize,
    pub feature_set: String,
    pub columns: Vec<String>,
    pub model: Model<T>,
}

impl<T: Scalar> ModelFile<T> {
    pub fn new(
        spec: ModelSpec,
        alpha: usize,
        feature_set: String,
        columns: Vec<String>,
        model: Model<T>,
    ) -> Self {
        Self {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            spec,
            alpha,
            feature_set,
            columns,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(s)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn predict_before_fit_fails() {
        let l = Learner::<f64>::new(ModelSpec::linear());
        assert!(matches!(
            l.predict(&Matrix::zeros(1, 1)),
            Err(Error::NotFitted)
        ));
    }

    #[test]
    fn descriptors() {
        assert_eq!(
            ModelSpec::forest(50, 3).to_string(),
            "rf ntrees=50 min_leaf=20 mtry=p/3 seed=3"
        );
        assert!(ModelSpec::from_name("gbm").is_err());
    }

    #[test]
    fn model_file_round_trip() {
        let x = Matrix::from_rows(&[
            vec![0.1, 1.0],
            vec![0.7, 2.0],
            vec![0.3, 5.0],
            vec![0.9, 3.0],
        ])
        .unwrap();
        let y = [1.0 / 3.0, 2.0, 0.5, 1e-7];
        for spec in [ModelSpec::linear(), ModelSpec::forest(3, 1)] {
            let m = spec.fit(&x, &y).unwrap();
            let file = ModelFile::new(spec, 10, "ALL".into(), vec!["a".into(), "b".into()], m);
            let json = file.to_json().unwrap();
            let back = ModelFile::<f64>::from_json(&json).unwrap();
            assert_eq!(back, file, "{json}");
            assert_eq!(back.to_json().unwrap(), json);
        }
    }
}
