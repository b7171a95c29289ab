//! Metrics, k-fold cross-validation, feature-set ablation and stepwise
//! forward selection.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::FoldPlan;
use crate::error::{Error, Result};
use crate::features::{DesignMatrix, Encoding, FeatureSet, FeatureTable, SCHEMA};
use crate::learn::ModelSpec;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

fn check_lengths(a: usize, b: usize, min: usize) -> Result<()> {
    if a != b {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {a} actuals, {b} predictions"
        )));
    }
    if a < min {
        return Err(Error::Insufficient(format!(
            "need at least {min} values, got {a}"
        )));
    }
    Ok(())
}

/// `1 - SSE / SST`. Negative when predictions are worse than the mean.
pub fn r_squared<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<f64> {
    check_lengths(actual.len(), predicted.len(), 2)?;
    let n = actual.len() as f64;
    let mean = actual.iter().map(|v| v.f64()).sum::<f64>() / n;
    let sst: f64 = actual.iter().map(|v| (v.f64() - mean).powi(2)).sum();
    if sst == 0.0 {
        return Err(Error::ZeroVariance("R² of a constant target".into()));
    }
    let sse: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a.f64() - p.f64()).powi(2))
        .sum();
    Ok(1.0 - sse / sst)
}

pub fn mae<T: Scalar>(actual: &[T], predicted: &[T]) -> Result<f64> {
    check_lengths(actual.len(), predicted.len(), 1)?;
    let s: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a.f64() - p.f64()).abs())
        .sum();
    Ok(s / actual.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Setting {
    Global,
    Local(String),
}

impl Setting {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Global => "GLOBAL",
            Self::Local(_) => "LOCAL",
        }
    }

    pub fn outlet(&self) -> &str {
        match self {
            Self::Global => "",
            Self::Local(o) => o,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Global => f.write_str("GLOBAL"),
            Self::Local(o) => write!(f, "LOCAL({o})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_r2: f64,
    pub test_r2: f64,
    pub test_mae: f64,
}

/// Cross-validated scores. Aggregates are means over folds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub setting: Setting,
    pub feature_set: String,
    pub model: String,
    pub r2: f64,
    pub mae: f64,
    pub train_r2: f64,
    pub folds: Vec<FoldMetrics>,
}

impl FitReport {
    pub fn from_folds(
        setting: Setting,
        feature_set: String,
        model: String,
        folds: Vec<FoldMetrics>,
    ) -> Self {
        let k = folds.len().max(1) as f64;
        Self {
            setting,
            feature_set,
            model,
            r2: folds.iter().map(|f| f.test_r2).sum::<f64>() / k,
            mae: folds.iter().map(|f| f.test_mae).sum::<f64>() / k,
            train_r2: folds.iter().map(|f| f.train_r2).sum::<f64>() / k,
            folds,
        }
    }
}

/// Fold index per id, via [`FoldPlan`].
pub fn fold_assignment<S: AsRef<str>>(ids: &[S], k: usize, seed: u64) -> Result<Vec<usize>> {
    let plan = FoldPlan::from_ids(ids, k, seed)?;
    Ok(ids
        .iter()
        .map(|id| plan.fold_of(id.as_ref()).expect("every id is assigned"))
        .collect())
}

/// Trains on all folds but one and tests on the held-out fold, for each fold.
pub fn cross_validate_rows<T: Scalar>(
    spec: &ModelSpec,
    x: &Matrix<T>,
    y: &[T],
    folds: &[usize],
    k: usize,
) -> Result<Vec<FoldMetrics>> {
    if folds.len() != x.rows() || y.len() != x.rows() {
        return Err(Error::InvalidInput(
            "fold assignment does not match the matrix".into(),
        ));
    }
    (0..k)
        .into_par_iter()
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..x.rows()).partition(|&r| folds[r] == fold);
            if test.is_empty() || train.is_empty() {
                return Err(Error::Insufficient(format!("fold {fold} is empty")));
            }
            let xtr = x.select_rows(&train);
            let ytr: Vec<T> = train.iter().map(|&r| y[r]).collect();
            let xte = x.select_rows(&test);
            let yte: Vec<T> = test.iter().map(|&r| y[r]).collect();
            let model = spec.fit(&xtr, &ytr)?;
            let ptr = model.predict(&xtr)?;
            let pte = model.predict(&xte)?;
            Ok(FoldMetrics {
                fold,
                n_train: train.len(),
                n_test: test.len(),
                train_r2: r_squared(&ytr, &ptr)?,
                test_r2: r_squared(&yte, &pte)?,
                test_mae: mae(&yte, &pte)?,
            })
        })
        .collect()
}

pub fn cross_validate<T: Scalar>(
    dm: &DesignMatrix<T>,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
    setting: Setting,
) -> Result<FitReport> {
    let folds = fold_assignment(&dm.ids, k, seed)?;
    let per_fold = cross_validate_rows(spec, &dm.x, &dm.y, &folds, k)?;
    Ok(FitReport::from_folds(
        setting,
        dm.feature_set.clone(),
        spec.to_string(),
        per_fold,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub models: Vec<ModelSpec>,
    pub sets: Vec<FeatureSet>,
    pub k: usize,
    pub seed: u64,
    pub global: bool,
    pub local: bool,
    pub encoding: Encoding,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self {
            models: vec![ModelSpec::Rf(Default::default()), ModelSpec::linear()],
            sets: FeatureSet::ablation_sets(),
            k: 5,
            seed: 0,
            global: true,
            local: true,
            encoding: Encoding::default(),
        }
    }
}

/// Every (setting, feature set, model) combination; GLOBAL first, then one
/// LOCAL block per outlet in lexicographic order.
pub fn ablation_suite<T: Scalar>(
    table: &FeatureTable,
    config: &AblationConfig,
) -> Result<Vec<FitReport>> {
    let mut settings = Vec::new();
    if config.global {
        settings.push((Setting::Global, table.clone()));
    }
    if config.local {
        let outlets: std::collections::BTreeSet<&String> = table.outlets.iter().collect();
        for o in outlets {
            settings.push((Setting::Local(o.clone()), table.filter_outlet(o)));
        }
    }
    let mut out = Vec::new();
    for (setting, sub) in &settings {
        for set in &config.sets {
            let dm = sub.design::<T>(set, &config.encoding)?;
            for spec in &config.models {
                out.push(cross_validate(
                    &dm,
                    spec,
                    config.k,
                    config.seed,
                    setting.clone(),
                )?);
            }
        }
    }
    Ok(out)
}

/// CSV with one row per report and per-fold test R² and MAE columns.
pub fn write_reports_csv(reports: &[FitReport], w: impl Write) -> Result<()> {
    let k = reports.iter().map(|r| r.folds.len()).max().unwrap_or(0);
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> = [
        "setting",
        "outlet",
        "feature_set",
        "model",
        "r2",
        "mae",
        "train_r2",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((0..k).map(|i| format!("r2_fold{i}")));
    header.extend((0..k).map(|i| format!("mae_fold{i}")));
    out.write_record(&header)?;
    for r in reports {
        let mut rec = vec![
            r.setting.name().to_string(),
            r.setting.outlet().to_string(),
            r.feature_set.clone(),
            r.model.clone(),
            r.r2.to_string(),
            r.mae.to_string(),
            r.train_r2.to_string(),
        ];
        for i in 0..k {
            rec.push(
                r.folds
                    .get(i)
                    .map_or(String::new(), |f| f.test_r2.to_string()),
            );
        }
        for i in 0..k {
            rec.push(
                r.folds
                    .get(i)
                    .map_or(String::new(), |f| f.test_mae.to_string()),
            );
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub k: usize,
    pub seed: u64,
    /// Minimum relative R² gain for accepting another feature.
    pub min_rel_gain: f64,
    pub max_steps: Option<usize>,
    /// Candidate features; `None` means the whole schema.
    pub candidates: Option<Vec<String>>,
    pub encoding: Encoding,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            min_rel_gain: 0.01,
            max_steps: None,
            candidates: None,
            encoding: Encoding::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StopReason {
    /// The best candidate did not improve enough.
    NoImprovement {
        candidate: String,
        r2: f64,
    },
    /// Every candidate was accepted.
    Exhausted,
    MaxSteps,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub chosen: Vec<String>,
    /// CV R² after each acceptance.
    pub r2: Vec<f64>,
    pub stop: StopReason,
    /// Candidate scores of every round, in schema order.
    pub rounds: Vec<Vec<(String, f64)>>,
}

/// Greedy forward selection from the empty set. Each round adds the candidate
/// with the highest CV R² (earliest in schema order on ties). The first
/// feature needs R² > 0; later ones a relative gain of at least `min_rel_gain`.
pub fn stepwise_forward_select<T: Scalar>(
    table: &FeatureTable,
    spec: &ModelSpec,
    config: &SelectionConfig,
) -> Result<SelectionTrace> {
    let mut remaining: Vec<String> = match &config.candidates {
        Some(c) => {
            let mut c = c.clone();
            FeatureSet::Custom(c.clone()).features()?;
            crate::features::schema_order(&mut c);
            c.dedup();
            c
        }
        None => SCHEMA.iter().map(|s| s.name.to_string()).collect(),
    };
    if remaining.len() < 2 {
        return Err(Error::Insufficient(
            "selection needs at least two candidates".into(),
        ));
    }
    let folds = fold_assignment(&table.ids, config.k, config.seed)?;
    let mut chosen: Vec<String> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    let mut rounds = Vec::new();
    loop {
        if remaining.is_empty() {
            return Ok(SelectionTrace {
                chosen,
                r2: scores,
                stop: StopReason::Exhausted,
                rounds,
            });
        }
        if config.max_steps.is_some_and(|m| chosen.len() >= m) {
            return Ok(SelectionTrace {
                chosen,
                r2: scores,
                stop: StopReason::MaxSteps,
                rounds,
            });
        }
        let round: Vec<(String, f64)> = remaining
            .par_iter()
            .map(|cand| {
                let mut names = chosen.clone();
                names.push(cand.clone());
                let dm = table.design::<T>(&FeatureSet::Custom(names), &config.encoding)?;
                let per_fold = cross_validate_rows(spec, &dm.x, &dm.y, &folds, config.k)?;
                let r2 = per_fold.iter().map(|f| f.test_r2).sum::<f64>() / config.k as f64;
                Ok((cand.clone(), r2))
            })
            .collect::<Result<_>>()?;
        let mut best = 0;
        for (i, (_, r2)) in round.iter().enumerate() {
            if *r2 > round[best].1 {
                best = i;
            }
        }
        let (cand, r2) = round[best].clone();
        rounds.push(round);
        let accept = match scores.last() {
            None => r2 > 0.0,
            Some(&prev) => (r2 - prev) / prev.abs() >= config.min_rel_gain,
        };
        if !accept {
            return Ok(SelectionTrace {
                chosen,
                r2: scores,
                stop: StopReason::NoImprovement {
                    candidate: cand,
                    r2,
                },
                rounds,
            });
        }
        remaining.retain(|c| *c != cand);
        chosen.push(cand);
        scores.push(r2);
    }
}
