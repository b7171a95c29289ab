//! Log-log rate lines: OLS of log10(volume) on log10(rate) with 95%
//! confidence intervals, line comparison, normal Q-Q diagnostics and grouped
//! fits over a corpus.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::beta::inv_beta_reg;

use crate::corpus::{compute_target, Corpus};
use crate::error::{Error, Result};
use crate::features::rate;
use crate::scalar::Scalar;

/// Default slope difference below which two lines count as parallel.
pub const DEFAULT_SLOPE_TOL: f64 = 0.02;

/// Upper `p` quantile of Student's t with `df` degrees of freedom, `p` in (0, 1).
pub fn t_quantile(p: f64, df: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    let tail = 2.0 * p.min(1.0 - p);
    let x = inv_beta_reg(df / 2.0, 0.5, tail);
    let t = (df * (1.0 - x) / x).sqrt();
    if p > 0.5 {
        t
    } else {
        -t
    }
}

pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RateFit<T> {
    pub n: usize,
    pub slope: T,
    pub intercept: T,
    pub slope_ci: (T, T),
    pub intercept_ci: (T, T),
    pub slope_se: T,
    pub intercept_se: T,
    /// Mean fitted log-volume over the input points.
    pub mopv: T,
    pub residual_std: T,
    pub r2: T,
    /// Range of log10(rate) covered by the points.
    pub log_rate_range: (T, T),
}

impl<T: Scalar> RateFit<T> {
    pub fn predict_log_volume(&self, log_rate: T) -> T {
        self.slope * log_rate + self.intercept
    }
}

/// Simple regression of `y` on `x` with t-based 95% intervals.
pub fn fit_line<T: Scalar>(x: &[T], y: &[T]) -> Result<RateFit<T>> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} x values, {} y values",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::Insufficient(format!(
            "a line fit needs at least 3 points, got {n}"
        )));
    }
    let xs: Vec<f64> = x.iter().map(|v| v.f64()).collect();
    let ys: Vec<f64> = y.iter().map(|v| v.f64()).collect();
    if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("line fit input".into()));
    }
    let nf = n as f64;
    let xm = xs.iter().sum::<f64>() / nf;
    let ym = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let syy: f64 = ys.iter().map(|v| (v - ym).powi(2)).sum();
    if sxx <= 1e-24 * nf * (1.0 + xm * xm) {
        return Err(Error::ZeroVariance("log-rate values are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let fitted: Vec<f64> = xs.iter().map(|v| slope * v + intercept).collect();
    let sse: f64 = fitted.iter().zip(&ys).map(|(f, v)| (v - f).powi(2)).sum();
    let s = (sse / (nf - 2.0)).sqrt();
    let slope_se = s / sxx.sqrt();
    let intercept_se = s * (1.0 / nf + xm * xm / sxx).sqrt();
    let t = t_quantile(0.975, nf - 2.0);
    let mopv = fitted.iter().sum::<f64>() / nf;
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let c = T::of;
    Ok(RateFit {
        n,
        slope: c(slope),
        intercept: c(intercept),
        slope_ci: (c(slope - t * slope_se), c(slope + t * slope_se)),
        intercept_ci: (
            c(intercept - t * intercept_se),
            c(intercept + t * intercept_se),
        ),
        slope_se: c(slope_se),
        intercept_se: c(intercept_se),
        mopv: c(mopv),
        residual_std: c(s),
        r2: c(r2),
        log_rate_range: (c(lo), c(hi)),
    })
}

/// Fits log10(volume) against log10(rate). Rates and volumes must be positive.
pub fn fit_rate_line<T: Scalar>(points: &[(T, T)]) -> Result<RateFit<T>> {
    if let Some((r, v)) = points
        .iter()
        .find(|(r, v)| !(*r > T::zero() && *v > T::zero()))
    {
        return Err(Error::InvalidInput(format!(
            "rate {r} and volume {v} must both be positive"
        )));
    }
    let x: Vec<T> = points.iter().map(|(r, _)| r.log10()).collect();
    let y: Vec<T> = points.iter().map(|(_, v)| v.log10()).collect();
    fit_line(&x, &y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Relation {
    /// Slopes within tolerance. `higher` names the line predicting more volume
    /// over the whole shared rate range, if there is one.
    Parallel { higher: Option<String> },
    /// Lines intersect at `log_rate` (rate `rate`); `above` dominates at higher rates.
    Crossing {
        log_rate: f64,
        rate: f64,
        below: String,
        above: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineComparison {
    pub a: String,
    pub b: String,
    pub slope_diff: f64,
    pub relation: Relation,
}

impl fmt::Display for LineComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.relation {
            Relation::Parallel { higher } => write!(
                f,
                "{} vs {}: PARALLEL (slope diff {:.4}), higher: {}",
                self.a,
                self.b,
                self.slope_diff,
                higher.as_deref().unwrap_or("neither")
            ),
            Relation::Crossing {
                log_rate,
                rate,
                below,
                above,
            } => write!(
                f,
                "{} vs {}: CROSSING at log10(rate) = {log_rate:.4} (rate {rate:.4}), {below} higher below, {above} higher above",
                self.a, self.b
            ),
        }
    }
}

pub fn compare_lines<T: Scalar>(
    a_name: &str,
    a: &RateFit<T>,
    b_name: &str,
    b: &RateFit<T>,
    slope_tol: f64,
) -> LineComparison {
    let (sa, ia, sb, ib) = (
        a.slope.f64(),
        a.intercept.f64(),
        b.slope.f64(),
        b.intercept.f64(),
    );
    let diff = sa - sb;
    let relation = if diff.abs() <= slope_tol {
        let lo = a.log_rate_range.0.f64().min(b.log_rate_range.0.f64());
        let hi = a.log_rate_range.1.f64().max(b.log_rate_range.1.f64());
        let gap = |x: f64| (sa * x + ia) - (sb * x + ib);
        let (g_lo, g_hi) = (gap(lo), gap(hi));
        let higher = if g_lo > 0.0 && g_hi > 0.0 {
            Some(a_name.to_string())
        } else if g_lo < 0.0 && g_hi < 0.0 {
            Some(b_name.to_string())
        } else {
            None
        };
        Relation::Parallel { higher }
    } else {
        let x = (ib - ia) / diff;
        let (steep, flat) = if diff > 0.0 {
            (a_name, b_name)
        } else {
            (b_name, a_name)
        };
        Relation::Crossing {
            log_rate: x,
            rate: 10f64.powf(x),
            below: flat.to_string(),
            above: steep.to_string(),
        }
    };
    LineComparison {
        a: a_name.into(),
        b: b_name.into(),
        slope_diff: diff,
        relation,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QqResult {
    /// (theoretical normal quantile, standardized sample quantile).
    pub pairs: Vec<(f64, f64)>,
    pub correlation: f64,
}

/// Normal Q-Q pairs at plotting positions `(i - 0.5) / n` and their correlation.
pub fn qq_normal<T: Scalar>(values: &[T]) -> Result<QqResult> {
    let n = values.len();
    if n < 20 {
        return Err(Error::Insufficient(format!(
            "Q-Q analysis needs at least 20 values, got {n}"
        )));
    }
    let mut v: Vec<f64> = values.iter().map(|x| x.f64()).collect();
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("Q-Q input".into()));
    }
    let nf = n as f64;
    let mean = v.iter().sum::<f64>() / nf;
    let sd = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    if sd <= 1e-9 * mean.abs().max(1.0) {
        return Err(Error::ZeroVariance(format!(
            "Q-Q input has standard deviation {sd:e}"
        )));
    }
    v.sort_by(f64::total_cmp);
    let pairs: Vec<(f64, f64)> = v
        .iter()
        .enumerate()
        .map(|(i, x)| (normal_quantile((i as f64 + 0.5) / nf), (x - mean) / sd))
        .collect();
    Ok(QqResult {
        correlation: pearson(&pairs),
        pairs,
    })
}

fn pearson(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn write_qq_csv(qq: &QqResult, w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["theoretical", "sample"])?;
    for (t, s) in &qq.pairs {
        out.write_record([t.to_string(), s.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Grouping {
    Outlet,
    Category,
    OutletCategory,
}

impl Grouping {
    pub fn parse(s: &str) -> Result<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['_', '-', '*'], "")
            .as_str()
        {
            "outlet" => Ok(Self::Outlet),
            "category" => Ok(Self::Category),
            "outletxcategory" | "outletcategory" => Ok(Self::OutletCategory),
            _ => Err(Error::InvalidConfig(format!("unknown grouping `{s}`"))),
        }
    }
}

/// Rate and eventual volume of one eligible article.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub id: String,
    pub outlet: String,
    pub categories: Vec<String>,
    pub rate: f64,
    pub volume: usize,
}

pub fn rate_points(corpus: &Corpus, alpha: usize) -> Result<Vec<RatePoint>> {
    let arts: Vec<_> = corpus.eligible(alpha).collect();
    arts.par_iter()
        .map(|a| {
            let ts: Vec<i64> = a
                .first_comments(alpha)
                .iter()
                .map(|c| c.timestamp)
                .collect();
            compute_target(a)?;
            Ok(RatePoint {
                id: a.id.clone(),
                outlet: a.outlet.clone(),
                categories: a.categories.clone(),
                rate: rate(&ts, alpha)?,
                volume: a.window_comments().len(),
            })
        })
        .collect()
}

fn group_keys(p: &RatePoint, grouping: Grouping) -> Vec<String> {
    let cats = || p.categories.iter().collect::<BTreeSet<_>>().into_iter();
    match grouping {
        Grouping::Outlet => vec![p.outlet.clone()],
        Grouping::Category => cats().cloned().collect(),
        Grouping::OutletCategory => cats().map(|c| format!("{}:{}", p.outlet, c)).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GroupFit<T> {
    pub alpha: usize,
    pub group: String,
    pub n: usize,
    /// `None` when the group was skipped.
    pub fit: Option<RateFit<T>>,
    pub note: Option<String>,
}

/// One rate line per group, in group-key order. Groups with fewer than
/// `min_n` articles, or whose fit is degenerate, are kept as skipped rows.
pub fn rate_analysis<T: Scalar>(
    corpus: &Corpus,
    alpha: usize,
    grouping: Grouping,
    min_n: usize,
) -> Result<Vec<GroupFit<T>>> {
    let points = rate_points(corpus, alpha)?;
    let mut groups: BTreeMap<String, Vec<(T, T)>> = BTreeMap::new();
    for p in &points {
        for k in group_keys(p, grouping) {
            groups
                .entry(k)
                .or_default()
                .push((T::of(p.rate), T::of(p.volume as f64)));
        }
    }
    let entries: Vec<(String, Vec<(T, T)>)> = groups.into_iter().collect();
    Ok(entries
        .into_par_iter()
        .map(|(group, pts)| {
            let n = pts.len();
            if n < min_n.max(3) {
                return GroupFit {
                    alpha,
                    group,
                    n,
                    fit: None,
                    note: Some(format!("fewer than {} articles", min_n.max(3))),
                };
            }
            match fit_rate_line(&pts) {
                Ok(fit) => GroupFit {
                    alpha,
                    group,
                    n,
                    fit: Some(fit),
                    note: None,
                },
                Err(e) => GroupFit {
                    alpha,
                    group,
                    n,
                    fit: None,
                    note: Some(e.to_string()),
                },
            }
        })
        .collect())
}

/// Rate analysis repeated for each `alpha`; rows ordered by alpha, then group.
pub fn alpha_sweep<T: Scalar>(
    corpus: &Corpus,
    alphas: &[usize],
    grouping: Grouping,
    min_n: usize,
) -> Result<Vec<GroupFit<T>>> {
    let mut out = Vec::new();
    for &a in alphas {
        if a < 2 {
            return Err(Error::InvalidConfig(format!(
                "alpha must be at least 2, got {a}"
            )));
        }
        out.extend(rate_analysis(corpus, a, grouping, min_n)?);
    }
    Ok(out)
}

const FIT_COLUMNS: [&str; 16] = [
    "alpha",
    "group",
    "n",
    "slope",
    "slope_lo",
    "slope_hi",
    "intercept",
    "intercept_lo",
    "intercept_hi",
    "mopv",
    "slope_se",
    "intercept_se",
    "residual_std",
    "r2",
    "log_rate_min",
    "log_rate_max",
];

/// CSV with one row per group; skipped groups have empty numeric fields.
pub fn write_fits_csv<T: Scalar>(fits: &[GroupFit<T>], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FIT_COLUMNS)?;
    for g in fits {
        let mut rec = vec![g.alpha.to_string(), g.group.clone(), g.n.to_string()];
        match &g.fit {
            Some(f) => rec.extend(
                [
                    f.slope,
                    f.slope_ci.0,
                    f.slope_ci.1,
                    f.intercept,
                    f.intercept_ci.0,
                    f.intercept_ci.1,
                    f.mopv,
                    f.slope_se,
                    f.intercept_se,
                    f.residual_std,
                    f.r2,
                    f.log_rate_range.0,
                    f.log_rate_range.1,
                ]
                .iter()
                .map(|v| v.to_string()),
            ),
            None => rec.extend(std::iter::repeat_n(String::new(), FIT_COLUMNS.len() - 3)),
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads rows written by [`write_fits_csv`].
pub fn read_fits_csv<T: Scalar>(r: impl Read) -> Result<Vec<GroupFit<T>>> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(FIT_COLUMNS.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            field: "header".into(),
            message: format!("expected columns {}", FIT_COLUMNS.join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|e| Error::Parse {
                line,
                field: FIT_COLUMNS[k].into(),
                message: e.to_string(),
            })
        };
        let int = |k: usize| -> Result<usize> {
            rec[k].parse::<usize>().map_err(|e| Error::Parse {
                line,
                field: FIT_COLUMNS[k].into(),
                message: e.to_string(),
            })
        };
        let fit = if rec[3].is_empty() {
            None
        } else {
            let c = |k: usize| num(k).map(T::of);
            Some(RateFit {
                n: int(2)?,
                slope: c(3)?,
                slope_ci: (c(4)?, c(5)?),
                intercept: c(6)?,
                intercept_ci: (c(7)?, c(8)?),
                mopv: c(9)?,
                slope_se: c(10)?,
                intercept_se: c(11)?,
                residual_std: c(12)?,
                r2: c(13)?,
                log_rate_range: (c(14)?, c(15)?),
            })
        };
        out.push(GroupFit {
            alpha: int(0)?,
            group: rec[1].to_string(),
            n: int(2)?,
            fit,
            note: None,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn t_quantiles_match_tables() {
        assert!((t_quantile(0.975, 1.0) - 12.706204736174698).abs() < 1e-8);
        assert!((t_quantile(0.975, 10.0) - 2.2281388519649385).abs() < 1e-10);
        assert!((t_quantile(0.975, 100.0) - 1.9839715184496334).abs() < 1e-10);
        assert!((t_quantile(0.025, 10.0) + 2.2281388519649385).abs() < 1e-10);
        assert!((normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
    }

    #[test]
    fn exact_line_has_zero_width_intervals() {
        let pts: Vec<(f64, f64)> = (1..30)
            .map(|i| {
                let r = i as f64 * 0.1;
                (r, 10f64.powf(0.7 * r.log10() + 2.7))
            })
            .collect();
        let f = fit_rate_line(&pts).unwrap();
        assert!((f.slope - 0.7).abs() < 1e-9);
        assert!((f.intercept - 2.7).abs() < 1e-9);
        assert!(f.slope_ci.1 - f.slope_ci.0 < 1e-9);
        assert!(f.intercept_ci.1 - f.intercept_ci.0 < 1e-9);
    }

    #[test]
    fn degenerate_rates() {
        assert!(matches!(
            fit_rate_line(&[(1.0, 2.0), (1.0, 3.0), (1.0, 4.0)]),
            Err(Error::ZeroVariance(_))
        ));
        assert!(fit_rate_line(&[(1.0, 2.0), (0.0, 3.0), (2.0, 4.0)]).is_err());
        assert!(fit_rate_line(&[(1.0, 2.0), (2.0, 3.0)]).is_err());
    }

    fn line(slope: f64, intercept: f64) -> RateFit<f64> {
        let x: Vec<f64> = (0..10).map(|i| -2.0 + 0.3 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + intercept).collect();
        fit_line(&x, &y).unwrap()
    }

    #[test]
    fn comparison_relations() {
        let fox = line(0.963, 3.201);
        let gd = line(0.656, 2.728);
        let c = compare_lines("FN", &fox, "Gd", &gd, DEFAULT_SLOPE_TOL);
        match c.relation {
            Relation::Crossing {
                log_rate,
                above,
                below,
                ..
            } => {
                assert_eq!(above, "FN");
                assert_eq!(below, "Gd");
                let ya = fox.slope * log_rate + fox.intercept;
                let yb = gd.slope * log_rate + gd.intercept;
                assert!((ya - yb).abs() < 1e-9);
            }
            other => panic!("{other:?}"),
        }
        let same = compare_lines("a", &fox, "b", &fox, DEFAULT_SLOPE_TOL);
        assert_eq!(same.relation, Relation::Parallel { higher: None });
        let dm = line(0.703, 2.606);
        let nyt = line(0.707, 2.935);
        let p = compare_lines("DM", &dm, "NYT", &nyt, DEFAULT_SLOPE_TOL);
        assert_eq!(
            p.relation,
            Relation::Parallel {
                higher: Some("NYT".into())
            }
        );
    }

    #[test]
    fn qq_rejects_small_and_flat_inputs() {
        assert!(qq_normal(&[1.0; 10]).is_err());
        let flat: Vec<f64> = (0..50).map(|i| 5.0 + 1e-13 * i as f64).collect();
        assert!(matches!(qq_normal(&flat), Err(Error::ZeroVariance(_))));
    }

    #[test]
    fn grouping_names() {
        assert_eq!(
            Grouping::parse("outletxcategory").unwrap(),
            Grouping::OutletCategory
        );
        assert_eq!(Grouping::parse("Outlet").unwrap(), Grouping::Outlet);
        assert!(Grouping::parse("topic").is_err());
    }

    #[test]
    fn fits_csv_round_trip() {
        let fits = vec![
            GroupFit {
                alpha: 10,
                group: "FN".into(),
                n: 10,
                fit: Some(line(0.9, 3.0)),
                note: None,
            },
            GroupFit::<f64> {
                alpha: 10,
                group: "NYT:Sports".into(),
                n: 4,
                fit: None,
                note: Some("small".into()),
            },
        ];
        let mut buf = Vec::new();
        write_fits_csv(&fits, &mut buf).unwrap();
        let back: Vec<GroupFit<f64>> = read_fits_csv(buf.as_slice()).unwrap();
        assert_eq!(back[0].fit, fits[0].fit);
        assert!(back[1].fit.is_none());
    }
}
