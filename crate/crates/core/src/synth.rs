//! Calibrated synthetic corpus generator.
//!
//! Each article draws a latent pair (log10 rate, log10 volume) from a
//! bivariate normal. The pair is solved per outlet so that the volume marginal
//! over all articles is `N(mu, sigma)` and an ordinary least squares line fitted
//! on the eligible articles (at least `alpha` comments) converges to the
//! configured slope and intercept with `R^2 = 1 - noise^2 / sigma^2`.
//!
//! Generation happens in two stages with one RNG stream per article: a plan
//! (metadata, latent draws, first comment timestamps) and then the full
//! comment stream. [`generate_provenance`] runs only the first stage and so
//! yields exactly the records that [`generate_corpus`] attaches to its corpus.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::corpus::{write_corpus, Article, Comment, Corpus, TimezoneTable, WEEK_SECONDS};
use crate::error::{Error, Result};
use crate::features::rate;
use crate::taxonomy::Category;
use crate::text::{DEFAULT_AGGRESSION, DEFAULT_GAZETTEER, DEFAULT_NEGATIVE, DEFAULT_POSITIVE};

/// Latest allowed distance between the first and the alpha-th comment.
pub const MAX_FIRST_SPAN_SECONDS: i64 = 6 * 24 * 3600;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutletConfig {
    pub name: String,
    pub n: usize,
    /// Mean and standard deviation of log10 volume over all articles.
    pub mu: f64,
    pub sigma: f64,
    /// Target rate line on eligible articles: log10 V = slope * log10 rate + intercept.
    pub slope: f64,
    pub intercept: f64,
    /// Residual standard deviation of that line.
    pub noise: f64,
    #[serde(default)]
    pub tz_minutes: i32,
    /// Per-alpha (slope, intercept) used by [`SynthConfig::at_alpha`].
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub alpha_lines: BTreeMap<usize, (f64, f64)>,
}

impl OutletConfig {
    /// Rate-only R^2 implied by `noise` and `sigma`.
    pub fn implied_r2(&self) -> f64 {
        1.0 - (self.noise / self.sigma).powi(2)
    }
}

fn default_alpha() -> usize {
    10
}
fn default_start() -> i64 {
    1_443_657_600
}
fn default_days() -> u32 {
    500
}
fn default_reply_fraction() -> f64 {
    0.1
}
fn default_delay() -> f64 {
    30.0
}
fn default_half_life() -> f64 {
    12.0
}
fn default_authors() -> usize {
    6
}
fn default_topics() -> usize {
    12
}
fn default_commenters() -> usize {
    2000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    #[serde(default)]
    pub seed: u64,
    /// Eligibility threshold the lines are calibrated for.
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    /// Publication times are uniform over `days` days from `start` (epoch seconds).
    #[serde(default = "default_start")]
    pub start: i64,
    #[serde(default = "default_days")]
    pub days: u32,
    #[serde(default = "default_reply_fraction")]
    pub reply_fraction: f64,
    /// Mean delay of the first comment, minutes.
    #[serde(default = "default_delay")]
    pub first_delay_minutes: f64,
    /// Half-life of the comment intensity after the alpha-th comment, hours.
    #[serde(default = "default_half_life")]
    pub half_life_hours: f64,
    #[serde(default = "default_authors")]
    pub authors_per_outlet: usize,
    #[serde(default = "default_topics")]
    pub topics: usize,
    #[serde(default = "default_commenters")]
    pub commenters: usize,
    pub outlets: Vec<OutletConfig>,
}

type OutletRow = (&'static str, usize, f64, f64, f64, f64, f64, i32);

// name, n, mu, sigma, slope, intercept, rate-only R^2, utc offset
const OUTLETS: [OutletRow; 6] = [
    ("WSP", 6470, 1.88, 0.76, 0.758, 2.740, 0.471, -300),
    ("DM", 6046, 1.99, 0.62, 0.703, 2.606, 0.477, 0),
    ("WSJ", 2516, 1.74, 0.70, 0.841, 2.885, 0.651, -300),
    ("FN", 1739, 2.47, 0.94, 0.963, 3.201, 0.378, -300),
    ("Gd", 1697, 2.46, 0.45, 0.656, 2.728, 0.416, 0),
    ("NYT", 965, 2.38, 0.60, 0.707, 2.935, 0.484, -300),
];
const OVERALL: OutletRow = ("Overall", 19433, 2.02, 0.74, 0.777, 2.767, 0.470, -300);

const SWEEP_ALPHAS: [usize; 5] = [5, 10, 15, 20, 50];
const ALPHA_LINES: [(&str, [(f64, f64); 5]); 7] = [
    (
        "WSP",
        [
            (0.788, 2.692),
            (0.758, 2.740),
            (0.728, 2.741),
            (0.700, 2.735),
            (0.574, 2.725),
        ],
    ),
    (
        "DM",
        [
            (0.702, 2.553),
            (0.703, 2.606),
            (0.707, 2.595),
            (0.684, 2.589),
            (0.595, 2.575),
        ],
    ),
    (
        "WSJ",
        [
            (0.869, 2.812),
            (0.841, 2.885),
            (0.809, 2.886),
            (0.779, 2.876),
            (0.665, 2.856),
        ],
    ),
    (
        "FN",
        [
            (0.993, 3.217),
            (0.963, 3.201),
            (0.915, 3.149),
            (0.893, 3.113),
            (0.736, 2.973),
        ],
    ),
    (
        "Gd",
        [
            (0.609, 2.722),
            (0.656, 2.728),
            (0.657, 2.713),
            (0.651, 2.693),
            (0.566, 2.668),
        ],
    ),
    (
        "NYT",
        [
            (0.699, 2.933),
            (0.707, 2.935),
            (0.701, 2.910),
            (0.684, 2.895),
            (0.603, 2.815),
        ],
    ),
    (
        "Overall",
        [
            (0.805, 2.744),
            (0.777, 2.767),
            (0.739, 2.749),
            (0.713, 2.738),
            (0.594, 2.698),
        ],
    ),
];

fn outlet_from_row(row: &OutletRow) -> OutletConfig {
    let &(name, n, mu, sigma, slope, intercept, r2, tz) = row;
    let lines = ALPHA_LINES.iter().find(|(k, _)| *k == name).map(|(_, v)| v);
    OutletConfig {
        name: name.into(),
        n,
        mu,
        sigma,
        slope,
        intercept,
        noise: sigma * (1.0 - r2).sqrt(),
        tz_minutes: tz,
        alpha_lines: lines
            .map(|v| {
                SWEEP_ALPHAS
                    .iter()
                    .copied()
                    .zip(v.iter().copied())
                    .collect()
            })
            .unwrap_or_default(),
    }
}

impl SynthConfig {
    pub fn new(outlets: Vec<OutletConfig>) -> Self {
        Self {
            seed: 0,
            alpha: default_alpha(),
            start: default_start(),
            days: default_days(),
            reply_fraction: default_reply_fraction(),
            first_delay_minutes: default_delay(),
            half_life_hours: default_half_life(),
            authors_per_outlet: default_authors(),
            topics: default_topics(),
            commenters: default_commenters(),
            outlets,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Multiplies every outlet's article count by `factor` (at least 1 article each).
    pub fn scaled(mut self, factor: f64) -> Self {
        for o in &mut self.outlets {
            o.n = ((o.n as f64 * factor).round() as usize).max(1);
        }
        self
    }

    /// Same outlets calibrated for eligibility threshold `alpha`, taking each
    /// outlet's line from its per-alpha table when present.
    pub fn at_alpha(&self, alpha: usize) -> Self {
        let mut c = self.clone();
        c.alpha = alpha;
        for o in &mut c.outlets {
            if let Some(&(b, a)) = o.alpha_lines.get(&alpha) {
                o.slope = b;
                o.intercept = a;
            }
        }
        c
    }

    pub fn timezones(&self) -> TimezoneTable {
        let mut t = TimezoneTable::default();
        for o in &self.outlets {
            t.insert(o.name.clone(), o.tz_minutes);
        }
        t
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.alpha < 2 {
            return bad(format!("alpha must be at least 2, got {}", self.alpha));
        }
        if self.outlets.is_empty() {
            return bad("no outlets".into());
        }
        if !(0.0..=1.0).contains(&self.reply_fraction) {
            return bad(format!(
                "reply_fraction {} outside [0, 1]",
                self.reply_fraction
            ));
        }
        if !(self.first_delay_minutes > 0.0 && self.half_life_hours > 0.0) {
            return bad("delay and half-life must be positive".into());
        }
        if self.days == 0
            || self.authors_per_outlet == 0
            || self.topics == 0
            || self.commenters == 0
        {
            return bad("days and pool sizes must be positive".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for o in &self.outlets {
            if !names.insert(o.name.as_str()) {
                return bad(format!("duplicate outlet `{}`", o.name));
            }
            calibrate(o, self.alpha)?;
        }
        Ok(())
    }
}

/// The six-outlet configuration with reference volume moments, rate lines,
/// rate-only R^2 values and per-alpha lines.
pub fn default_config() -> SynthConfig {
    SynthConfig::new(OUTLETS.iter().map(outlet_from_row).collect())
}

/// A single pooled outlet carrying the overall statistics.
pub fn overall_config() -> SynthConfig {
    SynthConfig::new(vec![outlet_from_row(&OVERALL)])
}

/// Latent parameters: log10 rate ~ N(rate_mean, rate_std) and
/// log10 V = slope * log10 rate + intercept + N(0, noise).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub rate_mean: f64,
    pub rate_std: f64,
    pub slope: f64,
    pub intercept: f64,
    pub noise: f64,
    /// Probability that an article reaches `alpha` comments.
    pub eligible_fraction: f64,
}

/// Solves the latent parameters for `outlet` when eligibility means
/// `round(10^logV) >= alpha`.
pub fn calibrate(outlet: &OutletConfig, alpha: usize) -> Result<Calibration> {
    let OutletConfig {
        mu,
        sigma,
        slope: b,
        intercept: a,
        noise,
        ..
    } = *outlet;
    let name = &outlet.name;
    if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite() && a.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "{name}: need finite mu, intercept and sigma > 0"
        )));
    }
    if !(b != 0.0 && b.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "{name}: slope must be non-zero"
        )));
    }
    if !(noise >= 0.0 && noise < sigma) {
        return Err(Error::InvalidConfig(format!(
            "{name}: need 0 <= noise < sigma, got {noise}"
        )));
    }
    if outlet.n == 0 {
        return Err(Error::InvalidConfig(format!("{name}: n must be positive")));
    }
    if alpha < 2 {
        return Err(Error::InvalidConfig(format!(
            "alpha must be at least 2, got {alpha}"
        )));
    }
    let std = Normal::standard();
    let t = ((alpha as f64 - 0.5).log10() - mu) / sigma;
    let tail = std.sf(t);
    if tail < 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "{name}: almost no article reaches alpha = {alpha}"
        )));
    }
    let lam = std.pdf(t) / tail;
    let delta = 1.0 + t * lam - lam * lam;
    let r2 = 1.0 - (noise / sigma).powi(2);
    let rho2 = r2 / (delta * (1.0 - r2) + r2);
    let rho = rho2.sqrt() * b.signum();
    let rate_std = rho * sigma * delta / (b * (rho2 * delta + 1.0 - rho2));
    let slope = rho * sigma / rate_std;
    let sel_rate_mean = (mu + sigma * lam - a) / b;
    let rate_mean = sel_rate_mean - rho * rate_std * lam;
    let c = Calibration {
        rate_mean,
        rate_std,
        slope,
        intercept: mu - slope * rate_mean,
        noise: sigma * (1.0 - rho2).max(0.0).sqrt(),
        eligible_fraction: tail,
    };
    if [c.rate_mean, c.rate_std, c.slope, c.intercept, c.noise]
        .iter()
        .any(|v| !v.is_finite())
        || c.rate_std <= 0.0
    {
        return Err(Error::InvalidConfig(format!(
            "{name}: parameters have no latent solution"
        )));
    }
    Ok(c)
}

/// Ground truth kept for every generated article.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub id: String,
    pub outlet: String,
    pub log_rate: f64,
    pub log_volume: f64,
    pub noise: f64,
    /// Comments emitted inside the target window.
    pub volume: usize,
    /// Rate recomputed from the emitted first comments, for eligible articles.
    pub rate: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub provenance: Vec<Provenance>,
    /// Articles whose volume had to be raised to alpha. Always zero here.
    pub clamped: usize,
    /// Latent draws discarded (no comments, or first comments spanning too long).
    pub redraws: usize,
}

struct Plan {
    prov: Provenance,
    published_at: i64,
    first: Vec<i64>,
    author: String,
    topic: usize,
    redraws: usize,
}

const FILLER: &[&str] = &[
    "the",
    "a",
    "of",
    "to",
    "and",
    "in",
    "is",
    "that",
    "it",
    "for",
    "on",
    "was",
    "with",
    "this",
    "as",
    "they",
    "be",
    "at",
    "by",
    "not",
    "are",
    "from",
    "or",
    "have",
    "but",
    "what",
    "all",
    "were",
    "when",
    "we",
    "there",
    "can",
    "an",
    "your",
    "which",
    "their",
    "said",
    "if",
    "do",
    "will",
    "each",
    "about",
    "how",
    "up",
    "out",
    "them",
    "then",
    "she",
    "many",
    "some",
    "so",
    "these",
    "would",
    "other",
    "into",
    "has",
    "more",
    "her",
    "two",
    "like",
    "him",
    "see",
    "time",
    "could",
    "no",
    "make",
    "than",
    "first",
    "been",
    "people",
    "its",
    "who",
    "now",
    "long",
    "down",
    "day",
    "did",
    "get",
    "come",
    "made",
    "may",
    "part",
    "vote",
    "policy",
    "report",
    "market",
    "team",
    "game",
    "season",
    "school",
    "city",
    "state",
    "court",
    "law",
    "plan",
    "deal",
    "week",
    "year",
    "government",
    "official",
    "election",
    "campaign",
    "president",
    "money",
    "price",
    "health",
];

fn article_rng(seed: u64, outlet: usize, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((outlet as u64) << 40) | index as u64);
    rng
}

fn plan_article(
    cfg: &SynthConfig,
    cal: &Calibration,
    oi: usize,
    i: usize,
    rng: &mut ChaCha8Rng,
) -> Plan {
    let outlet = &cfg.outlets[oi];
    let alpha = cfg.alpha;
    let published_at = cfg.start + rng.random_range(0..cfg.days as i64 * 86_400);
    let author = format!(
        "{} writer {}",
        outlet.name,
        rng.random_range(0..cfg.authors_per_outlet)
    );
    let topic = rng.random_range(0..cfg.topics);

    let mut redraws = 0;
    let (x, e, y, n, span) = loop {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let x = cal.rate_mean + cal.rate_std * z1;
        let e = cal.noise * z2;
        let y = cal.slope * x + cal.intercept + e;
        let n = 10f64.powf(y).round();
        let span = (60.0 * alpha as f64 / 10f64.powf(x)).round();
        if (1.0..1e7).contains(&n) && span <= MAX_FIRST_SPAN_SECONDS as f64 {
            break (x, e, y, n as usize, span as i64);
        }
        redraws += 1;
    };
    let delay_mean = cfg.first_delay_minutes * 60.0;
    let delay: f64 = Exp::new(1.0 / delay_mean)
        .expect("positive rate")
        .sample(rng);
    let t1 = published_at + (delay.min(12.0 * 3600.0)).round() as i64;
    let first: Vec<i64> = (0..alpha.min(n))
        .map(|k| t1 + (k as f64 * span as f64 / (alpha - 1) as f64).round() as i64)
        .collect();
    let rate = (n >= alpha).then(|| rate(&first, alpha).expect("alpha timestamps"));
    Plan {
        prov: Provenance {
            id: format!("{}-{:05}", outlet.name, i),
            outlet: outlet.name.clone(),
            log_rate: x,
            log_volume: y,
            noise: e,
            volume: n,
            rate,
        },
        published_at,
        first,
        author,
        topic,
        redraws,
    }
}

fn words(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.random_range(lo..=hi);
    let mut s = String::with_capacity(n * 6);
    for k in 0..n {
        if k > 0 {
            s.push(' ');
        }
        let r: f64 = rng.random();
        let w = if r < 0.04 {
            DEFAULT_POSITIVE.choose(rng)
        } else if r < 0.08 {
            DEFAULT_NEGATIVE.choose(rng)
        } else if r < 0.10 {
            DEFAULT_AGGRESSION.choose(rng)
        } else if r < 0.13 {
            DEFAULT_GAZETTEER.choose(rng).map(|(w, _)| w)
        } else {
            FILLER.choose(rng)
        };
        s.push_str(w.expect("non-empty pool"));
    }
    s
}

fn comment_text(rng: &mut ChaCha8Rng) -> String {
    let mut s = words(rng, 3, 25);
    let r: f64 = rng.random();
    if r < 0.03 {
        s.push_str(" http://example.com/item");
    } else if r < 0.13 {
        s.push('?');
    } else if r < 0.20 {
        s.push('!');
    }
    s
}

fn topic_categories(topic: usize) -> [Category; 2] {
    let all = Category::ALL;
    [all[topic % 9], all[(topic * 4 + 1) % 9]]
}

fn materialize(cfg: &SynthConfig, plan: Plan, rng: &mut ChaCha8Rng) -> Article {
    let alpha = cfg.alpha;
    let id = plan.prov.id.clone();
    let window_end = plan.published_at + WEEK_SECONDS;
    let mut times = plan.first.clone();
    if plan.prov.volume > alpha {
        let start = *times.last().expect("alpha >= 2");
        let len = (window_end - start) as f64;
        let lam = std::f64::consts::LN_2 / (cfg.half_life_hours * 3600.0);
        let mass = 1.0 - (-lam * len).exp();
        let mut tail: Vec<i64> = (alpha..plan.prov.volume)
            .map(|_| {
                let u: f64 = rng.random();
                let off = -(1.0 - u * mass).ln() / lam;
                start + (off.floor() as i64).clamp(0, len as i64)
            })
            .collect();
        tail.sort_unstable();
        times.extend(tail);
    }
    let mut comments = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let parent_id = (k > 0 && rng.random_bool(cfg.reply_fraction))
            .then(|| format!("{id}-{}", rng.random_range(0..k)));
        comments.push(Comment {
            id: format!("{id}-{k}"),
            parent_id,
            timestamp: t,
            author: format!("user{}", rng.random_range(0..cfg.commenters)),
            text: comment_text(rng),
            likes: rng.random_range(0..20),
            dislikes: rng.random_range(0..5),
        });
    }
    let mut categories = Vec::new();
    if rng.random_bool(0.6) {
        let tc = topic_categories(plan.topic);
        categories.push(tc[0].to_string());
        if rng.random_bool(0.4) {
            categories.push(tc[1].to_string());
        }
    }
    if rng.random_bool(0.1) {
        let c = Category::ALL
            .choose(rng)
            .expect("nine categories")
            .to_string();
        if !categories.contains(&c) {
            categories.push(c);
        }
    }
    let topic_first_seen_at = rng
        .random_bool(0.7)
        .then(|| plan.published_at - rng.random_range(0..14 * 86_400));
    let mut title = words(rng, 5, 12);
    if rng.random_bool(0.15) {
        title.push('?');
    }
    let mut body = words(rng, 40, 400);
    if rng.random_bool(0.3) {
        body.push_str(". What happens next?");
    }
    if rng.random_bool(0.2) {
        body.push('!');
    }
    Article {
        id,
        outlet: plan.prov.outlet.clone(),
        published_at: plan.published_at,
        title,
        body,
        author: plan.author,
        topic: format!("topic {:02}", plan.topic),
        categories,
        topic_first_seen_at,
        comments,
    }
}

fn plans(cfg: &SynthConfig) -> Result<Vec<(Plan, ChaCha8Rng)>> {
    cfg.validate()?;
    let cals: Vec<Calibration> = cfg
        .outlets
        .iter()
        .map(|o| calibrate(o, cfg.alpha))
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = cfg
        .outlets
        .iter()
        .enumerate()
        .flat_map(|(oi, o)| (0..o.n).map(move |i| (oi, i)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(oi, i)| {
            let mut rng = article_rng(cfg.seed, oi, i);
            let plan = plan_article(cfg, &cals[oi], oi, i, &mut rng);
            (plan, rng)
        })
        .collect())
}

/// Provenance records only, without building comment streams.
pub fn generate_provenance(cfg: &SynthConfig) -> Result<Vec<Provenance>> {
    Ok(plans(cfg)?.into_iter().map(|(p, _)| p.prov).collect())
}

/// (rate, volume) of every eligible article, in generation order.
pub fn provenance_rate_points(prov: &[Provenance]) -> Vec<(f64, f64)> {
    prov.iter()
        .filter_map(|p| p.rate.map(|r| (r, p.volume as f64)))
        .collect()
}

pub fn generate_corpus(cfg: &SynthConfig) -> Result<SynthOutput> {
    let planned = plans(cfg)?;
    let redraws = planned.iter().map(|(p, _)| p.redraws).sum();
    let provenance: Vec<Provenance> = planned.iter().map(|(p, _)| p.prov.clone()).collect();
    let articles: Vec<Article> = planned
        .into_par_iter()
        .map(|(plan, mut rng)| materialize(cfg, plan, &mut rng))
        .collect();
    Ok(SynthOutput {
        corpus: Corpus::new(articles)?,
        provenance,
        clamped: 0,
        redraws,
    })
}

pub fn write_provenance_csv(prov: &[Provenance], w: impl Write) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "id",
        "outlet",
        "log_rate",
        "log_volume",
        "noise",
        "volume",
        "rate",
    ])?;
    for p in prov {
        out.write_record([
            p.id.clone(),
            p.outlet.clone(),
            p.log_rate.to_string(),
            p.log_volume.to_string(),
            p.noise.to_string(),
            p.volume.to_string(),
            p.rate.map(|r| r.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `corpus.jsonl`, `provenance.csv` and `timezones.tsv` into `dir`.
pub fn write_output(
    cfg: &SynthConfig,
    out: &SynthOutput,
    dir: impl AsRef<Path>,
) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let corpus = dir.join("corpus.jsonl");
    let prov = dir.join("provenance.csv");
    let tz = dir.join("timezones.tsv");
    let mut w = std::io::BufWriter::new(fs::File::create(&corpus)?);
    write_corpus(&out.corpus, &mut w)?;
    w.flush()?;
    write_provenance_csv(
        &out.provenance,
        std::io::BufWriter::new(fs::File::create(&prov)?),
    )?;
    fs::write(&tz, cfg.timezones().to_text())?;
    Ok(vec![corpus, prov, tz])
}
