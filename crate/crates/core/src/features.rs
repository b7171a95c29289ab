//! Per-article features computed from the article and its first `alpha`
//! comments, and assembly of design matrices for a chosen feature set.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::Write;

use chrono::{DateTime, Datelike, Timelike};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_reply_tree, compute_target, Article, Corpus, ReplyTree};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::text::{
    count_tokens, has_url, tokenize, AggressionLexicon, EntityClass, NerProvider, Providers,
};

/// Value of `continuity` when the topic's first appearance is unknown.
pub const MISSING_CONTINUITY: f64 = -1.0;

/// Label of the catch-all one-hot column.
pub const OTHER_LEVEL: &str = "<OTHER>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Topic,
    Article,
    Comment,
    NewsFactor,
    Misc,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Topic => "TOPIC",
            Self::Article => "ARTICLE",
            Self::Comment => "COMMENT",
            Self::NewsFactor => "NEWS_FACTOR",
            Self::Misc => "MISC",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    Numeric,
    Categorical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: &'static str,
    pub family: Family,
    pub kind: Kind,
}

const fn num(name: &'static str, family: Family) -> FeatureSpec {
    FeatureSpec {
        name,
        family,
        kind: Kind::Numeric,
    }
}

const fn cat(name: &'static str, family: Family) -> FeatureSpec {
    FeatureSpec {
        name,
        family,
        kind: Kind::Categorical,
    }
}

/// Canonical feature schema. Column order of every design matrix follows it.
pub const SCHEMA: &[FeatureSpec] = &[
    cat("topic", Family::Topic),
    num("month", Family::Article),
    num("day", Family::Article),
    num("hour", Family::Article),
    num("wom", Family::Article),
    num("dow", Family::Article),
    cat("author", Family::Article),
    cat("outlet", Family::Article),
    num("art_length", Family::Article),
    num("art_question", Family::Article),
    num("art_exclaim", Family::Article),
    num("art_num_ne_loc", Family::Article),
    num("art_num_ne_per", Family::Article),
    num("art_num_ne_org", Family::Article),
    num("art_num_ne_misc", Family::Article),
    num("art_senti_score", Family::Article),
    num("rate", Family::Comment),
    num("fc_mid", Family::Comment),
    num("uniq_com", Family::Comment),
    num("num_reply", Family::Comment),
    num("num_thread", Family::Comment),
    num("num_question", Family::Comment),
    num("num_exclaim", Family::Comment),
    num("num_words", Family::Comment),
    num("complexity", Family::Comment),
    num("has_url", Family::Comment),
    num("num_ne_com", Family::Comment),
    num("depth", Family::Comment),
    num("width", Family::Comment),
    num("avg_senti_score", Family::Comment),
    num("num_likes", Family::Comment),
    num("num_dislikes", Family::Comment),
    num("continuity", Family::NewsFactor),
    num("aggression", Family::NewsFactor),
    num("pub_resp", Family::Misc),
    num("inter_art", Family::Misc),
    num("inter_com", Family::Misc),
];

pub fn feature_spec(name: &str) -> Option<&'static FeatureSpec> {
    SCHEMA.iter().find(|s| s.name == name)
}

fn schema_index(name: &str) -> usize {
    SCHEMA
        .iter()
        .position(|s| s.name == name)
        .unwrap_or(usize::MAX)
}

/// Text manifest of the schema: one `name<TAB>family<TAB>type` line per feature.
pub fn schema_manifest() -> String {
    let mut out = String::from("name\tfamily\ttype\n");
    for s in SCHEMA {
        let kind = match s.kind {
            Kind::Numeric => "numeric",
            Kind::Categorical => "categorical",
        };
        out.push_str(&format!("{}\t{}\t{}\n", s.name, s.family, kind));
    }
    out
}

/// Named feature values for one article. Numeric and categorical values are
/// kept apart; categorical ones are one-hot encoded at matrix assembly.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector {
    pub values: BTreeMap<&'static str, f64>,
    pub labels: BTreeMap<&'static str, String>,
}

impl FeatureVector {
    fn put(&mut self, name: &'static str, v: f64) {
        debug_assert!(
            feature_spec(name).is_some_and(|s| s.kind == Kind::Numeric),
            "{name}"
        );
        self.values.insert(name, v);
    }

    fn label(&mut self, name: &'static str, v: &str) {
        debug_assert!(
            feature_spec(name).is_some_and(|s| s.kind == Kind::Categorical),
            "{name}"
        );
        self.labels.insert(name, v.to_string());
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn family(name: &str) -> Option<Family> {
        feature_spec(name).map(|s| s.family)
    }

    pub fn merge(&mut self, other: FeatureVector) {
        self.values.extend(other.values);
        self.labels.extend(other.labels);
    }

    fn check_finite(&self, id: &str) -> Result<()> {
        match self.values.iter().find(|(_, v)| !v.is_finite()) {
            Some((k, v)) => Err(Error::NonFinite(format!(
                "feature `{k}` = {v} for article `{id}`"
            ))),
            None => Ok(()),
        }
    }
}

/// Comments per minute over the first `alpha` timestamps. Elapsed time is
/// floored at one second.
pub fn rate(timestamps: &[i64], alpha: usize) -> Result<f64> {
    if alpha == 0 || timestamps.len() < alpha {
        return Err(Error::InvalidInput(format!(
            "rate needs {alpha} timestamps, got {}",
            timestamps.len()
        )));
    }
    let ts = &timestamps[..alpha];
    if ts.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput(
            "timestamps are not non-decreasing".into(),
        ));
    }
    let minutes = (ts[alpha - 1] - ts[0]) as f64 / 60.0;
    Ok(alpha as f64 / minutes.max(1.0 / 60.0))
}

/// `(1/|T|) * sum_t tf(t) * (ln|T| - ln tf(t))` over the concatenated tokens.
/// Negative when some term occurs more often than there are distinct terms.
pub fn complexity<S: AsRef<str>>(texts: &[S]) -> Result<f64> {
    let tokens: Vec<String> = texts.iter().flat_map(|t| tokenize(t.as_ref())).collect();
    complexity_of_tokens(&tokens)
}

pub fn complexity_of_tokens<S: AsRef<str>>(tokens: &[S]) -> Result<f64> {
    if tokens.is_empty() {
        return Err(Error::InvalidInput(
            "complexity of an empty token stream".into(),
        ));
    }
    let mut tf: HashMap<&str, usize> = HashMap::new();
    for t in tokens {
        *tf.entry(t.as_ref()).or_default() += 1;
    }
    let unique = tf.len() as f64;
    let ln_t = unique.ln();
    // Deterministic summation order.
    let mut counts: Vec<usize> = tf.into_values().collect();
    counts.sort_unstable();
    let s: f64 = counts
        .iter()
        .map(|&c| c as f64 * (ln_t - (c as f64).ln()))
        .sum();
    Ok(s / unique)
}

/// Number of comment levels and the largest number of comments on one level.
pub fn tree_depth_width(tree: &ReplyTree) -> (usize, usize) {
    let counts = tree.level_counts();
    (counts.len(), counts.into_iter().max().unwrap_or(0))
}

fn local_seconds(ts: i64, offset_minutes: i32) -> i64 {
    ts + offset_minutes as i64 * 60
}

fn check_eligible(article: &Article, alpha: usize) -> Result<()> {
    let have = article.window_comments().len();
    if alpha == 0 || have < alpha {
        return Err(Error::NotEligible {
            id: article.id.clone(),
            have,
            need: alpha,
        });
    }
    Ok(())
}

pub fn extract_comment_features(
    article: &Article,
    alpha: usize,
    providers: &Providers,
) -> Result<FeatureVector> {
    check_eligible(article, alpha)?;
    let first = article.first_comments(alpha);
    let mut fv = FeatureVector::default();

    let ts: Vec<i64> = first.iter().map(|c| c.timestamp).collect();
    fv.put("rate", rate(&ts, alpha)?);

    let offset = providers.timezones.offset_minutes(&article.outlet);
    let since_midnight = local_seconds(ts[0], offset).rem_euclid(86_400);
    fv.put("fc_mid", since_midnight as f64 / 60.0);

    let authors: BTreeSet<&str> = first.iter().map(|c| c.author.as_str()).collect();
    fv.put("uniq_com", authors.len() as f64);
    let replies = first.iter().filter(|c| c.parent_id.is_some()).count();
    fv.put("num_reply", replies as f64);
    fv.put("num_thread", (alpha - replies) as f64);

    let count_char = |ch: char| {
        first
            .iter()
            .map(|c| c.text.matches(ch).count())
            .sum::<usize>() as f64
    };
    fv.put("num_question", count_char('?'));
    fv.put("num_exclaim", count_char('!'));
    fv.put(
        "num_words",
        first.iter().map(|c| count_tokens(&c.text)).sum::<usize>() as f64,
    );

    let texts: Vec<&str> = first.iter().map(|c| c.text.as_str()).collect();
    let tokens: Vec<String> = texts.iter().flat_map(|t| tokenize(t)).collect();
    fv.put(
        "complexity",
        if tokens.is_empty() {
            0.0
        } else {
            complexity_of_tokens(&tokens)?
        },
    );
    fv.put(
        "has_url",
        if texts.iter().any(|t| has_url(t)) {
            1.0
        } else {
            0.0
        },
    );

    let mut n_entities = 0usize;
    for t in &texts {
        n_entities += providers.ner.entities(t)?.len();
    }
    fv.put("num_ne_com", n_entities as f64);

    let tree = build_reply_tree(article, alpha)?;
    let (depth, width) = tree_depth_width(&tree);
    fv.put("depth", depth as f64);
    fv.put("width", width as f64);

    let mut senti = 0.0;
    for t in &texts {
        senti += providers.sentiment.score(t)?;
    }
    fv.put("avg_senti_score", senti / alpha as f64);
    fv.put("num_likes", first.iter().map(|c| c.likes as f64).sum());
    fv.put(
        "num_dislikes",
        first.iter().map(|c| c.dislikes as f64).sum(),
    );
    Ok(fv)
}

pub fn extract_article_features(article: &Article, providers: &Providers) -> Result<FeatureVector> {
    let mut fv = FeatureVector::default();
    let offset = providers.timezones.offset_minutes(&article.outlet);
    let local = DateTime::from_timestamp(local_seconds(article.published_at, offset), 0)
        .ok_or_else(|| {
            Error::InvalidInput(format!(
                "timestamp out of range in article `{}`",
                article.id
            ))
        })?
        .naive_utc();
    fv.put("month", local.month() as f64);
    fv.put("day", local.day() as f64);
    fv.put("hour", local.hour() as f64);
    fv.put("wom", ((local.day() - 1) / 7 + 1) as f64);
    fv.put("dow", local.weekday().number_from_monday() as f64);
    fv.label("author", &article.author);
    fv.label("outlet", &article.outlet);
    fv.put("art_length", count_tokens(&article.body) as f64);
    fv.put(
        "art_question",
        if article.title.contains('?') {
            1.0
        } else {
            0.0
        },
    );
    fv.put(
        "art_exclaim",
        if article.title.contains('!') {
            1.0
        } else {
            0.0
        },
    );

    let mut by_class = [0usize; 4];
    for e in providers.ner.entities(&article.body)? {
        by_class[e.class as usize] += 1;
    }
    fv.put("art_num_ne_loc", by_class[EntityClass::Loc as usize] as f64);
    fv.put("art_num_ne_per", by_class[EntityClass::Per as usize] as f64);
    fv.put("art_num_ne_org", by_class[EntityClass::Org as usize] as f64);
    fv.put(
        "art_num_ne_misc",
        by_class[EntityClass::Misc as usize] as f64,
    );
    fv.put("art_senti_score", providers.sentiment.score(&article.body)?);
    Ok(fv)
}

pub fn extract_news_factor_features(
    article: &Article,
    alpha: usize,
    lexicon: &AggressionLexicon,
) -> FeatureVector {
    let mut fv = FeatureVector::default();
    let continuity = match article.topic_first_seen_at {
        Some(t) => (article.published_at - t) as f64 / 60.0,
        None => MISSING_CONTINUITY,
    };
    fv.put("continuity", continuity);

    let (mut hits, mut total) = (0usize, 0usize);
    let texts = std::iter::once(article.body.as_str()).chain(
        article
            .first_comments(alpha)
            .iter()
            .map(|c| c.text.as_str()),
    );
    for t in texts {
        for tok in tokenize(t) {
            total += 1;
            hits += usize::from(lexicon.contains(&tok));
        }
    }
    fv.put(
        "aggression",
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        },
    );
    fv
}

/// Overlap ratios between entity sets of two texts, compared by lowercased surface.
pub fn entity_overlap(art: &BTreeSet<String>, com: &BTreeSet<String>) -> (f64, f64) {
    let inter = art.intersection(com).count() as f64;
    let ratio = |d: usize| if d == 0 { 0.0 } else { inter / d as f64 };
    (ratio(art.len()), ratio(com.len()))
}

pub fn extract_misc_features(
    article: &Article,
    alpha: usize,
    ner: &dyn NerProvider,
) -> Result<FeatureVector> {
    let mut fv = FeatureVector::default();
    let first = article.first_comments(alpha);
    let pub_resp = first
        .first()
        .map_or(0.0, |c| (c.timestamp - article.published_at) as f64 / 60.0);
    fv.put("pub_resp", pub_resp);

    let art: BTreeSet<String> = ner
        .entities(&article.body)?
        .into_iter()
        .map(|e| e.surface.to_lowercase())
        .collect();
    let mut com = BTreeSet::new();
    for c in first {
        com.extend(
            ner.entities(&c.text)?
                .into_iter()
                .map(|e| e.surface.to_lowercase()),
        );
    }
    let (inter_art, inter_com) = entity_overlap(&art, &com);
    fv.put("inter_art", inter_art);
    fv.put("inter_com", inter_com);
    Ok(fv)
}

/// Every schema feature for one eligible article.
pub fn extract_features(
    article: &Article,
    alpha: usize,
    providers: &Providers,
) -> Result<FeatureVector> {
    let mut fv = FeatureVector::default();
    fv.label("topic", &article.topic);
    fv.merge(extract_article_features(article, providers)?);
    fv.merge(extract_comment_features(article, alpha, providers)?);
    fv.merge(extract_news_factor_features(
        article,
        alpha,
        &providers.aggression,
    ));
    fv.merge(extract_misc_features(
        article,
        alpha,
        providers.ner.as_ref(),
    )?);
    fv.check_finite(&article.id)?;
    Ok(fv)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSet {
    All,
    /// User-comment features only.
    Uc,
    /// Article features only.
    Art,
    Rate,
    AllMinusUc,
    /// Everything except the named features.
    AllExcept(Vec<String>),
    Custom(Vec<String>),
}

impl FeatureSet {
    /// The six sets of the ablation report.
    pub fn ablation_sets() -> Vec<FeatureSet> {
        vec![
            Self::All,
            Self::Uc,
            Self::Art,
            Self::Rate,
            Self::AllMinusUc,
            Self::AllExcept(vec!["rate".into()]),
        ]
    }

    pub fn label(&self) -> String {
        match self {
            Self::All => "ALL".into(),
            Self::Uc => "UC".into(),
            Self::Art => "ART".into(),
            Self::Rate => "RATE".into(),
            Self::AllMinusUc => "ALL-UC".into(),
            Self::AllExcept(names) => format!("ALL-{{{}}}", names.join(",")),
            Self::Custom(names) => names.join(","),
        }
    }

    /// Accepts `all`, `uc`, `art`, `rate`, `all-uc`, `all-{a,b}` / `all-a`,
    /// or a comma-separated list of feature names.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let set = match s.to_ascii_lowercase().as_str() {
            "all" => Self::All,
            "uc" => Self::Uc,
            "art" => Self::Art,
            "rate" => Self::Rate,
            "all-uc" => Self::AllMinusUc,
            lower if lower.starts_with("all-") => {
                let rest = s[4..].trim_start_matches('{').trim_end_matches('}');
                Self::AllExcept(split_names(rest))
            }
            _ => Self::Custom(split_names(s)),
        };
        set.features()?;
        Ok(set)
    }

    /// Schema entries in this set, in schema order.
    pub fn features(&self) -> Result<Vec<&'static FeatureSpec>> {
        let check = |names: &[String]| -> Result<()> {
            match names.iter().find(|n| feature_spec(n).is_none()) {
                Some(n) => Err(Error::UnknownFeature(n.clone())),
                None => Ok(()),
            }
        };
        let out: Vec<_> = match self {
            Self::All => SCHEMA.iter().collect(),
            Self::Uc => SCHEMA
                .iter()
                .filter(|s| s.family == Family::Comment)
                .collect(),
            Self::Art => SCHEMA
                .iter()
                .filter(|s| s.family == Family::Article)
                .collect(),
            Self::Rate => SCHEMA.iter().filter(|s| s.name == "rate").collect(),
            Self::AllMinusUc => SCHEMA
                .iter()
                .filter(|s| s.family != Family::Comment)
                .collect(),
            Self::AllExcept(names) => {
                check(names)?;
                SCHEMA
                    .iter()
                    .filter(|s| !names.iter().any(|n| n == s.name))
                    .collect()
            }
            Self::Custom(names) => {
                check(names)?;
                SCHEMA
                    .iter()
                    .filter(|s| names.iter().any(|n| n == s.name))
                    .collect()
            }
        };
        if out.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "feature set `{}` is empty",
                self.label()
            )));
        }
        Ok(out)
    }
}

fn split_names(s: &str) -> Vec<String> {
    s.split(',')
        .map(str::trim)
        .filter(|n| !n.is_empty())
        .map(String::from)
        .collect()
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoding {
    /// Most frequent levels kept per categorical feature; the rest map to `<OTHER>`.
    pub max_levels: usize,
}

impl Default for Encoding {
    fn default() -> Self {
        Self { max_levels: 50 }
    }
}

/// Numeric matrix with named columns, the log-volume target and row metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix<T> {
    pub feature_set: String,
    pub columns: Vec<String>,
    /// Schema feature each column was derived from.
    pub sources: Vec<&'static str>,
    pub x: Matrix<T>,
    pub y: Vec<T>,
    pub ids: Vec<String>,
    pub outlets: Vec<String>,
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            feature_set: self.feature_set.clone(),
            columns: self.columns.clone(),
            sources: self.sources.clone(),
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            outlets: idx.iter().map(|&i| self.outlets[i].clone()).collect(),
        }
    }

    /// CSV with `id,outlet,target` followed by one column per matrix column.
    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string(), "outlet".into(), "target".into()];
        header.extend(self.columns.iter().cloned());
        out.write_record(&header)?;
        for r in 0..self.rows() {
            let mut rec = vec![
                self.ids[r].clone(),
                self.outlets[r].clone(),
                self.y[r].to_string(),
            ];
            rec.extend(self.x.row(r).iter().map(|v| v.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Features of every eligible article, computed once and projected onto
/// feature sets as needed.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    pub alpha: usize,
    pub ids: Vec<String>,
    pub outlets: Vec<String>,
    pub targets: Vec<f64>,
    pub rows: Vec<FeatureVector>,
}

impl FeatureTable {
    /// Extracts features for the eligible articles, in corpus order.
    pub fn build(corpus: &Corpus, alpha: usize, providers: &Providers) -> Result<Self> {
        let arts: Vec<&Article> = corpus.eligible(alpha).collect();
        if arts.is_empty() {
            return Err(Error::Insufficient(format!(
                "no article has at least {alpha} comments"
            )));
        }
        let rows = arts
            .par_iter()
            .map(|a| Ok((extract_features(a, alpha, providers)?, compute_target(a)?)))
            .collect::<Result<Vec<_>>>()?;
        let (rows, targets) = rows.into_iter().unzip();
        Ok(Self {
            alpha,
            ids: arts.iter().map(|a| a.id.clone()).collect(),
            outlets: arts.iter().map(|a| a.outlet.clone()).collect(),
            targets,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            alpha: self.alpha,
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            outlets: idx.iter().map(|&i| self.outlets[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn filter_outlet(&self, outlet: &str) -> Self {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.outlets[i] == outlet)
            .collect();
        self.select(&idx)
    }

    pub fn design<T: Scalar>(
        &self,
        set: &FeatureSet,
        encoding: &Encoding,
    ) -> Result<DesignMatrix<T>> {
        self.design_impl(set, encoding, None)
    }

    /// Like [`FeatureTable::design`] but with the one-hot levels fixed by an
    /// existing column list, e.g. from a saved model. Unseen levels go to
    /// the `<OTHER>` column.
    pub fn design_with_columns<T: Scalar>(
        &self,
        set: &FeatureSet,
        columns: &[String],
    ) -> Result<DesignMatrix<T>> {
        let dm = self.design_impl(set, &Encoding::default(), Some(columns))?;
        if dm.columns != columns {
            return Err(Error::InvalidInput(format!(
                "feature set {} does not produce the expected {} columns",
                set.label(),
                columns.len()
            )));
        }
        Ok(dm)
    }

    fn design_impl<T: Scalar>(
        &self,
        set: &FeatureSet,
        encoding: &Encoding,
        fixed: Option<&[String]>,
    ) -> Result<DesignMatrix<T>> {
        if self.is_empty() {
            return Err(Error::Insufficient("empty feature table".into()));
        }
        let specs = set.features()?;
        let mut columns = Vec::new();
        let mut sources = Vec::new();
        // Per feature: either a numeric column or a level -> column map.
        let mut plans: Vec<(usize, Option<BTreeMap<String, usize>>)> = Vec::new();
        for s in &specs {
            match s.kind {
                Kind::Numeric => {
                    plans.push((columns.len(), None));
                    columns.push(s.name.to_string());
                    sources.push(s.name);
                }
                Kind::Categorical => {
                    let levels = match fixed {
                        Some(cols) => {
                            let prefix = format!("{}=", s.name);
                            cols.iter()
                                .filter_map(|c| c.strip_prefix(&prefix))
                                .filter(|l| *l != OTHER_LEVEL)
                                .map(str::to_string)
                                .collect()
                        }
                        None => top_levels(
                            self.rows
                                .iter()
                                .map(|r| r.labels.get(s.name).map_or("", String::as_str)),
                            encoding.max_levels,
                        ),
                    };
                    let start = columns.len();
                    let mut map = BTreeMap::new();
                    for (j, l) in levels.into_iter().enumerate() {
                        columns.push(format!("{}={}", s.name, l));
                        sources.push(s.name);
                        map.insert(l, start + j);
                    }
                    columns.push(format!("{}={}", s.name, OTHER_LEVEL));
                    sources.push(s.name);
                    plans.push((columns.len() - 1, Some(map)));
                }
            }
        }
        let mut x = Matrix::zeros(self.len(), columns.len());
        for (r, fv) in self.rows.iter().enumerate() {
            for (s, (col, levels)) in specs.iter().zip(&plans) {
                match levels {
                    None => {
                        let v = fv
                            .values
                            .get(s.name)
                            .copied()
                            .ok_or_else(|| Error::UnknownFeature(s.name.to_string()))?;
                        x.set(r, *col, T::of(v));
                    }
                    Some(map) => {
                        let label = fv.labels.get(s.name).map_or("", String::as_str);
                        x.set(r, map.get(label).copied().unwrap_or(*col), T::one());
                    }
                }
            }
        }
        Ok(DesignMatrix {
            feature_set: set.label(),
            columns,
            sources,
            x,
            y: self.targets.iter().map(|&v| T::of(v)).collect(),
            ids: self.ids.clone(),
            outlets: self.outlets.clone(),
        })
    }
}

/// The `max` most frequent labels (count descending, ties by label), sorted by label.
fn top_levels<'a>(labels: impl Iterator<Item = &'a str>, max: usize) -> Vec<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max);
    let mut out: Vec<String> = ranked.into_iter().map(|(l, _)| l.to_string()).collect();
    out.sort();
    out
}

/// Extracts features and assembles a design matrix in one step.
pub fn assemble_matrix<T: Scalar>(
    corpus: &Corpus,
    alpha: usize,
    set: &FeatureSet,
    encoding: &Encoding,
    providers: &Providers,
) -> Result<DesignMatrix<T>> {
    FeatureTable::build(corpus, alpha, providers)?.design(set, encoding)
}

/// Sorts feature names by schema position; unknown names go last.
pub fn schema_order(names: &mut [String]) {
    names.sort_by_key(|n| schema_index(n));
}
