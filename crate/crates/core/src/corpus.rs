//! Articles, comment threads and the JSONL corpus format.
//!
//! A corpus file holds one article object per line. Comments are embedded in
//! the article and carry integer epoch-second timestamps. Unknown fields are
//! ignored. After loading, comments of every article are sorted by timestamp
//! (stable, so ties keep file order).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the target window in seconds: one week.
pub const WEEK_SECONDS: i64 = 7 * 24 * 3600;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    /// Absent for top-level comments that answer the article directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub timestamp: i64,
    pub author: String,
    pub text: String,
    #[serde(default)]
    pub likes: u32,
    #[serde(default)]
    pub dislikes: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub outlet: String,
    pub published_at: i64,
    pub title: String,
    pub body: String,
    pub author: String,
    pub topic: String,
    #[serde(default)]
    pub categories: Vec<String>,
    /// When the article's topic first appeared on the news aggregator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_first_seen_at: Option<i64>,
    #[serde(default)]
    pub comments: Vec<Comment>,
}

impl Article {
    /// End of the target window (inclusive).
    pub fn window_end(&self) -> i64 {
        self.published_at + WEEK_SECONDS
    }

    /// Comments posted within one week of publication. Relies on the sorted order.
    pub fn window_comments(&self) -> &[Comment] {
        let end = self.window_end();
        let n = self.comments.partition_point(|c| c.timestamp <= end);
        &self.comments[..n]
    }

    /// The earliest `alpha` comments of the window, or fewer if the window is short.
    pub fn first_comments(&self, alpha: usize) -> &[Comment] {
        let w = self.window_comments();
        &w[..alpha.min(w.len())]
    }

    fn sort_comments(&mut self) {
        self.comments.sort_by_key(|c| c.timestamp);
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let mut ids = HashMap::with_capacity(self.comments.len());
        for c in &self.comments {
            if c.timestamp < self.published_at {
                return Err(format!(
                    "comment `{}` timestamp {} precedes published_at {}",
                    c.id, c.timestamp, self.published_at
                ));
            }
            if ids.insert(c.id.as_str(), c.timestamp).is_some() {
                return Err(format!("duplicate comment id `{}`", c.id));
            }
        }
        for c in &self.comments {
            if let Some(p) = &c.parent_id {
                match ids.get(p.as_str()) {
                    None => {
                        return Err(format!(
                            "comment `{}` replies to unknown comment `{p}`",
                            c.id
                        ))
                    }
                    Some(&t) if t > c.timestamp => {
                        return Err(format!(
                            "comment `{}` is earlier than its parent `{p}`",
                            c.id
                        ))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub articles: Vec<Article>,
}

impl Corpus {
    /// Builds a corpus, sorting comments and enforcing id uniqueness and the
    /// timestamp invariants.
    pub fn new(mut articles: Vec<Article>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(articles.len());
        for a in &mut articles {
            if !seen.insert(a.id.clone()) {
                return Err(Error::DuplicateId(a.id.clone()));
            }
            a.sort_comments();
            a.validate().map_err(Error::Invariant)?;
        }
        Ok(Self { articles })
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    pub fn outlets(&self) -> BTreeSet<&str> {
        self.articles.iter().map(|a| a.outlet.as_str()).collect()
    }

    pub fn categories(&self) -> BTreeSet<&str> {
        self.articles
            .iter()
            .flat_map(|a| a.categories.iter().map(String::as_str))
            .collect()
    }

    pub fn eligible(&self, alpha: usize) -> impl Iterator<Item = &Article> {
        self.articles.iter().filter(move |a| eligible(a, alpha))
    }

    /// Articles of one outlet, cloned into a new corpus.
    pub fn filter_outlet(&self, outlet: &str) -> Corpus {
        Corpus {
            articles: self
                .articles
                .iter()
                .filter(|a| a.outlet == outlet)
                .cloned()
                .collect(),
        }
    }
}

/// Reads a JSONL corpus. Blank lines are skipped.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let file = File::open(path)?;
    read_corpus(BufReader::new(file))
}

pub fn read_corpus(reader: impl BufRead) -> Result<Corpus> {
    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(&line);
        let mut article: Article = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            Error::Parse {
                line: lineno,
                field: if field == "." { "<root>".into() } else { field },
                message: e.into_inner().to_string(),
            }
        })?;
        if !seen.insert(article.id.clone()) {
            return Err(Error::Parse {
                line: lineno,
                field: "id".into(),
                message: format!("duplicate article id `{}`", article.id),
            });
        }
        article.sort_comments();
        article.validate().map_err(|message| Error::Parse {
            line: lineno,
            field: "comments".into(),
            message,
        })?;
        articles.push(article);
    }
    Ok(Corpus { articles })
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_corpus(corpus, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_corpus(corpus: &Corpus, w: &mut impl Write) -> Result<()> {
    for a in &corpus.articles {
        write_article(a, w)?;
    }
    Ok(())
}

pub fn write_article(article: &Article, w: &mut impl Write) -> Result<()> {
    serde_json::to_writer(&mut *w, article)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Per-outlet timezone offsets, read from a `outlet = minutes` sidecar file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TimezoneTable {
    offsets: BTreeMap<String, i32>,
}

impl TimezoneTable {
    pub fn parse(text: &str) -> Result<Self> {
        let mut offsets = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .or_else(|| line.split_once(':'))
                .ok_or_else(|| Error::Parse {
                    line: i + 1,
                    field: "offset".into(),
                    message: format!("expected `outlet = minutes`, got `{line}`"),
                })?;
            let minutes = v.trim().parse::<i32>().map_err(|e| Error::Parse {
                line: i + 1,
                field: k.trim().into(),
                message: e.to_string(),
            })?;
            offsets.insert(k.trim().to_string(), minutes);
        }
        Ok(Self { offsets })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn insert(&mut self, outlet: impl Into<String>, minutes: i32) {
        self.offsets.insert(outlet.into(), minutes);
    }

    /// Offset in minutes east of UTC; outlets without an entry are treated as UTC.
    pub fn offset_minutes(&self, outlet: &str) -> i32 {
        self.offsets.get(outlet).copied().unwrap_or(0)
    }

    pub fn to_text(&self) -> String {
        self.offsets
            .iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Base-10 log of the number of comments posted within a week of publication.
pub fn compute_target(article: &Article) -> Result<f64> {
    match article.window_comments().len() {
        0 => Err(Error::NoTarget(article.id.clone())),
        n => Ok((n as f64).log10()),
    }
}

/// Whether the article has at least `alpha` comments in the target window.
pub fn eligible(article: &Article, alpha: usize) -> bool {
    article.window_comments().len() >= alpha
}

/// Reply tree over the first `alpha` comments. The article is the implicit
/// root at level 0; comments occupy levels `1..=depth`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplyTree {
    /// Parent index per node, `None` for children of the article.
    pub parents: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    pub root_children: Vec<usize>,
    /// Level of each node, starting at 1.
    pub levels: Vec<usize>,
}

impl ReplyTree {
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.levels.iter().copied().max().unwrap_or(0)
    }

    /// Node counts for levels 1..=depth.
    pub fn level_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.depth()];
        for &l in &self.levels {
            counts[l - 1] += 1;
        }
        counts
    }
}

pub fn build_reply_tree(article: &Article, alpha: usize) -> Result<ReplyTree> {
    let window = article.window_comments();
    if window.len() < alpha {
        return Err(Error::NotEligible {
            id: article.id.clone(),
            have: window.len(),
            need: alpha,
        });
    }
    let nodes = &window[..alpha];
    let index: HashMap<&str, usize> = nodes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.id.as_str(), i))
        .collect();
    let parents: Vec<Option<usize>> = nodes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            c.parent_id
                .as_deref()
                .and_then(|p| index.get(p).copied())
                .filter(|&p| p != i)
        })
        .collect();

    let mut children = vec![Vec::new(); alpha];
    let mut root_children = Vec::new();
    for (i, p) in parents.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(i),
            None => root_children.push(i),
        }
    }

    // Breadth-first from the root; anything unreached sits on a cycle.
    let mut levels = vec![0usize; alpha];
    let mut frontier = root_children.clone();
    let mut level = 1;
    let mut reached = 0;
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &n in &frontier {
            levels[n] = level;
            reached += 1;
            next.extend_from_slice(&children[n]);
        }
        frontier = next;
        level += 1;
    }
    if reached != alpha {
        return Err(Error::Cycle(article.id.clone()));
    }
    Ok(ReplyTree {
        parents,
        children,
        root_children,
        levels,
    })
}

/// Assignment of article ids to cross-validation folds.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: BTreeMap<String, usize>,
}

impl FoldPlan {
    /// Shuffles the ids (sorted first, so input order does not matter) and
    /// deals them round-robin into `k` folds.
    pub fn from_ids<S: AsRef<str>>(ids: &[S], k: usize, seed: u64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
        }
        if ids.len() < k {
            return Err(Error::Insufficient(format!(
                "{} articles cannot fill {k} folds",
                ids.len()
            )));
        }
        let mut sorted: Vec<&str> = ids.iter().map(AsRef::as_ref).collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::DuplicateId(
                sorted
                    .windows(2)
                    .find(|w| w[0] == w[1])
                    .map(|w| w[0].to_string())
                    .unwrap_or_default(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sorted.shuffle(&mut rng);
        let assignment = sorted
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id.to_string(), i % k))
            .collect();
        Ok(Self { k, assignment })
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.assignment.get(id).copied()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Fold plan over the articles eligible at `alpha`.
pub fn split_folds(corpus: &Corpus, alpha: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    let ids: Vec<&str> = corpus.eligible(alpha).map(|a| a.id.as_str()).collect();
    FoldPlan::from_ids(&ids, k, seed)
}
