#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use commentvol::corpus::{Article, Comment, Corpus};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const WORDS: &[&str] = &[
    "the",
    "Vote",
    "vote",
    "vote!",
    "(vote)",
    "war?",
    "Obama",
    "Paris",
    "really",
    "--",
    "no",
    "good",
    "bad",
    "http://example.com/x",
    "www.news.org",
    "42",
    "fake",
    "truth.",
    "¿qué?",
    "...",
    "IDIOT",
];

pub fn comment(id: &str, parent: Option<&str>, ts: i64, text: &str) -> Comment {
    Comment {
        id: id.into(),
        parent_id: parent.map(Into::into),
        timestamp: ts,
        author: "u".into(),
        text: text.into(),
        likes: 0,
        dislikes: 0,
    }
}

pub fn article(id: &str, outlet: &str, published_at: i64, comments: Vec<Comment>) -> Article {
    Article {
        id: id.into(),
        outlet: outlet.into(),
        published_at,
        title: "Title".into(),
        body: "Body text".into(),
        author: "a".into(),
        topic: "t".into(),
        categories: vec![],
        topic_first_seen_at: None,
        comments,
    }
}

pub fn random_text(rng: &mut ChaCha8Rng, max_words: usize) -> String {
    let n = rng.random_range(0..=max_words);
    (0..n)
        .map(|_| *WORDS.choose(rng).unwrap())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Article with `n` comments at strictly increasing times; each comment
/// replies to a random earlier one with probability `reply_p`.
pub fn random_thread(rng: &mut ChaCha8Rng, id: &str, n: usize, reply_p: f64) -> Article {
    let published = 1_450_000_000 + rng.random_range(0..1_000_000);
    let mut t = published;
    let mut comments: Vec<Comment> = Vec::with_capacity(n);
    for k in 0..n {
        t += rng.random_range(1..600);
        let parent = if k > 0 && rng.random_bool(reply_p) {
            Some(comments[rng.random_range(0..k)].id.clone())
        } else {
            None
        };
        let mut c = comment(
            &format!("{id}-c{k}"),
            parent.as_deref(),
            t,
            &random_text(rng, 12),
        );
        c.author = format!("user{}", rng.random_range(0..5));
        comments.push(c);
    }
    article(id, "X", published, comments)
}

pub fn brute_r2(y: &[f64], p: &[f64]) -> f64 {
    let n = y.len() as f64;
    let mut mean = 0.0;
    for v in y {
        mean += v;
    }
    mean /= n;
    let mut sse = 0.0;
    let mut sst = 0.0;
    for i in 0..y.len() {
        sse += (y[i] - p[i]) * (y[i] - p[i]);
        sst += (y[i] - mean) * (y[i] - mean);
    }
    1.0 - sse / sst
}

pub fn brute_mae(y: &[f64], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..y.len() {
        s += if y[i] > p[i] {
            y[i] - p[i]
        } else {
            p[i] - y[i]
        };
    }
    s / y.len() as f64
}

pub fn brute_rate(ts: &[i64], alpha: usize) -> f64 {
    let secs = ts[alpha - 1] - ts[0];
    if secs < 1 {
        alpha as f64 * 60.0
    } else {
        alpha as f64 * 60.0 / secs as f64
    }
}

fn brute_tokens(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for word in text.split(char::is_whitespace) {
        let chars: Vec<char> = word.chars().collect();
        let Some(first) = chars.iter().position(|c| c.is_alphanumeric()) else {
            continue;
        };
        let last = chars.iter().rposition(|c| c.is_alphanumeric()).unwrap();
        out.push(
            chars[first..=last]
                .iter()
                .collect::<String>()
                .to_lowercase(),
        );
    }
    out
}

pub fn brute_complexity(texts: &[&str]) -> f64 {
    let tokens: Vec<String> = texts.iter().flat_map(|t| brute_tokens(t)).collect();
    if tokens.is_empty() {
        return 0.0;
    }
    let mut distinct = tokens.clone();
    distinct.sort();
    distinct.dedup();
    let u = distinct.len() as f64;
    let mut s = 0.0;
    for d in &distinct {
        let tf = tokens.iter().filter(|t| *t == d).count() as f64;
        s += tf * (u.ln() - tf.ln());
    }
    s / u
}

/// Depth and width of the reply forest over the first `alpha` comments,
/// found by walking each comment's parent chain.
pub fn brute_depth_width(comments: &[Comment], alpha: usize) -> (usize, usize) {
    let first = &comments[..alpha];
    let level = |mut i: usize| {
        let mut l = 1;
        while let Some(p) = &first[i].parent_id {
            match first.iter().position(|c| &c.id == p) {
                Some(j) if j != i => {
                    i = j;
                    l += 1;
                }
                _ => break,
            }
        }
        l
    };
    let mut per_level: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..alpha {
        *per_level.entry(level(i)).or_default() += 1;
    }
    let depth = per_level.keys().copied().max().unwrap_or(0);
    let width = per_level.values().copied().max().unwrap_or(0);
    (depth, width)
}

pub fn brute_overlap(art: &[String], com: &[String]) -> (f64, f64) {
    let a: BTreeSet<&String> = art.iter().collect();
    let c: BTreeSet<&String> = com.iter().collect();
    let both = a.iter().filter(|x| c.contains(*x)).count() as f64;
    let ia = if a.is_empty() {
        0.0
    } else {
        both / a.len() as f64
    };
    let ic = if c.is_empty() {
        0.0
    } else {
        both / c.len() as f64
    };
    (ia, ic)
}

/// Solves `[1 X] beta = y` in the least-squares sense through the normal
/// equations and Gaussian elimination with partial pivoting. Returns
/// `(intercept, coefficients)`.
#[allow(clippy::needless_range_loop)]
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> (f64, Vec<f64>) {
    let p = x[0].len() + 1;
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in x.iter().zip(y) {
        let z: Vec<f64> = std::iter::once(1.0).chain(row.iter().copied()).collect();
        for i in 0..p {
            for j in 0..p {
                a[i][j] += z[i] * z[j];
            }
            a[i][p] += z[i] * yi;
        }
    }
    for col in 0..p {
        let piv = (col..p)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        a.swap(col, piv);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    let beta: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    (beta[0], beta[1..].to_vec())
}

/// Category counts per topic by direct enumeration of labels.
pub fn brute_topic_counts(corpus: &Corpus, topic: &str) -> (Vec<(String, usize)>, usize) {
    const KNOWN: [&str; 9] = [
        "Politics",
        "US",
        "World",
        "Sports",
        "Entertainment",
        "Technology",
        "Business",
        "Science",
        "Health",
    ];
    let mut counts = Vec::new();
    let mut labeled = 0;
    let on_topic: Vec<&Article> = corpus
        .articles
        .iter()
        .filter(|a| a.topic == topic)
        .collect();
    for a in &on_topic {
        if a.categories
            .iter()
            .any(|l| KNOWN.iter().any(|k| k.eq_ignore_ascii_case(l.trim())))
        {
            labeled += 1;
        }
    }
    for k in KNOWN {
        let n = on_topic
            .iter()
            .filter(|a| {
                a.categories
                    .iter()
                    .any(|l| k.eq_ignore_ascii_case(l.trim()))
            })
            .count();
        if n > 0 {
            counts.push((k.to_string(), n));
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    counts.truncate(3);
    (counts, labeled)
}

pub fn random_labeled_corpus(rng: &mut ChaCha8Rng, articles: usize, topics: usize) -> Corpus {
    const LABELS: [&str; 11] = [
        "Politics",
        "us",
        "World",
        "SPORTS",
        "Entertainment",
        "Technology",
        "Business",
        "Science",
        "Health",
        "Weather",
        "",
    ];
    let arts = (0..articles)
        .map(|i| {
            let mut a = article(&format!("a{i}"), "X", 0, vec![]);
            a.topic = format!("topic{}", rng.random_range(0..topics));
            let k = rng.random_range(0..4);
            a.categories = (0..k)
                .map(|_| LABELS.choose(rng).unwrap().to_string())
                .collect();
            a
        })
        .collect();
    Corpus::new(arts).unwrap()
}

pub fn sample_var(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
}
