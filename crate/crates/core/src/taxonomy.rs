//! Topic categorization: each topic takes the three categories most often
//! attached to its labeled articles, and articles inherit their topic's
//! categories.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Article, Corpus};
use crate::error::{Error, Result};

/// Number of categories kept per topic.
pub const TOP_K: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Politics,
    US,
    World,
    Sports,
    Entertainment,
    Technology,
    Business,
    Science,
    Health,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Politics,
        Category::US,
        Category::World,
        Category::Sports,
        Category::Entertainment,
        Category::Technology,
        Category::Business,
        Category::Science,
        Category::Health,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Politics => "Politics",
            Category::US => "US",
            Category::World => "World",
            Category::Sports => "Sports",
            Category::Entertainment => "Entertainment",
            Category::Technology => "Technology",
            Category::Business => "Business",
            Category::Science => "Science",
            Category::Health => "Health",
        }
    }

    /// Case-insensitive lookup; `None` for labels outside the fixed set.
    pub fn parse(label: &str) -> Option<Self> {
        let l = label.trim();
        Self::ALL
            .into_iter()
            .find(|c| c.as_str().eq_ignore_ascii_case(l))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub topic: String,
    /// At most [`TOP_K`] categories, count descending, ties by label.
    pub categories: Vec<(Category, usize)>,
    /// Articles on the topic carrying at least one known label.
    pub labeled: usize,
}

impl TopicAssignment {
    /// True when no article on the topic had a usable label.
    pub fn is_unassigned(&self) -> bool {
        self.categories.is_empty()
    }

    /// p(q|t) for each kept category.
    pub fn scores(&self) -> Vec<(Category, f64)> {
        self.categories
            .iter()
            .map(|&(c, n)| (c, n as f64 / self.labeled.max(1) as f64))
            .collect()
    }
}

fn explicit_labels(a: &Article) -> BTreeSet<Category> {
    a.categories
        .iter()
        .filter_map(|l| Category::parse(l))
        .collect()
}

fn rank(counts: BTreeMap<Category, usize>, labeled: usize, topic: &str) -> TopicAssignment {
    let mut v: Vec<(Category, usize)> = counts.into_iter().filter(|&(_, n)| n > 0).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.as_str().cmp(b.0.as_str())));
    v.truncate(TOP_K);
    TopicAssignment {
        topic: topic.to_string(),
        categories: v,
        labeled,
    }
}

/// Counts, for every category, the labeled articles on `topic` that carry it.
pub fn categorize_topic(topic: &str, corpus: &Corpus) -> TopicAssignment {
    let mut counts = BTreeMap::new();
    let mut labeled = 0;
    for a in corpus.articles.iter().filter(|a| a.topic == topic) {
        let labels = explicit_labels(a);
        if !labels.is_empty() {
            labeled += 1;
        }
        for c in labels {
            *counts.entry(c).or_insert(0) += 1;
        }
    }
    rank(counts, labeled, topic)
}

/// Assignments for every non-empty topic in the corpus, keyed by topic.
pub fn categorize_all(corpus: &Corpus) -> BTreeMap<String, TopicAssignment> {
    let mut acc: BTreeMap<&str, (BTreeMap<Category, usize>, usize)> = BTreeMap::new();
    for a in corpus.articles.iter().filter(|a| !a.topic.is_empty()) {
        let entry = acc.entry(a.topic.as_str()).or_default();
        let labels = explicit_labels(a);
        if !labels.is_empty() {
            entry.1 += 1;
        }
        for c in labels {
            *entry.0.entry(c).or_insert(0) += 1;
        }
    }
    acc.into_iter()
        .map(|(t, (counts, labeled))| (t.to_string(), rank(counts, labeled, t)))
        .collect()
}

/// Adds each article's topic categories to its own labels. Existing labels
/// keep their order; new ones are appended in assignment order.
pub fn propagate_categories(
    corpus: &Corpus,
    assignments: &BTreeMap<String, TopicAssignment>,
) -> Corpus {
    let mut out = corpus.clone();
    for a in &mut out.articles {
        let Some(asg) = assignments.get(&a.topic) else {
            continue;
        };
        for (c, _) in &asg.categories {
            if !a.categories.iter().any(|l| Category::parse(l) == Some(*c)) {
                a.categories.push(c.as_str().to_string());
            }
        }
    }
    out
}

/// Columns: topic, cat1..cat3, count1..count3, labeled. Missing slots are empty.
pub fn write_assignments_csv(
    assignments: &BTreeMap<String, TopicAssignment>,
    w: impl Write,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "topic", "cat1", "cat2", "cat3", "count1", "count2", "count3", "labeled",
    ])?;
    for a in assignments.values() {
        let mut rec = vec![a.topic.clone()];
        for i in 0..TOP_K {
            rec.push(
                a.categories
                    .get(i)
                    .map(|c| c.0.to_string())
                    .unwrap_or_default(),
            );
        }
        for i in 0..TOP_K {
            rec.push(
                a.categories
                    .get(i)
                    .map(|c| c.1.to_string())
                    .unwrap_or_default(),
            );
        }
        rec.push(a.labeled.to_string());
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Rejects a label list containing anything outside the fixed category set.
pub fn check_labels(labels: &[String]) -> Result<Vec<Category>> {
    labels
        .iter()
        .map(|l| {
            Category::parse(l).ok_or_else(|| Error::InvalidInput(format!("unknown category `{l}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn art(id: &str, topic: &str, cats: &[&str]) -> Article {
        Article {
            id: id.into(),
            outlet: "X".into(),
            published_at: 0,
            title: String::new(),
            body: String::new(),
            author: String::new(),
            topic: topic.into(),
            categories: cats.iter().map(|s| s.to_string()).collect(),
            topic_first_seen_at: None,
            comments: vec![],
        }
    }

    fn corpus_from_counts(topic: &str, counts: &[(&str, usize)]) -> Corpus {
        let mut arts = vec![];
        for (c, n) in counts {
            for i in 0..*n {
                arts.push(art(&format!("{c}{i}"), topic, &[c]));
            }
        }
        Corpus::new(arts).unwrap()
    }

    #[test]
    fn keeps_top_three() {
        let c = corpus_from_counts(
            "t",
            &[("Politics", 5), ("US", 3), ("World", 2), ("Health", 1)],
        );
        let a = categorize_topic("t", &c);
        let cats: Vec<_> = a.categories.iter().map(|c| c.0).collect();
        assert_eq!(cats, [Category::Politics, Category::US, Category::World]);
        assert_eq!(a.labeled, 11);
    }

    #[test]
    fn multi_label_topic() {
        let c = Corpus::new(vec![
            art("1", "trump", &["US", "Politics"]),
            art("2", "trump", &["World"]),
            art("3", "trump", &["US", "World", "Politics"]),
            art("4", "trump", &["Business"]),
        ])
        .unwrap();
        let a = categorize_topic("trump", &c);
        let cats: BTreeSet<_> = a.categories.iter().map(|c| c.0).collect();
        assert_eq!(
            cats,
            BTreeSet::from([Category::US, Category::World, Category::Politics])
        );
    }

    #[test]
    fn single_and_empty() {
        let c = corpus_from_counts("s", &[("Sports", 2)]);
        assert_eq!(
            categorize_topic("s", &c).categories,
            vec![(Category::Sports, 2)]
        );
        let c = Corpus::new(vec![art("1", "u", &[])]).unwrap();
        assert!(categorize_topic("u", &c).is_unassigned());
    }

    #[test]
    fn ties_are_lexicographic() {
        let c = corpus_from_counts(
            "t",
            &[("World", 1), ("Business", 1), ("US", 1), ("Health", 1)],
        );
        let cats: Vec<_> = categorize_topic("t", &c)
            .categories
            .iter()
            .map(|c| c.0)
            .collect();
        assert_eq!(cats, [Category::Business, Category::Health, Category::US]);
    }

    #[test]
    fn propagation_examples() {
        let c = Corpus::new(vec![
            art("a", "t", &["Politics"]),
            art("b", "t", &[]),
            art("c", "t2", &["Health"]),
            art("d", "lonely", &[]),
        ])
        .unwrap();
        let mut asg = categorize_all(&c);
        asg.get_mut("t2").unwrap().categories = vec![(Category::Politics, 1)];
        let p = propagate_categories(&c, &asg);
        assert_eq!(p.articles[1].categories, ["Politics"]);
        assert_eq!(p.articles[2].categories, ["Health", "Politics"]);
        assert!(p.articles[3].categories.is_empty());
        assert_eq!(propagate_categories(&p, &asg), p);
    }

    #[test]
    fn csv_layout() {
        let c = corpus_from_counts("t", &[("Sports", 2)]);
        let mut buf = Vec::new();
        write_assignments_csv(&categorize_all(&c), &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(
            s,
            "topic,cat1,cat2,cat3,count1,count2,count3,labeled\nt,Sports,,,2,,,2\n"
        );
    }
}
