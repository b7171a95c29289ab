//! Tokenization and the pluggable text-analysis providers used by feature
//! extraction: a sentiment scorer, a named-entity provider and an aggression
//! word list. The defaults are lexicon based and fully deterministic.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::TimezoneTable;
use crate::error::{Error, Result};

/// Lowercases, splits on whitespace and strips leading/trailing punctuation.
/// Tokens that are pure punctuation are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub fn count_tokens(text: &str) -> usize {
    text.split_whitespace()
        .filter(|w| w.chars().any(char::is_alphanumeric))
        .count()
}

pub fn has_url(text: &str) -> bool {
    text.split_whitespace().any(|w| {
        let w = w.trim_start_matches(|c: char| "([<\"'".contains(c));
        w.starts_with("http://") || w.starts_with("https://") || w.starts_with("www.")
    })
}

/// Reads a word list: one entry per line, blank lines and `#` comments skipped.
pub fn read_word_list(path: impl AsRef<Path>) -> Result<Vec<String>> {
    Ok(parse_word_list(&std::fs::read_to_string(path)?))
}

pub fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

/// Maps a text to a score in [0, 1]; 0 is overall negative, 1 overall positive.
pub trait SentimentScorer: Send + Sync {
    fn score(&self, text: &str) -> Result<f64>;
}

/// Ratio scorer over positive and negative word lists:
/// `0.5 + 0.5 * (pos - neg) / (pos + neg + 1)`.
#[derive(Clone, Debug)]
pub struct LexiconSentiment {
    positive: HashSet<String>,
    negative: HashSet<String>,
}

impl LexiconSentiment {
    pub fn new<I, J, S, T>(positive: I, negative: J) -> Self
    where
        I: IntoIterator<Item = S>,
        J: IntoIterator<Item = T>,
        S: AsRef<str>,
        T: AsRef<str>,
    {
        Self {
            positive: positive
                .into_iter()
                .map(|s| s.as_ref().to_lowercase())
                .collect(),
            negative: negative
                .into_iter()
                .map(|s| s.as_ref().to_lowercase())
                .collect(),
        }
    }

    pub fn load(positive: impl AsRef<Path>, negative: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(
            read_word_list(positive)?,
            read_word_list(negative)?,
        ))
    }
}

impl Default for LexiconSentiment {
    fn default() -> Self {
        Self::new(DEFAULT_POSITIVE, DEFAULT_NEGATIVE)
    }
}

impl SentimentScorer for LexiconSentiment {
    fn score(&self, text: &str) -> Result<f64> {
        let (mut pos, mut neg) = (0usize, 0usize);
        for t in tokenize(text) {
            if self.positive.contains(&t) {
                pos += 1;
            } else if self.negative.contains(&t) {
                neg += 1;
            }
        }
        Ok(0.5 + 0.5 * (pos as f64 - neg as f64) / (pos + neg + 1) as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EntityClass {
    Loc,
    Per,
    Org,
    Misc,
}

impl EntityClass {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LOC" | "LOCATION" => Some(Self::Loc),
            "PER" | "PERSON" => Some(Self::Per),
            "ORG" | "ORGANIZATION" => Some(Self::Org),
            "MISC" => Some(Self::Misc),
            _ => None,
        }
    }
}

impl fmt::Display for EntityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Loc => "LOC",
            Self::Per => "PER",
            Self::Org => "ORG",
            Self::Misc => "MISC",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    /// Exact substring of the input text.
    pub surface: String,
    pub class: EntityClass,
}

pub trait NerProvider: Send + Sync {
    fn entities(&self, text: &str) -> Result<Vec<Entity>>;
}

/// Dictionary matcher. Gazetteer entries are matched case-insensitively,
/// longest first, on word boundaries. Remaining capitalized words that do not
/// open a sentence are reported as `MISC`.
#[derive(Clone, Debug, Default)]
pub struct GazetteerNer {
    entries: Vec<(Vec<String>, EntityClass)>,
    max_words: usize,
    capitalized_fallback: bool,
}

impl GazetteerNer {
    pub fn new<S: AsRef<str>>(entries: impl IntoIterator<Item = (S, EntityClass)>) -> Self {
        let mut out: Vec<(Vec<String>, EntityClass)> = entries
            .into_iter()
            .map(|(s, c)| (tokenize(s.as_ref()), c))
            .filter(|(t, _)| !t.is_empty())
            .collect();
        // Longest entries first so multi-word names win.
        out.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        let max_words = out.iter().map(|e| e.0.len()).max().unwrap_or(0);
        Self {
            entries: out,
            max_words,
            capitalized_fallback: true,
        }
    }

    pub fn without_fallback(mut self) -> Self {
        self.capitalized_fallback = false;
        self
    }

    /// Parses `surface<TAB>CLASS` lines.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (surface, class) = line.split_once('\t').ok_or_else(|| Error::Parse {
                line: i + 1,
                field: "gazetteer".into(),
                message: "expected `surface<TAB>class`".into(),
            })?;
            let class = EntityClass::parse(class).ok_or_else(|| Error::Parse {
                line: i + 1,
                field: "class".into(),
                message: format!("unknown entity class `{class}`"),
            })?;
            entries.push((surface.to_string(), class));
        }
        Ok(Self::new(entries))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn default_gazetteer() -> Self {
        Self::new(DEFAULT_GAZETTEER.iter().map(|(s, c)| (*s, *c)))
    }
}

struct Word<'a> {
    start: usize,
    end: usize,
    norm: String,
    raw: &'a str,
    sentence_start: bool,
}

fn words(text: &str) -> Vec<Word<'_>> {
    let mut out = Vec::new();
    let mut sentence_start = true;
    let mut pos = 0;
    for raw in text.split_whitespace() {
        let offset = text[pos..].find(raw).map(|o| o + pos).unwrap_or(pos);
        pos = offset + raw.len();
        let trimmed = raw.trim_matches(|c: char| !c.is_alphanumeric());
        let ends_sentence = raw.ends_with(['.', '!', '?']);
        if !trimmed.is_empty() {
            let lead = raw.find(trimmed).unwrap_or(0);
            out.push(Word {
                start: offset + lead,
                end: offset + lead + trimmed.len(),
                norm: trimmed.to_lowercase(),
                raw: trimmed,
                sentence_start,
            });
            sentence_start = false;
        }
        if ends_sentence {
            sentence_start = true;
        }
    }
    out
}

impl NerProvider for GazetteerNer {
    fn entities(&self, text: &str) -> Result<Vec<Entity>> {
        let ws = words(text);
        let mut out = Vec::new();
        let mut i = 0;
        'outer: while i < ws.len() {
            for (entry, class) in &self.entries {
                let n = entry.len();
                if n <= ws.len() - i && ws[i..i + n].iter().zip(entry).all(|(w, e)| &w.norm == e) {
                    out.push(Entity {
                        surface: text[ws[i].start..ws[i + n - 1].end].to_string(),
                        class: *class,
                    });
                    i += n;
                    continue 'outer;
                }
            }
            let w = &ws[i];
            if self.capitalized_fallback
                && !w.sentence_start
                && w.raw.chars().count() > 1
                && w.raw.chars().next().is_some_and(char::is_uppercase)
            {
                out.push(Entity {
                    surface: w.raw.to_string(),
                    class: EntityClass::Misc,
                });
            }
            i += 1;
        }
        debug_assert!(
            self.max_words == 0 || self.entries.iter().all(|e| e.0.len() <= self.max_words)
        );
        Ok(out)
    }
}

/// Lowercased hostile/anger word list.
#[derive(Clone, Debug)]
pub struct AggressionLexicon {
    words: HashSet<String>,
}

impl AggressionLexicon {
    pub fn new<S: AsRef<str>>(words: impl IntoIterator<Item = S>) -> Result<Self> {
        let words: HashSet<String> = words
            .into_iter()
            .map(|w| w.as_ref().to_lowercase())
            .collect();
        if words.is_empty() {
            return Err(Error::InvalidConfig("aggression lexicon is empty".into()));
        }
        Ok(Self { words })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(read_word_list(path)?)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }
}

impl Default for AggressionLexicon {
    fn default() -> Self {
        Self::new(DEFAULT_AGGRESSION).expect("built-in list is non-empty")
    }
}

/// Everything feature extraction needs beyond the article itself.
pub struct Providers {
    pub sentiment: Box<dyn SentimentScorer>,
    pub ner: Box<dyn NerProvider>,
    pub aggression: AggressionLexicon,
    pub timezones: TimezoneTable,
}

impl Default for Providers {
    fn default() -> Self {
        Self {
            sentiment: Box::new(LexiconSentiment::default()),
            ner: Box::new(GazetteerNer::default_gazetteer()),
            aggression: AggressionLexicon::default(),
            timezones: TimezoneTable::default(),
        }
    }
}

impl Providers {
    pub fn with_timezones(mut self, timezones: TimezoneTable) -> Self {
        self.timezones = timezones;
        self
    }
}

pub const DEFAULT_POSITIVE: &[&str] = &[
    "good",
    "great",
    "excellent",
    "best",
    "love",
    "like",
    "happy",
    "agree",
    "right",
    "thanks",
    "nice",
    "well",
    "support",
    "hope",
    "win",
    "wonderful",
    "fair",
    "true",
    "brilliant",
    "glad",
    "honest",
    "strong",
    "success",
    "better",
    "positive",
    "beautiful",
    "safe",
    "proud",
    "respect",
];

pub const DEFAULT_NEGATIVE: &[&str] = &[
    "bad", "worst", "hate", "wrong", "terrible", "awful", "sad", "fail", "failed", "lie", "lies",
    "liar", "corrupt", "disgrace", "stupid", "poor", "weak", "crisis", "fear", "death", "killed",
    "war", "attack", "disaster", "shame", "angry", "never", "worse", "negative", "threat",
];

pub const DEFAULT_AGGRESSION: &[&str] = &[
    "hate",
    "kill",
    "killed",
    "attack",
    "stupid",
    "idiot",
    "idiots",
    "fool",
    "moron",
    "destroy",
    "angry",
    "rage",
    "fight",
    "furious",
    "damn",
    "disgusting",
    "liar",
    "crook",
    "traitor",
    "thug",
    "violent",
    "threat",
    "enemy",
    "hostile",
    "shut",
    "pathetic",
    "scum",
    "loser",
];

pub const DEFAULT_GAZETTEER: &[(&str, EntityClass)] = &[
    ("Washington", EntityClass::Loc),
    ("New York", EntityClass::Loc),
    ("London", EntityClass::Loc),
    ("Paris", EntityClass::Loc),
    ("Syria", EntityClass::Loc),
    ("Iowa", EntityClass::Loc),
    ("Europe", EntityClass::Loc),
    ("China", EntityClass::Loc),
    ("Russia", EntityClass::Loc),
    ("Donald Trump", EntityClass::Per),
    ("Trump", EntityClass::Per),
    ("Hillary Clinton", EntityClass::Per),
    ("Clinton", EntityClass::Per),
    ("Obama", EntityClass::Per),
    ("Bernie Sanders", EntityClass::Per),
    ("Putin", EntityClass::Per),
    ("Congress", EntityClass::Org),
    ("Senate", EntityClass::Org),
    ("FBI", EntityClass::Org),
    ("NATO", EntityClass::Org),
    ("Google", EntityClass::Org),
    ("Apple", EntityClass::Org),
    ("United Nations", EntityClass::Org),
    ("Olympics", EntityClass::Misc),
    ("Brexit", EntityClass::Misc),
    ("Ebola", EntityClass::Misc),
];
