//! Annotated corpora and the preprocessing chain that turns raw documents
//! with character-offset annotations into grouped, word-indexed mentions.

mod abbrev;
mod adapters;
mod filters;
mod preprocess;
mod spans;
mod stats;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};
use crate::text;

pub use abbrev::{expand_abbreviations, AbbreviationPair, Expansion, TextEdit};
pub use adapters::{load_raw_documents, parse_pubtator, parse_raw_jsonl, RawFormat};
pub use filters::{downsample, drop_overlapping, drop_sentence_crossing, group_sentences, Grouping};
pub use preprocess::{preprocess, preprocess_document, DropReport, PreprocessOptions};
pub use spans::{
    char_to_word_spans, split_composite, CompositeOutcome, RuleSentenceSplitter,
    SentenceSplitter, WordDocument,
};
pub use stats::{ambiguity_stats, corpus_stats, AmbiguityStats, CorpusStats};

/// A character-offset annotation on a raw document. Offsets count Unicode
/// scalar values; `end_char` is exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharMention {
    pub start_char: usize,
    pub end_char: usize,
    /// More than one id marks a composite mention.
    pub gold_ids: Vec<String>,
    /// Per-part character spans of a composite mention, aligned with `gold_ids`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_spans: Option<Vec<(usize, usize)>>,
}

impl CharMention {
    pub fn new(start_char: usize, end_char: usize, gold_id: impl Into<String>) -> Self {
        CharMention {
            start_char,
            end_char,
            gold_ids: vec![gold_id.into()],
            sub_spans: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub text: String,
    #[serde(default)]
    pub mentions: Vec<CharMention>,
    /// Optional pre-computed sentence character ranges. When absent the
    /// configured sentence splitter is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentences: Option<Vec<(usize, usize)>>,
}

/// A word-indexed mention inside a [`SentenceGroup`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MentionSpan {
    pub start_word: usize,
    pub end_word: usize,
    #[serde(skip)]
    pub surface: String,
    pub gold_id: String,
}

impl MentionSpan {
    /// Builds a span over `words`, deriving the surface string.
    pub fn over(words: &[String], start_word: usize, end_word: usize, gold_id: impl Into<String>) -> Result<Self> {
        if start_word >= end_word || end_word > words.len() {
            return Err(NedError::InvalidSpan(format!(
                "[{start_word},{end_word}) over {} words",
                words.len()
            )));
        }
        Ok(MentionSpan {
            start_word,
            end_word,
            surface: words[start_word..end_word].join(" "),
            gold_id: gold_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.end_word - self.start_word
    }

    pub fn is_empty(&self) -> bool {
        self.end_word <= self.start_word
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceGroup {
    pub doc_id: String,
    pub group_index: usize,
    pub words: Vec<String>,
    #[serde(default)]
    pub mentions: Vec<MentionSpan>,
}

impl SentenceGroup {
    fn validate(&mut self) -> std::result::Result<(), String> {
        if self.words.is_empty() {
            return Err("sentence group has no words".into());
        }
        for w in &self.words {
            if w.chars().any(char::is_whitespace) || w.is_empty() {
                return Err(format!("word {w:?} is empty or contains whitespace"));
            }
            if let Some(m) = text::find_marker(w) {
                return Err(format!("reserved token {m} in source text"));
            }
        }
        for m in &mut self.mentions {
            if m.start_word >= m.end_word || m.end_word > self.words.len() {
                return Err(format!(
                    "mention [{},{}) outside {} words",
                    m.start_word,
                    m.end_word,
                    self.words.len()
                ));
            }
            m.surface = self.words[m.start_word..m.end_word].join(" ");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
    Pretrain,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::Dev, Split::Test, Split::Pretrain];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Pretrain => "pretrain",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = NedError;

    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| NedError::Argument(format!("unknown split `{s}`")))
    }
}

/// Identifies one mention: document, group within the document, and index
/// of the mention inside the group.
///
/// The textual form is `doc_id:group_index:mention_index`; it is parsed
/// from the right so document ids may themselves contain colons.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MentionRef {
    pub doc_id: String,
    pub group_index: usize,
    pub mention_index: usize,
}

impl MentionRef {
    pub fn new(doc_id: impl Into<String>, group_index: usize, mention_index: usize) -> Self {
        MentionRef {
            doc_id: doc_id.into(),
            group_index,
            mention_index,
        }
    }
}

impl fmt::Display for MentionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.doc_id, self.group_index, self.mention_index)
    }
}

impl FromStr for MentionRef {
    type Err = NedError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || NedError::Argument(format!("malformed mention ref `{s}`"));
        let mut parts = s.rsplitn(3, ':');
        let mention_index = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let group_index = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
        let doc_id = parts.next().filter(|d| !d.is_empty()).ok_or_else(bad)?;
        Ok(MentionRef::new(doc_id, group_index, mention_index))
    }
}

/// Sentence groups of one split, ordered by `(doc_id, group_index)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotatedCorpus {
    pub split: Split,
    groups: Vec<SentenceGroup>,
}

impl AnnotatedCorpus {
    /// Sorts groups by `(doc_id, group_index)` and rejects duplicate keys.
    pub fn new(split: Split, mut groups: Vec<SentenceGroup>) -> Result<Self> {
        groups.sort_by(|a, b| (&a.doc_id, a.group_index).cmp(&(&b.doc_id, b.group_index)));
        for w in groups.windows(2) {
            if w[0].doc_id == w[1].doc_id && w[0].group_index == w[1].group_index {
                return Err(NedError::DuplicateId(format!(
                    "{}:{}",
                    w[0].doc_id, w[0].group_index
                )));
            }
        }
        Ok(AnnotatedCorpus { split, groups })
    }

    pub fn groups(&self) -> &[SentenceGroup] {
        &self.groups
    }

    pub fn into_groups(self) -> Vec<SentenceGroup> {
        self.groups
    }

    /// Iterates every mention with its reference and owning group.
    pub fn mentions(&self) -> impl Iterator<Item = (MentionRef, &SentenceGroup, &MentionSpan)> {
        self.groups.iter().flat_map(|g| {
            g.mentions
                .iter()
                .enumerate()
                .map(move |(i, m)| (MentionRef::new(g.doc_id.clone(), g.group_index, i), g, m))
        })
    }

    pub fn mention_count(&self) -> usize {
        self.groups.iter().map(|g| g.mentions.len()).sum()
    }

    pub fn doc_ids(&self) -> BTreeSet<&str> {
        self.groups.iter().map(|g| g.doc_id.as_str()).collect()
    }

    pub fn parse_jsonl(split: Split, source: &str, content: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for (line, raw) in text::content_lines(content) {
            let mut g: SentenceGroup =
                serde_json::from_str(raw).map_err(|e| NedError::parse(source, line, e))?;
            g.validate().map_err(|m| NedError::parse(source, line, m))?;
            groups.push(g);
        }
        AnnotatedCorpus::new(split, groups)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&serde_json::to_string(g).expect("group serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        text::write_file(path, &self.to_jsonl())
    }
}

pub fn load_corpus(path: &Path, split: Split) -> Result<AnnotatedCorpus> {
    let content = text::read_to_string(path)?;
    AnnotatedCorpus::parse_jsonl(split, &path.display().to_string(), &content)
}
