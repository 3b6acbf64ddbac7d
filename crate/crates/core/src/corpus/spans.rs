use super::{CharMention, MentionSpan, RawDocument};

/// Splits text into sentence character ranges (Unicode scalar offsets).
///
/// Implementations must return ascending, non-overlapping ranges.
pub trait SentenceSplitter: Sync {
    fn split(&self, text: &str) -> Vec<(usize, usize)>;
}

/// Boundary after `.`, `!` or `?` when followed by whitespace and then an
/// uppercase letter or a digit.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleSentenceSplitter;

impl SentenceSplitter for RuleSentenceSplitter {
    fn split(&self, text: &str) -> Vec<(usize, usize)> {
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            if matches!(chars[i], '.' | '!' | '?') {
                let mut j = i + 1;
                while j < chars.len() && chars[j].is_whitespace() {
                    j += 1;
                }
                if j > i + 1 && j < chars.len() && (chars[j].is_uppercase() || chars[j].is_ascii_digit()) {
                    out.push((start, i + 1));
                    start = i + 1;
                    i = j;
                    continue;
                }
            }
            i += 1;
        }
        if start < chars.len() {
            out.push((start, chars.len()));
        }
        out
    }
}

/// A document after character-to-word conversion. Mention word offsets are
/// document-global (they index the concatenation of all sentences).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordDocument {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
    pub mentions: Vec<MentionSpan>,
    /// Mentions whose character boundaries did not coincide with word boundaries.
    pub dropped_invalid: usize,
    /// Mentions still carrying more than one gold id.
    pub dropped_composite: usize,
}

impl WordDocument {
    /// Global word index at which each sentence starts, plus the total word count.
    pub fn sentence_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.sentences.len() + 1);
        let mut acc = 0;
        offsets.push(0);
        for s in &self.sentences {
            acc += s.len();
            offsets.push(acc);
        }
        offsets
    }

    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.sentences.iter().flatten()
    }
}

/// Converts character-offset mentions to word spans.
///
/// `sentences` are character ranges; sentences containing no words are
/// skipped. A mention survives only when its start is the first character
/// of some word and its end is the last character (exclusive) of some word.
pub fn char_to_word_spans(doc: &RawDocument, sentences: &[(usize, usize)]) -> WordDocument {
    let chars: Vec<char> = doc.text.chars().collect();
    let mut out = WordDocument {
        doc_id: doc.doc_id.clone(),
        ..WordDocument::default()
    };
    // (char_start, char_end) of every word, in global word order
    let mut bounds: Vec<(usize, usize)> = Vec::new();
    for &(s, e) in sentences {
        let e = e.min(chars.len());
        let mut words = Vec::new();
        let mut i = s;
        while i < e {
            if chars[i].is_whitespace() {
                i += 1;
                continue;
            }
            let ws = i;
            while i < e && !chars[i].is_whitespace() {
                i += 1;
            }
            words.push(chars[ws..i].iter().collect::<String>());
            bounds.push((ws, i));
        }
        if !words.is_empty() {
            out.sentences.push(words);
        }
    }
    let flat: Vec<String> = out.sentences.iter().flatten().cloned().collect();

    for m in &doc.mentions {
        if m.gold_ids.len() != 1 {
            out.dropped_composite += 1;
            continue;
        }
        let start = bounds.binary_search_by_key(&m.start_char, |b| b.0);
        let end = bounds.binary_search_by_key(&m.end_char, |b| b.1);
        match (start, end) {
            (Ok(s), Ok(e)) if m.start_char < m.end_char && s <= e => {
                let span = MentionSpan::over(&flat, s, e + 1, m.gold_ids[0].clone())
                    .expect("bounds-derived span is valid");
                out.mentions.push(span);
            }
            _ => out.dropped_invalid += 1,
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompositeOutcome {
    /// Mention already has a single gold id.
    Single(CharMention),
    /// One mention per part.
    Split(Vec<CharMention>),
    /// Composite without usable part spans.
    Dropped,
}

/// Splits a composite mention (more than one gold id) into single-id parts
/// using its `sub_spans`. Parts must be non-empty and lie inside the
/// original mention; otherwise the mention is dropped.
pub fn split_composite(mention: &CharMention) -> CompositeOutcome {
    if mention.gold_ids.len() <= 1 {
        return CompositeOutcome::Single(mention.clone());
    }
    let Some(subs) = &mention.sub_spans else {
        return CompositeOutcome::Dropped;
    };
    if subs.len() != mention.gold_ids.len() {
        log::warn!(
            "composite mention [{},{}) has {} parts for {} ids; dropped",
            mention.start_char,
            mention.end_char,
            subs.len(),
            mention.gold_ids.len()
        );
        return CompositeOutcome::Dropped;
    }
    let valid = subs
        .iter()
        .all(|&(s, e)| s < e && s >= mention.start_char && e <= mention.end_char);
    if !valid {
        return CompositeOutcome::Dropped;
    }
    CompositeOutcome::Split(
        subs.iter()
            .zip(&mention.gold_ids)
            .map(|(&(s, e), id)| CharMention::new(s, e, id.clone()))
            .collect(),
    )
}
