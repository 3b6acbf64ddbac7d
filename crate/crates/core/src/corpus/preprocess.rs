use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::abbrev::{expand_abbreviations, remap_range};
use super::filters::{drop_overlapping, drop_sentence_crossing, group_sentences};
use super::spans::{char_to_word_spans, split_composite, CompositeOutcome, SentenceSplitter};
use super::{AnnotatedCorpus, CharMention, RawDocument, SentenceGroup, Split};
use crate::error::{NedError, Result};
use crate::text;

/// Each filter is an independent switch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessOptions {
    pub expand_abbreviations: bool,
    pub split_composites: bool,
    pub drop_sentence_crossing: bool,
    pub drop_overlapping: bool,
    pub group_size: usize,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        PreprocessOptions {
            expand_abbreviations: true,
            split_composites: true,
            drop_sentence_crossing: true,
            drop_overlapping: true,
            group_size: 3,
        }
    }
}

/// Mentions removed by each rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropReport {
    pub input_mentions: usize,
    pub composite_unsplittable: usize,
    pub abbreviation_misaligned: usize,
    pub invalid_span: usize,
    pub sentence_crossing: usize,
    pub group_boundary: usize,
    pub overlapping: usize,
    pub output_mentions: usize,
}

impl DropReport {
    fn merge(mut self, o: DropReport) -> DropReport {
        self.input_mentions += o.input_mentions;
        self.composite_unsplittable += o.composite_unsplittable;
        self.abbreviation_misaligned += o.abbreviation_misaligned;
        self.invalid_span += o.invalid_span;
        self.sentence_crossing += o.sentence_crossing;
        self.group_boundary += o.group_boundary;
        self.overlapping += o.overlapping;
        self.output_mentions += o.output_mentions;
        self
    }
}

/// Runs the full chain on one document: abbreviation expansion, composite
/// splitting, sentence splitting, span conversion, the optional sentence
/// crossing filter, grouping and the optional overlap filter.
pub fn preprocess_document(
    doc: &RawDocument,
    opts: &PreprocessOptions,
    splitter: &dyn SentenceSplitter,
) -> Result<(Vec<SentenceGroup>, DropReport)> {
    let mut report = DropReport {
        input_mentions: doc.mentions.len(),
        ..DropReport::default()
    };
    let mut working = doc.clone();

    if opts.expand_abbreviations {
        let exp = expand_abbreviations(&doc.text);
        if !exp.edits.is_empty() {
            let mut mentions = Vec::with_capacity(doc.mentions.len());
            for m in &doc.mentions {
                let Some((s, e)) = remap_range(&exp.edits, m.start_char, m.end_char) else {
                    report.abbreviation_misaligned += 1;
                    continue;
                };
                let sub_spans = m.sub_spans.as_ref().and_then(|subs| {
                    subs.iter()
                        .map(|&(a, b)| remap_range(&exp.edits, a, b))
                        .collect::<Option<Vec<_>>>()
                });
                mentions.push(CharMention {
                    start_char: s,
                    end_char: e,
                    gold_ids: m.gold_ids.clone(),
                    sub_spans,
                });
            }
            working.sentences = doc.sentences.as_ref().map(|ranges| {
                ranges
                    .iter()
                    .map(|&(a, b)| {
                        remap_range(&exp.edits, a, b).unwrap_or_else(|| {
                            // an edit straddling a sentence edge stays in the earlier sentence
                            let s = remap_range(&exp.edits, a, a).map_or(a, |r| r.0);
                            let e = remap_range(&exp.edits, b, b).map_or(b, |r| r.0);
                            (s, e)
                        })
                    })
                    .collect()
            });
            working.text = exp.expanded_text;
            working.mentions = mentions;
        }
    }

    let mut singles = Vec::with_capacity(working.mentions.len());
    for m in &working.mentions {
        match split_composite(m) {
            CompositeOutcome::Single(m) => singles.push(m),
            CompositeOutcome::Split(parts) if opts.split_composites => singles.extend(parts),
            CompositeOutcome::Split(_) | CompositeOutcome::Dropped => {
                report.composite_unsplittable += 1
            }
        }
    }
    working.mentions = singles;

    let sentences = match &working.sentences {
        Some(s) => s.clone(),
        None => splitter.split(&working.text),
    };
    let mut wd = char_to_word_spans(&working, &sentences);
    report.invalid_span += wd.dropped_invalid;
    report.composite_unsplittable += wd.dropped_composite;

    for w in wd.words() {
        if let Some(m) = text::find_marker(w) {
            return Err(NedError::InvalidData(format!(
                "document `{}` contains reserved token {m}",
                doc.doc_id
            )));
        }
    }

    if opts.drop_sentence_crossing {
        report.sentence_crossing += drop_sentence_crossing(&mut wd);
    }
    let grouping = group_sentences(&wd, opts.group_size)?;
    report.group_boundary += grouping.dropped_boundary;

    let mut groups = grouping.groups;
    for g in &mut groups {
        if opts.drop_overlapping {
            let (kept, dropped) = drop_overlapping(&g.mentions);
            report.overlapping += dropped;
            g.mentions = kept;
        } else {
            g.mentions.sort_by(|a, b| {
                (a.start_word, b.end_word, &a.gold_id).cmp(&(b.start_word, a.end_word, &b.gold_id))
            });
        }
        report.output_mentions += g.mentions.len();
    }
    Ok((groups, report))
}

/// Preprocesses documents in parallel. Output order is fixed by
/// `(doc_id, group_index)` regardless of scheduling. Documents with a
/// repeated `doc_id` are rejected.
pub fn preprocess(
    docs: &[RawDocument],
    split: Split,
    opts: &PreprocessOptions,
    splitter: &dyn SentenceSplitter,
) -> Result<(AnnotatedCorpus, DropReport)> {
    if opts.group_size == 0 {
        return Err(NedError::Argument("group_size must be at least 1".into()));
    }
    let results: Vec<(Vec<SentenceGroup>, DropReport)> = docs
        .par_iter()
        .map(|d| preprocess_document(d, opts, splitter))
        .collect::<Result<_>>()?;
    let mut groups = Vec::new();
    let mut report = DropReport::default();
    for (g, r) in results {
        groups.extend(g);
        report = report.merge(r);
    }
    Ok((AnnotatedCorpus::new(split, groups)?, report))
}
