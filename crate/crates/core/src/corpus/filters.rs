use std::collections::{BTreeSet, HashMap};

use super::{AnnotatedCorpus, MentionSpan, SentenceGroup, WordDocument};
use crate::error::{NedError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grouping {
    pub groups: Vec<SentenceGroup>,
    /// Mentions that straddled two groups.
    pub dropped_boundary: usize,
}

/// Groups consecutive sentences into non-overlapping windows of
/// `group_size`; the final group may be shorter. Mention offsets are
/// re-based to the group. Mentions crossing a group boundary are dropped.
pub fn group_sentences(doc: &WordDocument, group_size: usize) -> Result<Grouping> {
    if group_size == 0 {
        return Err(NedError::Argument("group_size must be at least 1".into()));
    }
    let offsets = doc.sentence_offsets();
    let mut groups = Vec::new();
    let mut placed = vec![false; doc.mentions.len()];
    for (gi, chunk_start) in (0..doc.sentences.len()).step_by(group_size).enumerate() {
        let chunk_end = (chunk_start + group_size).min(doc.sentences.len());
        let (lo, hi) = (offsets[chunk_start], offsets[chunk_end]);
        let words: Vec<String> = doc.sentences[chunk_start..chunk_end].concat();
        let mut mentions = Vec::new();
        for (mi, m) in doc.mentions.iter().enumerate() {
            if m.start_word >= lo && m.end_word <= hi {
                placed[mi] = true;
                mentions.push(MentionSpan {
                    start_word: m.start_word - lo,
                    end_word: m.end_word - lo,
                    surface: m.surface.clone(),
                    gold_id: m.gold_id.clone(),
                });
            }
        }
        groups.push(SentenceGroup {
            doc_id: doc.doc_id.clone(),
            group_index: gi,
            words,
            mentions,
        });
    }
    Ok(Grouping {
        groups,
        dropped_boundary: placed.iter().filter(|p| !**p).count(),
    })
}

/// Removes mentions spanning more than one sentence; returns the drop count.
pub fn drop_sentence_crossing(doc: &mut WordDocument) -> usize {
    let offsets = doc.sentence_offsets();
    let before = doc.mentions.len();
    doc.mentions.retain(|m| {
        // sentence containing the first word
        let s = offsets.partition_point(|&o| o <= m.start_word) - 1;
        m.end_word <= offsets[s + 1]
    });
    before - doc.mentions.len()
}

/// Greedy overlap removal: mentions are visited by ascending start, longer
/// first on equal start, and kept when they do not intersect any kept
/// mention. Touching spans do not overlap. Returns the kept mentions in
/// visiting order and the number dropped.
pub fn drop_overlapping(mentions: &[MentionSpan]) -> (Vec<MentionSpan>, usize) {
    let mut sorted: Vec<&MentionSpan> = mentions.iter().collect();
    sorted.sort_by(|a, b| {
        a.start_word
            .cmp(&b.start_word)
            .then(b.len().cmp(&a.len()))
            .then(a.gold_id.cmp(&b.gold_id))
    });
    let mut kept: Vec<MentionSpan> = Vec::with_capacity(sorted.len());
    let mut frontier = 0usize;
    for m in sorted {
        if kept.is_empty() || m.start_word >= frontier {
            frontier = frontier.max(m.end_word);
            kept.push(m.clone());
        }
    }
    let dropped = mentions.len() - kept.len();
    (kept, dropped)
}

/// Removes groups whose every distinct gold entity occurs in at least
/// `freq_threshold` other groups. Occurrence counts are computed once on
/// the input; mention-free groups are always kept. Returns the reduced
/// corpus and the number of removed groups.
pub fn downsample(corpus: &AnnotatedCorpus, freq_threshold: usize) -> (AnnotatedCorpus, usize) {
    let entity_sets: Vec<BTreeSet<&str>> = corpus
        .groups()
        .iter()
        .map(|g| g.mentions.iter().map(|m| m.gold_id.as_str()).collect())
        .collect();
    let mut group_counts: HashMap<&str, usize> = HashMap::new();
    for set in &entity_sets {
        for e in set {
            *group_counts.entry(e).or_default() += 1;
        }
    }
    let mut kept = Vec::with_capacity(corpus.groups().len());
    let mut removed = 0;
    for (g, set) in corpus.groups().iter().zip(&entity_sets) {
        let frequent = !set.is_empty() && set.iter().all(|e| group_counts[e] - 1 >= freq_threshold);
        if frequent {
            removed += 1;
        } else {
            kept.push(g.clone());
        }
    }
    let out = AnnotatedCorpus::new(corpus.split, kept).expect("subset of a valid corpus");
    (out, removed)
}
