use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::AnnotatedCorpus;
use crate::text::fold;

/// Mention-string ambiguity: a folded surface is ambiguous when it is
/// annotated with two or more distinct entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityStats {
    pub unique_mention_count: usize,
    pub ambiguous_mention_count: usize,
    pub ambiguous_fraction_of_unique_mentions: Option<f64>,
    /// Over ambiguous keys only; absent when there are none.
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

pub fn ambiguity_stats(corpus: &AnnotatedCorpus) -> AmbiguityStats {
    let mut by_key: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
    for (_, _, m) in corpus.mentions() {
        by_key.entry(fold(&m.surface)).or_default().insert(&m.gold_id);
    }
    let mut amb: Vec<usize> = by_key.values().map(BTreeSet::len).filter(|&n| n >= 2).collect();
    amb.sort_unstable();
    let median = match amb.len() {
        0 => None,
        n if n % 2 == 1 => Some(amb[n / 2] as f64),
        n => Some((amb[n / 2 - 1] + amb[n / 2]) as f64 / 2.0),
    };
    AmbiguityStats {
        unique_mention_count: by_key.len(),
        ambiguous_mention_count: amb.len(),
        ambiguous_fraction_of_unique_mentions: (!by_key.is_empty())
            .then(|| amb.len() as f64 / by_key.len() as f64),
        min: amb.first().map(|&x| x as f64),
        median,
        max: amb.last().map(|&x| x as f64),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub sentence_groups: usize,
    pub mentions: usize,
    pub unique_entities: usize,
}

pub fn corpus_stats(corpus: &AnnotatedCorpus) -> CorpusStats {
    let entities: BTreeSet<&str> = corpus.mentions().map(|(_, _, m)| m.gold_id.as_str()).collect();
    CorpusStats {
        documents: corpus.doc_ids().len(),
        sentence_groups: corpus.groups().len(),
        mentions: corpus.mention_count(),
        unique_entities: entities.len(),
    }
}
