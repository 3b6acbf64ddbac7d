//! Low-confidence backoff to the textually closest candidate and
//! per-document synthesis of repeated mentions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::candix::CandidateSet;
use crate::error::{NedError, Result};
use crate::kb::KnowledgeBase;
use crate::rerank::{Prediction, Provenance};
use crate::text::fold;

/// Normalized Levenshtein similarity over folded strings.
pub fn string_similarity(a: &str, b: &str) -> f64 {
    let a = fold(a);
    let b = fold(b);
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 1.0;
    }
    1.0 - strsim::levenshtein(&a, &b) as f64 / longest as f64
}

/// Highest similarity between `surface` and any name of the entity.
fn name_similarity(surface: &str, kb: &KnowledgeBase, id: &str) -> Result<f64> {
    let entity = kb.get(id).ok_or_else(|| NedError::UnknownEntity(id.to_owned()))?;
    Ok(entity
        .names()
        .map(|n| string_similarity(surface, n))
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Threshold(f64);

impl Threshold {
    pub const MEDMENTIONS: Threshold = Threshold(0.55);
    pub const BC5CDR: Threshold = Threshold(0.45);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(NedError::Config(format!("threshold {value} outside [0, 1]")));
        }
        Ok(Threshold(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Threshold {
    type Error = NedError;

    fn try_from(v: f64) -> Result<Self> {
        Threshold::new(v)
    }
}

impl From<Threshold> for f64 {
    fn from(t: Threshold) -> f64 {
        t.0
    }
}

/// Replaces a model prediction below `threshold` by the candidate whose
/// names are closest to the mention surface. `probabilities` is aligned
/// with `set.candidates`.
pub fn backoff(
    pred: &Prediction,
    probabilities: &[f64],
    set: &CandidateSet,
    kb: &KnowledgeBase,
    threshold: Threshold,
) -> Result<Prediction> {
    if pred.probability >= threshold.value() {
        return Ok(pred.clone());
    }
    if probabilities.len() != set.candidates.len() {
        return Err(NedError::Argument(format!(
            "{} probabilities for {} candidates",
            probabilities.len(),
            set.candidates.len()
        )));
    }
    let mut best: Option<(f64, f64, &str)> = None;
    for (c, &p) in set.candidates.iter().zip(probabilities) {
        let sim = name_similarity(&pred.surface, kb, &c.entity_id)?;
        let better = match best {
            None => true,
            Some((bs, bp, bid)) => {
                sim > bs || (sim == bs && (p > bp || (p == bp && c.entity_id.as_str() < bid)))
            }
        };
        if better {
            best = Some((sim, p, &c.entity_id));
        }
    }
    let (_, p, id) = best.ok_or_else(|| NedError::EmptyInput(format!("no candidates for {}", set.mention_ref)))?;
    Ok(Prediction {
        entity_id: id.to_owned(),
        probability: p,
        provenance: Provenance::Backoff,
        ..pred.clone()
    })
}

/// Maps every repeat of a folded surface in one document to its modal
/// entity. Ties go to the larger summed probability, then the smaller id.
pub fn synthesize_document(preds: &[Prediction]) -> Result<Vec<Prediction>> {
    if let Some(first) = preds.first() {
        if let Some(other) = preds.iter().find(|p| p.mention_ref.doc_id != first.mention_ref.doc_id) {
            return Err(NedError::RefMismatch(format!(
                "synthesis over documents `{}` and `{}`",
                first.mention_ref.doc_id, other.mention_ref.doc_id
            )));
        }
    }
    let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        groups.entry(fold(&p.surface)).or_default().push(i);
    }
    let mut out = preds.to_vec();
    for members in groups.values().filter(|m| m.len() >= 2) {
        let mut tally: BTreeMap<&str, (usize, f64)> = BTreeMap::new();
        for &i in members {
            let t = tally.entry(preds[i].entity_id.as_str()).or_default();
            t.0 += 1;
            t.1 += preds[i].probability;
        }
        // BTreeMap iterates ids ascending, so strict comparison keeps the smallest id on ties
        let mut winner: Option<(&str, usize, f64)> = None;
        for (&id, &(n, mass)) in &tally {
            if winner.is_none_or(|(_, wn, wm)| n > wn || (n == wn && mass > wm)) {
                winner = Some((id, n, mass));
            }
        }
        let Some((id, _, _)) = winner else { continue };
        for &i in members {
            if out[i].entity_id != id {
                out[i].entity_id = id.to_owned();
                out[i].provenance = Provenance::Synthesis;
            }
        }
    }
    Ok(out)
}

/// Synthesizes each document independently; input order is preserved.
pub fn synthesize_all(preds: &[Prediction]) -> Result<Vec<Prediction>> {
    let mut by_doc: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in preds.iter().enumerate() {
        by_doc.entry(p.mention_ref.doc_id.as_str()).or_default().push(i);
    }
    let mut out = preds.to_vec();
    for idx in by_doc.values() {
        let doc: Vec<Prediction> = idx.iter().map(|&i| preds[i].clone()).collect();
        for (&i, p) in idx.iter().zip(synthesize_document(&doc)?) {
            out[i] = p;
        }
    }
    Ok(out)
}
