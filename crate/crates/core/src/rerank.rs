//! Pair scoring behind a pluggable scorer, softmax over candidates and
//! argmax selection.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::candix::CandidateSet;
use crate::corpus::MentionRef;
use crate::embed::hash_embed_tokens;
use crate::error::{NedError, Result};
use crate::kb::KnowledgeBase;
use crate::sequence::{
    build_context_sequence, build_entity_sequence, build_pair_sequence, split_pair, ContextWindow,
    TokenSequence,
};
use crate::text;

/// Numerically stable softmax.
pub fn softmax(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(NedError::EmptyInput("softmax of an empty list".into()));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(NedError::Argument("softmax input must be finite".into()));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Model,
    Backoff,
    Synthesis,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Model => "model",
            Provenance::Backoff => "backoff",
            Provenance::Synthesis => "synthesis",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = NedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(Provenance::Model),
            "backoff" => Ok(Provenance::Backoff),
            "synthesis" => Ok(Provenance::Synthesis),
            _ => Err(NedError::Argument(format!("unknown provenance `{s}`"))),
        }
    }
}

/// A resolved mention.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub mention_ref: MentionRef,
    /// Mention surface, used by backoff and document synthesis.
    pub surface: String,
    pub entity_id: String,
    pub probability: f64,
    pub provenance: Provenance,
}

/// One (mention, candidate) pair presented to a scorer.
pub struct ScoringPair<'a> {
    pub mention_ref: &'a MentionRef,
    pub entity_id: &'a str,
    pub sequence: &'a TokenSequence,
}

/// Scores (mention, candidate) pairs. Must be deterministic and finite.
pub trait PairScorer: Send + Sync {
    fn score(&self, pair: &ScoringPair<'_>) -> Result<f64>;
}

/// Inner product of the hashed embeddings of the two sides of `[ENT_DESC]`.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceScorer {
    pub dim: usize,
    pub seed: u64,
}

impl ReferenceScorer {
    pub fn new(dim: usize, seed: u64) -> Self {
        ReferenceScorer { dim, seed }
    }

    pub fn score_sequence(&self, pair: &TokenSequence) -> Result<f64> {
        let (ctx, ent) = split_pair(pair)?;
        let a = hash_embed_tokens(ctx.iter().map(String::as_str), self.dim, self.seed);
        let b = hash_embed_tokens(ent.iter().map(String::as_str), self.dim, self.seed);
        Ok(a.dot(&b))
    }
}

impl PairScorer for ReferenceScorer {
    fn score(&self, pair: &ScoringPair<'_>) -> Result<f64> {
        self.score_sequence(pair.sequence)
    }
}

/// Precomputed scores keyed by mention ref and entity id.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    scores: HashMap<(MentionRef, String), f64>,
}

impl ScoreTable {
    pub fn insert(&mut self, mention_ref: MentionRef, entity_id: impl Into<String>, score: f64) {
        self.scores.insert((mention_ref, entity_id.into()), score);
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Tab-separated `mention_ref  entity_id  score` triplets.
    pub fn parse(source: &str, content: &str) -> Result<Self> {
        let mut table = ScoreTable::default();
        for (line, raw) in text::content_lines(content) {
            let cols: Vec<&str> = raw.split('\t').collect();
            let [r, e, s] = cols[..] else {
                return Err(NedError::parse(source, line, "expected three tab-separated columns"));
            };
            let mention_ref: MentionRef = r.parse().map_err(|e: NedError| NedError::parse(source, line, e))?;
            let score: f64 = s.parse().map_err(|e| NedError::parse(source, line, e))?;
            if !score.is_finite() {
                return Err(NedError::parse(source, line, "non-finite score"));
            }
            let key = (mention_ref, e.to_owned());
            if table.scores.insert(key, score).is_some() {
                return Err(NedError::DuplicateId(format!("{r}\t{e}")));
            }
        }
        Ok(table)
    }
}

impl PairScorer for ScoreTable {
    fn score(&self, pair: &ScoringPair<'_>) -> Result<f64> {
        self.scores
            .get(&(pair.mention_ref.clone(), pair.entity_id.to_owned()))
            .copied()
            .ok_or_else(|| NedError::MissingScore {
                mention: pair.mention_ref.to_string(),
                entity: pair.entity_id.to_owned(),
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RerankParams {
    pub pair_context_max: usize,
    pub entity_max: usize,
    pub types_word_limit: usize,
}

impl Default for RerankParams {
    fn default() -> Self {
        RerankParams {
            pair_context_max: crate::sequence::DEFAULT_PAIR_CONTEXT_MAX,
            entity_max: crate::sequence::DEFAULT_ENTITY_MAX,
            types_word_limit: crate::sequence::DEFAULT_TYPES_WORD_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RerankOutcome {
    pub prediction: Prediction,
    /// Softmax probability of each candidate, aligned with the candidate set.
    pub probabilities: Vec<f64>,
}

/// Index of the highest probability; ties go to the smallest entity id.
fn argmax_by_id(probs: &[f64], set: &CandidateSet) -> usize {
    let mut best = 0;
    for i in 1..probs.len() {
        let better = probs[i] > probs[best]
            || (probs[i] == probs[best] && set.candidates[i].entity_id < set.candidates[best].entity_id);
        if better {
            best = i;
        }
    }
    best
}

/// Scores every candidate against the mention context and picks the
/// softmax argmax. Entity titles include all aliases.
pub fn rerank(
    set: &CandidateSet,
    window: &ContextWindow,
    kb: &KnowledgeBase,
    scorer: &dyn PairScorer,
    params: &RerankParams,
) -> Result<RerankOutcome> {
    if set.candidates.is_empty() {
        return Err(NedError::EmptyInput(format!("no candidates for {}", set.mention_ref)));
    }
    let ctx = build_context_sequence(window, params.pair_context_max)?;
    let mut scores = Vec::with_capacity(set.candidates.len());
    for c in &set.candidates {
        let entity = kb
            .get(&c.entity_id)
            .ok_or_else(|| NedError::UnknownEntity(c.entity_id.clone()))?;
        let ent = build_entity_sequence(entity, true, params.types_word_limit, params.entity_max);
        let pair = build_pair_sequence(&ctx, &ent);
        let score = scorer.score(&ScoringPair {
            mention_ref: &set.mention_ref,
            entity_id: &c.entity_id,
            sequence: &pair,
        })?;
        scores.push(score);
    }
    let probabilities = softmax(&scores)?;
    let best = argmax_by_id(&probabilities, set);
    Ok(RerankOutcome {
        prediction: Prediction {
            mention_ref: set.mention_ref.clone(),
            surface: window.mention.join(" "),
            entity_id: set.candidates[best].entity_id.clone(),
            probability: probabilities[best],
            provenance: Provenance::Model,
        },
        probabilities,
    })
}

/// One line per prediction:
/// `mention_ref  entity_id  probability  provenance  surface`.
pub fn predictions_to_text(preds: &[Prediction]) -> String {
    let mut out = String::new();
    for p in preds {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.mention_ref,
            p.entity_id,
            text::fmt_score(p.probability),
            p.provenance,
            p.surface
        );
    }
    out
}

pub fn parse_predictions(source: &str, content: &str) -> Result<Vec<Prediction>> {
    let mut out = Vec::new();
    for (line, raw) in text::content_lines(content) {
        let cols: Vec<&str> = raw.splitn(5, '\t').collect();
        if cols.len() < 4 {
            return Err(NedError::parse(source, line, "expected at least four columns"));
        }
        let wrap = |e: NedError| NedError::parse(source, line, e);
        out.push(Prediction {
            mention_ref: cols[0].parse().map_err(wrap)?,
            entity_id: cols[1].to_owned(),
            probability: cols[2].parse().map_err(|e| NedError::parse(source, line, e))?,
            provenance: cols[3].parse().map_err(wrap)?,
            surface: cols.get(4).copied().unwrap_or_default().to_owned(),
        });
    }
    Ok(out)
}
