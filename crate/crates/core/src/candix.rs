//! Candidate generation by exact maximum inner product search.
//!
//! Candidates are ranked by descending raw inner product; equal scores are
//! ordered by ascending entity id. The scan is exhaustive.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::corpus::MentionRef;
use crate::embed::{dot, EmbeddingVector, VectorMap};
use crate::error::{NedError, Result};
use crate::text;

pub const DEFAULT_K: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub entity_id: String,
    pub score: f64,
}

/// Retrieval order: higher score first, then ascending id.
pub fn rank_order(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score
        .partial_cmp(&a_score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a_id.cmp(b_id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub mention_ref: MentionRef,
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.candidates.iter().map(|c| c.entity_id.as_str())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.ids().any(|c| c == id)
    }
}

/// Immutable pool of entity vectors, ordered by id, stored row-major.
#[derive(Debug, Clone)]
pub struct CandidateIndex {
    ids: Vec<String>,
    data: Vec<f64>,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BuildReport {
    /// Filter ids with no vector.
    pub missing_ids: Vec<String>,
}

/// Heap entry ordered so that the *worst* retained candidate is at the top.
struct Worst<'a> {
    score: f64,
    id: &'a str,
    row: usize,
}

impl PartialEq for Worst<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Worst<'_> {}
impl PartialOrd for Worst<'_> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Worst<'_> {
    fn cmp(&self, other: &Self) -> Ordering {
        // "greater" means ranked later
        rank_order(self.score, self.id, other.score, other.id)
    }
}

impl CandidateIndex {
    /// Builds an index over all vectors, or over those whose id is in
    /// `pool_filter`. Filter ids without a vector are reported.
    pub fn build(vectors: &VectorMap, pool_filter: Option<&BTreeSet<String>>) -> Result<(Self, BuildReport)> {
        let mut report = BuildReport::default();
        let selected: Vec<(&String, &EmbeddingVector)> = match pool_filter {
            Some(filter) => {
                report.missing_ids = filter
                    .iter()
                    .filter(|id| !vectors.contains_key(*id))
                    .cloned()
                    .collect();
                vectors.iter().filter(|(id, _)| filter.contains(*id)).collect()
            }
            None => vectors.iter().collect(),
        };
        let Some((_, first)) = selected.first() else {
            return Err(NedError::EmptyPool);
        };
        let dim = first.dim();
        let mut ids = Vec::with_capacity(selected.len());
        let mut data = Vec::with_capacity(selected.len() * dim);
        for (row, (id, v)) in selected.into_iter().enumerate() {
            if v.dim() != dim {
                return Err(NedError::DimMismatch {
                    row: row + 1,
                    expected: dim,
                    found: v.dim(),
                });
            }
            ids.push(id.clone());
            data.extend_from_slice(v.values());
        }
        Ok((CandidateIndex { ids, data, dim }, report))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// The `k` best candidates for `query`, exactly.
    pub fn top_k(&self, mention_ref: MentionRef, query: &EmbeddingVector, k: usize) -> Result<CandidateSet> {
        if query.dim() != self.dim {
            return Err(NedError::DimMismatch {
                row: 0,
                expected: self.dim,
                found: query.dim(),
            });
        }
        if k == 0 {
            return Err(NedError::Argument("k must be at least 1".into()));
        }
        let q = query.values();
        let mut heap: BinaryHeap<Worst<'_>> = BinaryHeap::with_capacity(k + 1);
        for (row, id) in self.ids.iter().enumerate() {
            let score = dot(q, self.vector(row));
            if heap.len() < k {
                heap.push(Worst { score, id, row });
            } else if let Some(worst) = heap.peek() {
                if rank_order(score, id, worst.score, worst.id) == Ordering::Less {
                    heap.pop();
                    heap.push(Worst { score, id, row });
                }
            }
        }
        let candidates = heap
            .into_sorted_vec()
            .into_iter()
            .map(|w| Candidate {
                entity_id: self.ids[w.row].clone(),
                score: w.score,
            })
            .collect();
        Ok(CandidateSet {
            mention_ref,
            candidates,
        })
    }

    /// Retrieves for many queries in parallel; output order follows input.
    pub fn top_k_batch(&self, queries: &[(MentionRef, EmbeddingVector)], k: usize) -> Result<Vec<CandidateSet>> {
        queries
            .par_iter()
            .map(|(r, q)| self.top_k(r.clone(), q, k))
            .collect()
    }
}

/// A query for hard-negative mining.
#[derive(Debug, Clone)]
pub struct MiningQuery {
    pub mention_ref: MentionRef,
    pub vector: EmbeddingVector,
    pub gold_id: String,
}

/// The top `n` retrieved entities other than the gold entity.
pub fn mine_hard_negatives(
    index: &CandidateIndex,
    queries: &[MiningQuery],
    n: usize,
) -> Result<BTreeMap<MentionRef, Vec<String>>> {
    let mined: Vec<(MentionRef, Vec<String>)> = queries
        .par_iter()
        .map(|q| {
            let set = index.top_k(q.mention_ref.clone(), &q.vector, n + 1)?;
            let negatives = set
                .candidates
                .into_iter()
                .map(|c| c.entity_id)
                .filter(|id| *id != q.gold_id)
                .take(n)
                .collect();
            Ok((q.mention_ref.clone(), negatives))
        })
        .collect::<Result<_>>()?;
    Ok(mined.into_iter().collect())
}

/// Fraction of mentions whose gold id is among the first `k` candidates.
pub fn recall_at_k(sets: &[CandidateSet], gold: &BTreeMap<MentionRef, String>, k: usize) -> Result<f64> {
    if sets.is_empty() {
        return Err(NedError::EmptyInput("no candidate sets".into()));
    }
    let mut hits = 0usize;
    for set in sets {
        let g = gold
            .get(&set.mention_ref)
            .ok_or_else(|| NedError::RefMismatch(format!("no gold for {}", set.mention_ref)))?;
        if set.candidates.iter().take(k).any(|c| &c.entity_id == g) {
            hits += 1;
        }
    }
    Ok(hits as f64 / sets.len() as f64)
}

/// One line per mention: `mention_ref` then `id<TAB>score` pairs.
pub fn candidates_to_text(sets: &[CandidateSet]) -> String {
    let mut out = String::new();
    for set in sets {
        out.push_str(&set.mention_ref.to_string());
        for c in &set.candidates {
            let _ = write!(out, "\t{}\t{}", c.entity_id, text::fmt_score(c.score));
        }
        out.push('\n');
    }
    out
}

pub fn parse_candidates(source: &str, content: &str) -> Result<Vec<CandidateSet>> {
    let mut out = Vec::new();
    for (line, raw) in text::content_lines(content) {
        let mut cols = raw.split('\t');
        let mention_ref: MentionRef = cols
            .next()
            .unwrap_or_default()
            .parse()
            .map_err(|e: NedError| NedError::parse(source, line, e))?;
        let rest: Vec<&str> = cols.collect();
        if rest.len() % 2 != 0 {
            return Err(NedError::parse(source, line, "odd number of candidate columns"));
        }
        let candidates = rest
            .chunks(2)
            .map(|p| {
                p[1].parse::<f64>()
                    .map(|score| Candidate {
                        entity_id: p[0].to_owned(),
                        score,
                    })
                    .map_err(|e| NedError::parse(source, line, e))
            })
            .collect::<Result<_>>()?;
        out.push(CandidateSet {
            mention_ref,
            candidates,
        });
    }
    Ok(out)
}
