//! Accuracy, recall and per-slice accuracy reports.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::candix::{recall_at_k, CandidateSet};
use crate::corpus::{AnnotatedCorpus, MentionRef};
use crate::error::{NedError, Result};
use crate::kb::KnowledgeBase;
use crate::rerank::Prediction;
use crate::text::{fold, word_count};

pub type GoldLabels = BTreeMap<MentionRef, String>;

/// Gold label per mention of a corpus.
pub fn gold_labels(corpus: &AnnotatedCorpus) -> GoldLabels {
    corpus.mentions().map(|(r, _, m)| (r, m.gold_id.clone())).collect()
}

/// Checks that predictions cover exactly the gold refs, once each.
fn align<'a>(preds: &'a [Prediction], gold: &GoldLabels) -> Result<BTreeMap<&'a MentionRef, &'a Prediction>> {
    if gold.is_empty() || preds.is_empty() {
        return Err(NedError::EmptyGold);
    }
    let mut by_ref = BTreeMap::new();
    for p in preds {
        if by_ref.insert(&p.mention_ref, p).is_some() {
            return Err(NedError::RefMismatch(format!("duplicate prediction for {}", p.mention_ref)));
        }
        if !gold.contains_key(&p.mention_ref) {
            return Err(NedError::RefMismatch(format!("no gold for {}", p.mention_ref)));
        }
    }
    if let Some(r) = gold.keys().find(|r| !by_ref.contains_key(r)) {
        return Err(NedError::RefMismatch(format!("no prediction for {r}")));
    }
    Ok(by_ref)
}

pub fn accuracy(preds: &[Prediction], gold: &GoldLabels) -> Result<f64> {
    let aligned = align(preds, gold)?;
    let hits = aligned.iter().filter(|(r, p)| gold[**r] == p.entity_id).count();
    Ok(hits as f64 / aligned.len() as f64)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainStats {
    pub entity_count: BTreeMap<String, usize>,
    pub mention_surfaces: BTreeSet<String>,
    pub mention_to_entity_counts: BTreeMap<String, BTreeMap<String, usize>>,
    pub top100: BTreeSet<String>,
    pub pretrain_entities: BTreeSet<String>,
}

pub const TOP_ENTITIES: usize = 100;

pub fn build_train_stats(train: &AnnotatedCorpus, pretrain: Option<&AnnotatedCorpus>) -> TrainStats {
    let mut stats = TrainStats::default();
    for (_, _, m) in train.mentions() {
        let surface = fold(&m.surface);
        *stats.entity_count.entry(m.gold_id.clone()).or_default() += 1;
        *stats
            .mention_to_entity_counts
            .entry(surface.clone())
            .or_default()
            .entry(m.gold_id.clone())
            .or_default() += 1;
        stats.mention_surfaces.insert(surface);
    }
    let mut ranked: Vec<(&String, usize)> = stats.entity_count.iter().map(|(k, &v)| (k, v)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    stats.top100 = ranked.into_iter().take(TOP_ENTITIES).map(|(k, _)| k.clone()).collect();
    if let Some(p) = pretrain {
        stats.pretrain_entities = p.mentions().map(|(_, _, m)| m.gold_id.clone()).collect();
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Slice {
    MultiWord,
    SingleWord,
    UnseenMention,
    UnseenEntity,
    NotDirectMatch,
    Top100,
    Unpopular,
    LimitedMetadata,
    #[serde(rename = "Rare&Limited")]
    RareLimited,
    #[serde(rename = "NeverSeen&Limited")]
    NeverSeenLimited,
}

impl Slice {
    /// Canonical report order.
    pub const ALL: [Slice; 10] = [
        Slice::MultiWord,
        Slice::SingleWord,
        Slice::UnseenMention,
        Slice::UnseenEntity,
        Slice::NotDirectMatch,
        Slice::Top100,
        Slice::Unpopular,
        Slice::LimitedMetadata,
        Slice::RareLimited,
        Slice::NeverSeenLimited,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Slice::MultiWord => "MultiWord",
            Slice::SingleWord => "SingleWord",
            Slice::UnseenMention => "UnseenMention",
            Slice::UnseenEntity => "UnseenEntity",
            Slice::NotDirectMatch => "NotDirectMatch",
            Slice::Top100 => "Top100",
            Slice::Unpopular => "Unpopular",
            Slice::LimitedMetadata => "LimitedMetadata",
            Slice::RareLimited => "Rare&Limited",
            Slice::NeverSeenLimited => "NeverSeen&Limited",
        }
    }
}

impl fmt::Display for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Slice {
    type Err = NedError;

    fn from_str(s: &str) -> Result<Self> {
        Slice::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| NedError::Argument(format!("unknown slice `{s}`")))
    }
}

/// Entities seen fewer times than this in training are rare.
pub const RARE_COUNT: usize = 5;

/// An evaluation mention: its surface and gold entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestMention {
    pub mention_ref: MentionRef,
    pub surface: String,
    pub gold_id: String,
}

pub fn test_mentions(corpus: &AnnotatedCorpus) -> Vec<TestMention> {
    corpus
        .mentions()
        .map(|(r, _, m)| TestMention {
            mention_ref: r,
            surface: m.surface.clone(),
            gold_id: m.gold_id.clone(),
        })
        .collect()
}

pub fn slice_membership(
    surface: &str,
    gold_id: &str,
    stats: &TrainStats,
    pre_aug_kb: &KnowledgeBase,
) -> Result<BTreeSet<Slice>> {
    let entity = pre_aug_kb
        .get(gold_id)
        .ok_or_else(|| NedError::UnknownEntity(gold_id.to_owned()))?;
    let folded = fold(surface);
    let train_count = stats.entity_count.get(gold_id).copied().unwrap_or(0);
    let mut out = BTreeSet::new();

    out.insert(if word_count(surface) > 1 { Slice::MultiWord } else { Slice::SingleWord });
    if !stats.mention_surfaces.contains(&folded) {
        out.insert(Slice::UnseenMention);
    }
    if train_count == 0 {
        out.insert(Slice::UnseenEntity);
    }
    if entity.names().all(|n| fold(n) != folded) {
        out.insert(Slice::NotDirectMatch);
    }
    if stats.top100.contains(gold_id) {
        out.insert(Slice::Top100);
    }
    if let Some(counts) = stats.mention_to_entity_counts.get(&folded) {
        let own = counts.get(gold_id).copied().unwrap_or(0);
        if counts.iter().any(|(id, &n)| id != gold_id && n > own) {
            out.insert(Slice::Unpopular);
        }
    }
    if entity.description.is_none() && entity.types.len() == 1 {
        out.insert(Slice::LimitedMetadata);
        if train_count < RARE_COUNT {
            out.insert(Slice::RareLimited);
        }
        if train_count == 0 && !stats.pretrain_entities.contains(gold_id) {
            out.insert(Slice::NeverSeenLimited);
        }
    }
    Ok(out)
}

/// A declarative slice: every listed canonical slice must hold, none of
/// the excluded ones may, and optional bounds on the gold entity apply.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UserSlice {
    pub name: String,
    pub all_of: Vec<Slice>,
    pub none_of: Vec<Slice>,
    /// Inclusive upper bound on the gold entity's training count.
    pub max_train_count: Option<usize>,
    pub in_pretrain: Option<bool>,
}

impl UserSlice {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(NedError::Config("user slice without a name".into()));
        }
        if Slice::from_str(&self.name).is_ok() {
            return Err(NedError::Config(format!("user slice `{}` shadows a canonical slice", self.name)));
        }
        Ok(())
    }

    pub fn matches(&self, canonical: &BTreeSet<Slice>, gold_id: &str, stats: &TrainStats) -> bool {
        let count = stats.entity_count.get(gold_id).copied().unwrap_or(0);
        self.all_of.iter().all(|s| canonical.contains(s))
            && !self.none_of.iter().any(|s| canonical.contains(s))
            && self.max_train_count.is_none_or(|m| count <= m)
            && self
                .in_pretrain
                .is_none_or(|want| stats.pretrain_entities.contains(gold_id) == want)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    pub slice: String,
    pub support: usize,
    pub accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mentions: usize,
    pub accuracy: f64,
    pub recall_at_1: Option<f64>,
    pub recall_at_10: Option<f64>,
    pub rows: Vec<SliceRow>,
}

/// Slice membership of one evaluated mention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionSlices {
    pub mention_ref: MentionRef,
    pub gold_id: String,
    pub predicted_id: String,
    pub slices: BTreeSet<Slice>,
    pub user: BTreeSet<String>,
}

impl MentionSlices {
    pub fn correct(&self) -> bool {
        self.gold_id == self.predicted_id
    }
}

pub fn mention_slices(
    preds: &[Prediction],
    mentions: &[TestMention],
    stats: &TrainStats,
    pre_aug_kb: &KnowledgeBase,
    user_slices: &[UserSlice],
) -> Result<Vec<MentionSlices>> {
    let gold: GoldLabels = mentions.iter().map(|m| (m.mention_ref.clone(), m.gold_id.clone())).collect();
    if gold.len() != mentions.len() {
        return Err(NedError::RefMismatch("duplicate evaluation mention".into()));
    }
    for u in user_slices {
        u.validate()?;
    }
    let aligned = align(preds, &gold)?;
    mentions
        .par_iter()
        .map(|m| {
            let slices = slice_membership(&m.surface, &m.gold_id, stats, pre_aug_kb)?;
            let user = user_slices
                .iter()
                .filter(|u| u.matches(&slices, &m.gold_id, stats))
                .map(|u| u.name.clone())
                .collect();
            Ok(MentionSlices {
                mention_ref: m.mention_ref.clone(),
                gold_id: m.gold_id.clone(),
                predicted_id: aligned[&m.mention_ref].entity_id.clone(),
                slices,
                user,
            })
        })
        .collect()
}

fn row(name: &str, members: impl Iterator<Item = bool>) -> SliceRow {
    let (mut support, mut hits) = (0usize, 0usize);
    for correct in members {
        support += 1;
        hits += usize::from(correct);
    }
    SliceRow {
        slice: name.to_owned(),
        support,
        accuracy: (support > 0).then(|| hits as f64 / support as f64),
    }
}

/// Canonical slices first, then user slices by name.
pub fn slice_report(
    preds: &[Prediction],
    mentions: &[TestMention],
    stats: &TrainStats,
    pre_aug_kb: &KnowledgeBase,
    candidates: Option<&[CandidateSet]>,
    user_slices: &[UserSlice],
) -> Result<(EvalReport, Vec<MentionSlices>)> {
    let per = mention_slices(preds, mentions, stats, pre_aug_kb, user_slices)?;
    let gold: GoldLabels = mentions.iter().map(|m| (m.mention_ref.clone(), m.gold_id.clone())).collect();
    let mut rows: Vec<SliceRow> = Slice::ALL
        .iter()
        .map(|s| row(s.name(), per.iter().filter(|m| m.slices.contains(s)).map(MentionSlices::correct)))
        .collect();
    let user_names: BTreeSet<&str> = user_slices.iter().map(|u| u.name.as_str()).collect();
    for name in user_names {
        rows.push(row(name, per.iter().filter(|m| m.user.contains(name)).map(MentionSlices::correct)));
    }
    let (recall_at_1, recall_at_10) = match candidates {
        Some(sets) => (Some(recall_at_k(sets, &gold, 1)?), Some(recall_at_k(sets, &gold, 10)?)),
        None => (None, None),
    };
    let report = EvalReport {
        mentions: per.len(),
        accuracy: accuracy(preds, &gold)?,
        recall_at_1,
        recall_at_10,
        rows,
    };
    Ok((report, per))
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let pct = |v: Option<f64>| v.map_or_else(|| "-".to_owned(), |x| format!("{:.2}", 100.0 * x));
        let mut out = String::new();
        let _ = writeln!(out, "mentions     {}", self.mentions);
        let _ = writeln!(out, "accuracy     {}", pct(Some(self.accuracy)));
        let _ = writeln!(out, "recall@1     {}", pct(self.recall_at_1));
        let _ = writeln!(out, "recall@10    {}", pct(self.recall_at_10));
        let width = self.rows.iter().map(|r| r.slice.len()).max().unwrap_or(0).max(5);
        let _ = writeln!(out, "\n{:<width$}  {:>8}  {:>8}", "slice", "support", "accuracy");
        for r in &self.rows {
            let _ = writeln!(out, "{:<width$}  {:>8}  {:>8}", r.slice, r.support, pct(r.accuracy));
        }
        out
    }
}

/// Per-mention membership with one 0/1 column per slice.
pub fn membership_csv(per: &[MentionSlices], user_slices: &[UserSlice]) -> String {
    let user_names: BTreeSet<&str> = user_slices.iter().map(|u| u.name.as_str()).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["mention_ref", "gold_id", "predicted_id", "correct"];
    header.extend(Slice::ALL.iter().map(|s| s.name()));
    header.extend(user_names.iter().copied());
    let flag = |b: bool| if b { "1" } else { "0" };
    let mut rows = vec![header.into_iter().map(String::from).collect::<Vec<_>>()];
    for m in per {
        let mut row = vec![
            m.mention_ref.to_string(),
            m.gold_id.clone(),
            m.predicted_id.clone(),
            flag(m.correct()).to_owned(),
        ];
        row.extend(Slice::ALL.iter().map(|s| flag(m.slices.contains(s)).to_owned()));
        row.extend(user_names.iter().map(|n| flag(m.user.contains(*n)).to_owned()));
        rows.push(row);
    }
    for r in rows {
        w.write_record(&r).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}
