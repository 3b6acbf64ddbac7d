//! Knowledge-base records, cross-KB mappings and the type/description
//! augmentation that folds a mapped general-domain KB into a medical one.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{NedError, Result};
use crate::text;

/// One KB concept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub id: String,
    #[serde(rename = "name")]
    pub canonical_name: String,
    #[serde(default)]
    pub aliases: Vec<String>,
    #[serde(default)]
    pub types: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_vocab: Option<String>,
}

impl EntityRecord {
    pub fn new(id: impl Into<String>, canonical_name: impl Into<String>) -> Self {
        EntityRecord {
            id: id.into(),
            canonical_name: canonical_name.into(),
            aliases: Vec::new(),
            types: Vec::new(),
            description: None,
            source_vocab: None,
        }
    }

    pub fn with_aliases<I, S>(mut self, aliases: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.aliases = aliases.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_types<I, S>(mut self, types: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.types = types.into_iter().map(Into::into).collect();
        self
    }

    pub fn with_description(mut self, description: impl Into<String>) -> Self {
        self.description = Some(description.into());
        self
    }

    /// Canonical name followed by aliases.
    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(self.canonical_name.as_str()).chain(self.aliases.iter().map(String::as_str))
    }

    /// Checks the record invariants and normalizes duplicate aliases/types.
    fn normalize(mut self) -> std::result::Result<Self, String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.canonical_name.trim().is_empty() {
            return Err(format!("entity `{}` has an empty name", self.id));
        }
        if matches!(&self.description, Some(d) if d.trim().is_empty()) {
            return Err(format!("entity `{}` has an empty description", self.id));
        }
        for s in self.names().chain(self.description.as_deref()) {
            if let Some(m) = text::find_marker(s) {
                return Err(format!("entity `{}` contains reserved token {m}", self.id));
            }
        }
        let name = self.canonical_name.clone();
        let mut seen = HashSet::new();
        self.aliases.retain(|a| *a != name && seen.insert(a.clone()));
        self.types = dedup_preserving(std::mem::take(&mut self.types));
        Ok(self)
    }
}

fn dedup_preserving(items: Vec<String>) -> Vec<String> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|t| seen.insert(t.clone())).collect()
}

/// A keyed collection of entity records. Iteration is in ascending id order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeBase {
    pub name: String,
    entities: BTreeMap<String, EntityRecord>,
}

impl KnowledgeBase {
    pub fn new(name: impl Into<String>) -> Self {
        KnowledgeBase {
            name: name.into(),
            entities: BTreeMap::new(),
        }
    }

    pub fn from_records(
        name: impl Into<String>,
        records: impl IntoIterator<Item = EntityRecord>,
    ) -> Result<Self> {
        let mut kb = KnowledgeBase::new(name);
        for r in records {
            kb.insert(r)?;
        }
        Ok(kb)
    }

    /// Inserts a record after validating it; rejects duplicate ids.
    pub fn insert(&mut self, record: EntityRecord) -> Result<()> {
        let record = record.normalize().map_err(NedError::Argument)?;
        if self.entities.contains_key(&record.id) {
            return Err(NedError::DuplicateId(record.id));
        }
        self.entities.insert(record.id.clone(), record);
        Ok(())
    }

    pub fn get(&self, id: &str) -> Option<&EntityRecord> {
        self.entities.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.entities.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entities.keys().map(String::as_str)
    }

    /// Parses a line-delimited JSON KB.
    pub fn parse_jsonl(name: &str, source: &str, content: &str) -> Result<Self> {
        let mut kb = KnowledgeBase::new(name);
        for (line, raw) in text::content_lines(content) {
            let record: EntityRecord =
                serde_json::from_str(raw).map_err(|e| NedError::parse(source, line, e))?;
            let record = record
                .normalize()
                .map_err(|m| NedError::parse(source, line, m))?;
            if kb.entities.contains_key(&record.id) {
                return Err(NedError::DuplicateId(record.id));
            }
            kb.entities.insert(record.id.clone(), record);
        }
        Ok(kb)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.entities.values() {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        text::write_file(path, &self.to_jsonl())
    }
}

/// Loads a KB file; the KB is named after the file stem.
pub fn load_kb(path: &Path) -> Result<KnowledgeBase> {
    let content = text::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    KnowledgeBase::parse_jsonl(&name, &path.display().to_string(), &content)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingEntry {
    pub target_id: String,
    #[serde(default)]
    pub target_types: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_description: Option<String>,
}

/// Source-KB id to most likely target-KB counterpart.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CrossKbMapping {
    entries: BTreeMap<String, MappingEntry>,
}

#[derive(Deserialize)]
struct MappingLine {
    source_id: String,
    #[serde(flatten)]
    entry: MappingEntry,
}

impl CrossKbMapping {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, source_id: impl Into<String>, mut entry: MappingEntry) -> Result<()> {
        let source_id = source_id.into();
        if self.entries.contains_key(&source_id) {
            return Err(NedError::DuplicateId(source_id));
        }
        entry.target_types = dedup_preserving(entry.target_types);
        self.entries.insert(source_id, entry);
        Ok(())
    }

    pub fn get(&self, source_id: &str) -> Option<&MappingEntry> {
        self.entries.get(source_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &MappingEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn parse_jsonl(source: &str, content: &str) -> Result<Self> {
        let mut mapping = CrossKbMapping::new();
        for (line, raw) in text::content_lines(content) {
            let parsed: MappingLine =
                serde_json::from_str(raw).map_err(|e| NedError::parse(source, line, e))?;
            mapping.insert(parsed.source_id, parsed.entry)?;
        }
        Ok(mapping)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for (source_id, entry) in &self.entries {
            let mut v = serde_json::to_value(entry).expect("entry serializes");
            v.as_object_mut()
                .expect("object")
                .insert("source_id".into(), source_id.clone().into());
            out.push_str(&v.to_string());
            out.push('\n');
        }
        out
    }
}

pub fn load_mapping(path: &Path) -> Result<CrossKbMapping> {
    let content = text::read_to_string(path)?;
    CrossKbMapping::parse_jsonl(&path.display().to_string(), &content)
}

/// Gold alignment `source_id -> target_id`.
pub type GoldMapping = BTreeMap<String, String>;

/// Parses a two-column tab-separated gold mapping.
pub fn parse_gold_mapping(source: &str, content: &str) -> Result<GoldMapping> {
    let mut gold = GoldMapping::new();
    for (line, raw) in text::content_lines(content) {
        let mut cols = raw.split('\t');
        let (Some(src), Some(tgt), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(NedError::parse(source, line, "expected two tab-separated columns"));
        };
        if gold.insert(src.to_owned(), tgt.to_owned()).is_some() {
            return Err(NedError::DuplicateId(src.to_owned()));
        }
    }
    Ok(gold)
}

pub fn load_gold_mapping(path: &Path) -> Result<GoldMapping> {
    let content = text::read_to_string(path)?;
    parse_gold_mapping(&path.display().to_string(), &content)
}

pub const DEFAULT_DESC_WORD_LIMIT: usize = 150;

/// Augments types and descriptions of mapped entities.
///
/// Types become the original list followed by any new target types, in the
/// order given. A description is only added when the entity has none; it is
/// the first `desc_word_limit` whitespace words of the target description.
pub fn apply_mapping(
    kb: &KnowledgeBase,
    mapping: &CrossKbMapping,
    desc_word_limit: usize,
) -> KnowledgeBase {
    let mut out = kb.clone();
    for (id, record) in out.entities.iter_mut() {
        let Some(entry) = mapping.get(id) else {
            continue;
        };
        for t in &entry.target_types {
            if !record.types.contains(t) {
                record.types.push(t.clone());
            }
        }
        if record.description.is_none() {
            record.description = entry.target_description.as_deref().and_then(|d| {
                let head: Vec<&str> = d.split_whitespace().take(desc_word_limit).collect();
                (!head.is_empty()).then(|| head.join(" "))
            });
        }
    }
    out
}

/// Fraction of gold keys whose mapped target equals the gold target.
pub fn mapping_accuracy(mapping: &CrossKbMapping, gold: &GoldMapping) -> Result<f64> {
    if gold.is_empty() {
        return Err(NedError::EmptyGold);
    }
    let hits = gold
        .iter()
        .filter(|(src, tgt)| mapping.get(src).is_some_and(|e| &e.target_id == *tgt))
        .count();
    Ok(hits as f64 / gold.len() as f64)
}

/// Fraction of gold keys whose predicted target shares at least one type
/// with the gold target, both resolved in `target_kb`.
pub fn integration_performance(
    mapping: &CrossKbMapping,
    gold: &GoldMapping,
    target_kb: &KnowledgeBase,
) -> Result<f64> {
    if gold.is_empty() {
        return Err(NedError::EmptyGold);
    }
    let mut hits = 0usize;
    for (src, gold_target) in gold {
        let gold_entity = target_kb
            .get(gold_target)
            .ok_or_else(|| NedError::MissingGoldTarget(gold_target.clone()))?;
        let predicted = mapping
            .get(src)
            .and_then(|e| target_kb.get(&e.target_id));
        if let Some(pred) = predicted {
            if pred.types.iter().any(|t| gold_entity.types.contains(t)) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / gold.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbStats {
    pub entity_count: usize,
    pub distinct_type_count: usize,
    pub described_entity_count: usize,
}

pub fn kb_stats(kb: &KnowledgeBase) -> KbStats {
    let types: BTreeSet<&str> = kb
        .iter()
        .flat_map(|r| r.types.iter().map(String::as_str))
        .collect();
    KbStats {
        entity_count: kb.len(),
        distinct_type_count: types.len(),
        described_entity_count: kb.iter().filter(|r| r.description.is_some()).count(),
    }
}
