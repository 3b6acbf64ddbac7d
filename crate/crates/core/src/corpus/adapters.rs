//! Raw-input readers.
//!
//! * JSON lines: one document per line,
//!   `{"doc_id", "text", "mentions": [{"start_char", "end_char", "gold_ids", "sub_spans"?}], "sentences"?}`.
//! * PubTator (MedMentions / BC5CDR style): `id|t|title` and `id|a|abstract`
//!   lines followed by tab-separated annotations
//!   `id  start  end  mention  type  ids  [parts]`. Offsets refer to
//!   `title + " " + abstract`. `UMLS:` and `MESH:` prefixes are stripped,
//!   composite ids are separated by `|`, and the optional seventh column lists
//!   the composite parts, which are located inside the mention text. Mentions
//!   linked to `-1` are skipped; relation lines are ignored.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CharMention, RawDocument};
use crate::error::{NedError, Result};
use crate::text;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RawFormat {
    Jsonl,
    Pubtator,
}

impl RawFormat {
    pub fn from_path(path: &Path) -> RawFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt" | "pubtator") => RawFormat::Pubtator,
            _ => RawFormat::Jsonl,
        }
    }
}

fn validate(doc: &RawDocument) -> std::result::Result<(), String> {
    let len = doc.text.chars().count();
    for m in &doc.mentions {
        if m.start_char >= m.end_char || m.end_char > len {
            return Err(format!(
                "mention [{},{}) outside text of {len} characters in `{}`",
                m.start_char, m.end_char, doc.doc_id
            ));
        }
        if m.gold_ids.is_empty() {
            return Err(format!("mention without gold ids in `{}`", doc.doc_id));
        }
    }
    Ok(())
}

pub fn parse_raw_jsonl(source: &str, content: &str) -> Result<Vec<RawDocument>> {
    let mut docs = Vec::new();
    for (line, raw) in text::content_lines(content) {
        let doc: RawDocument =
            serde_json::from_str(raw).map_err(|e| NedError::parse(source, line, e))?;
        validate(&doc).map_err(|m| NedError::parse(source, line, m))?;
        docs.push(doc);
    }
    Ok(docs)
}

fn strip_namespace(id: &str) -> &str {
    id.strip_prefix("UMLS:")
        .or_else(|| id.strip_prefix("MESH:"))
        .unwrap_or(id)
}

fn locate_parts(text: &[char], start: usize, end: usize, parts: &str) -> Option<Vec<(usize, usize)>> {
    let mut from = start;
    let mut spans = Vec::new();
    for part in parts.split('|') {
        let p: Vec<char> = part.chars().collect();
        if p.is_empty() || p.len() > end - from {
            return None;
        }
        let at = (from..=end - p.len()).find(|&i| text[i..i + p.len()] == *p)?;
        spans.push((at, at + p.len()));
        from = at + p.len();
    }
    Some(spans)
}

pub fn parse_pubtator(source: &str, content: &str) -> Result<Vec<RawDocument>> {
    let mut docs: Vec<RawDocument> = Vec::new();
    let mut title: Option<(String, String)> = None;
    let mut chars: Vec<char> = Vec::new();

    for (line, raw) in text::content_lines(content) {
        let err = |m: String| NedError::parse(source, line, m);
        if let Some((id, rest)) = raw.split_once("|t|") {
            title = Some((id.to_owned(), rest.to_owned()));
            continue;
        }
        if let Some((id, rest)) = raw.split_once("|a|") {
            let (tid, t) = title.take().ok_or_else(|| err("abstract without title".into()))?;
            if tid != id {
                return Err(err(format!("abstract for `{id}` follows title of `{tid}`")));
            }
            let doc = RawDocument {
                doc_id: id.to_owned(),
                text: format!("{t} {rest}"),
                mentions: Vec::new(),
                sentences: None,
            };
            chars = doc.text.chars().collect();
            docs.push(doc);
            continue;
        }
        let cols: Vec<&str> = raw.split('\t').collect();
        if cols.len() < 6 {
            continue; // relation or other non-mention line
        }
        let doc = docs
            .last_mut()
            .filter(|d| d.doc_id == cols[0])
            .ok_or_else(|| err(format!("annotation for unknown document `{}`", cols[0])))?;
        let start: usize = cols[1].parse().map_err(|_| err(format!("bad offset `{}`", cols[1])))?;
        let end: usize = cols[2].parse().map_err(|_| err(format!("bad offset `{}`", cols[2])))?;
        if start >= end || end > chars.len() {
            return Err(err(format!("span [{start},{end}) outside document text")));
        }
        let slice: String = chars[start..end].iter().collect();
        if slice != cols[3] {
            return Err(err(format!("span text `{slice}` does not match `{}`", cols[3])));
        }
        let ids: Vec<String> = cols[5]
            .split('|')
            .map(|s| strip_namespace(s.trim()).to_owned())
            .filter(|s| !s.is_empty())
            .collect();
        if ids.is_empty() || ids.iter().any(|i| i == "-1") {
            continue;
        }
        let sub_spans = match cols.get(6) {
            Some(parts) if ids.len() > 1 => locate_parts(&chars, start, end, parts),
            _ => None,
        };
        doc.mentions.push(CharMention {
            start_char: start,
            end_char: end,
            gold_ids: ids,
            sub_spans,
        });
    }
    Ok(docs)
}

pub fn load_raw_documents(path: &Path, format: RawFormat) -> Result<Vec<RawDocument>> {
    let content = text::read_to_string(path)?;
    let source = path.display().to_string();
    match format {
        RawFormat::Jsonl => parse_raw_jsonl(&source, &content),
        RawFormat::Pubtator => parse_pubtator(&source, &content),
    }
}
