//! Token sequences fed to the encoders.
//!
//! Tokens are whitespace words plus marker tokens; any subword tokenization
//! belongs to the embedder. Three templates exist:
//!
//! ```text
//! context: [CLS] left [ENT_START] mention [ENT_END] right [SEP]
//! entity:  [CLS] title [SEP] types [SEP] desc [SEP]
//! pair:    context [ENT_DESC] entity-without-[CLS]
//! ```

use serde::{Deserialize, Serialize};

use crate::corpus::{MentionSpan, SentenceGroup};
use crate::error::{NedError, Result};
use crate::kb::EntityRecord;
use crate::text::{self, CLS, ENT_DESC, ENT_END, ENT_START, SEP};

pub const DEFAULT_WINDOW_LEN: usize = 30;
pub const DEFAULT_CONTEXT_MAX: usize = 64;
pub const DEFAULT_ENTITY_MAX: usize = 128;
pub const DEFAULT_PAIR_CONTEXT_MAX: usize = 128;
pub const DEFAULT_TYPES_WORD_LIMIT: usize = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextWindow {
    pub left: Vec<String>,
    pub mention: Vec<String>,
    pub right: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Context,
    Entity,
    Pair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub tokens: Vec<String>,
    pub kind: SequenceKind,
    pub max_len: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens that are not markers.
    pub fn content(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str).filter(|t| !text::is_marker(t))
    }
}

/// Up to `window_len` words on each side of the mention, from its own group.
pub fn extract_window(group: &SentenceGroup, mention: &MentionSpan, window_len: usize) -> Result<ContextWindow> {
    let (s, e) = (mention.start_word, mention.end_word);
    if s >= e || e > group.words.len() {
        return Err(NedError::InvalidSpan(format!(
            "[{s},{e}) in group {}:{} of {} words",
            group.doc_id,
            group.group_index,
            group.words.len()
        )));
    }
    Ok(ContextWindow {
        left: group.words[s.saturating_sub(window_len)..s].to_vec(),
        mention: group.words[s..e].to_vec(),
        right: group.words[e..(e + window_len).min(group.words.len())].to_vec(),
    })
}

/// Builds the context template. When too long, words are removed one at a
/// time from the far left and far right ends alternately (left first);
/// markers and mention words are kept. If the mention alone does not fit,
/// its tail is cut and a warning is logged.
pub fn build_context_sequence(window: &ContextWindow, max_len: usize) -> Result<TokenSequence> {
    const MARKERS: usize = 4;
    if max_len <= MARKERS {
        return Err(NedError::Argument(format!(
            "context max_len {max_len} leaves no room for the mention"
        )));
    }
    if window.mention.is_empty() {
        return Err(NedError::InvalidSpan("empty mention".into()));
    }
    let mut mention: &[String] = &window.mention;
    if mention.len() + MARKERS > max_len {
        log::warn!(
            "mention of {} words truncated to fit context limit {max_len}",
            mention.len()
        );
        mention = &mention[..max_len - MARKERS];
    }
    let mut left: &[String] = &window.left;
    let mut right: &[String] = &window.right;
    let mut trim_left = true;
    while left.len() + mention.len() + right.len() + MARKERS > max_len {
        if (trim_left && !left.is_empty()) || right.is_empty() {
            left = &left[1..];
        } else {
            right = &right[..right.len() - 1];
        }
        trim_left = !trim_left;
    }
    let mut tokens = Vec::with_capacity(left.len() + mention.len() + right.len() + MARKERS);
    tokens.push(CLS.to_owned());
    tokens.extend_from_slice(left);
    tokens.push(ENT_START.to_owned());
    tokens.extend_from_slice(mention);
    tokens.push(ENT_END.to_owned());
    tokens.extend_from_slice(right);
    tokens.push(SEP.to_owned());
    Ok(TokenSequence {
        tokens,
        kind: SequenceKind::Context,
        max_len,
    })
}

/// Entity title: canonical name, optionally followed by all aliases,
/// joined with `"; "`.
pub fn entity_title(entity: &EntityRecord, include_aliases: bool) -> String {
    if include_aliases {
        entity.names().collect::<Vec<_>>().join("; ")
    } else {
        entity.canonical_name.clone()
    }
}

/// Keeps leading whole types while their `"; "`-joined form stays within
/// `word_limit` words.
pub fn limit_types(types: &[String], word_limit: usize) -> Vec<String> {
    let mut kept = types.to_vec();
    while text::word_count(&kept.join("; ")) > word_limit {
        kept.pop();
    }
    kept
}

/// Builds the entity template. The description is truncated to fit
/// `max_len`; if title and types alone overflow, trailing type words and
/// then trailing title words are cut.
pub fn build_entity_sequence(
    entity: &EntityRecord,
    include_aliases_in_title: bool,
    types_word_limit: usize,
    max_len: usize,
) -> TokenSequence {
    const MARKERS: usize = 4;
    let mut title = text::words(&entity_title(entity, include_aliases_in_title));
    let mut types = text::words(&limit_types(&entity.types, types_word_limit).join("; "));
    let mut desc = entity.description.as_deref().map(text::words).unwrap_or_default();

    let budget = max_len.saturating_sub(MARKERS);
    desc.truncate(budget.saturating_sub(title.len() + types.len()));
    types.truncate(budget.saturating_sub(title.len()));
    title.truncate(budget);

    let mut tokens = Vec::with_capacity(title.len() + types.len() + desc.len() + MARKERS);
    tokens.push(CLS.to_owned());
    tokens.extend(title);
    tokens.push(SEP.to_owned());
    tokens.extend(types);
    tokens.push(SEP.to_owned());
    tokens.extend(desc);
    tokens.push(SEP.to_owned());
    TokenSequence {
        tokens,
        kind: SequenceKind::Entity,
        max_len: max_len.max(MARKERS),
    }
}

/// `context [ENT_DESC] entity`, dropping the entity's leading `[CLS]`.
pub fn build_pair_sequence(context: &TokenSequence, entity: &TokenSequence) -> TokenSequence {
    let mut tokens = Vec::with_capacity(context.len() + entity.len());
    tokens.extend_from_slice(&context.tokens);
    tokens.push(ENT_DESC.to_owned());
    tokens.extend_from_slice(entity.tokens.get(1..).unwrap_or_default());
    TokenSequence {
        tokens,
        kind: SequenceKind::Pair,
        max_len: context.max_len + entity.max_len,
    }
}

/// Splits a pair sequence at its `[ENT_DESC]` marker.
pub fn split_pair(pair: &TokenSequence) -> Result<(&[String], &[String])> {
    let at = pair
        .tokens
        .iter()
        .position(|t| t == ENT_DESC)
        .ok_or(NedError::MissingDescMarker)?;
    Ok((&pair.tokens[..at], &pair.tokens[at + 1..]))
}
