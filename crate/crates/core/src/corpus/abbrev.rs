//! Abbreviation definition extraction (Schwartz & Hearst, 2003) and
//! expansion of later short-form occurrences.
//!
//! Candidates come from `long form (SF)` and `SF (long form)` patterns. The
//! long form is located by matching the short-form characters right to left,
//! the first short-form character having to start a word. A pair is kept
//! when the best long form has at most `min(|SF| + 5, 2 * |SF|)` words,
//! where `|SF|` counts the alphanumeric characters of the short form.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbbreviationPair {
    pub short: String,
    pub long: String,
}

/// Replacement of the characters `[start, end)` of the original text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextEdit {
    pub start: usize,
    pub end: usize,
    pub replacement: String,
}

impl TextEdit {
    pub fn replacement_len(&self) -> usize {
        self.replacement.chars().count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    pub expanded_text: String,
    pub pairs: Vec<AbbreviationPair>,
    /// Applied replacements in original character offsets, ascending and
    /// non-overlapping.
    pub edits: Vec<TextEdit>,
}

/// A definition found in the text: the pair plus the character range of
/// the whole defining construct (long form through closing parenthesis).
#[derive(Debug, Clone)]
struct Definition {
    pair: AbbreviationPair,
    construct: (usize, usize),
}

fn find_from(chars: &[char], from: usize, pat: &[char]) -> Option<usize> {
    if pat.len() > chars.len() {
        return None;
    }
    (from..=chars.len() - pat.len()).find(|&i| chars[i..i + pat.len()] == *pat)
}

/// Last index `i` in `[lo, hi)` where `pat` starts and ends before `hi`.
fn rfind_in(chars: &[char], lo: usize, hi: usize, pat: &[char]) -> Option<usize> {
    if hi < lo + pat.len() {
        return None;
    }
    (lo..=hi - pat.len()).rev().find(|&i| chars[i..i + pat.len()] == *pat)
}

fn trim_range(chars: &[char], mut lo: usize, mut hi: usize) -> (usize, usize) {
    while lo < hi && chars[lo].is_whitespace() {
        lo += 1;
    }
    while hi > lo && chars[hi - 1].is_whitespace() {
        hi -= 1;
    }
    (lo, hi)
}

fn collect(chars: &[char], range: (usize, usize)) -> String {
    chars[range.0..range.1].iter().collect()
}

fn is_valid_short_form(s: &[char]) -> bool {
    s.iter().any(|c| c.is_alphabetic())
        && s.first().is_some_and(|&c| c.is_alphanumeric() || c == '(')
}

fn lower(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// Right-to-left character match of the short form inside the candidate
/// long form. Returns the start offset (into `long`) of the best long form.
fn best_long_form(short: &[char], long: &[char]) -> Option<usize> {
    let mut l = long.len() as isize - 1;
    for s in (0..short.len()).rev() {
        let c = lower(short[s]);
        if !c.is_alphanumeric() {
            continue;
        }
        while (l >= 0 && lower(long[l as usize]) != c)
            || (s == 0 && l > 0 && long[l as usize - 1].is_alphanumeric())
        {
            l -= 1;
        }
        if l < 0 {
            return None;
        }
        l -= 1;
    }
    // back up to the start of the word containing the first match
    let upto = (l + 1) as usize;
    let start = long[..upto]
        .iter()
        .rposition(|&c| c == ' ')
        .map_or(0, |p| p + 1);
    Some(start)
}

fn accept_pair(short: &[char], long: &[char]) -> Option<usize> {
    if short.len() < 2 {
        return None;
    }
    let start = best_long_form(short, long)?;
    let best = &long[start..];
    let long_words = best
        .split(|c| c.is_whitespace() || *c == '-')
        .filter(|w| !w.is_empty())
        .count();
    let short_len = short.iter().filter(|c| c.is_alphanumeric()).count();
    let mut short_space: Vec<char> = short.to_vec();
    short_space.push(' ');
    if best.len() < short.len()
        || find_from(best, 0, &short_space).is_some()
        || best.ends_with(short)
        || long_words > short_len * 2
        || long_words > short_len + 5
        || short_len > 10
    {
        return None;
    }
    Some(start)
}

fn find_definitions(chars: &[char]) -> Vec<Definition> {
    const OPEN: [char; 2] = [' ', '('];
    let mut defs = Vec::new();
    let mut cursor = 0usize;
    while let Some(p) = find_from(chars, cursor, &OPEN) {
        let open = p + 1;
        let Some(mut close) = chars[open + 1..].iter().position(|&c| c == ')').map(|i| i + open + 1)
        else {
            break;
        };
        let window_start = [rfind_in(chars, cursor, open, &['.', ' ']), rfind_in(chars, cursor, open, &[',', ' '])]
            .into_iter()
            .flatten()
            .max()
            .map_or(cursor, |i| i + 2);
        let mut long = (window_start, open);
        let mut short = (open + 1, close);

        if short.1 - short.0 > 1 && long.1 - long.0 > 1 {
            if chars[short.0..short.1].contains(&'(') {
                if let Some(next) = chars[close + 1..].iter().position(|&c| c == ')') {
                    close = close + 1 + next;
                    short.1 = close;
                }
            }
            for sep in [[',', ' '], [';', ' ']] {
                if let Some(i) = find_from(&chars[..short.1], short.0, &sep) {
                    short.1 = i;
                }
            }
            let short_words = chars[short.0..short.1]
                .split(|c| c.is_whitespace())
                .filter(|w| !w.is_empty())
                .count();
            let mut swapped = false;
            if short_words > 2 || short.1 - short.0 > long.1 - long.0 {
                // `SF (long form)`: the short form is the word before the parenthesis
                let end = open.saturating_sub(1);
                let start = chars[..end.saturating_sub(1)]
                    .iter()
                    .rposition(|&c| c == ' ')
                    .map_or(0, |i| i + 1)
                    .max(window_start);
                long = short;
                short = (start.min(end), end);
                swapped = true;
            }
            let short_t = trim_range(chars, short.0, short.1);
            let long_t = trim_range(chars, long.0, long.1);
            let short_chars = &chars[short_t.0..short_t.1];
            let has_capital = short_chars.iter().any(|c| c.is_uppercase());
            if (!swapped || has_capital) && is_valid_short_form(short_chars) {
                if let Some(off) = accept_pair(short_chars, &chars[long_t.0..long_t.1]) {
                    let long_range = (long_t.0 + off, long_t.1);
                    defs.push(Definition {
                        pair: AbbreviationPair {
                            short: collect(chars, short_t),
                            long: collect(chars, long_range),
                        },
                        construct: (long_range.0.min(short_t.0), close + 1),
                    });
                }
            }
        }
        cursor = close + 1;
    }
    defs
}

fn is_standalone(chars: &[char], start: usize, end: usize) -> bool {
    (start == 0 || !chars[start - 1].is_alphanumeric())
        && (end == chars.len() || !chars[end].is_alphanumeric())
}

/// Finds abbreviation definitions and replaces every later standalone
/// occurrence of each short form with its long form. The defining
/// construct itself is left untouched. When a short form is defined more
/// than once, the first definition wins.
pub fn expand_abbreviations(text: &str) -> Expansion {
    let chars: Vec<char> = text.chars().collect();
    let defs = find_definitions(&chars);

    let mut pairs: Vec<AbbreviationPair> = Vec::new();
    let mut candidates: Vec<TextEdit> = Vec::new();
    for def in &defs {
        if pairs.iter().any(|p| p.short == def.pair.short) {
            continue;
        }
        pairs.push(def.pair.clone());
        let short: Vec<char> = def.pair.short.chars().collect();
        let mut from = def.construct.1;
        while let Some(i) = find_from(&chars, from, &short) {
            let end = i + short.len();
            let inside_definition = defs
                .iter()
                .any(|d| i < d.construct.1 && end > d.construct.0);
            if is_standalone(&chars, i, end) && !inside_definition {
                candidates.push(TextEdit {
                    start: i,
                    end,
                    replacement: def.pair.long.clone(),
                });
            }
            from = i + 1;
        }
    }

    // earliest start wins; on equal start the longer match wins
    candidates.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut edits: Vec<TextEdit> = Vec::new();
    for e in candidates {
        if edits.last().is_none_or(|last| e.start >= last.end) {
            edits.push(e);
        }
    }

    let mut expanded = String::with_capacity(text.len());
    let mut pos = 0;
    for e in &edits {
        expanded.extend(&chars[pos..e.start]);
        expanded.push_str(&e.replacement);
        pos = e.end;
    }
    expanded.extend(&chars[pos..]);

    Expansion {
        expanded_text: expanded,
        pairs,
        edits,
    }
}

/// Maps a half-open character range of the original text through `edits`.
/// Returns `None` when an edit cuts across the range boundary.
pub(crate) fn remap_range(edits: &[TextEdit], start: usize, end: usize) -> Option<(usize, usize)> {
    let mut new_start = start as isize;
    let mut new_end = end as isize;
    for e in edits {
        let delta = e.replacement_len() as isize - (e.end - e.start) as isize;
        if e.end <= start {
            new_start += delta;
            new_end += delta;
        } else if e.start >= end {
            break;
        } else if e.start >= start && e.end <= end {
            new_end += delta;
        } else {
            return None;
        }
    }
    Some((new_start as usize, new_end as usize))
}
