//! Small text helpers shared across modules: marker tokens, case folding,
//! word splitting, score formatting and line-oriented file reading.

use std::fs;
use std::path::Path;

use crate::error::{NedError, Result};

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const ENT_START: &str = "[ENT_START]";
pub const ENT_END: &str = "[ENT_END]";
pub const ENT_DESC: &str = "[ENT_DESC]";

/// Reserved marker spellings. None of these may appear as a word of source text.
pub const MARKERS: [&str; 5] = [CLS, SEP, ENT_START, ENT_END, ENT_DESC];

pub fn is_marker(token: &str) -> bool {
    MARKERS.contains(&token)
}

/// Returns the first reserved marker contained anywhere in `text`.
pub fn find_marker(text: &str) -> Option<&'static str> {
    MARKERS.iter().copied().find(|m| text.contains(m))
}

/// Case-fold and collapse internal whitespace runs to a single space.
pub fn fold(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for (i, w) in s.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.extend(w.chars().flat_map(char::to_lowercase));
    }
    out
}

/// Words are maximal non-whitespace runs.
pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

pub fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Formats a score with 9 significant digits in scientific notation.
/// The output parses back with `str::parse::<f64>`.
pub fn fmt_score(x: f64) -> String {
    format!("{x:.8e}")
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            NedError::MissingInput {
                artifact: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                path: path.to_path_buf(),
            }
        } else {
            NedError::io(path, e)
        }
    })
}

/// Iterates non-blank lines with their 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| NedError::io(parent, e))?;
        }
    }
    fs::write(path, contents).map_err(|e| NedError::io(path, e))
}
