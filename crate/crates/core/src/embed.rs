//! The embedder seam between the pipeline and any neural encoder, a
//! deterministic feature-hashing reference embedder, and vector files.
//!
//! Vector text format: a `dim=<n>` header line, then one
//! `id<TAB>f1<TAB>...<TAB>fn` row per vector. The binary variant stores the
//! same records little-endian: magic `NEDVEC1\0`, `u32` dim, `u32` count,
//! then per record a `u32` id length, the UTF-8 id, and `dim` `f64` values.

use std::collections::BTreeMap;
use std::path::Path;

use xxhash_rust::xxh64::xxh64;

use crate::error::{NedError, Result};
use crate::sequence::TokenSequence;
use crate::text;

/// A finite real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    /// Rejects empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(NedError::Argument("embedding dimension must be positive".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NedError::NonFinite {
                id: String::new(),
                row: 0,
            });
        }
        Ok(EmbeddingVector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        EmbeddingVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &EmbeddingVector) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }
}

/// Sequential dot product; summation order is fixed so results are
/// reproducible across call sites.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// Maps token sequences to vectors. Implementations must be deterministic
/// and emit `dim()`-sized vectors from both methods.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed_context(&self, seq: &TokenSequence) -> EmbeddingVector;
    fn embed_entity(&self, seq: &TokenSequence) -> EmbeddingVector;
}

const TOKEN_TAG: u8 = b'w';
const TRIGRAM_TAG: u8 = b't';

fn feature_hash(tag: u8, feature: &str, seed: u64) -> u64 {
    let mut buf = Vec::with_capacity(feature.len() + 1);
    buf.push(tag);
    buf.extend_from_slice(feature.as_bytes());
    xxh64(&buf, seed)
}

fn add_feature(acc: &mut [f64], h: u64) {
    let sign = if h & 1 == 0 { 1.0 } else { -1.0 };
    // bucket from the bits above the sign bit so sign and bucket are independent
    let bucket = ((h >> 1) % acc.len() as u64) as usize;
    acc[bucket] += sign;
}

/// Signed feature hashing over case-folded non-marker tokens and their
/// character trigrams, L2-normalized unless all-zero.
pub fn hash_embed_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>, dim: usize, seed: u64) -> EmbeddingVector {
    let dim = dim.max(1);
    let mut acc = vec![0.0f64; dim];
    for tok in tokens {
        if text::is_marker(tok) {
            continue;
        }
        let folded: String = tok.chars().flat_map(char::to_lowercase).collect();
        add_feature(&mut acc, feature_hash(TOKEN_TAG, &folded, seed));
        let chars: Vec<char> = folded.chars().collect();
        for tri in chars.windows(3) {
            let s: String = tri.iter().collect();
            add_feature(&mut acc, feature_hash(TRIGRAM_TAG, &s, seed));
        }
    }
    let norm = dot(&acc, &acc).sqrt();
    if norm > 0.0 {
        for v in &mut acc {
            *v /= norm;
        }
    }
    EmbeddingVector(acc)
}

pub fn hash_embed(seq: &TokenSequence, dim: usize, seed: u64) -> EmbeddingVector {
    hash_embed_tokens(seq.tokens.iter().map(String::as_str), dim, seed)
}

/// Reference embedder backed by [`hash_embed`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashEmbedder {
    pub dim: usize,
    pub seed: u64,
}

impl HashEmbedder {
    pub fn new(dim: usize, seed: u64) -> Self {
        HashEmbedder { dim: dim.max(1), seed }
    }
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed_context(&self, seq: &TokenSequence) -> EmbeddingVector {
        hash_embed(seq, self.dim, self.seed)
    }

    fn embed_entity(&self, seq: &TokenSequence) -> EmbeddingVector {
        hash_embed(seq, self.dim, self.seed)
    }
}

pub type VectorMap = BTreeMap<String, EmbeddingVector>;

fn check_uniform(vectors: &VectorMap) -> Result<usize> {
    let mut dim = None;
    for (row, v) in vectors.values().enumerate() {
        match dim {
            None => dim = Some(v.dim()),
            Some(d) if d != v.dim() => {
                return Err(NedError::DimMismatch {
                    row: row + 1,
                    expected: d,
                    found: v.dim(),
                })
            }
            _ => {}
        }
    }
    dim.ok_or_else(|| NedError::EmptyInput("no vectors".into()))
}

pub fn parse_vectors_text(source: &str, content: &str) -> Result<VectorMap> {
    let mut lines = text::content_lines(content);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| NedError::parse(source, 1, "missing `dim=<n>` header"))?;
    let dim: usize = header
        .trim()
        .strip_prefix("dim=")
        .and_then(|d| d.parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| NedError::parse(source, hline, "expected `dim=<n>` header"))?;
    let mut out = VectorMap::new();
    for (line, raw) in lines {
        let mut cols = raw.split('\t');
        let id = cols.next().unwrap_or_default().to_owned();
        let values: Vec<f64> = cols
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| NedError::parse(source, line, format!("bad float: {e}")))?;
        if values.len() != dim {
            return Err(NedError::DimMismatch {
                row: line,
                expected: dim,
                found: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NedError::NonFinite { id, row: line });
        }
        if out.contains_key(&id) {
            return Err(NedError::DuplicateId(id));
        }
        out.insert(id, EmbeddingVector(values));
    }
    Ok(out)
}

pub fn vectors_to_text(vectors: &VectorMap) -> Result<String> {
    let dim = check_uniform(vectors)?;
    let mut out = format!("dim={dim}\n");
    for (id, v) in vectors {
        out.push_str(id);
        for x in v.values() {
            out.push('\t');
            // shortest representation that round-trips exactly
            out.push_str(&format!("{x:?}"));
        }
        out.push('\n');
    }
    Ok(out)
}

const MAGIC: &[u8; 8] = b"NEDVEC1\0";

pub fn vectors_to_binary(vectors: &VectorMap) -> Result<Vec<u8>> {
    let dim = check_uniform(vectors)?;
    let mut out = Vec::with_capacity(16 + vectors.len() * (dim * 8 + 16));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    for (id, v) in vectors {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for x in v.values() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn parse_vectors_binary(source: &str, bytes: &[u8]) -> Result<VectorMap> {
    struct Reader<'a> {
        bytes: &'a [u8],
        pos: usize,
    }
    impl Reader<'_> {
        fn take(&mut self, n: usize) -> Option<&[u8]> {
            let s = self.bytes.get(self.pos..self.pos + n)?;
            self.pos += n;
            Some(s)
        }
        fn u32(&mut self) -> Option<usize> {
            self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()) as usize)
        }
    }
    let truncated = |row| NedError::parse(source, row, "truncated binary vector file");
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8) != Some(&MAGIC[..]) {
        return Err(NedError::parse(source, 0, "bad magic"));
    }
    let dim = r.u32().ok_or_else(|| truncated(0))?;
    let count = r.u32().ok_or_else(|| truncated(0))?;
    if dim == 0 {
        return Err(NedError::parse(source, 0, "dimension must be positive"));
    }
    let mut out = VectorMap::new();
    for row in 1..=count {
        let id_len = r.u32().ok_or_else(|| truncated(row))?;
        let id = std::str::from_utf8(r.take(id_len).ok_or_else(|| truncated(row))?)
            .map_err(|e| NedError::parse(source, row, e))?
            .to_owned();
        let raw = r.take(dim * 8).ok_or_else(|| truncated(row))?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(NedError::NonFinite { id, row });
        }
        if out.contains_key(&id) {
            return Err(NedError::DuplicateId(id));
        }
        out.insert(id, EmbeddingVector(values));
    }
    Ok(out)
}

/// Loads a vector file, detecting the binary variant by its magic bytes.
pub fn load_vectors(path: &Path) -> Result<VectorMap> {
    let bytes = std::fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            NedError::MissingInput {
                artifact: "vectors".into(),
                path: path.to_path_buf(),
            }
        } else {
            NedError::io(path, e)
        }
    })?;
    let source = path.display().to_string();
    if bytes.starts_with(MAGIC) {
        parse_vectors_binary(&source, &bytes)
    } else {
        let content = String::from_utf8(bytes).map_err(|e| NedError::parse(&source, 0, e))?;
        parse_vectors_text(&source, &content)
    }
}
