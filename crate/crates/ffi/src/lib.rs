//! C ABI over the nedkit library.
//!
//! Every fallible function returns a [`NedStatus`]; on failure the message
//! is available from [`ned_last_error_message`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings crossing the boundary are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, UnwindSafe};
use std::path::Path;
use std::ptr;

use nedkit::candix::{CandidateIndex, CandidateSet};
use nedkit::corpus::MentionRef;
use nedkit::embed::{hash_embed, hash_embed_tokens, load_vectors, EmbeddingVector, VectorMap};
use nedkit::kb::{load_kb, KnowledgeBase};
use nedkit::postprocess::string_similarity;
use nedkit::rerank::softmax;
use nedkit::sequence::{build_entity_sequence, DEFAULT_ENTITY_MAX, DEFAULT_TYPES_WORD_LIMIT};
use nedkit::NedError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NedStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Io = 4,
    MissingInput = 5,
    Parse = 6,
    DimMismatch = 7,
    EmptyInput = 8,
    UnknownEntity = 9,
    OutOfRange = 10,
    Panic = 11,
    Data = 12,
}

impl From<&NedError> for NedStatus {
    fn from(e: &NedError) -> Self {
        match e {
            NedError::Io { .. } => NedStatus::Io,
            NedError::MissingInput { .. } => NedStatus::MissingInput,
            NedError::Parse { .. } => NedStatus::Parse,
            NedError::DimMismatch { .. } => NedStatus::DimMismatch,
            NedError::EmptyInput(_) | NedError::EmptyPool | NedError::EmptyGold => NedStatus::EmptyInput,
            NedError::UnknownEntity(_) => NedStatus::UnknownEntity,
            NedError::Argument(_) | NedError::Config(_) => NedStatus::InvalidArgument,
            _ => NedStatus::Data,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(NedStatus, String);

impl From<NedError> for Fail {
    fn from(e: NedError) -> Self {
        Fail(NedStatus::from(&e), e.to_string())
    }
}

type FfiResult = Result<(), Fail>;

fn guard(f: impl FnOnce() -> FfiResult + UnwindSafe) -> NedStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(f) {
        Ok(Ok(())) => NedStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside nedkit");
            NedStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(NedStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(NedStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or NULL. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn ned_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn ned_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Opaque knowledge base handle.
pub struct NedKb(KnowledgeBase);

/// Opaque candidate index handle.
pub struct NedIndex(CandidateIndex);

/// Opaque ranked candidate list.
pub struct NedCandidates {
    ids: Vec<CString>,
    scores: Vec<f64>,
}

/// Loads a JSONL knowledge base.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_kb_load(path: *const c_char, out: *mut *mut NedKb) -> NedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let kb = load_kb(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(NedKb(kb)));
        Ok(())
    })
}

/// # Safety
/// `kb` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_kb_len(kb: *const NedKb, out: *mut usize) -> NedStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(kb, "kb")?.0.len();
        Ok(())
    })
}

/// # Safety
/// `kb` must be a live handle, `id` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ned_kb_contains(kb: *const NedKb, id: *const c_char, out: *mut bool) -> NedStatus {
    guard(|| {
        let id = str_arg(id, "id")?;
        *out_arg(out, "out")? = handle(kb, "kb")?.0.contains(id);
        Ok(())
    })
}

/// # Safety
/// `kb` must be NULL or a handle from [`ned_kb_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ned_kb_free(kb: *mut NedKb) {
    if !kb.is_null() {
        drop(Box::from_raw(kb));
    }
}

fn index_from(vectors: &VectorMap) -> Result<NedIndex, Fail> {
    let (index, _) = CandidateIndex::build(vectors, None)?;
    Ok(NedIndex(index))
}

/// Builds an index by hash-embedding every entity of `kb` with default
/// sequence limits and canonical-name titles.
///
/// # Safety
/// `kb` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_index_from_kb(kb: *const NedKb, dim: usize, seed: u64, out: *mut *mut NedIndex) -> NedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if dim == 0 {
            return Err(Fail(NedStatus::InvalidArgument, "dim must be at least 1".into()));
        }
        let kb = &handle(kb, "kb")?.0;
        let vectors: VectorMap = kb
            .iter()
            .map(|e| {
                let seq = build_entity_sequence(e, false, DEFAULT_TYPES_WORD_LIMIT, DEFAULT_ENTITY_MAX);
                (e.id.clone(), hash_embed(&seq, dim, seed))
            })
            .collect();
        *out = Box::into_raw(Box::new(index_from(&vectors)?));
        Ok(())
    })
}

/// Builds an index from a text or binary vector file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_index_load(path: *const c_char, out: *mut *mut NedIndex) -> NedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let vectors = load_vectors(Path::new(str_arg(path, "path")?))?;
        *out = Box::into_raw(Box::new(index_from(&vectors)?));
        Ok(())
    })
}

/// # Safety
/// `index` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_index_info(index: *const NedIndex, out_len: *mut usize, out_dim: *mut usize) -> NedStatus {
    guard(|| {
        let index = &handle(index, "index")?.0;
        *out_arg(out_len, "out_len")? = index.len();
        *out_arg(out_dim, "out_dim")? = index.dim();
        Ok(())
    })
}

/// Exact top-`k` by inner product, ties by ascending id.
///
/// # Safety
/// `index` must be a live handle, `query` must point to `dim` doubles and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_index_top_k(
    index: *const NedIndex,
    query: *const f64,
    dim: usize,
    k: usize,
    out: *mut *mut NedCandidates,
) -> NedStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let index = &handle(index, "index")?.0;
        let q = EmbeddingVector::new(slice_arg(query, dim, "query")?.to_vec())?;
        let set: CandidateSet = index.top_k(MentionRef::new("ffi", 0, 0), &q, k)?;
        let ids = set
            .candidates
            .iter()
            .map(|c| CString::new(c.entity_id.as_str()).map_err(|_| Fail(NedStatus::Data, "entity id contains NUL".into())))
            .collect::<Result<Vec<_>, _>>()?;
        let scores = set.candidates.iter().map(|c| c.score).collect();
        *out = Box::into_raw(Box::new(NedCandidates { ids, scores }));
        Ok(())
    })
}

/// # Safety
/// `index` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ned_index_free(index: *mut NedIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// # Safety
/// `c` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_candidates_len(c: *const NedCandidates, out: *mut usize) -> NedStatus {
    guard(|| {
        *out_arg(out, "out")? = handle(c, "candidates")?.ids.len();
        Ok(())
    })
}

/// Entity id and score at rank `i`. The id stays valid until the list is freed.
///
/// # Safety
/// `c` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_candidates_get(
    c: *const NedCandidates,
    i: usize,
    out_id: *mut *const c_char,
    out_score: *mut f64,
) -> NedStatus {
    guard(|| {
        let c = handle(c, "candidates")?;
        let (id_slot, score_slot) = (out_arg(out_id, "out_id")?, out_arg(out_score, "out_score")?);
        if i >= c.ids.len() {
            return Err(Fail(NedStatus::OutOfRange, format!("rank {i} of {}", c.ids.len())));
        }
        *id_slot = c.ids[i].as_ptr();
        *score_slot = c.scores[i];
        Ok(())
    })
}

/// # Safety
/// `c` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ned_candidates_free(c: *mut NedCandidates) {
    if !c.is_null() {
        drop(Box::from_raw(c));
    }
}

/// Hash-embeds the whitespace words of `text` into `out[0..dim]`.
///
/// # Safety
/// `text` must be NUL-terminated; `out` must hold `dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn ned_hash_embed(text: *const c_char, dim: usize, seed: u64, out: *mut f64) -> NedStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        if dim == 0 {
            return Err(Fail(NedStatus::InvalidArgument, "dim must be at least 1".into()));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let v = hash_embed_tokens(text.split_whitespace(), dim, seed);
        std::slice::from_raw_parts_mut(out, dim).copy_from_slice(v.values());
        Ok(())
    })
}

/// Normalized Levenshtein similarity of the case-folded strings.
///
/// # Safety
/// `a` and `b` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ned_string_similarity(a: *const c_char, b: *const c_char, out: *mut f64) -> NedStatus {
    guard(|| {
        let (a, b) = (str_arg(a, "a")?, str_arg(b, "b")?);
        *out_arg(out, "out")? = string_similarity(a, b);
        Ok(())
    })
}

/// Softmax of `scores[0..n]` into `out[0..n]`.
///
/// # Safety
/// `scores` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn ned_softmax(scores: *const f64, n: usize, out: *mut f64) -> NedStatus {
    guard(|| {
        let p = softmax(slice_arg(scores, n, "scores")?)?;
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&p);
        Ok(())
    })
}
