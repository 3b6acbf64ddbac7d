//! Biomedical named entity disambiguation toolkit: knowledge base
//! augmentation, corpus preprocessing, dense candidate retrieval,
//! reranking, post-processing and slice evaluation.

pub mod candix;
pub mod corpus;
pub mod embed;
pub mod error;
pub mod fixture;
pub mod eval;
pub mod kb;
pub mod postprocess;
pub mod rerank;
pub mod pipeline;
pub mod sequence;
pub mod text;

pub use error::{NedError, Result};
