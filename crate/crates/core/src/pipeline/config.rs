use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::{PreprocessOptions, Split};
use crate::error::{NedError, Result};
use crate::eval::UserSlice;
use crate::postprocess::Threshold;
use crate::rerank::RerankParams;
use crate::sequence;
use crate::text;

/// Environment variable naming the config file.
pub const CONFIG_ENV: &str = "NEDKIT_CONFIG";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dataset {
    #[default]
    Mm,
    Bc5cdr,
}

impl Dataset {
    pub fn default_threshold(self) -> Threshold {
        match self {
            Dataset::Mm => Threshold::MEDMENTIONS,
            Dataset::Bc5cdr => Threshold::BC5CDR,
        }
    }
}

/// Input and output locations. Relative paths resolve against the
/// directory of the config file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub kb: Option<PathBuf>,
    pub mapping: Option<PathBuf>,
    pub gold_mapping: Option<PathBuf>,
    /// Raw documents per split name (`train`, `dev`, `test`, `pretrain`).
    pub raw: BTreeMap<Split, PathBuf>,
    /// Precomputed entity vectors; replaces the hash embedder in `index`.
    pub entity_vectors: Option<PathBuf>,
    /// Precomputed mention vectors keyed by mention ref.
    pub mention_vectors: Option<PathBuf>,
    /// Precomputed pair scores; replaces the reference scorer in `link`.
    pub scores: Option<PathBuf>,
    /// Entity ids, one per line, restricting the candidate pool.
    pub pool: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub window_len: usize,
    pub context_max: usize,
    pub entity_max: usize,
    pub pair_context_max: usize,
    pub types_word_limit: usize,
    pub k: usize,
    /// Backoff threshold; the dataset default applies when unset.
    pub threshold: Option<f64>,
    pub group_size: usize,
    pub downsample_threshold: usize,
    pub desc_word_limit: usize,
    pub embed_dim: usize,
    pub embed_seed: u64,
    pub hard_negatives: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            window_len: sequence::DEFAULT_WINDOW_LEN,
            context_max: sequence::DEFAULT_CONTEXT_MAX,
            entity_max: sequence::DEFAULT_ENTITY_MAX,
            pair_context_max: sequence::DEFAULT_PAIR_CONTEXT_MAX,
            types_word_limit: sequence::DEFAULT_TYPES_WORD_LIMIT,
            k: crate::candix::DEFAULT_K,
            threshold: None,
            group_size: 3,
            downsample_threshold: 40,
            desc_word_limit: crate::kb::DEFAULT_DESC_WORD_LIMIT,
            embed_dim: 256,
            embed_seed: 0,
            hard_negatives: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Toggles {
    pub expand_abbreviations: bool,
    pub split_composites: bool,
    pub drop_sentence_crossing: bool,
    pub drop_overlapping: bool,
    /// Use the augmented KB for indexing and reranking.
    pub augment: bool,
    /// Put aliases in entity titles at indexing time.
    pub aliases_in_index: bool,
    pub backoff: bool,
    pub synthesis: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            expand_abbreviations: true,
            split_composites: true,
            drop_sentence_crossing: true,
            drop_overlapping: true,
            augment: true,
            aliases_in_index: false,
            backoff: true,
            synthesis: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub dataset: Dataset,
    pub paths: Paths,
    pub params: Params,
    pub toggles: Toggles,
    /// Split linked and evaluated by `link` and `evaluate`.
    pub eval_split: Option<Split>,
    pub sweep_grid: Vec<f64>,
    pub user_slices: Vec<UserSlice>,
}

impl PipelineConfig {
    pub fn from_json(source: &str, content: &str) -> Result<Self> {
        serde_json::from_str(content).map_err(|e| NedError::Config(format!("{source}: {e}")))
    }

    /// Reads a config file and resolves its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let content = text::read_to_string(path).map_err(|e| match e {
            NedError::MissingInput { path, .. } => NedError::Config(format!("config file {} not found", path.display())),
            other => other,
        })?;
        let mut cfg = Self::from_json(&path.display().to_string(), &content)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let p = &mut self.paths;
        for o in [&mut p.kb, &mut p.mapping, &mut p.gold_mapping, &mut p.entity_vectors, &mut p.mention_vectors, &mut p.scores, &mut p.pool] {
            if let Some(x) = o.as_mut() {
                fix(x);
            }
        }
        p.raw.values_mut().for_each(fix);
        fix(&mut p.out_dir);
    }

    /// Applies a `dotted.key=value` override. The value is read as JSON
    /// and falls back to a plain string.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| NedError::Config(format!("override `{assignment}` is not key=value")))?;
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_owned()));
        let mut root = serde_json::to_value(&*self).expect("config serializes");
        let mut node = &mut root;
        let parts: Vec<&str> = key.split('.').collect();
        for (i, part) in parts.iter().enumerate() {
            let obj = node
                .as_object_mut()
                .ok_or_else(|| NedError::Config(format!("`{key}` does not name a config key")))?;
            let last = i + 1 == parts.len();
            // maps such as paths.raw accept new keys
            let open = matches!(parts[..i], ["paths", "raw"]);
            if !obj.contains_key(*part) && !open {
                return Err(NedError::Config(format!("unknown config key `{key}`")));
            }
            if last {
                obj.insert((*part).to_owned(), value.clone());
                break;
            }
            node = obj.get_mut(*part).expect("checked above");
            if node.is_null() {
                *node = Value::Object(Default::default());
            }
        }
        *self = serde_json::from_value(root).map_err(|e| NedError::Config(format!("`{assignment}`: {e}")))?;
        Ok(())
    }

    pub fn threshold(&self) -> Result<Threshold> {
        match self.params.threshold {
            Some(t) => Threshold::new(t),
            None => Ok(self.dataset.default_threshold()),
        }
    }

    pub fn eval_split(&self) -> Split {
        self.eval_split.unwrap_or(Split::Test)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.params;
        let positive = [
            ("params.context_max", p.context_max),
            ("params.entity_max", p.entity_max),
            ("params.pair_context_max", p.pair_context_max),
            ("params.types_word_limit", p.types_word_limit),
            ("params.k", p.k),
            ("params.group_size", p.group_size),
            ("params.downsample_threshold", p.downsample_threshold),
            ("params.desc_word_limit", p.desc_word_limit),
            ("params.embed_dim", p.embed_dim),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(NedError::Config(format!("{name} must be at least 1")));
            }
        }
        for (name, v) in [("params.context_max", p.context_max), ("params.pair_context_max", p.pair_context_max)] {
            if v < 5 {
                return Err(NedError::Config(format!("{name} must leave room for the mention and four markers")));
            }
        }
        if p.entity_max < 4 {
            return Err(NedError::Config("params.entity_max must be at least 4".into()));
        }
        self.threshold()?;
        for t in &self.sweep_grid {
            Threshold::new(*t)?;
        }
        for u in &self.user_slices {
            u.validate()?;
        }
        Ok(())
    }

    pub fn preprocess_options(&self) -> PreprocessOptions {
        PreprocessOptions {
            expand_abbreviations: self.toggles.expand_abbreviations,
            split_composites: self.toggles.split_composites,
            drop_sentence_crossing: self.toggles.drop_sentence_crossing,
            drop_overlapping: self.toggles.drop_overlapping,
            group_size: self.params.group_size,
        }
    }

    pub fn rerank_params(&self) -> RerankParams {
        RerankParams {
            pair_context_max: self.params.pair_context_max,
            entity_max: self.params.entity_max,
            types_word_limit: self.params.types_word_limit,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}
