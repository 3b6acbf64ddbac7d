use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::json;

use super::config::PipelineConfig;
use super::manifest::Manifest;
use crate::candix::{candidates_to_text, mine_hard_negatives, MiningQuery, parse_candidates, recall_at_k, CandidateIndex, CandidateSet};
use crate::corpus::{
    ambiguity_stats, corpus_stats, downsample, load_corpus, load_raw_documents, preprocess, AnnotatedCorpus,
    MentionRef, RawFormat, RuleSentenceSplitter, Split,
};
use crate::embed::{hash_embed, load_vectors, vectors_to_binary, EmbeddingVector, VectorMap};
use crate::error::{NedError, Result};
use crate::eval::{
    accuracy, build_train_stats, gold_labels, membership_csv, slice_report, test_mentions, GoldLabels,
};
use crate::kb::{apply_mapping, kb_stats, load_gold_mapping, load_kb, load_mapping, mapping_accuracy, KnowledgeBase};
use crate::postprocess::{backoff, synthesize_all, Threshold};
use crate::rerank::{parse_predictions, predictions_to_text, rerank, PairScorer, Prediction, ReferenceScorer, ScoreTable};
use crate::sequence::{build_context_sequence, build_entity_sequence, extract_window, ContextWindow};
use crate::text;

pub const AUGMENTED_KB: &str = "kb_augmented.jsonl";
pub const ENTITY_VECTORS: &str = "entity_vectors.bin";
pub const STATS: &str = "stats.json";

pub fn corpus_file(split: Split) -> String {
    format!("corpus_{split}.jsonl")
}

pub fn downsampled_file(split: Split) -> String {
    format!("corpus_{split}_downsampled.jsonl")
}

pub fn candidates_file(split: Split) -> String {
    format!("candidates_{split}.tsv")
}

pub fn predictions_file(split: Split) -> String {
    format!("predictions_{split}.tsv")
}

pub fn negatives_file(split: Split) -> String {
    format!("hard_negatives_{split}.tsv")
}

pub fn sweep_file(split: Split) -> String {
    format!("sweep_{split}.tsv")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    KbAugment,
    Preprocess,
    Downsample,
    Stats,
    Index,
    Link,
    Evaluate,
    Sweep,
    Mine,
}

impl Stage {
    pub const ALL: [Stage; 9] = [
        Stage::KbAugment,
        Stage::Preprocess,
        Stage::Downsample,
        Stage::Stats,
        Stage::Index,
        Stage::Link,
        Stage::Evaluate,
        Stage::Sweep,
        Stage::Mine,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::KbAugment => "kb-augment",
            Stage::Preprocess => "preprocess",
            Stage::Downsample => "downsample",
            Stage::Stats => "stats",
            Stage::Index => "index",
            Stage::Link => "link",
            Stage::Evaluate => "evaluate",
            Stage::Sweep => "sweep",
            Stage::Mine => "mine",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = NedError;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| NedError::Argument(format!("unknown stage `{s}`")))
    }
}

/// Per-invocation options that are not part of the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageOptions {
    pub split: Option<Split>,
    pub grid: Vec<f64>,
}

struct Ctx<'a> {
    cfg: &'a PipelineConfig,
    out: &'a Path,
    manifest: Manifest,
}

impl<'a> Ctx<'a> {
    fn new(stage: Stage, cfg: &'a PipelineConfig) -> Self {
        Ctx {
            cfg,
            out: &cfg.paths.out_dir,
            manifest: Manifest::new(stage.name(), &cfg.to_json()),
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&mut self, name: &str, content: &[u8]) -> Result<()> {
        let p = self.out(name);
        if let Some(parent) = p.parent() {
            std::fs::create_dir_all(parent).map_err(|e| NedError::io(parent, e))?;
        }
        std::fs::write(&p, content).map_err(|e| NedError::io(&p, e))?;
        self.manifest.output(self.out, &p)
    }

    fn finish(self) -> Result<Manifest> {
        self.manifest.save(self.out)?;
        Ok(self.manifest)
    }
}

fn required<'p>(p: &'p Option<PathBuf>, key: &str) -> Result<&'p Path> {
    p.as_deref().ok_or_else(|| NedError::Config(format!("{key} is not set")))
}

fn ensure_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(NedError::MissingInput {
            artifact: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            path: path.to_path_buf(),
        })
    }
}

pub fn run_stage(stage: Stage, cfg: &PipelineConfig, opts: &StageOptions) -> Result<Manifest> {
    cfg.validate()?;
    log::info!("running stage {stage}");
    match stage {
        Stage::KbAugment => kb_augment(cfg),
        Stage::Preprocess => preprocess_stage(cfg),
        Stage::Downsample => downsample_stage(cfg, opts),
        Stage::Stats => stats_stage(cfg),
        Stage::Index => index_stage(cfg),
        Stage::Link => link_stage(cfg, opts),
        Stage::Evaluate => evaluate_stage(cfg, opts),
        Stage::Sweep => sweep_stage(cfg, opts),
        Stage::Mine => mine_stage(cfg, opts),
    }
}

/// The end-to-end chain. KB augmentation runs only when enabled and a
/// mapping is configured.
pub fn run_all(cfg: &PipelineConfig, opts: &StageOptions) -> Result<Vec<Manifest>> {
    cfg.validate()?;
    let mut stages = Vec::new();
    if cfg.toggles.augment && cfg.paths.mapping.is_some() {
        stages.push(Stage::KbAugment);
    }
    stages.extend([Stage::Preprocess, Stage::Index, Stage::Link, Stage::Evaluate]);
    stages.into_iter().map(|s| run_stage(s, cfg, opts)).collect()
}

fn kb_augment(cfg: &PipelineConfig) -> Result<Manifest> {
    let kb_path = required(&cfg.paths.kb, "paths.kb")?;
    let map_path = required(&cfg.paths.mapping, "paths.mapping")?;
    let mut cx = Ctx::new(Stage::KbAugment, cfg);
    let kb = load_kb(kb_path)?;
    let mapping = load_mapping(map_path)?;
    cx.manifest.input(kb_path)?;
    cx.manifest.input(map_path)?;
    let augmented = apply_mapping(&kb, &mapping, cfg.params.desc_word_limit);
    cx.write(AUGMENTED_KB, augmented.to_jsonl().as_bytes())?;

    let (before, after) = (kb_stats(&kb), kb_stats(&augmented));
    cx.manifest.count("entities", after.entity_count);
    cx.manifest.count("mapped_entities", kb.ids().filter(|id| mapping.get(id).is_some()).count());
    cx.manifest.count("distinct_types_before", before.distinct_type_count);
    cx.manifest.count("distinct_types_after", after.distinct_type_count);
    cx.manifest.count("described_before", before.described_entity_count);
    cx.manifest.count("described_after", after.described_entity_count);
    if let Some(gp) = &cfg.paths.gold_mapping {
        let gold = load_gold_mapping(gp)?;
        cx.manifest.input(gp)?;
        cx.manifest.metric("mapping_accuracy", mapping_accuracy(&mapping, &gold)?);
    }
    cx.finish()
}

fn preprocess_stage(cfg: &PipelineConfig) -> Result<Manifest> {
    if cfg.paths.raw.is_empty() {
        return Err(NedError::Config("paths.raw names no split".into()));
    }
    let mut cx = Ctx::new(Stage::Preprocess, cfg);
    let opts = cfg.preprocess_options();
    for (split, path) in &cfg.paths.raw {
        let docs = load_raw_documents(path, RawFormat::from_path(path))?;
        cx.manifest.input(path)?;
        let (corpus, report) = preprocess(&docs, *split, &opts, &RuleSentenceSplitter)?;
        cx.write(&corpus_file(*split), corpus.to_jsonl().as_bytes())?;
        let c = |k: &str| format!("{split}.{k}");
        cx.manifest.count(&c("documents"), docs.len());
        cx.manifest.count(&c("sentence_groups"), corpus.groups().len());
        cx.manifest.count(&c("input_mentions"), report.input_mentions);
        cx.manifest.count(&c("dropped_composite"), report.composite_unsplittable);
        cx.manifest.count(&c("dropped_abbreviation"), report.abbreviation_misaligned);
        cx.manifest.count(&c("dropped_invalid_span"), report.invalid_span);
        cx.manifest.count(&c("dropped_sentence_crossing"), report.sentence_crossing);
        cx.manifest.count(&c("dropped_group_boundary"), report.group_boundary);
        cx.manifest.count(&c("dropped_overlapping"), report.overlapping);
        cx.manifest.count(&c("mentions"), report.output_mentions);
    }
    cx.finish()
}

fn load_split(cx: &mut Ctx<'_>, split: Split) -> Result<AnnotatedCorpus> {
    let p = cx.out(&corpus_file(split));
    let corpus = load_corpus(&p, split)?;
    cx.manifest.input(&p)?;
    Ok(corpus)
}

fn downsample_stage(cfg: &PipelineConfig, opts: &StageOptions) -> Result<Manifest> {
    let split = opts.split.unwrap_or(if cfg.paths.raw.contains_key(&Split::Pretrain) {
        Split::Pretrain
    } else {
        Split::Train
    });
    let mut cx = Ctx::new(Stage::Downsample, cfg);
    let corpus = load_split(&mut cx, split)?;
    let (kept, removed) = downsample(&corpus, cfg.params.downsample_threshold);
    cx.write(&downsampled_file(split), kept.to_jsonl().as_bytes())?;
    cx.manifest.count("groups_before", corpus.groups().len());
    cx.manifest.count("groups_removed", removed);
    cx.manifest.count("groups_after", kept.groups().len());
    cx.manifest.count("mentions_after", kept.mention_count());
    cx.finish()
}

fn stats_stage(cfg: &PipelineConfig) -> Result<Manifest> {
    let mut cx = Ctx::new(Stage::Stats, cfg);
    let mut report = BTreeMap::new();
    for split in Split::ALL {
        let p = cx.out(&corpus_file(split));
        if !p.exists() {
            continue;
        }
        let corpus = load_split(&mut cx, split)?;
        report.insert(
            format!("corpus.{split}"),
            json!({ "counts": corpus_stats(&corpus), "ambiguity": ambiguity_stats(&corpus) }),
        );
    }
    if let Some(kp) = &cfg.paths.kb {
        let kb = load_kb(kp)?;
        cx.manifest.input(kp)?;
        report.insert("kb".to_owned(), json!(kb_stats(&kb)));
    }
    let ap = cx.out(AUGMENTED_KB);
    if ap.exists() {
        let kb = load_kb(&ap)?;
        cx.manifest.input(&ap)?;
        report.insert("kb_augmented".to_owned(), json!(kb_stats(&kb)));
    }
    if report.is_empty() {
        return Err(NedError::MissingInput {
            artifact: "preprocessed corpus or KB".into(),
            path: cfg.paths.out_dir.clone(),
        });
    }
    let mut s = serde_json::to_string_pretty(&report).expect("stats serialize");
    s.push('\n');
    cx.write(STATS, s.as_bytes())?;
    cx.manifest.count("sections", report.len());
    cx.finish()
}

/// The KB used for indexing and reranking.
fn working_kb(cx: &mut Ctx<'_>) -> Result<KnowledgeBase> {
    let p = if cx.cfg.toggles.augment && cx.cfg.paths.mapping.is_some() {
        cx.out(AUGMENTED_KB)
    } else {
        required(&cx.cfg.paths.kb, "paths.kb")?.to_path_buf()
    };
    let kb = load_kb(&p)?;
    cx.manifest.input(&p)?;
    Ok(kb)
}

fn index_stage(cfg: &PipelineConfig) -> Result<Manifest> {
    required(&cfg.paths.kb, "paths.kb")?;
    let mut cx = Ctx::new(Stage::Index, cfg);
    let vectors: VectorMap = match &cfg.paths.entity_vectors {
        Some(p) => {
            let v = load_vectors(p)?;
            cx.manifest.input(p)?;
            v
        }
        None => {
            let kb = working_kb(&mut cx)?;
            let p = &cfg.params;
            let records: Vec<_> = kb.iter().collect();
            records
                .par_iter()
                .map(|e| {
                    let seq = build_entity_sequence(e, cfg.toggles.aliases_in_index, p.types_word_limit, p.entity_max);
                    (e.id.clone(), hash_embed(&seq, p.embed_dim, p.embed_seed))
                })
                .collect()
        }
    };
    if vectors.is_empty() {
        return Err(NedError::EmptyPool);
    }
    let dim = vectors.values().next().map_or(0, EmbeddingVector::dim);
    cx.write(ENTITY_VECTORS, &vectors_to_binary(&vectors)?)?;
    cx.manifest.count("entities", vectors.len());
    cx.manifest.count("dim", dim);
    cx.finish()
}

/// Retrieval and reranking output for one mention.
pub struct Linked {
    pub set: CandidateSet,
    pub model: Prediction,
    pub probabilities: Vec<f64>,
}

struct LinkInputs {
    kb: KnowledgeBase,
    corpus: AnnotatedCorpus,
    windows: BTreeMap<MentionRef, ContextWindow>,
}

fn load_pool(cx: &mut Ctx<'_>) -> Result<Option<BTreeSet<String>>> {
    let Some(p) = &cx.cfg.paths.pool else { return Ok(None) };
    let content = text::read_to_string(p)?;
    cx.manifest.input(p)?;
    Ok(Some(text::content_lines(&content).map(|(_, l)| l.trim().to_owned()).collect()))
}

struct Retrieved {
    index: CandidateIndex,
    corpus: AnnotatedCorpus,
    windows: BTreeMap<MentionRef, ContextWindow>,
    queries: Vec<(MentionRef, EmbeddingVector)>,
}

fn retrieve(cx: &mut Ctx<'_>, split: Split) -> Result<Retrieved> {
    let cfg = cx.cfg;
    let p = &cfg.params;
    let corpus = load_split(cx, split)?;
    let vec_path = cx.out(ENTITY_VECTORS);
    ensure_exists(&vec_path)?;
    let entity_vectors = load_vectors(&vec_path)?;
    cx.manifest.input(&vec_path)?;
    let pool = load_pool(cx)?;
    let (index, report) = CandidateIndex::build(&entity_vectors, pool.as_ref())?;
    if !report.missing_ids.is_empty() {
        log::warn!("{} pool ids have no vector", report.missing_ids.len());
    }
    let mention_vectors = match &cfg.paths.mention_vectors {
        Some(mp) => {
            let v = load_vectors(mp)?;
            cx.manifest.input(mp)?;
            Some(v)
        }
        None => None,
    };

    let mut windows = BTreeMap::new();
    let mut queries = Vec::with_capacity(corpus.mention_count());
    for (r, g, m) in corpus.mentions() {
        let w = extract_window(g, m, p.window_len)?;
        let q = match &mention_vectors {
            Some(mv) => mv
                .get(&r.to_string())
                .cloned()
                .ok_or_else(|| NedError::RefMismatch(format!("no mention vector for {r}")))?,
            None => hash_embed(&build_context_sequence(&w, p.context_max)?, p.embed_dim, p.embed_seed),
        };
        queries.push((r.clone(), q));
        windows.insert(r, w);
    }
    if queries.is_empty() {
        return Err(NedError::EmptyInput(format!("{split} corpus has no mentions")));
    }
    Ok(Retrieved {
        index,
        corpus,
        windows,
        queries,
    })
}

fn retrieve_and_rerank(cx: &mut Ctx<'_>, split: Split) -> Result<(LinkInputs, Vec<Linked>)> {
    let cfg = cx.cfg;
    let p = &cfg.params;
    let kb = working_kb(cx)?;
    let Retrieved {
        index,
        corpus,
        windows,
        queries,
    } = retrieve(cx, split)?;
    let sets = index.top_k_batch(&queries, p.k)?;

    let scorer: Box<dyn PairScorer> = match &cfg.paths.scores {
        Some(sp) => {
            let content = text::read_to_string(sp)?;
            cx.manifest.input(sp)?;
            Box::new(ScoreTable::parse(&sp.display().to_string(), &content)?)
        }
        None => Box::new(ReferenceScorer::new(p.embed_dim, p.embed_seed)),
    };
    let params = cfg.rerank_params();
    let linked = sets
        .into_par_iter()
        .map(|set| {
            let out = rerank(&set, &windows[&set.mention_ref], &kb, scorer.as_ref(), &params)?;
            Ok(Linked {
                set,
                model: out.prediction,
                probabilities: out.probabilities,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((LinkInputs { kb, corpus, windows }, linked))
}

/// Backoff then synthesis, each when enabled.
pub fn postprocess_linked(
    linked: &[Linked],
    kb: &KnowledgeBase,
    threshold: Option<Threshold>,
    synthesis: bool,
) -> Result<Vec<Prediction>> {
    let preds = linked
        .par_iter()
        .map(|l| match threshold {
            Some(t) => backoff(&l.model, &l.probabilities, &l.set, kb, t),
            None => Ok(l.model.clone()),
        })
        .collect::<Result<Vec<_>>>()?;
    if synthesis {
        synthesize_all(&preds)
    } else {
        Ok(preds)
    }
}

fn link_stage(cfg: &PipelineConfig, opts: &StageOptions) -> Result<Manifest> {
    required(&cfg.paths.kb, "paths.kb")?;
    let split = opts.split.unwrap_or_else(|| cfg.eval_split());
    let threshold = cfg.toggles.backoff.then(|| cfg.threshold()).transpose()?;
    let mut cx = Ctx::new(Stage::Link, cfg);
    let (inputs, linked) = retrieve_and_rerank(&mut cx, split)?;
    let sets: Vec<CandidateSet> = linked.iter().map(|l| l.set.clone()).collect();
    cx.write(&candidates_file(split), candidates_to_text(&sets).as_bytes())?;
    let preds = postprocess_linked(&linked, &inputs.kb, threshold, cfg.toggles.synthesis)?;
    cx.write(&predictions_file(split), predictions_to_text(&preds).as_bytes())?;

    cx.manifest.count("mentions", preds.len());
    cx.manifest.count("windows", inputs.windows.len());
    for prov in ["model", "backoff", "synthesis"] {
        let n = preds.iter().filter(|p| p.provenance.as_str() == prov).count();
        cx.manifest.count(&format!("provenance.{prov}"), n);
    }
    let gold = gold_labels(&inputs.corpus);
    cx.manifest.metric("recall_at_1", recall_at_k(&sets, &gold, 1)?);
    cx.manifest.metric(&format!("recall_at_{}", cfg.params.k), recall_at_k(&sets, &gold, cfg.params.k)?);
    cx.finish()
}

fn evaluate_stage(cfg: &PipelineConfig, opts: &StageOptions) -> Result<Manifest> {
    let kb_path = required(&cfg.paths.kb, "paths.kb")?;
    let split = opts.split.unwrap_or_else(|| cfg.eval_split());
    let mut cx = Ctx::new(Stage::Evaluate, cfg);
    let pred_path = cx.out(&predictions_file(split));
    let content = text::read_to_string(&pred_path)?;
    let preds = parse_predictions(&pred_path.display().to_string(), &content)?;
    cx.manifest.input(&pred_path)?;
    let corpus = load_split(&mut cx, split)?;
    let train = load_split(&mut cx, Split::Train)?;
    let pretrain = if cx.out(&corpus_file(Split::Pretrain)).exists() {
        Some(load_split(&mut cx, Split::Pretrain)?)
    } else {
        None
    };
    // slices read metadata as it was before augmentation
    let pre_aug_kb = load_kb(kb_path)?;
    cx.manifest.input(kb_path)?;
    let cand_path = cx.out(&candidates_file(split));
    let candidates = if cand_path.exists() {
        let c = parse_candidates(&cand_path.display().to_string(), &text::read_to_string(&cand_path)?)?;
        cx.manifest.input(&cand_path)?;
        Some(c)
    } else {
        None
    };

    let stats = build_train_stats(&train, pretrain.as_ref());
    let mentions = test_mentions(&corpus);
    let (report, per) = slice_report(&preds, &mentions, &stats, &pre_aug_kb, candidates.as_deref(), &cfg.user_slices)?;
    cx.write(&format!("report_{split}.json"), report.to_json().as_bytes())?;
    cx.write(&format!("report_{split}.txt"), report.to_table().as_bytes())?;
    cx.write(&format!("slices_{split}.csv"), membership_csv(&per, &cfg.user_slices).as_bytes())?;
    cx.manifest.count("mentions", report.mentions);
    cx.manifest.metric("accuracy", report.accuracy);
    if let (Some(r1), Some(r10)) = (report.recall_at_1, report.recall_at_10) {
        cx.manifest.metric("recall_at_1", r1);
        cx.manifest.metric("recall_at_10", r10);
    }
    cx.finish()
}

/// Sorted, de-duplicated grid.
pub fn normalize_grid(grid: &[f64]) -> Result<Vec<Threshold>> {
    if grid.is_empty() {
        return Err(NedError::Argument("empty threshold grid".into()));
    }
    let mut g: Vec<f64> = grid.to_vec();
    g.sort_by(f64::total_cmp);
    g.dedup();
    g.into_iter().map(Threshold::new).collect()
}

/// Accuracy after backoff and synthesis at each threshold; the best is
/// the first grid point reaching the maximum.
pub fn sweep(
    linked: &[Linked],
    kb: &KnowledgeBase,
    gold: &GoldLabels,
    grid: &[Threshold],
    synthesis: bool,
) -> Result<(Vec<(Threshold, f64)>, Threshold)> {
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        let preds = postprocess_linked(linked, kb, Some(t), synthesis)?;
        rows.push((t, accuracy(&preds, gold)?));
    }
    let best = rows
        .iter()
        .fold(None::<(Threshold, f64)>, |b, &(t, a)| match b {
            Some((_, ba)) if ba >= a => b,
            _ => Some((t, a)),
        })
        .map(|(t, _)| t)
        .ok_or_else(|| NedError::Argument("empty threshold grid".into()))?;
    Ok((rows, best))
}

fn sweep_stage(cfg: &PipelineConfig, opts: &StageOptions) -> Result<Manifest> {
    required(&cfg.paths.kb, "paths.kb")?;
    let grid = normalize_grid(if opts.grid.is_empty() { &cfg.sweep_grid } else { &opts.grid })?;
    let split = opts.split.unwrap_or(Split::Dev);
    let mut cx = Ctx::new(Stage::Sweep, cfg);
    let (inputs, linked) = retrieve_and_rerank(&mut cx, split)?;
    let gold = gold_labels(&inputs.corpus);
    let (rows, best) = sweep(&linked, &inputs.kb, &gold, &grid, cfg.toggles.synthesis)?;
    let mut table = String::from("threshold\taccuracy\n");
    for (t, a) in &rows {
        let _ = writeln!(table, "{}\t{}", t.value(), text::fmt_score(*a));
    }
    let _ = writeln!(table, "# best\t{}", best.value());
    cx.write(&sweep_file(split), table.as_bytes())?;
    cx.manifest.count("grid_points", rows.len());
    cx.manifest.metric("best_threshold", best.value());
    cx.finish()
}

fn mine_stage(cfg: &PipelineConfig, opts: &StageOptions) -> Result<Manifest> {
    let split = opts.split.unwrap_or(Split::Train);
    let mut cx = Ctx::new(Stage::Mine, cfg);
    let r = retrieve(&mut cx, split)?;
    let gold = gold_labels(&r.corpus);
    let queries: Vec<MiningQuery> = r
        .queries
        .into_iter()
        .map(|(mention_ref, vector)| MiningQuery {
            gold_id: gold[&mention_ref].clone(),
            mention_ref,
            vector,
        })
        .collect();
    let mined = mine_hard_negatives(&r.index, &queries, cfg.params.hard_negatives)?;
    let mut out = String::new();
    for (mref, ids) in &mined {
        let _ = writeln!(out, "{mref}\t{}\t{}", gold[mref], ids.join("\t"));
    }
    cx.write(&negatives_file(split), out.as_bytes())?;
    cx.manifest.count("mentions", mined.len());
    cx.manifest.count("negatives", mined.values().map(Vec::len).sum());
    cx.finish()
}
