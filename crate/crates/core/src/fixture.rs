//! Seeded synthetic data set: a small KB, a cross-KB mapping and raw
//! documents whose mention surfaces are drawn from entity names.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{CharMention, RawDocument, Split};
use crate::error::Result;
use crate::kb::{CrossKbMapping, EntityRecord, GoldMapping, KnowledgeBase, MappingEntry};
use crate::pipeline::PipelineConfig;
use crate::text;

const SYLLABLES: [&str; 24] = [
    "ka", "lo", "mir", "ten", "vas", "pul", "ro", "dex", "sal", "ny", "gor", "phe", "tri", "lum", "zo", "cor",
    "bra", "nep", "hal", "sti", "qua", "mel", "fo", "xin",
];
const SOURCE_TYPES: [&str; 6] = [
    "Disease or Syndrome",
    "Neoplastic Process",
    "Pharmacologic Substance",
    "Sign or Symptom",
    "Finding",
    "Injury or Poisoning",
];
const TARGET_TYPES: [&str; 8] = [
    "endocrine system disease",
    "infectious disease",
    "chemical compound",
    "rare disease",
    "cardiovascular disease",
    "medication",
    "symptom",
    "neurological disorder",
];
const ORGANS: [&str; 8] = ["liver", "kidney", "heart", "lung", "skin", "brain", "pancreas", "bone"];
const OPENERS: [&str; 8] = ["Patients", "Cases", "Reports", "Findings", "Subjects", "Results", "Treatment", "Several"];
const FILLER: [&str; 24] = [
    "with", "of", "the", "in", "were", "was", "observed", "during", "after", "clinical", "study", "and", "a",
    "followed", "by", "treated", "for", "showed", "associated", "signs", "history", "reported", "cohort", "patients",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixtureSpec {
    pub entities: usize,
    pub documents: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            entities: 200,
            documents: 50,
            seed: 13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub kb: KnowledgeBase,
    pub mapping: CrossKbMapping,
    pub gold_mapping: GoldMapping,
    pub documents: BTreeMap<Split, Vec<RawDocument>>,
}

/// File names written by [`Fixture::write`].
pub const KB_FILE: &str = "kb.jsonl";
pub const MAPPING_FILE: &str = "mapping.jsonl";
pub const GOLD_MAPPING_FILE: &str = "gold_mapping.tsv";
pub const CONFIG_FILE: &str = "config.json";

pub fn raw_file(split: Split) -> String {
    format!("raw_{split}.jsonl")
}

fn pseudo_word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(2..=3);
    (0..n).map(|_| *SYLLABLES.choose(rng).unwrap()).collect()
}

fn split_of(doc: usize, total: usize) -> Split {
    let f = doc as f64 / total as f64;
    if f < 0.6 {
        Split::Train
    } else if f < 0.8 {
        Split::Dev
    } else {
        Split::Test
    }
}

pub fn generate(spec: &FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut names = BTreeSet::new();
    let mut kb = KnowledgeBase::new("fixture");
    for i in 0..spec.entities {
        let name = loop {
            let words = rng.random_range(1..=3);
            let n: Vec<String> = (0..words).map(|_| pseudo_word(&mut rng)).collect();
            let n = n.join(" ");
            if names.insert(n.clone()) {
                break n;
            }
        };
        let mut e = EntityRecord::new(format!("C{i:07}"), name.clone())
            .with_types([*SOURCE_TYPES.choose(&mut rng).unwrap()]);
        if rng.random_bool(0.4) {
            let initials: String = name.split(' ').filter_map(|w| w.chars().next()).collect();
            e = e.with_aliases([format!("{}{}", initials.to_uppercase(), i % 10)]);
        }
        if rng.random_bool(0.3) {
            e = e.with_types([*SOURCE_TYPES.choose(&mut rng).unwrap()]);
        }
        if rng.random_bool(0.4) {
            let organ = ORGANS.choose(&mut rng).unwrap();
            e = e.with_description(format!("{name} is a condition of the {organ}"));
        }
        e.types.dedup();
        kb.insert(e).expect("fixture ids are unique");
    }

    let mut mapping = CrossKbMapping::new();
    let mut gold_mapping = GoldMapping::new();
    for (i, e) in kb.iter().enumerate() {
        if !rng.random_bool(0.6) {
            continue;
        }
        let target_id = format!("Q{}", 1000 + i);
        let desc = rng.random_bool(0.7).then(|| {
            let organ = ORGANS.choose(&mut rng).unwrap();
            format!("{} affecting the {organ} and related tissue", e.canonical_name)
        });
        let entry = MappingEntry {
            target_id: target_id.clone(),
            target_types: vec![TARGET_TYPES.choose(&mut rng).unwrap().to_string()],
            target_description: desc,
        };
        gold_mapping.insert(e.id.clone(), target_id);
        mapping.insert(e.id.clone(), entry).expect("fixture ids are unique");
    }

    // skewed popularity so frequent and rare entities both occur
    let ids: Vec<&EntityRecord> = kb.iter().collect();
    let weights: Vec<f64> = (0..ids.len()).map(|r| 1.0 / ((r + 1) as f64).powf(0.7)).collect();
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.shuffle(&mut rng);
    let pick = WeightedIndex::new(&weights).expect("weights are positive");

    let mut documents: BTreeMap<Split, Vec<RawDocument>> = BTreeMap::new();
    for d in 0..spec.documents {
        let mut text = String::new();
        let mut mentions = Vec::new();
        // a few entities recur within a document
        let local: Vec<&EntityRecord> = (0..3).map(|_| ids[order[pick.sample(&mut rng)]]).collect();
        for _ in 0..rng.random_range(4..=9) {
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(OPENERS.choose(&mut rng).unwrap());
            let n_mentions = *[0, 1, 1, 1, 2].choose(&mut rng).unwrap();
            for _ in 0..n_mentions {
                for _ in 0..rng.random_range(1..=5) {
                    text.push(' ');
                    text.push_str(FILLER.choose(&mut rng).unwrap());
                }
                let e = if rng.random_bool(0.5) {
                    *local.choose(&mut rng).unwrap()
                } else {
                    ids[order[pick.sample(&mut rng)]]
                };
                let surface = match (rng.random_range(0..10), e.aliases.first()) {
                    (0..=1, Some(a)) => a.clone(),
                    (2, _) => {
                        let mut c = e.canonical_name.chars();
                        let first = c.next().map(|f| f.to_uppercase().collect::<String>()).unwrap_or_default();
                        first + c.as_str()
                    }
                    _ => e.canonical_name.clone(),
                };
                text.push(' ');
                let start = text.chars().count();
                text.push_str(&surface);
                mentions.push(CharMention::new(start, start + surface.chars().count(), e.id.clone()));
            }
            for _ in 0..rng.random_range(2..=6) {
                text.push(' ');
                text.push_str(FILLER.choose(&mut rng).unwrap());
            }
            text.push_str(" .");
        }
        documents.entry(split_of(d, spec.documents)).or_default().push(RawDocument {
            doc_id: format!("doc{d:03}"),
            text,
            mentions,
            sentences: None,
        });
    }

    Fixture {
        kb,
        mapping,
        gold_mapping,
        documents,
    }
}

impl Fixture {
    /// Config pointing at the written files, relative to the fixture directory.
    pub fn config(&self) -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.paths.kb = Some(KB_FILE.into());
        cfg.paths.mapping = Some(MAPPING_FILE.into());
        cfg.paths.gold_mapping = Some(GOLD_MAPPING_FILE.into());
        cfg.paths.raw = self.documents.keys().map(|s| (*s, raw_file(*s).into())).collect();
        cfg.paths.out_dir = "out".into();
        cfg.sweep_grid = vec![0.0, 0.45, 0.55];
        cfg
    }

    /// Writes the KB, mapping, gold mapping, one raw file per split and a
    /// config file.
    pub fn write(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        let mut written = Vec::new();
        let mut put = |name: &str, content: String| -> Result<()> {
            let p = dir.join(name);
            text::write_file(&p, &content)?;
            written.push(p);
            Ok(())
        };
        put(KB_FILE, self.kb.to_jsonl())?;
        put(MAPPING_FILE, self.mapping.to_jsonl())?;
        let gold: String = self.gold_mapping.iter().map(|(s, t)| format!("{s}\t{t}\n")).collect();
        put(GOLD_MAPPING_FILE, gold)?;
        for (split, docs) in &self.documents {
            let mut out = String::new();
            for d in docs {
                out.push_str(&serde_json::to_string(d).expect("document serializes"));
                out.push('\n');
            }
            put(&raw_file(*split), out)?;
        }
        put(CONFIG_FILE, self.config().to_json())?;
        Ok(written)
    }
}
