//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line to stderr,
//! bypassing the test harness capture.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::panic::{self, UnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::{prop, prop_assert, prop_assert_eq};
use proptest::test_runner::{Config as PtConfig, TestRunner};
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nedkit::candix::{candidates_to_text, parse_candidates, recall_at_k, Candidate, CandidateIndex, CandidateSet};
use nedkit::corpus::{ambiguity_stats, downsample, AnnotatedCorpus, MentionRef, MentionSpan, SentenceGroup, Split};
use nedkit::embed::{EmbeddingVector, VectorMap};
use nedkit::eval::{build_train_stats, slice_membership, Slice};
use nedkit::fixture::{self, FixtureSpec};
use nedkit::kb::{apply_mapping, CrossKbMapping, EntityRecord, KnowledgeBase, MappingEntry};
use nedkit::pipeline::{run_all, Dataset, PipelineConfig, StageOptions};
use nedkit::postprocess::{backoff, string_similarity, synthesize_all, synthesize_document, Threshold};
use nedkit::rerank::{rerank, softmax, Prediction, Provenance, RerankParams, ScoreTable};
use nedkit::sequence::{
    build_context_sequence, build_entity_sequence, build_pair_sequence, ContextWindow, DEFAULT_CONTEXT_MAX,
    DEFAULT_ENTITY_MAX, DEFAULT_PAIR_CONTEXT_MAX,
};
use nedkit::text::{CLS, ENT_DESC, ENT_END, ENT_START, SEP};

fn criterion(n: u32, name: &str, body: impl FnOnce() + UnwindSafe) {
    let start = Instant::now();
    let outcome = panic::catch_unwind(body);
    let verdict = if outcome.is_ok() { "PASS" } else { "FAIL" };
    let line = format!("{verdict} criterion {n:>2}: {name} [{:.2?}]\n", start.elapsed());
    let _ = std::io::stderr().write_all(line.as_bytes());
    if let Err(e) = outcome {
        panic::resume_unwind(e);
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_owned).collect()
}

/// One group per mention, the mention spanning the whole group.
fn corpus_of(split: Split, mentions: &[(&str, &str)]) -> AnnotatedCorpus {
    let groups = mentions
        .iter()
        .enumerate()
        .map(|(i, (surface, gold))| {
            let w = words(surface);
            SentenceGroup {
                doc_id: format!("{split}{i:05}"),
                group_index: 0,
                mentions: vec![MentionSpan::over(&w, 0, w.len(), *gold).unwrap()],
                words: w,
            }
        })
        .collect();
    AnnotatedCorpus::new(split, groups).unwrap()
}

// ---------------------------------------------------------------- 1

fn brute_top_k(ids: &[String], rows: &[Vec<f64>], q: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(f64, &String)> = ids
        .iter()
        .zip(rows)
        .map(|(id, v)| {
            let mut s = 0.0;
            for i in 0..q.len() {
                s += q[i] * v[i];
            }
            (s, id)
        })
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    all.into_iter().take(k).map(|(s, id)| (id.clone(), s)).collect()
}

#[test]
fn c01_mips_matches_brute_force() {
    criterion(1, "MIPS top-k equals brute-force sort incl. ties", || {
        let start = Instant::now();
        let mut r = rng(1);
        for inst in 0..200 {
            let (pool, dim) = if inst % 25 == 0 {
                (10_000, 256)
            } else {
                let p = (10f64.powf(r.random_range(0.0..4.0)) as usize).clamp(1, 10_000);
                (p, r.random_range(1..=256))
            };
            let integer = inst % 2 == 0;
            let mut ids = BTreeSet::new();
            while ids.len() < pool {
                ids.insert(format!("{:08x}", r.random::<u32>()));
            }
            let ids: Vec<String> = ids.into_iter().collect();
            let mut rows: Vec<Vec<f64>> = Vec::with_capacity(pool);
            for i in 0..pool {
                // duplicated rows force score ties
                if i > 0 && r.random_bool(0.2) {
                    let j = r.random_range(0..i);
                    rows.push(rows[j].clone());
                } else if integer {
                    rows.push((0..dim).map(|_| r.random_range(-2i32..=2) as f64).collect());
                } else {
                    rows.push((0..dim).map(|_| r.random_range(-1.0..1.0)).collect());
                }
            }
            let map: VectorMap = ids
                .iter()
                .zip(&rows)
                .map(|(id, v)| (id.clone(), EmbeddingVector::new(v.clone()).unwrap()))
                .collect();
            let (index, _) = CandidateIndex::build(&map, None).unwrap();
            for (qi, k) in [1usize, 10, 37].into_iter().enumerate() {
                let q: Vec<f64> = if integer {
                    (0..dim).map(|_| r.random_range(-2i32..=2) as f64).collect()
                } else {
                    (0..dim).map(|_| r.random_range(-1.0..1.0)).collect()
                };
                let got = index
                    .top_k(MentionRef::new("q", inst, qi), &EmbeddingVector::new(q.clone()).unwrap(), k)
                    .unwrap();
                let got: Vec<(String, f64)> = got.candidates.into_iter().map(|c| (c.entity_id, c.score)).collect();
                assert_eq!(got, brute_top_k(&ids, &rows, &q, k), "instance {inst} pool {pool} dim {dim} k {k}");
            }
        }
        let took = start.elapsed();
        assert!(took < Duration::from_secs(60), "took {took:?}");
    });
}

// ---------------------------------------------------------------- 2

#[test]
fn c02_recall_matches_recount() {
    criterion(2, "recall@k equals brute-force recount", || {
        let mut r = rng(2);
        for round in 0..300 {
            let n = r.random_range(1..=120);
            let mut sets = Vec::new();
            let mut gold = BTreeMap::new();
            for m in 0..n {
                let mref = MentionRef::new(format!("doc{round}"), m / 4, m % 4);
                let len = r.random_range(0..=15);
                let mut ids: Vec<String> = (0..40).map(|i| format!("E{i}")).collect();
                ids.shuffle(&mut r);
                ids.truncate(len);
                let g = if len > 0 && r.random_bool(0.7) {
                    ids[r.random_range(0..len)].clone()
                } else {
                    format!("E{}", 40 + r.random_range(0..5))
                };
                gold.insert(mref.clone(), g);
                let mut score = 10.0;
                let candidates = ids
                    .into_iter()
                    .map(|id| {
                        score -= r.random_range(0.0..1.0);
                        Candidate { entity_id: id, score }
                    })
                    .collect();
                sets.push(CandidateSet {
                    mention_ref: mref,
                    candidates,
                });
            }
            let dumped = parse_candidates("dump", &candidates_to_text(&sets)).unwrap();
            for k in [1usize, 5, 10] {
                let mut hits = 0;
                for s in &sets {
                    let g = &gold[&s.mention_ref];
                    let lim = k.min(s.candidates.len());
                    if s.candidates[..lim].iter().any(|c| &c.entity_id == g) {
                        hits += 1;
                    }
                }
                let expected = hits as f64 / sets.len() as f64;
                assert_eq!(recall_at_k(&sets, &gold, k).unwrap(), expected);
                assert_eq!(recall_at_k(&dumped, &gold, k).unwrap(), expected);
            }
        }
    });
}

// ---------------------------------------------------------------- 3

fn rerank_fixture(n: usize) -> (KnowledgeBase, CandidateSet, ContextWindow) {
    let mut kb = KnowledgeBase::new("t");
    for i in 0..n {
        kb.insert(EntityRecord::new(format!("E{i:02}"), format!("name {i}")).with_types(["T"]))
            .unwrap();
    }
    let set = CandidateSet {
        mention_ref: MentionRef::new("d", 0, 0),
        candidates: (0..n)
            .map(|i| Candidate {
                entity_id: format!("E{i:02}"),
                score: 0.0,
            })
            .collect(),
    };
    let window = ContextWindow {
        left: words("patients with"),
        mention: words("the mention"),
        right: words("were seen ."),
    };
    (kb, set, window)
}

#[test]
fn c03_softmax_properties() {
    criterion(3, "softmax sum, shift invariance, magnitude, affine argmax", || {
        let mut runner = TestRunner::new(PtConfig {
            cases: 1000,
            failure_persistence: None,
            ..PtConfig::default()
        });
        let strategy = (
            prop::collection::vec(-1.0e3f64..1.0e3, 1..24),
            -1.0e3f64..1.0e3,
            prop::collection::vec(-40i32..=40, 1..12),
            prop::sample::select(vec![0.25f64, 0.5, 1.0, 2.0, 8.0]),
            -64i32..=64,
        );
        runner
            .run(&strategy, |(scores, shift, ints, a, b)| {
                let p = softmax(&scores).unwrap();
                prop_assert!(p.iter().all(|x| x.is_finite() && *x >= 0.0));
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);

                let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
                let q = softmax(&shifted).unwrap();
                for (x, y) in p.iter().zip(&q) {
                    prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
                }

                // integer scores keep a*s+b exact, so ties survive the transform
                let (kb, set, window) = rerank_fixture(ints.len());
                let table = |f: &dyn Fn(f64) -> f64| {
                    let mut t = ScoreTable::default();
                    for (i, s) in ints.iter().enumerate() {
                        t.insert(set.mention_ref.clone(), format!("E{i:02}"), f(*s as f64));
                    }
                    t
                };
                let base = table(&|s| s);
                let affine = table(&|s| a * s + b as f64);
                let params = RerankParams::default();
                let x = rerank(&set, &window, &kb, &base, &params).unwrap();
                let y = rerank(&set, &window, &kb, &affine, &params).unwrap();
                prop_assert_eq!(&x.prediction.entity_id, &y.prediction.entity_id);
                let max = *ints.iter().max().unwrap();
                let first_max = ints.iter().position(|&s| s == max).unwrap();
                prop_assert_eq!(x.prediction.entity_id, format!("E{first_max:02}"));
                Ok(())
            })
            .unwrap();

        let extreme = softmax(&[1.0e3, -1.0e3, 1.0e3, 999.0]).unwrap();
        assert!(extreme.iter().all(|x| x.is_finite()));
        assert!((extreme.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert_eq!(extreme[0], extreme[2]);
    });
}

// ---------------------------------------------------------------- 4

fn pred(doc: &str, group: usize, idx: usize, surface: &str, id: &str, p: f64) -> Prediction {
    Prediction {
        mention_ref: MentionRef::new(doc, group, idx),
        surface: surface.into(),
        entity_id: id.into(),
        probability: p,
        provenance: Provenance::Model,
    }
}

#[test]
fn c04_document_synthesis_example() {
    criterion(4, "repeated mention resolves to the modal entity", || {
        const DFU: &str = "Diabetic Foot Ulcer";
        const DF118: &str = "DF 118";
        for odd in 0..3 {
            let ids: Vec<&str> = (0..3).map(|i| if i == odd { DF118 } else { DFU }).collect();
            // the minority prediction is the most confident one
            let preds: Vec<Prediction> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| pred("d1", i, 0, "DFS", id, if *id == DF118 { 0.99 } else { 0.4 }))
                .chain([pred("d1", 3, 0, "insulin", "Insulin", 0.9)])
                .collect();
            let out = synthesize_document(&preds).unwrap();
            let dfs: Vec<&str> = out[..3].iter().map(|p| p.entity_id.as_str()).collect();
            assert_eq!(dfs, [DFU, DFU, DFU]);
            assert_eq!(out[odd].provenance, Provenance::Synthesis);
            assert_eq!(out[3], preds[3]);

            let mut other_doc = preds.clone();
            other_doc.push(pred("d2", 0, 0, "DFS", DF118, 0.3));
            let all = synthesize_all(&other_doc).unwrap();
            assert_eq!(all[4].entity_id, DF118);
        }
    });
}

// ---------------------------------------------------------------- 5 / 6

fn oracle_fold(s: &str) -> Vec<char> {
    let mut out = Vec::new();
    let mut pending_space = false;
    for c in s.chars() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.extend(c.to_lowercase());
    }
    out
}

fn oracle_edit_distance(a: &[char], b: &[char]) -> usize {
    let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=b.len() {
        d[0][j] = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let sub = d[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[a.len()][b.len()]
}

fn oracle_similarity(a: &str, b: &str) -> f64 {
    let (a, b) = (oracle_fold(a), oracle_fold(b));
    let n = a.len().max(b.len());
    if n == 0 {
        return 1.0;
    }
    1.0 - oracle_edit_distance(&a, &b) as f64 / n as f64
}

fn random_string(r: &mut ChaCha8Rng, max_len: usize) -> String {
    const ALPHABET: &[char] = &[
        'a', 'b', 'c', 'd', 'e', 'A', 'B', 'C', 'x', 'y', 'z', '0', '1', ' ', ' ', '\t', '-', 'é', 'É', 'ß', 'ø', 'Ø',
    ];
    let n = r.random_range(0..=max_len);
    (0..n).map(|_| *ALPHABET.choose(r).unwrap()).collect()
}

#[test]
fn c05_backoff_boundaries() {
    criterion(5, "backoff at thresholds 0 and 1", || {
        let mut r = rng(5);
        const SYL: [&str; 6] = ["ka", "lo", "mi", "te", "ra", "su"];
        let mut kb = KnowledgeBase::new("t");
        let mut names: Vec<Vec<String>> = Vec::new();
        for i in 0..80 {
            let name = |r: &mut ChaCha8Rng| -> String {
                let w = r.random_range(1..=3);
                (0..w)
                    .map(|_| (0..r.random_range(1..=3)).map(|_| *SYL.choose(r).unwrap()).collect::<String>())
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            // every tenth entity copies its predecessor's name to force similarity ties
            let canonical = if i % 10 == 1 { names[i - 1][0].clone() } else { name(&mut r) };
            let aliases: Vec<String> = (0..r.random_range(0..=2)).map(|_| name(&mut r)).collect();
            let e = EntityRecord::new(format!("E{i:03}"), canonical).with_aliases(aliases);
            kb.insert(e.clone()).unwrap();
            names.push(e.names().map(str::to_owned).collect());
        }

        let mut cases = Vec::new();
        for m in 0..500 {
            let n = if m % 10 == 0 { 1 } else { r.random_range(2..=10) };
            let mut ids: Vec<usize> = (0..80).collect();
            ids.shuffle(&mut r);
            ids.truncate(n);
            let scores: Vec<f64> = (0..n).map(|_| r.random_range(-3i32..=3) as f64).collect();
            let probs = softmax(&scores).unwrap();
            let set = CandidateSet {
                mention_ref: MentionRef::new(format!("d{}", m / 10), m % 10, 0),
                candidates: ids
                    .iter()
                    .zip(&scores)
                    .map(|(i, s)| Candidate {
                        entity_id: format!("E{i:03}"),
                        score: *s,
                    })
                    .collect(),
            };
            let top = (0..n)
                .max_by(|&a, &b| probs[a].total_cmp(&probs[b]).then(ids[b].cmp(&ids[a])))
                .unwrap();
            let source = &names[ids[r.random_range(0..n)]];
            let mut surface: Vec<char> = source[r.random_range(0..source.len())].chars().collect();
            for _ in 0..r.random_range(0..3) {
                if !surface.is_empty() {
                    let at = r.random_range(0..surface.len());
                    surface[at] = *['a', 'q', 'K', ' '].choose(&mut r).unwrap();
                }
            }
            let p = Prediction {
                mention_ref: set.mention_ref.clone(),
                surface: surface.into_iter().collect(),
                entity_id: set.candidates[top].entity_id.clone(),
                probability: probs[top],
                provenance: Provenance::Model,
            };
            cases.push((p, probs, set, ids));
        }
        assert!(cases.iter().any(|c| c.1.len() == 1));

        let zero = Threshold::new(0.0).unwrap();
        let one = Threshold::new(1.0).unwrap();
        let mut moved = 0;
        for (p, probs, set, ids) in &cases {
            assert_eq!(&backoff(p, probs, set, &kb, zero).unwrap(), p);
            let out = backoff(p, probs, set, &kb, one).unwrap();
            if p.probability >= 1.0 {
                assert_eq!(&out, p);
                continue;
            }
            let mut best = 0;
            let mut best_sim = f64::NEG_INFINITY;
            for (j, &i) in ids.iter().enumerate() {
                let sim = names[i].iter().map(|n| oracle_similarity(&p.surface, n)).fold(f64::NEG_INFINITY, f64::max);
                let better = sim > best_sim
                    || (sim == best_sim && (probs[j] > probs[best] || (probs[j] == probs[best] && i < ids[best])));
                if better {
                    best = j;
                    best_sim = sim;
                }
            }
            assert_eq!(out.entity_id, format!("E{:03}", ids[best]), "{}", p.surface);
            assert_eq!(out.probability, probs[best]);
            assert_eq!(out.provenance, Provenance::Backoff);
            assert_eq!(out.mention_ref, p.mention_ref);
            if out.entity_id != p.entity_id {
                moved += 1;
            }
        }
        assert!(moved > 50, "only {moved} predictions changed");
    });
}

#[test]
fn c06_similarity_matches_dp_oracle() {
    criterion(6, "string similarity equals DP edit-distance oracle", || {
        let mut r = rng(6);
        for i in 0..1000 {
            let a = random_string(&mut r, 64);
            let b = if i % 4 == 0 {
                // near-duplicates exercise small distances
                let mut c: Vec<char> = a.chars().collect();
                if !c.is_empty() {
                    let at = r.random_range(0..c.len());
                    c.remove(at);
                }
                c.into_iter().collect()
            } else {
                random_string(&mut r, 64)
            };
            let got = string_similarity(&a, &b);
            let want = oracle_similarity(&a, &b);
            assert!((got - want).abs() <= 1e-12, "{a:?} {b:?}: {got} vs {want}");
        }
    });
}

// ---------------------------------------------------------------- 7

#[test]
fn c07_downsampling_counts() {
    criterion(7, "downsampling removes frequent-only groups in one pass", || {
        let build = |e_groups: usize, mixed: bool| {
            let mut mentions: Vec<(&str, &str)> = vec![("entity e", "E"); e_groups];
            mentions.extend([("entity r", "R"); 2]);
            let mut c = corpus_of(Split::Train, &mentions).into_groups();
            if mixed {
                let w = words("entity e and entity r");
                c.push(SentenceGroup {
                    doc_id: "mixed".into(),
                    group_index: 0,
                    mentions: vec![
                        MentionSpan::over(&w, 0, 2, "E").unwrap(),
                        MentionSpan::over(&w, 3, 5, "R").unwrap(),
                    ],
                    words: w,
                });
            }
            AnnotatedCorpus::new(Split::Train, c).unwrap()
        };
        let gold_of = |c: &AnnotatedCorpus| -> Vec<String> {
            c.groups().iter().flat_map(|g| g.mentions.iter().map(|m| m.gold_id.clone())).collect()
        };

        let (kept, removed) = downsample(&build(41, false), 40);
        assert_eq!(removed, 41);
        assert_eq!(kept.groups().len(), 2);
        assert_eq!(gold_of(&kept), ["R", "R"]);

        // each E group sees only 39 others
        let (kept, removed) = downsample(&build(40, false), 40);
        assert_eq!(removed, 0);
        assert_eq!(kept.groups().len(), 42);

        let (kept, removed) = downsample(&build(41, true), 40);
        assert_eq!(removed, 41);
        assert_eq!(kept.groups().len(), 3);
    });
}

// ---------------------------------------------------------------- 8

#[test]
fn c08_ambiguity_statistics() {
    criterion(8, "ambiguity statistics match hand computation", || {
        let c = corpus_of(
            Split::Train,
            &[
                ("cold", "E1"),
                ("Cold", "E2"),
                ("cold", "E1"),
                ("ms", "E3"),
                ("MS", "E4"),
                ("ms", "E5"),
                ("flu", "E6"),
                ("flu", "E6"),
            ],
        );
        let s = ambiguity_stats(&c);
        assert_eq!(s.unique_mention_count, 3);
        assert_eq!(s.ambiguous_mention_count, 2);
        assert_eq!(s.ambiguous_fraction_of_unique_mentions, Some(2.0 / 3.0));
        assert_eq!((s.min, s.median, s.max), (Some(2.0), Some(2.5), Some(3.0)));
    });
}

// ---------------------------------------------------------------- 9

#[test]
fn c09_augmentation_example() {
    criterion(9, "augmentation adds mapped type and is idempotent", || {
        let mut kb = KnowledgeBase::new("umls");
        kb.insert(EntityRecord::new("C0001621", "Adrenal Gland Diseases").with_types(["Disease or Syndrome"]))
            .unwrap();
        kb.insert(
            EntityRecord::new("C0000002", "Other Disease")
                .with_types(["Finding"])
                .with_description("kept as is"),
        )
        .unwrap();
        let long: Vec<String> = (0..200).map(|i| format!("w{i}")).collect();
        let mut mapping = CrossKbMapping::new();
        mapping
            .insert(
                "C0001621",
                MappingEntry {
                    target_id: "Q4684717".into(),
                    target_types: vec!["endocrine system disease".into()],
                    target_description: Some(long.join(" ")),
                },
            )
            .unwrap();
        mapping
            .insert(
                "C0000002",
                MappingEntry {
                    target_id: "Q2".into(),
                    target_types: vec!["Finding".into()],
                    target_description: Some("ignored".into()),
                },
            )
            .unwrap();

        let once = apply_mapping(&kb, &mapping, 150);
        let e = once.get("C0001621").unwrap();
        assert_eq!(e.types, ["Disease or Syndrome", "endocrine system disease"]);
        assert_eq!(e.description.as_deref(), Some(long[..150].join(" ").as_str()));
        let other = once.get("C0000002").unwrap();
        assert_eq!(other.types, ["Finding"]);
        assert_eq!(other.description.as_deref(), Some("kept as is"));

        let twice = apply_mapping(&once, &mapping, 150);
        assert_eq!(once.to_jsonl().as_bytes(), twice.to_jsonl().as_bytes());
    });
}

// ---------------------------------------------------------------- 10

fn slice_set(labels: &str) -> BTreeSet<Slice> {
    labels
        .split_whitespace()
        .map(|l| match l {
            "MW" => Slice::MultiWord,
            "SW" => Slice::SingleWord,
            "UM" => Slice::UnseenMention,
            "UE" => Slice::UnseenEntity,
            "NDM" => Slice::NotDirectMatch,
            "T" => Slice::Top100,
            "UP" => Slice::Unpopular,
            "LM" => Slice::LimitedMetadata,
            "RL" => Slice::RareLimited,
            "NSL" => Slice::NeverSeenLimited,
            other => panic!("label {other}"),
        })
        .collect()
}

fn hand_labeled_kb() -> KnowledgeBase {
    let mut kb = KnowledgeBase::new("t");
    let recs = [
        EntityRecord::new("A", "influenza").with_aliases(["flu"]).with_types(["Disease"]).with_description("viral"),
        EntityRecord::new("B", "common cold").with_types(["Disease"]),
        EntityRecord::new("C", "cold temperature").with_types(["Finding", "Phenomenon"]),
        EntityRecord::new("D", "multiple sclerosis").with_aliases(["MS"]).with_types(["Disease"]),
        EntityRecord::new("F", "mitral stenosis").with_types(["Disease"]).with_description("valve"),
        EntityRecord::new("G", "aspirin").with_types(["Drug"]),
        EntityRecord::new("H", "headache").with_types(["Sign"]),
        EntityRecord::new("K", "kidney failure").with_types(["Disease"]),
        EntityRecord::new("N", "neuroblastoma").with_types(["Neoplasm"]),
        EntityRecord::new("Z000", "zeta zero").with_types(["X"]).with_description("filler"),
    ];
    for r in recs {
        kb.insert(r).unwrap();
    }
    kb
}

#[test]
fn c10_slice_suite() {
    criterion(10, "slice membership, partition and subset relations", || {
        // train counts: D 7, G 6, B 4, A 3, F 2, Z000..Z099 2 each, C 1, H 1
        let mut train: Vec<(String, String)> = Vec::new();
        let mut add = |s: &str, g: &str, n: usize| train.extend((0..n).map(|_| (s.to_owned(), g.to_owned())));
        add("influenza", "A", 2);
        add("flu", "A", 1);
        add("cold", "B", 3);
        add("common cold", "B", 1);
        add("cold", "C", 1);
        add("MS", "D", 5);
        add("multiple sclerosis", "D", 2);
        add("MS", "F", 2);
        add("aspirin", "G", 6);
        add("headache", "H", 1);
        for i in 0..100 {
            let id = format!("Z{i:03}");
            let own = format!("z{i:03}");
            add(&own, &id, 1);
            add(if i < 2 { "tie" } else { &own }, &id, 1);
        }
        let train_refs: Vec<(&str, &str)> = train.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let train = corpus_of(Split::Train, &train_refs);
        let pretrain = corpus_of(Split::Pretrain, &[("renal failure", "K"), ("flu", "A")]);
        let stats = build_train_stats(&train, Some(&pretrain));
        let kb = hand_labeled_kb();

        // top100: D G B A F Z000..Z094; C and H rank below
        let labeled: [(&str, &str, &str); 30] = [
            ("influenza", "A", "SW T"),
            ("Flu", "A", "SW T"),
            ("grippe", "A", "SW UM NDM T"),
            ("cold", "B", "SW NDM T LM RL"),
            ("cold", "C", "SW NDM UP"),
            ("Common Cold", "B", "MW T LM RL"),
            ("MS", "D", "SW T LM"),
            ("MS", "F", "SW NDM T UP"),
            ("multiple sclerosis", "D", "MW T LM"),
            ("Mitral Stenosis", "F", "MW UM T"),
            ("aspirin", "G", "SW T LM"),
            ("acetylsalicylic acid", "G", "MW UM NDM T LM"),
            ("headache", "H", "SW LM RL"),
            ("head pain", "H", "MW UM NDM LM RL"),
            ("kidney failure", "K", "MW UM UE LM RL"),
            ("renal failure", "K", "MW UM UE NDM LM RL"),
            ("neuroblastoma", "N", "SW UM UE LM RL NSL"),
            ("NB", "N", "SW UM UE NDM LM RL NSL"),
            ("flu", "B", "SW NDM T UP LM RL"),
            ("aspirin", "H", "SW NDM UP LM RL"),
            ("influenza A", "A", "MW UM NDM T"),
            ("cold", "K", "SW UE NDM UP LM RL"),
            ("MS", "N", "SW UE NDM UP LM RL NSL"),
            ("ASPIRIN", "G", "SW T LM"),
            ("relapsing multiple sclerosis", "D", "MW UM NDM T LM"),
            ("common cold", "C", "MW NDM UP"),
            ("headache", "A", "SW NDM T UP"),
            ("kidney failure", "N", "MW UM UE NDM LM RL NSL"),
            ("tie", "Z000", "SW NDM T"),
            ("mitral stenosis", "D", "MW UM NDM T LM"),
        ];
        for (surface, gold, labels) in labeled {
            let got = slice_membership(surface, gold, &stats, &kb).unwrap();
            assert_eq!(got, slice_set(labels), "{surface} -> {gold}");
        }

        let mut r = rng(10);
        const TOKENS: [&str; 6] = ["a", "bb", "ccc", "Dd", "e-e", "f1"];
        for _ in 0..10_000 {
            let n = r.random_range(1..=4);
            let mut s = String::new();
            for i in 0..n {
                if i > 0 || r.random_bool(0.2) {
                    s.push_str([" ", "  ", "\t"].choose(&mut r).unwrap());
                }
                s.push_str(TOKENS.choose(&mut r).unwrap());
            }
            let got = slice_membership(&s, "A", &stats, &kb).unwrap();
            let multi = got.contains(&Slice::MultiWord);
            let single = got.contains(&Slice::SingleWord);
            assert!(multi != single, "{s:?}");
            assert_eq!(multi, n > 1, "{s:?}");
        }

        for seed in 0..20 {
            let mut r = rng(1000 + seed);
            let mut kb = KnowledgeBase::new("r");
            for i in 0..60 {
                let mut e = EntityRecord::new(format!("R{i:02}"), format!("name {}", i % 17))
                    .with_types((0..r.random_range(0..=3)).map(|t| format!("T{t}")));
                if r.random_bool(0.3) {
                    e = e.with_description("d");
                }
                kb.insert(e).unwrap();
            }
            let pick = |r: &mut ChaCha8Rng| (format!("name {}", r.random_range(0..20)), format!("R{:02}", r.random_range(0..60)));
            let tr: Vec<(String, String)> = (0..r.random_range(0..300)).map(|_| pick(&mut r)).collect();
            let pr: Vec<(String, String)> = (0..r.random_range(0..50)).map(|_| pick(&mut r)).collect();
            let tr_refs: Vec<(&str, &str)> = tr.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let pr_refs: Vec<(&str, &str)> = pr.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
            let stats = build_train_stats(&corpus_of(Split::Train, &tr_refs), Some(&corpus_of(Split::Pretrain, &pr_refs)));
            for _ in 0..500 {
                let (s, g) = pick(&mut r);
                let got = slice_membership(&s, &g, &stats, &kb).unwrap();
                let limited = got.contains(&Slice::LimitedMetadata);
                assert!(!got.contains(&Slice::RareLimited) || limited);
                assert!(!got.contains(&Slice::NeverSeenLimited) || limited);
                if got.contains(&Slice::UnseenEntity) {
                    assert!(!stats.entity_count.contains_key(&g));
                }
            }
        }
    });
}

// ---------------------------------------------------------------- 11

fn random_words(r: &mut ChaCha8Rng, max: usize) -> Vec<String> {
    (0..r.random_range(0..=max))
        .map(|_| (0..r.random_range(1..=6)).map(|_| r.random_range(b'a'..=b'z') as char).collect())
        .collect()
}

fn count(tokens: &[String], marker: &str) -> usize {
    tokens.iter().filter(|t| *t == marker).count()
}

fn check_context(window: &ContextWindow, max_len: usize) -> Vec<String> {
    let seq = build_context_sequence(window, max_len).unwrap();
    let t = &seq.tokens;
    assert!(t.len() <= max_len);
    assert_eq!(t.first().map(String::as_str), Some(CLS));
    assert_eq!(t.last().map(String::as_str), Some(SEP));
    assert_eq!((count(t, CLS), count(t, SEP), count(t, ENT_START), count(t, ENT_END), count(t, ENT_DESC)), (1, 1, 1, 1, 0));
    let s = t.iter().position(|x| x == ENT_START).unwrap();
    let e = t.iter().position(|x| x == ENT_END).unwrap();
    assert!(s < e);
    let (left, mention, right) = (&t[1..s], &t[s + 1..e], &t[e + 1..t.len() - 1]);
    if window.mention.len() + 4 <= max_len {
        assert_eq!(mention, &window.mention[..]);
    } else {
        assert_eq!(mention, &window.mention[..max_len - 4]);
    }
    assert!(window.left.ends_with(left));
    assert!(window.right.starts_with(right));
    let full = window.left.len() + mention.len() + window.right.len() + 4;
    if full <= max_len {
        assert_eq!(t.len(), full);
    } else {
        assert_eq!(t.len(), max_len);
        let cut_l = window.left.len() - left.len();
        let cut_r = window.right.len() - right.len();
        // alternating trim from the far ends, left first
        if !left.is_empty() && !right.is_empty() {
            assert!(cut_l == cut_r || cut_l == cut_r + 1, "{cut_l} {cut_r}");
        }
    }
    seq.tokens
}

#[test]
fn c11_sequence_templates() {
    criterion(11, "sequence markers, limits and mention survival", || {
        let mut r = rng(11);
        for i in 0..1000 {
            let window = ContextWindow {
                left: random_words(&mut r, 40),
                mention: {
                    let long = i % 20 == 0;
                    let mut m = random_words(&mut r, if long { 140 } else { 8 });
                    if m.is_empty() {
                        m.push("m".into());
                    }
                    m
                },
                right: random_words(&mut r, 40),
            };
            check_context(&window, DEFAULT_CONTEXT_MAX);
            check_context(&window, r.random_range(5..=80));
            let pair_ctx = check_context(&window, DEFAULT_PAIR_CONTEXT_MAX);

            let title = random_words(&mut r, 12);
            let mut e = EntityRecord::new("E", if title.is_empty() { "x".into() } else { title.join(" ") })
                .with_aliases((0..r.random_range(0..3)).map(|_| random_words(&mut r, 4).join(" ")).filter(|a| !a.is_empty()))
                .with_types((0..r.random_range(0..8)).map(|_| {
                    let w = random_words(&mut r, 7);
                    if w.is_empty() { "t".into() } else { w.join(" ") }
                }));
            if r.random_bool(0.7) {
                let d = random_words(&mut r, 220);
                if !d.is_empty() {
                    e = e.with_description(d.join(" "));
                }
            }
            let with_aliases = r.random_bool(0.5);
            let ent = build_entity_sequence(&e, with_aliases, 30, DEFAULT_ENTITY_MAX);
            let t = &ent.tokens;
            assert!(t.len() <= DEFAULT_ENTITY_MAX);
            assert_eq!(t[0], CLS);
            assert_eq!(t.last().map(String::as_str), Some(SEP));
            assert_eq!((count(t, CLS), count(t, SEP), count(t, ENT_START), count(t, ENT_END), count(t, ENT_DESC)), (1, 3, 0, 0, 0));
            let seps: Vec<usize> = t.iter().enumerate().filter(|(_, x)| *x == SEP).map(|(i, _)| i).collect();
            let (title_seg, types_seg, desc_seg) = (&t[1..seps[0]], &t[seps[0] + 1..seps[1]], &t[seps[1] + 1..seps[2]]);

            let full_title = words(&if with_aliases { e.names().collect::<Vec<_>>().join("; ") } else { e.canonical_name.clone() });
            // longest prefix of whole types within 30 words
            let mut kept_types = Vec::new();
            let mut used = 0;
            for ty in &e.types {
                let n = words(ty).len();
                if used + n > 30 {
                    break;
                }
                used += n;
                kept_types.push(ty.clone());
            }
            let full_types = words(&kept_types.join("; "));
            let full_desc = e.description.as_deref().map(words).unwrap_or_default();
            assert!(full_title.starts_with(title_seg));
            assert!(full_types.starts_with(types_seg));
            assert!(full_desc.starts_with(desc_seg));
            assert!(types_seg.len() <= 30);
            if full_title.len() + full_types.len() + 4 <= DEFAULT_ENTITY_MAX {
                assert_eq!(title_seg, &full_title[..]);
                assert_eq!(types_seg, &full_types[..]);
                let room = DEFAULT_ENTITY_MAX - 4 - full_title.len() - full_types.len();
                assert_eq!(desc_seg.len(), full_desc.len().min(room));
            }

            let ctx = build_context_sequence(&window, DEFAULT_PAIR_CONTEXT_MAX).unwrap();
            let pair = build_pair_sequence(&ctx, &ent);
            let p = &pair.tokens;
            assert_eq!(p.len(), pair_ctx.len() + t.len());
            assert!(p.len() <= DEFAULT_PAIR_CONTEXT_MAX + DEFAULT_ENTITY_MAX);
            assert_eq!(&p[..pair_ctx.len()], &pair_ctx[..]);
            assert_eq!(p[pair_ctx.len()], ENT_DESC);
            assert_eq!(&p[pair_ctx.len() + 1..], &t[1..]);
            assert_eq!((count(p, CLS), count(p, ENT_DESC), count(p, ENT_START), count(p, ENT_END)), (1, 1, 1, 1));
        }
    });
}

// ---------------------------------------------------------------- 12

fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn run_fixture(dir: &Path) -> (f64, BTreeMap<PathBuf, Vec<u8>>) {
    let cfg = PipelineConfig::load(&dir.join(fixture::CONFIG_FILE)).unwrap();
    assert_eq!(cfg.params.embed_dim, 256);
    let manifests = run_all(&cfg, &StageOptions::default()).unwrap();
    let stages: Vec<&str> = manifests.iter().map(|m| m.stage.as_str()).collect();
    assert_eq!(stages, ["kb-augment", "preprocess", "index", "link", "evaluate"]);
    let acc = manifests.last().unwrap().metrics["accuracy"];
    (acc, snapshot(&dir.join("out")))
}

#[test]
fn c12_end_to_end_fixture() {
    criterion(12, "end-to-end run is fast, deterministic and far above chance", || {
        let f = fixture::generate(&FixtureSpec::default());
        assert_eq!(f.kb.len(), 200);
        assert_eq!(f.documents.values().map(Vec::len).sum::<usize>(), 50);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        f.write(a.path()).unwrap();
        f.write(b.path()).unwrap();

        let start = Instant::now();
        let (acc, first) = run_fixture(a.path());
        let took = start.elapsed();
        assert!(took < Duration::from_secs(30), "took {took:?}");

        let (acc_again, second) = run_fixture(a.path());
        assert_eq!(acc, acc_again);
        assert_eq!(first, second);

        // a second location differs only in the recorded config hash
        let (acc_b, other) = run_fixture(b.path());
        assert_eq!(acc, acc_b);
        let strip = |m: &BTreeMap<PathBuf, Vec<u8>>| -> BTreeMap<PathBuf, Vec<u8>> {
            m.iter().filter(|(p, _)| !p.starts_with("manifests")).map(|(p, v)| (p.clone(), v.clone())).collect()
        };
        assert_eq!(strip(&first), strip(&other));
        assert!(first.keys().any(|p| p.starts_with("manifests")));

        let chance = 1.0 / 200.0;
        assert!(acc >= 20.0 * chance, "accuracy {acc}");
    });
}

// ---------------------------------------------------------------- 13

#[test]
fn c13_defaults_audit() {
    criterion(13, "shipped defaults", || {
        let check = |v: &serde_json::Value| {
            let p = &v["params"];
            assert_eq!(p["window_len"], 30);
            assert_eq!(p["context_max"], 64);
            assert_eq!(p["entity_max"], 128);
            assert_eq!(p["pair_context_max"], 128);
            assert_eq!(p["k"], 10);
            assert_eq!(p["types_word_limit"], 30);
            assert_eq!(p["desc_word_limit"], 150);
            assert_eq!(p["group_size"], 3);
            assert_eq!(p["downsample_threshold"], 40);
            assert!(p["threshold"].is_null());
        };
        let cfg = PipelineConfig::default();
        check(&serde_json::from_str(&cfg.to_json()).unwrap());
        assert_eq!(cfg.threshold().unwrap().value(), 0.55);
        assert_eq!(Dataset::Mm.default_threshold().value(), 0.55);
        assert_eq!(Dataset::Bc5cdr.default_threshold().value(), 0.45);
        assert_eq!(Threshold::MEDMENTIONS.value(), 0.55);
        assert_eq!(Threshold::BC5CDR.value(), 0.45);

        let dump = |args: &[&str]| -> serde_json::Value {
            let out = Command::new(env!("CARGO_BIN_EXE_nedkit"))
                .args(args)
                .env_remove("NEDKIT_CONFIG")
                .output()
                .unwrap();
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            serde_json::from_slice(&out.stdout).unwrap()
        };
        let mm = dump(&["config"]);
        check(&mm);
        assert_eq!(mm["dataset"], "mm");
        let bc = dump(&["--set", "dataset=bc5cdr", "config"]);
        check(&bc);
        let bc_cfg: PipelineConfig = serde_json::from_value(bc).unwrap();
        assert_eq!(bc_cfg.threshold().unwrap().value(), 0.45);
    });
}
