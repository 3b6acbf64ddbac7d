use nedkit::candix::{Candidate, CandidateSet};
use nedkit::corpus::{AnnotatedCorpus, MentionSpan, SentenceGroup, Split};
use nedkit::eval::{accuracy, build_train_stats, gold_labels, membership_csv, slice_report, test_mentions, Slice, UserSlice};
use nedkit::kb::{EntityRecord, KnowledgeBase};
use nedkit::pipeline::{normalize_grid, postprocess_linked, sweep, Linked};
use nedkit::postprocess::Threshold;
use nedkit::rerank::{Prediction, Provenance};

fn corpus(split: Split, items: &[(&str, &str)]) -> AnnotatedCorpus {
    let groups = items
        .iter()
        .enumerate()
        .map(|(i, (s, g))| {
            let words: Vec<String> = s.split_whitespace().map(str::to_owned).collect();
            SentenceGroup {
                doc_id: format!("d{i}"),
                group_index: 0,
                mentions: vec![MentionSpan::over(&words, 0, words.len(), *g).unwrap()],
                words,
            }
        })
        .collect();
    AnnotatedCorpus::new(split, groups).unwrap()
}

fn kb() -> KnowledgeBase {
    let mut kb = KnowledgeBase::new("t");
    kb.insert(EntityRecord::new("A", "aspirin").with_types(["Drug"])).unwrap();
    kb.insert(EntityRecord::new("B", "brain tumor").with_types(["Neoplasm", "Disease"]).with_description("mass"))
        .unwrap();
    kb.insert(EntityRecord::new("C", "cough").with_types(["Sign"]).with_description("reflex")).unwrap();
    kb
}

const TEST: [(&str, &str, &str); 6] = [
    ("aspirin", "A", "A"),
    ("ASA", "A", "C"),
    ("brain tumor", "B", "B"),
    ("brain tumour", "B", "A"),
    ("cough", "C", "C"),
    ("aspirin", "C", "C"),
];

fn predictions(test: &AnnotatedCorpus) -> Vec<Prediction> {
    test_mentions(test)
        .into_iter()
        .zip(TEST)
        .map(|(m, (_, _, p))| Prediction {
            mention_ref: m.mention_ref,
            surface: m.surface,
            entity_id: p.into(),
            probability: 0.9,
            provenance: Provenance::Model,
        })
        .collect()
}

#[test]
fn six_mention_report_matches_hand_table() {
    let train = corpus(Split::Train, &[("aspirin", "A"); 6]);
    let mut train_groups = train.into_groups();
    train_groups.push(SentenceGroup {
        doc_id: "z".into(),
        group_index: 0,
        words: vec!["cough".into()],
        mentions: vec![MentionSpan::over(&["cough".into()], 0, 1, "C").unwrap()],
    });
    let train = AnnotatedCorpus::new(Split::Train, train_groups).unwrap();
    let test = corpus(Split::Test, &TEST.map(|(s, g, _)| (s, g)));
    let stats = build_train_stats(&train, None);
    let preds = predictions(&test);
    let mentions = test_mentions(&test);

    // first candidate is the prediction; mention 4 never retrieves its gold
    let sets: Vec<CandidateSet> = mentions
        .iter()
        .zip(TEST)
        .enumerate()
        .map(|(i, (m, (_, g, p)))| {
            let mut ids = vec![p];
            if i != 3 && g != p {
                ids.push(g);
            }
            CandidateSet {
                mention_ref: m.mention_ref.clone(),
                candidates: ids.into_iter().map(|id| Candidate { entity_id: id.into(), score: 1.0 }).collect(),
            }
        })
        .collect();
    let user = vec![UserSlice {
        name: "LimitedSeen".into(),
        all_of: vec![Slice::LimitedMetadata],
        none_of: vec![Slice::UnseenMention],
        ..UserSlice::default()
    }];
    let (report, per) = slice_report(&preds, &mentions, &stats, &kb(), Some(&sets), &user).unwrap();

    assert_eq!(report.mentions, 6);
    assert_eq!(report.accuracy, 4.0 / 6.0);
    assert_eq!(report.recall_at_1, Some(4.0 / 6.0));
    assert_eq!(report.recall_at_10, Some(5.0 / 6.0));
    let expected: [(&str, usize, Option<f64>); 11] = [
        ("MultiWord", 2, Some(0.5)),
        ("SingleWord", 4, Some(0.75)),
        ("UnseenMention", 3, Some(1.0 / 3.0)),
        ("UnseenEntity", 2, Some(0.5)),
        ("NotDirectMatch", 3, Some(1.0 / 3.0)),
        ("Top100", 4, Some(0.75)),
        ("Unpopular", 1, Some(1.0)),
        ("LimitedMetadata", 2, Some(0.5)),
        ("Rare&Limited", 0, None),
        ("NeverSeen&Limited", 0, None),
        ("LimitedSeen", 1, Some(1.0)),
    ];
    let got: Vec<(&str, usize, Option<f64>)> = report.rows.iter().map(|r| (r.slice.as_str(), r.support, r.accuracy)).collect();
    assert_eq!(got, expected);

    // MultiWord and SingleWord partition the mentions
    let row = |n: &str| report.rows.iter().find(|r| r.slice == n).unwrap();
    let (mw, sw) = (row("MultiWord"), row("SingleWord"));
    assert_eq!(mw.support + sw.support, report.mentions);
    let weighted = (mw.support as f64 * mw.accuracy.unwrap() + sw.support as f64 * sw.accuracy.unwrap()) / 6.0;
    assert!((weighted - report.accuracy).abs() < 1e-12);

    assert_eq!(report.to_json(), slice_report(&preds, &mentions, &stats, &kb(), Some(&sets), &user).unwrap().0.to_json());
    let csv = membership_csv(&per, &user);
    assert_eq!(csv.lines().count(), 7);
    assert!(csv.starts_with("mention_ref,gold_id,predicted_id,correct,MultiWord,"));
    assert!(csv.lines().next().unwrap().ends_with("NeverSeen&Limited,LimitedSeen"));
    assert!(report.to_table().contains("Rare&Limited"));
}

#[test]
fn accuracy_alignment() {
    let test = corpus(Split::Test, &TEST.map(|(s, g, _)| (s, g)));
    let gold = gold_labels(&test);
    let preds = predictions(&test);
    assert!(accuracy(&preds[..5], &gold).is_err());
    assert!(accuracy(&[], &Default::default()).is_err());
    let all_right: Vec<Prediction> = preds
        .iter()
        .map(|p| Prediction { entity_id: gold[&p.mention_ref].clone(), ..p.clone() })
        .collect();
    assert_eq!(accuracy(&all_right, &gold).unwrap(), 1.0);
}

#[test]
fn zero_threshold_sweep_equals_no_backoff() {
    let test = corpus(Split::Test, &TEST.map(|(s, g, _)| (s, g)));
    let gold = gold_labels(&test);
    let linked: Vec<Linked> = predictions(&test)
        .into_iter()
        .enumerate()
        .map(|(i, mut p)| {
            p.probability = 0.2 + 0.1 * i as f64;
            let set = CandidateSet {
                mention_ref: p.mention_ref.clone(),
                candidates: ["A", "B", "C"].iter().map(|id| Candidate { entity_id: (*id).into(), score: 0.0 }).collect(),
            };
            let mut probs = vec![(1.0 - p.probability) / 2.0; 3];
            let at = set.candidates.iter().position(|c| c.entity_id == p.entity_id).unwrap();
            probs[at] = p.probability;
            Linked { set, model: p, probabilities: probs }
        })
        .collect();
    let kb = kb();
    for synthesis in [false, true] {
        let plain = accuracy(&postprocess_linked(&linked, &kb, None, synthesis).unwrap(), &gold).unwrap();
        let grid = normalize_grid(&[0.0]).unwrap();
        let (rows, best) = sweep(&linked, &kb, &gold, &grid, synthesis).unwrap();
        assert_eq!(rows, vec![(Threshold::new(0.0).unwrap(), plain)]);
        assert_eq!(best.value(), 0.0);

        let (rows, _) = sweep(&linked, &kb, &gold, &normalize_grid(&[1.0, 0.0, 0.55, 0.0]).unwrap(), synthesis).unwrap();
        assert_eq!(rows.iter().map(|r| r.0.value()).collect::<Vec<_>>(), [0.0, 0.55, 1.0]);
    }
}
