//! Property tests for the pipeline's structural invariants.

use std::collections::BTreeSet;

use proptest::prelude::*;

use stc_core::completion::{derive_threshold, ensemble, filter_vehicles, EmbeddingTable};
use stc_core::metrics::{mrr, p_at_k, r_at_k, EvalRecord, SynonymProvider};
use stc_core::patterns::{instantiate, PatternId, PatternRegistry, MASK_MARKER};
use stc_core::scorer::{score, MockFixture, ModelRef, ScoredCandidates, TaskVocabulary};
use stc_core::triples::{parse_norms, LabeledPair, NormsError, SimileTriple, TaskType};

fn word() -> impl Strategy<Value = String> {
    "[a-z]{2,8}"
}

fn distinct_words(min: usize, max: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::btree_set(word(), min..=max)
        .prop_map(|set| set.into_iter().collect::<Vec<_>>())
        .prop_shuffle()
}

fn logits(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-8.0f64..8.0, n..=n)
}

proptest! {
    // Restriction-consistency: probabilities over a sub-vocabulary equal the
    // full-vocabulary probabilities renormalized over that subset.
    #[test]
    fn restriction_renormalizes((words, keep_mask) in distinct_words(2, 12).prop_flat_map(|w| {
        let n = w.len();
        (Just(w), prop::collection::vec(any::<bool>(), n..=n))
    }), raw in logits(12)) {
        prop_assume!(keep_mask.iter().filter(|&&k| k).count() >= 1);
        let mut fixture = MockFixture::with_default_logit(None);
        fixture.insert(
            "q MASK.",
            words.iter().zip(&raw).map(|(w, &l)| (w.clone(), Some(l))),
        );
        let model = ModelRef::from_fixture(fixture);
        let query = stc_core::patterns::MaskedQuery::new(
            "q MASK.",
            stc_core::patterns::Slot::Attribute,
            PatternId::new("p1").unwrap(),
        )
        .unwrap();

        let full_vocab = TaskVocabulary::new(TaskType::Si, words.iter()).unwrap();
        let full: ScoredCandidates = score(&model, &query, &full_vocab).unwrap();

        let kept: Vec<&String> = words
            .iter()
            .zip(&keep_mask)
            .filter(|(_, &k)| k)
            .map(|(w, _)| w)
            .collect();
        let sub_vocab = TaskVocabulary::new(TaskType::Si, kept.iter().map(|w| w.as_str())).unwrap();
        let sub: ScoredCandidates = score(&model, &query, &sub_vocab).unwrap();

        let mass: f64 = kept.iter().map(|w| full.probability_of(w).unwrap()).sum();
        for w in &kept {
            let expected = full.probability_of(w).unwrap() / mass;
            let actual = sub.probability_of(w).unwrap();
            prop_assert!((expected - actual).abs() < 1e-9, "{w}: {expected} vs {actual}");
        }
    }

    // Permuting the vocabulary cannot change the result.
    #[test]
    fn score_is_order_invariant(words in distinct_words(2, 10), raw in logits(10), seed in any::<u64>()) {
        let mut fixture = MockFixture::with_default_logit(Some(0.0));
        fixture.insert(
            "q MASK.",
            words.iter().zip(&raw).map(|(w, &l)| (w.clone(), Some(l))),
        );
        let model = ModelRef::from_fixture(fixture);
        let query = stc_core::patterns::MaskedQuery::new(
            "q MASK.",
            stc_core::patterns::Slot::Attribute,
            PatternId::new("p1").unwrap(),
        )
        .unwrap();
        let forward = TaskVocabulary::new(TaskType::Si, words.iter()).unwrap();
        let mut shuffled = words.clone();
        // cheap deterministic shuffle
        let n = shuffled.len();
        for i in 0..n {
            let j = (seed as usize).wrapping_mul(31).wrapping_add(i * 7) % n;
            shuffled.swap(i, j);
        }
        let backward = TaskVocabulary::new(TaskType::Si, shuffled.iter()).unwrap();
        let a: ScoredCandidates = score(&model, &query, &forward).unwrap();
        let b: ScoredCandidates = score(&model, &query, &backward).unwrap();
        prop_assert_eq!(a.entries(), b.entries());
    }

    // Every applicable pattern instantiates every incomplete triple of its
    // task; replacing the mask with the gold word restores the filled
    // template and leaves the known slots byte-identical.
    #[test]
    fn instantiation_round_trips(
        tenor in "[a-z]{2,8}( [a-z]{2,8})?",
        other in "[a-z]{2,8}",
        gold in "[a-z]{2,8}",
        si in any::<bool>(),
    ) {
        let registry = PatternRegistry::builtin();
        let (task, triple) = if si {
            (TaskType::Si, SimileTriple::interpretation(&tenor, &other).unwrap())
        } else {
            (TaskType::Sg, SimileTriple::generation(&tenor, &other).unwrap())
        };
        for pattern in registry.applicable(task) {
            let query = instantiate(pattern, &triple).unwrap();
            prop_assert_eq!(query.text().matches(MASK_MARKER).count(), 1);
            let restored = query.text().replacen(MASK_MARKER, &gold, 1);
            let (attribute, vehicle) = match task {
                TaskType::Si => (gold.as_str(), other.as_str()),
                TaskType::Sg => (other.as_str(), gold.as_str()),
            };
            let expected = pattern
                .template()
                .to_lowercase()
                .replacen("{tenor}", &tenor, 1)
                .replacen("{attribute}", attribute, 1)
                .replacen("{vehicle}", vehicle, 1);
            prop_assert_eq!(&restored, &expected);
            for slot in pattern.slots() {
                let value = match slot {
                    stc_core::patterns::Slot::Tenor => tenor.as_str(),
                    stc_core::patterns::Slot::Attribute => attribute,
                    stc_core::patterns::Slot::Vehicle => vehicle,
                };
                prop_assert!(restored.contains(value));
            }
        }
    }

    // Raising min_frequency never increases the number of surviving labels.
    #[test]
    fn norms_filtering_is_monotone(rows in prop::collection::vec(
        ("[a-z]{2,5}", "[a-z]{2,5}", "[a-z]{2,5}", 1u32..12),
        1..30,
    )) {
        let mut content = String::new();
        let mut seen = std::collections::HashSet::new();
        for (t, a, v, f) in &rows {
            // duplicate (tenor, vehicle, attribute) rows are input errors
            if seen.insert((t.clone(), v.clone(), a.clone())) {
                content.push_str(&format!("{t}\t{a}\t{v}\t{f}\n"));
            }
        }
        let mut last = usize::MAX;
        for min_frequency in 1..=12 {
            let labels = match parse_norms(&content, min_frequency) {
                Ok(pairs) => pairs.iter().map(|p| p.labels().len()).sum(),
                Err(NormsError::EmptyDataset { .. }) => 0,
                Err(e) => return Err(TestCaseError::fail(format!("unexpected: {e}"))),
            };
            prop_assert!(labels <= last);
            last = labels;
        }
    }

    // Filtering twice equals filtering once, and the derived threshold
    // dominates every scorable train-pair cosine.
    #[test]
    fn filter_idempotent_and_threshold_dominates(
        dims in prop::collection::vec((0.01f64..1.0, -1.0f64..1.0), 3..10),
        threshold in -0.99f64..0.99,
    ) {
        let pairs: Vec<(String, Vec<f64>)> = dims
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (format!("w{i}"), vec![x, y]))
            .collect();
        let table: EmbeddingTable<f64> = EmbeddingTable::from_pairs(pairs.clone()).unwrap();
        let candidates: Vec<String> = pairs.iter().map(|(w, _)| w.clone()).collect();
        let once = filter_vehicles("w0", &candidates, &table, threshold).unwrap();
        let twice = filter_vehicles("w0", &once.words, &table, threshold).unwrap();
        prop_assert_eq!(&once.words, &twice.words);

        let train: Vec<LabeledPair> = (1..pairs.len())
            .map(|i| LabeledPair::new("w0", &format!("w{i}"), vec![("x".to_string(), 5)]).unwrap())
            .collect();
        let derived = derive_threshold(&train, &table).unwrap();
        for pair in &train {
            let cos = table.phrase_cosine(pair.tenor(), pair.vehicle()).unwrap();
            prop_assert!(derived >= cos);
        }
    }

    // Prepending a correct word at rank 1 never decreases MRR or R@K.
    #[test]
    fn correct_word_at_rank_one_is_monotone(
        preds in distinct_words(3, 10),
        gold in word(),
    ) {
        prop_assume!(!preds.contains(&gold));
        let pair = LabeledPair::new("t", "v", vec![(gold.clone(), 5)]).unwrap();
        let record = EvalRecord::new(pair.clone(), TaskType::Si, preds.clone()).unwrap();
        let mut boosted_preds = vec![gold.clone()];
        boosted_preds.extend(preds.iter().cloned());
        let boosted = EvalRecord::new(pair, TaskType::Si, boosted_preds).unwrap();
        let syn = SynonymProvider::identity();
        let base: f64 = mrr(&[record.clone()], &syn).unwrap();
        let better: f64 = mrr(&[boosted.clone()], &syn).unwrap();
        prop_assert!(better >= base);
        let k = 3;
        let base: f64 = r_at_k(&[record], k, &syn).unwrap();
        let better: f64 = r_at_k(&[boosted], k, &syn).unwrap();
        prop_assert!(better >= base);
    }

    // A larger synonym provider can only help R@K; p@K stays within its
    // bounds for duplicate-free predictions.
    #[test]
    fn provider_monotonicity_and_p_at_k_bounds(
        records in prop::collection::vec((distinct_words(4, 8), word()), 1..8),
        k in 1usize..4,
    ) {
        let eval: Vec<EvalRecord> = records
            .iter()
            .enumerate()
            .map(|(i, (preds, gold))| {
                let pair =
                    LabeledPair::new(&format!("t{i}"), "v", vec![(gold.clone(), 5)]).unwrap();
                EvalRecord::new(pair, TaskType::Si, preds.clone()).unwrap()
            })
            .collect();
        let identity = SynonymProvider::identity();
        let bigger = SynonymProvider::from_pairs(
            records
                .iter()
                .map(|(preds, gold)| (gold.clone(), preds.clone())),
        );
        let plain: f64 = r_at_k(&eval, k, &identity).unwrap();
        let expanded: f64 = r_at_k(&eval, k, &bigger).unwrap();
        prop_assert!(expanded >= plain);

        let diversity: f64 = p_at_k(&eval, k).unwrap();
        let n = eval.len() as f64;
        prop_assert!(diversity >= 1.0 / n - 1e-12);
        prop_assert!(diversity <= 1.0 + 1e-12);
    }

    // The ensemble score map does not depend on how the id set was assembled.
    #[test]
    fn ensemble_is_set_semantic(extra in prop::collection::vec("p[1-6]", 0..6)) {
        let mut fixture = MockFixture::with_default_logit(Some(0.0));
        fixture.insert(
            "the love is as MASK as rose.",
            vec![("x".to_string(), Some(1.0)), ("y".to_string(), Some(0.0))],
        );
        let model = ModelRef::from_fixture(fixture);
        let registry = PatternRegistry::builtin();
        let triple = SimileTriple::interpretation("love", "rose").unwrap();
        let vocab = TaskVocabulary::new(TaskType::Si, ["x", "y"]).unwrap();
        let mut ids: BTreeSet<PatternId> =
            ["p1", "p5"].iter().map(|s| PatternId::new(*s).unwrap()).collect();
        let baseline = ensemble::<f64>(&model, registry, &triple, &ids, &vocab).unwrap();
        // inserting already-present ids or the same ids repeatedly is a no-op
        for id in &extra {
            if id == "p1" || id == "p5" {
                ids.insert(PatternId::new(id.as_str()).unwrap());
            }
        }
        let again = ensemble::<f64>(&model, registry, &triple, &ids, &vocab).unwrap();
        prop_assert_eq!(baseline.scores(), again.scores());
    }
}
