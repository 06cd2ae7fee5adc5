//! Property tests for the contract invariants: dedup laws, matcher case
//! invariance and span round-trips, vectorizer norms, split and fold
//! partition laws, metric ranges, AUC symmetries, and filter set algebra.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use bias_refinery_core::baseline::{fit_vocabulary, loss_and_gradient, vectorize, SparseVector};
use bias_refinery_core::corpus::{deduplicate, normalize_text, Excerpt, Origin};
use bias_refinery_core::datasets::{kfold_partition, stratified_split, DEFAULT_FRACTIONS};
use bias_refinery_core::evalkit::{
    aggregate_folds, compute_metrics, confusion_counts, roc_auc, CiMethod,
};
use bias_refinery_core::lexicon::{extract_xn_candidates, match_keywords, Lexicon};
use bias_refinery_core::wsd::{filter_extracted_negatives, ConstantDisambiguator, FilterPolicy};
use bias_refinery_core::CategoryName;

fn excerpt(id: String, text: String) -> Excerpt {
    Excerpt {
        id,
        text,
        source_doc: "doc".into(),
        page: None,
        level2_codes: BTreeSet::new(),
        type_disease_codes: vec![],
        origin: Origin::Extracted,
    }
}

fn word() -> impl Strategy<Value = String> {
    prop::sample::select(vec![
        "white", "black", "matter", "population", "incidence", "patients", "plaques", "men",
        "women", "survival", "disease", "the", "of", "counts", "valve",
    ])
    .prop_map(str::to_string)
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(word(), 1..12).prop_map(|words| words.join(" "))
}

fn test_lexicon() -> Lexicon {
    Lexicon::from_entries([
        (CategoryName::Race, vec!["white", "black"]),
        (CategoryName::Gender, vec!["men", "women"]),
    ])
    .unwrap()
}

proptest! {
    #[test]
    fn dedup_is_idempotent_and_never_grows(texts in prop::collection::vec(sentence(), 0..40)) {
        let items: Vec<Excerpt> = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| excerpt(format!("id{i}"), t))
            .collect();
        let n = items.len();
        let once = deduplicate(items);
        prop_assert!(once.kept.len() <= n);
        prop_assert_eq!(once.kept.len() + once.removed.len(), n);
        let twice = deduplicate(once.kept.clone());
        prop_assert_eq!(&twice.kept, &once.kept);
        prop_assert!(twice.removed.is_empty());
    }

    #[test]
    fn normalization_is_idempotent(raw in "[ a-zA-Z\\t]{1,60}") {
        if let Ok(once) = normalize_text(&raw) {
            prop_assert_eq!(normalize_text(&once).unwrap(), once);
        }
    }

    #[test]
    fn matcher_is_case_invariant(text in sentence()) {
        let lex = test_lexicon();
        let lower = excerpt("e".into(), text.clone());
        let upper = excerpt("e".into(), text.to_uppercase());
        prop_assert_eq!(match_keywords(&lower, &lex), match_keywords(&upper, &lex));
    }

    #[test]
    fn match_spans_retokenize_to_keyword(text in sentence()) {
        let lex = test_lexicon();
        let e = excerpt("e".into(), text);
        let tokens = bias_refinery_core::text::token_strings(&e.text);
        for m in match_keywords(&e, &lex) {
            let span = &tokens[m.start_token..m.end_token];
            let kw_tokens = bias_refinery_core::text::token_strings(&m.keyword);
            prop_assert_eq!(span, kw_tokens.as_slice());
        }
    }

    #[test]
    fn candidates_are_a_subset_with_matches(texts in prop::collection::vec(sentence(), 0..30)) {
        let lex = test_lexicon();
        let items: Vec<Excerpt> = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| excerpt(format!("id{i}"), t))
            .collect();
        let ids: BTreeSet<&str> = items.iter().map(|e| e.id.as_str()).collect();
        for c in extract_xn_candidates(&items, &lex) {
            prop_assert!(ids.contains(c.excerpt.id.as_str()));
            prop_assert!(!c.matches.is_empty());
        }
    }

    #[test]
    fn vectorize_norm_is_zero_or_one(texts in prop::collection::vec(sentence(), 1..10), probe in sentence()) {
        let vocab = fit_vocabulary(&texts, 1).unwrap();
        let v = vectorize(&probe, &vocab);
        let norm = v.l2_norm();
        prop_assert!(norm == 0.0 || (norm - 1.0).abs() < 1e-9, "norm = {norm}");
    }

    #[test]
    fn gradient_matches_finite_differences(
        seed_entries in prop::collection::vec((0usize..6, 0.05f64..1.0), 2..12),
        labels_bits in prop::collection::vec(any::<bool>(), 2..12),
        weights in prop::collection::vec(-1.0f64..1.0, 6),
        bias in -1.0f64..1.0,
    ) {
        let n = seed_entries.len().min(labels_bits.len());
        prop_assume!(n >= 2);
        let xs: Vec<SparseVector> = seed_entries[..n]
            .iter()
            .map(|&(i, v)| SparseVector { dim: 6, entries: vec![(i, v)] })
            .collect();
        let ys = &labels_bits[..n];
        let (_, grad_w, grad_b) = loss_and_gradient(&xs, ys, &weights, bias, 1e-4, None);
        let h = 1e-5;
        let loss_at = |w: &[f64], b: f64| loss_and_gradient(&xs, ys, w, b, 1e-4, None).0;
        // Norm-wise comparison over the full (weights, bias) gradient:
        // per-component relative error is meaningless for the tiny
        // penalty-only components, where finite differences cancel out.
        let mut numeric = Vec::with_capacity(weights.len() + 1);
        for i in 0..weights.len() {
            let mut wp = weights.clone();
            let mut wm = weights.clone();
            wp[i] += h;
            wm[i] -= h;
            numeric.push((loss_at(&wp, bias) - loss_at(&wm, bias)) / (2.0 * h));
        }
        numeric.push((loss_at(&weights, bias + h) - loss_at(&weights, bias - h)) / (2.0 * h));
        let analytic: Vec<f64> = grad_w.iter().copied().chain(std::iter::once(grad_b)).collect();
        let diff_norm: f64 = numeric
            .iter()
            .zip(&analytic)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let scale: f64 = analytic.iter().map(|g| g * g).sum::<f64>().sqrt();
        prop_assert!(diff_norm / scale.max(1e-8) < 1e-6, "diff {diff_norm} scale {scale}");
    }

    #[test]
    fn split_is_a_deterministic_partition(
        n_pos in 5usize..60,
        n_neg in 5usize..120,
        seed in any::<u64>(),
    ) {
        let items: Vec<(String, bool)> = (0..n_pos)
            .map(|i| (format!("p{i}"), true))
            .chain((0..n_neg).map(|i| (format!("n{i}"), false)))
            .collect();
        let a = stratified_split(&items, DEFAULT_FRACTIONS, seed).unwrap();
        let b = stratified_split(&items, DEFAULT_FRACTIONS, seed).unwrap();
        prop_assert_eq!(&a, &b);
        let mut all: Vec<&String> = a.train.iter().chain(&a.val).chain(&a.test).collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), items.len());
        // Per-class allocations stay within one of exact proportionality.
        for (label, class_n) in [(true, n_pos), (false, n_neg)] {
            let prefix = if label { 'p' } else { 'n' };
            for (split, frac) in [(&a.train, 0.70), (&a.val, 0.15), (&a.test, 0.15)] {
                let got = split.iter().filter(|id| id.starts_with(prefix)).count() as f64;
                let exact = class_n as f64 * frac;
                prop_assert!((got - exact).abs() <= 1.0, "{got} vs {exact}");
            }
        }
    }

    #[test]
    fn kfold_is_a_stratified_partition(
        n_pos in 5usize..40,
        n_neg in 5usize..80,
        k in 2usize..5,
        seed in any::<u64>(),
    ) {
        let items: Vec<(String, bool)> = (0..n_pos)
            .map(|i| (format!("p{i}"), true))
            .chain((0..n_neg).map(|i| (format!("n{i}"), false)))
            .collect();
        let plan = kfold_partition(&items, k, seed).unwrap();
        let mut all: Vec<&String> = plan.folds.iter().flatten().collect();
        all.sort();
        all.dedup();
        prop_assert_eq!(all.len(), items.len());
        let sizes: Vec<usize> = plan.folds.iter().map(|f| f.len()).collect();
        let max = sizes.iter().max().unwrap();
        let min = sizes.iter().min().unwrap();
        prop_assert!(max - min <= 1, "fold sizes {sizes:?}");
        for fold in &plan.folds {
            let pos = fold.iter().filter(|id| id.starts_with('p')).count() as f64;
            let exact = fold.len() as f64 * n_pos as f64 / (n_pos + n_neg) as f64;
            prop_assert!((pos - exact).abs() <= 1.0, "{pos} vs {exact}");
        }
    }

    #[test]
    fn metrics_stay_in_unit_interval(
        preds in prop::collection::vec(any::<bool>(), 1..80),
        labels in prop::collection::vec(any::<bool>(), 1..80),
    ) {
        let n = preds.len().min(labels.len());
        let c = confusion_counts(&preds[..n], &labels[..n]).unwrap();
        let m = compute_metrics(&c);
        for v in [m.accuracy, m.precision, m.recall, m.f1, m.f2] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        // F1 sits between P and R when both are positive; F2 leans toward
        // recall.
        if m.precision > 0.0 && m.recall > 0.0 {
            prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-12);
            prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
            if m.recall > m.precision {
                prop_assert!(m.f2 > m.f1 - 1e-12);
            }
            if m.recall < m.precision {
                prop_assert!(m.f2 < m.f1 + 1e-12);
            }
        }
    }

    #[test]
    fn auc_is_monotone_transform_invariant(
        scores in prop::collection::vec(0.0f64..1.0, 4..60),
        labels in prop::collection::vec(any::<bool>(), 4..60),
    ) {
        let n = scores.len().min(labels.len());
        let scores = &scores[..n];
        let labels = &labels[..n];
        prop_assume!(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y));
        let auc = roc_auc(scores, labels).unwrap();
        let transformed: Vec<f64> = scores.iter().map(|s| (3.0 * s + 1.0).exp()).collect();
        let auc_t = roc_auc(&transformed, labels).unwrap();
        prop_assert!((auc - auc_t).abs() < 1e-12);
    }

    #[test]
    fn auc_flips_with_labels_when_tie_free(
        raw in prop::collection::vec(0u32..1_000_000, 4..60),
        labels in prop::collection::vec(any::<bool>(), 4..60),
    ) {
        let n = raw.len().min(labels.len());
        let mut scores: Vec<f64> = raw[..n].iter().map(|&r| r as f64).collect();
        // Deduplicate scores so no ties remain.
        let mut seen = BTreeSet::new();
        for (i, s) in scores.iter_mut().enumerate() {
            while !seen.insert(s.to_bits()) {
                *s += (i + 1) as f64 * 0.5;
            }
        }
        let labels = &labels[..n];
        prop_assume!(labels.iter().any(|&y| y) && labels.iter().any(|&y| !y));
        let flipped: Vec<bool> = labels.iter().map(|&y| !y).collect();
        let a = roc_auc(&scores, labels).unwrap();
        let b = roc_auc(&scores, &flipped).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-9);
    }

    #[test]
    fn aggregation_is_permutation_invariant(
        values in prop::collection::vec(0.0f64..1.0, 2..10),
        swap in any::<u64>(),
    ) {
        let a = aggregate_folds(&values, CiMethod::Normal).unwrap();
        let mut shuffled = values.clone();
        let i = (swap as usize) % shuffled.len();
        shuffled.swap(0, i);
        shuffled.reverse();
        let b = aggregate_folds(&shuffled, CiMethod::Normal).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-12);
        prop_assert!((a.half_width - b.half_width).abs() < 1e-9);
    }

    #[test]
    fn filter_partitions_candidates_and_ignores_order(
        texts in prop::collection::vec(sentence(), 1..25),
        related in any::<bool>(),
        rot in 0usize..25,
    ) {
        let lex = test_lexicon();
        let items: Vec<Excerpt> = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| excerpt(format!("id{i}"), t))
            .collect();
        let mut candidates = extract_xn_candidates(&items, &lex);
        let backend = ConstantDisambiguator::new(related);
        let policy = FilterPolicy::default();
        let outcome = filter_extracted_negatives(&candidates, &backend, &lex, &policy).unwrap();
        prop_assert_eq!(outcome.kept.len() + outcome.removed.len(), candidates.len());
        let kept_ids: BTreeSet<&str> = outcome.kept.iter().map(|c| c.excerpt.id.as_str()).collect();
        let removed_ids: BTreeSet<&str> =
            outcome.removed.iter().map(|r| r.candidate.excerpt.id.as_str()).collect();
        prop_assert!(kept_ids.is_disjoint(&removed_ids));

        if !candidates.is_empty() {
            let r = rot % candidates.len();
            candidates.rotate_left(r);
            let rotated = filter_extracted_negatives(&candidates, &backend, &lex, &policy).unwrap();
            let rotated_ids: BTreeSet<&str> =
                rotated.kept.iter().map(|c| c.excerpt.id.as_str()).collect();
            prop_assert_eq!(kept_ids, rotated_ids);
        }
    }

    #[test]
    fn corpus_jsonl_round_trips(texts in prop::collection::vec(sentence(), 1..20)) {
        use bias_refinery_core::corpus::{ingest_excerpts, write_excerpts, CorpusFormat};
        let items: Vec<Excerpt> = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| excerpt(format!("id{i}"), t))
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roundtrip.jsonl");
        write_excerpts(&path, &items, CorpusFormat::Jsonl).unwrap();
        let back = ingest_excerpts(&path, CorpusFormat::Jsonl).unwrap();
        prop_assert_eq!(back, items);
    }
}

#[test]
fn constant_backends_bound_the_filter() {
    let lex = test_lexicon();
    let items: Vec<Excerpt> = [
        "white matter tracts",
        "incidence in the white population",
        "outcomes for men",
        "black box warnings",
        "survival for black women",
    ]
    .iter()
    .enumerate()
    .map(|(i, t)| excerpt(format!("id{i}"), t.to_string()))
    .collect();
    let candidates = extract_xn_candidates(&items, &lex);
    let policy = FilterPolicy::default();

    let all = filter_extracted_negatives(&candidates, &ConstantDisambiguator::new(true), &lex, &policy)
        .unwrap();
    assert_eq!(all.kept.len(), candidates.len());

    let none =
        filter_extracted_negatives(&candidates, &ConstantDisambiguator::new(false), &lex, &policy)
            .unwrap();
    let expected: BTreeSet<&str> = candidates
        .iter()
        .filter(|c| c.matches.iter().any(|m| !lex.wsd_enabled(m.category)))
        .map(|c| c.excerpt.id.as_str())
        .collect();
    let got: BTreeSet<&str> = none.kept.iter().map(|c| c.excerpt.id.as_str()).collect();
    assert_eq!(got, expected);
}

#[test]
fn fold_and_split_manifests_are_byte_deterministic() {
    let items: Vec<(String, bool)> = (0..24)
        .map(|i| (format!("p{i}"), true))
        .chain((0..56).map(|i| (format!("n{i}"), false)))
        .collect();
    let a = stratified_split(&items, DEFAULT_FRACTIONS, 99).unwrap();
    let b = stratified_split(&items, DEFAULT_FRACTIONS, 99).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    let pa = kfold_partition(&items, 5, 99).unwrap();
    let pb = kfold_partition(&items, 5, 99).unwrap();
    assert_eq!(
        serde_json::to_string(&pa).unwrap(),
        serde_json::to_string(&pb).unwrap()
    );
}

#[test]
fn merged_pool_splits_never_mix() {
    use bias_refinery_core::datasets::merge_pools;
    let manual: Vec<(String, bool)> = (0..12)
        .map(|i| (format!("mp{i}"), true))
        .chain((0..18).map(|i| (format!("mn{i}"), false)))
        .collect();
    let synth: Vec<(String, bool)> = (0..6)
        .map(|i| (format!("sp{i}"), true))
        .chain((0..6).map(|i| (format!("sn{i}"), false)))
        .collect();
    let merged = merge_pools(&manual, &synth, DEFAULT_FRACTIONS, 21).unwrap();
    let synth_split = merged.synthetic.as_ref().unwrap();
    let manual_train: BTreeSet<&String> = merged.manual.train.iter().collect();
    let synth_train: BTreeSet<&String> = synth_split.train.iter().collect();
    for id in &merged.train {
        assert!(manual_train.contains(id) || synth_train.contains(id));
    }
    // Test membership never leaks into train across either pool.
    let all_test: BTreeSet<&String> = merged.test.iter().collect();
    assert!(all_test.is_disjoint(&manual_train));
    assert!(all_test.is_disjoint(&synth_train));
}

#[test]
fn scripted_score_map_respects_threshold_semantics() {
    // related ⇔ score >= threshold, across a sweep of thresholds.
    use bias_refinery_core::wsd::DisambiguationVerdict;
    let mut map = BTreeMap::new();
    map.insert("a", 0.49999);
    map.insert("b", 0.5);
    map.insert("c", 0.50001);
    for (_, score) in map {
        for threshold in [0.25, 0.5, 0.75] {
            let v = DisambiguationVerdict::from_score(score, threshold, "t", false);
            assert_eq!(v.related, score >= threshold);
        }
    }
}
