use std::collections::BTreeSet;
use std::sync::OnceLock;

use isabel_core::extraction::TokenRange;
use isabel_core::text::NUM_CONSTANT;
use isabel_core::{
    analyze, build_subsentences, extract_entities, filter_oov, fixtures, fuse_quantities, lemmatize, normalize,
    tokenize, EntitySpan, KnowledgeGraph, LexiconConfig, SparseVector, Token, TokenKind, Vectorizer,
};
use proptest::prelude::*;
use unicode_normalization::char::is_combining_mark;

fn kg() -> &'static KnowledgeGraph {
    static KG: OnceLock<KnowledgeGraph> = OnceLock::new();
    KG.get_or_init(fixtures::knowledge_graph)
}

fn vectorizer() -> &'static Vectorizer {
    static V: OnceLock<Vectorizer> = OnceLock::new();
    V.get_or_init(|| Vectorizer::fit(kg(), &LexiconConfig::english()).unwrap())
}

fn fixture_ids() -> Vec<String> {
    fixtures::knowledge_graph().entities().map(|e| e.id.clone()).collect()
}

/// Request-like text drawn from domain words, filler, numbers, units and
/// punctuation.
fn request_text() -> impl Strategy<Value = String> {
    let word = prop_oneof![
        Just("I"), Just("want"), Just("a"), Just("computer"), Just("with"), Just("of"),
        Just("storage"), Just("graphic"), Just("card"), Just("to"), Just("play"),
        Just("videogames"), Just("and"), Just("shoes"), Just("RAM"), Just("memory"),
        Just("i5"), Just("i7"), Just("processor"), Just("SSD"), Just("RTX"), Just("3080"),
        Just("TB"), Just("GB"), Just("8GB"), Just("512"), Just("1"), Just("16"), Just(","),
        Just("."), Just("for"), Just("gaming"), Just("núcleo"), Just("fast"),
    ];
    prop::collection::vec(word, 0..24).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn normalize_is_idempotent(s in any::<String>()) {
        let once = normalize(&s);
        prop_assert_eq!(normalize(&once), once.clone());
        // symbols like U+1F150 carry the uppercase property but have no lowercase form
        let foldable_upper = |c: char| c.is_uppercase() && !c.to_lowercase().eq(std::iter::once(c));
        prop_assert!(!once.chars().any(|c| foldable_upper(c) || is_combining_mark(c)));
    }

    #[test]
    fn spans_reconstruct_input(s in any::<String>()) {
        let tokens = tokenize(&s);
        let mut cursor = 0;
        for t in &tokens {
            prop_assert!(t.span.start < t.span.end);
            prop_assert!(t.span.start >= cursor);
            prop_assert!(s[cursor..t.span.start].chars().all(char::is_whitespace));
            prop_assert_eq!(&s[t.span.start..t.span.end], t.surface.as_str());
            cursor = t.span.end;
        }
        prop_assert!(s[cursor..].chars().all(char::is_whitespace));
    }

    #[test]
    fn number_kind_iff_digits(s in "[0-9a-zA-Z .,%-]{0,40}") {
        for t in tokenize(&s) {
            let digits = t.normalized.chars().filter(|c| c.is_ascii_digit()).count();
            let seps = t.normalized.chars().filter(|c| *c == '.' || *c == ',').count();
            let numeric = digits > 0 && digits + seps == t.normalized.chars().count() && seps <= 1;
            prop_assert_eq!(t.kind == TokenKind::Number, numeric, "{:?}", t);
        }
    }

    #[test]
    fn fuse_merge_count_law(text in request_text()) {
        let lex = LexiconConfig::english();
        let tokens = tokenize(&text);
        let pairs = tokens
            .iter()
            .zip(tokens.iter().skip(1))
            .filter(|(a, b)| a.kind == TokenKind::Number && b.kind == TokenKind::Word && lex.unit_words.contains(&b.normalized))
            .count();
        // a unit after a number never itself starts a pair, so adjacent pairs cannot overlap
        let fused = fuse_quantities(&text, tokens.clone(), &lex);
        prop_assert_eq!(fused.len(), tokens.len() - pairs);
        for t in fused.iter().filter(|t| t.kind == TokenKind::Quantity) {
            prop_assert_eq!(&text[t.span.start..t.span.end], t.surface.as_str());
        }
    }

    #[test]
    fn lemmatize_is_total(s in "[a-z]{0,12}") {
        let lex = LexiconConfig::english();
        let a = lemmatize(&s, &lex);
        prop_assert_eq!(lemmatize(&s, &lex), a.clone());
        if !lex.lemma_map.contains_key(&s) {
            prop_assert_eq!(a, s);
        }
    }
}

fn kept_spans(tokens: &[Token], kg: &KnowledgeGraph) -> Vec<EntitySpan> {
    filter_oov(extract_entities(tokens, kg), tokens, kg).0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn extraction_is_deterministic_and_disjoint(text in request_text()) {
        let lex = LexiconConfig::english();
        let kg = kg();
        let tokens = analyze(&text, &lex);
        let spans = extract_entities(&tokens, kg);
        prop_assert_eq!(&spans, &extract_entities(&tokens, kg));
        for w in spans.windows(2) {
            prop_assert!(w[0].token_range.end <= w[1].token_range.start);
        }
        let types = kg.entity_types();
        let rule_types: BTreeSet<&str> = kg.rules().iter().map(|r| r.rule.entity_type.as_str()).collect();
        for s in &spans {
            prop_assert!(types.contains(s.entity_type.as_str()) || rule_types.contains(s.entity_type.as_str()));
        }
    }

    #[test]
    fn oov_partitions_spans(text in request_text()) {
        let lex = LexiconConfig::english();
        let kg = kg();
        let tokens = analyze(&text, &lex);
        let spans = extract_entities(&tokens, kg);
        let (kept, rejected) = filter_oov(spans.clone(), &tokens, kg);
        prop_assert_eq!(kept.len() + rejected.len(), spans.len());
        for k in &kept {
            prop_assert!(spans.contains(k));
        }
        for r in &rejected {
            prop_assert!(!kg.vocabulary().contains(&r.rejected_word));
            prop_assert!(spans.iter().any(|s| s.token_range == r.token_range));
        }
    }

    #[test]
    fn extending_vocabulary_keeps_rejected_span(text in request_text()) {
        let lex = LexiconConfig::english();
        let kg = kg();
        let tokens = analyze(&text, &lex);
        let spans = extract_entities(&tokens, kg);
        let (_, rejected) = filter_oov(spans.clone(), &tokens, kg);
        for r in rejected {
            let span: Vec<EntitySpan> = spans.iter().filter(|s| s.token_range == r.token_range).cloned().collect();
            let mut extended = kg.clone();
            // add every failing word of the span, one at a time
            loop {
                let (kept, again) = filter_oov(span.clone(), &tokens, &extended);
                if let Some(next) = again.first() {
                    extended = extended.with_extra_vocabulary([next.rejected_word.clone()], &lex);
                } else {
                    prop_assert_eq!(kept, span.clone());
                    break;
                }
            }
            let single = kg.with_extra_vocabulary([r.rejected_word.clone()], &lex);
            let (_, still) = filter_oov(span.clone(), &tokens, &single);
            prop_assert!(still.iter().all(|s| s.rejected_word != r.rejected_word));
        }
    }

    #[test]
    fn subsentences_biject_with_kept_spans(text in request_text()) {
        let lex = LexiconConfig::english();
        let kg = kg();
        let tokens = analyze(&text, &lex);
        let kept = kept_spans(&tokens, kg);
        let subs = build_subsentences(&tokens, &kept, &lex);
        prop_assert_eq!(subs.len(), kept.len());
        for (sub, span) in subs.iter().zip(&kept) {
            prop_assert_eq!(&sub.anchor, span);
            prop_assert!(!sub.rendered.is_empty());
            let idx = sub.token_indices();
            prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
            for c in &sub.context_token_indices {
                prop_assert!(!kept.iter().any(|k| k.token_range.contains(*c)));
            }
            let words: Vec<&str> = idx.iter().map(|&i| tokens[i].normalized.as_str()).collect();
            prop_assert_eq!(sub.rendered.clone(), words.join(" "));
        }
    }

    #[test]
    fn context_deletion_leaves_anchors(text in request_text()) {
        let lex = LexiconConfig::english();
        let kg = kg();
        let tokens = analyze(&text, &lex);
        let kept = kept_spans(&tokens, kg);
        // keep only anchor tokens and re-index the spans
        let mut anchors_only = Vec::new();
        let mut reindexed = Vec::new();
        for span in &kept {
            let start = anchors_only.len();
            anchors_only.extend_from_slice(&tokens[span.token_range.start..span.token_range.end]);
            let mut s = span.clone();
            s.token_range = TokenRange::new(start, anchors_only.len());
            reindexed.push(s);
        }
        let subs = build_subsentences(&anchors_only, &reindexed, &lex);
        for (sub, span) in subs.iter().zip(&reindexed) {
            prop_assert!(sub.context_token_indices.is_empty());
            let anchor: Vec<&str> = anchors_only[span.token_range.start..span.token_range.end]
                .iter()
                .map(|t| t.normalized.as_str())
                .collect();
            prop_assert_eq!(sub.rendered.clone(), anchor.join(" "));
        }
    }

    #[test]
    fn candidate_scores_in_unit_interval(text in request_text()) {
        let lex = LexiconConfig::english();
        let v = vectorizer();
        let q = v.vectorize(&analyze(&text, &lex));
        for c in v.rank(&q, None, 100, 0) {
            prop_assert!((0.0..=1.0).contains(&c.score));
        }
    }

    #[test]
    fn ranking_is_scale_invariant(text in request_text(), factor in 1e-3f64..1e3) {
        let lex = LexiconConfig::english();
        let v = vectorizer();
        let q = v.vectorize(&analyze(&text, &lex));
        let base: Vec<String> = v.rank(&q, None, 10, 0).into_iter().map(|c| c.entity_id).collect();
        let scaled: Vec<String> = v.rank(&q.scaled(factor), None, 10, 0).into_iter().map(|c| c.entity_id).collect();
        prop_assert_eq!(base, scaled);
    }
}

#[test]
fn self_retrieval() {
    let lex = LexiconConfig::english();
    let kg = kg();
    let v = vectorizer();
    for e in kg.entities() {
        let q = v.vectorize(&analyze(&e.description, &lex));
        let best = &v.rank(&q, None, 1, 0)[0];
        assert_eq!(best.entity_id, e.id);
        assert!((best.score - 1.0).abs() < 1e-9);
    }
}

#[test]
fn containing_all_matches_brute_force_and_is_monotone() {
    let kg = kg();
    let ids = fixture_ids();
    assert_eq!(ids.len(), 10);
    let subset = |mask: u32| -> BTreeSet<String> {
        ids.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, id)| id.clone()).collect()
    };
    let result = |mask: u32| -> BTreeSet<String> {
        kg.packages_containing_all(&subset(mask)).unwrap().into_iter().map(|p| p.id.clone()).collect()
    };
    for mask in 1u32..1 << ids.len() {
        let required = subset(mask);
        let brute: BTreeSet<String> = kg
            .packages()
            .filter(|p| required.iter().all(|id| p.members.contains(id)))
            .map(|p| p.id.clone())
            .collect();
        let got = result(mask);
        assert_eq!(got, brute, "mask {mask:b}");
        // adding any entity never enlarges the result
        for bit in 0..ids.len() {
            let bigger = mask | (1 << bit);
            assert!(result(bigger).is_subset(&got));
        }
    }
}

#[test]
fn num_constant_is_always_in_vocabulary() {
    assert!(fixtures::knowledge_graph().vocabulary().contains(NUM_CONSTANT));
}

#[test]
fn zero_vector_has_zero_similarity() {
    let v = vectorizer();
    let ranked = v.rank(&SparseVector::default(), Some("CPU"), 5, 0);
    assert_eq!(ranked.len(), 3);
    assert!(ranked.iter().all(|c| c.score == 0.0));
    let ids: Vec<&str> = ranked.iter().map(|c| c.entity_id.as_str()).collect();
    assert_eq!(ids, ["CPU_I3", "CPU_I5", "CPU_I7"]);
}
