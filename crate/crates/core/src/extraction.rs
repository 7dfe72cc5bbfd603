//! Entity detection and out-of-vocabulary rejection.
//!
//! Two extractors run in sequence. Pattern rules fire first, in priority
//! order; the alias gazetteer fills in afterwards, and any gazetteer span that
//! overlaps a pattern span is dropped. The OOV stage then rejects spans whose
//! words are not part of the domain vocabulary.

use serde::{Deserialize, Serialize};

use crate::kg::{CompiledRule, KnowledgeGraph};
use crate::text::{number_constant_view, Token};

/// Longest token window a pattern rule may cover.
pub const MAX_PATTERN_TOKENS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenRange {
    pub start: usize,
    pub end: usize,
}

impl TokenRange {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start < end);
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn overlaps(&self, other: &TokenRange) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanSource {
    Pattern,
    Gazetteer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntitySpan {
    pub token_range: TokenRange,
    pub entity_type: String,
    pub source: SpanSource,
    /// Rule name for pattern spans, alias text for gazetteer spans.
    pub matched_rule: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OovRejection {
    pub token_range: TokenRange,
    pub rejected_word: String,
}

fn joined(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&t.normalized);
    }
    out
}

/// Apply pattern rules in the given order. At each free start position the
/// longest token-aligned match wins; claimed tokens are unavailable to every
/// later match.
pub fn extract_pattern(tokens: &[Token], rules: &[CompiledRule]) -> Vec<EntitySpan> {
    let mut claimed = vec![false; tokens.len()];
    let mut spans = Vec::new();
    for rule in rules {
        let mut start = 0;
        while start < tokens.len() {
            if claimed[start] {
                start += 1;
                continue;
            }
            let limit = (start + MAX_PATTERN_TOKENS).min(tokens.len());
            // the window can't extend past the next claimed token
            let limit = (start..limit).find(|&i| claimed[i]).unwrap_or(limit);
            let hit = (start + 1..=limit)
                .rev()
                .find(|&end| rule.matches(&joined(&tokens[start..end])));
            match hit {
                Some(end) => {
                    claimed[start..end].iter_mut().for_each(|c| *c = true);
                    spans.push(EntitySpan {
                        token_range: TokenRange::new(start, end),
                        entity_type: rule.rule.entity_type.clone(),
                        source: SpanSource::Pattern,
                        matched_rule: rule.rule.name.clone(),
                    });
                    start = end;
                }
                None => start += 1,
            }
        }
    }
    spans.sort_by_key(|s| s.token_range);
    spans
}

/// Longest-match scan of normalized token windows against every alias.
pub fn extract_gazetteer(tokens: &[Token], kg: &KnowledgeGraph) -> Vec<EntitySpan> {
    let max = kg.max_alias_len();
    let mut spans = Vec::new();
    let mut start = 0;
    while start < tokens.len() {
        let limit = (start + max).min(tokens.len());
        let hit = (start + 1..=limit).rev().find_map(|end| {
            let key: Vec<String> = tokens[start..end].iter().map(|t| t.normalized.clone()).collect();
            kg.alias_lookup(&key).map(|id| (end, id, key.join(" ")))
        });
        match hit {
            Some((end, id, alias)) => {
                let entity = kg.entity(id).expect("alias index points at entities");
                spans.push(EntitySpan {
                    token_range: TokenRange::new(start, end),
                    entity_type: entity.entity_type.clone(),
                    source: SpanSource::Gazetteer,
                    matched_rule: alias,
                });
                start = end;
            }
            None => start += 1,
        }
    }
    spans
}

/// Pattern spans, plus gazetteer spans that do not overlap any of them,
/// ordered by start position.
pub fn extract_entities(tokens: &[Token], kg: &KnowledgeGraph) -> Vec<EntitySpan> {
    let mut spans = extract_pattern(tokens, kg.rules());
    let gazetteer: Vec<EntitySpan> = extract_gazetteer(tokens, kg)
        .into_iter()
        .filter(|g| !spans.iter().any(|p| p.token_range.overlaps(&g.token_range)))
        .collect();
    spans.extend(gazetteer);
    spans.sort_by_key(|s| s.token_range);
    spans
}

/// Partition spans into those whose every word is in the domain vocabulary
/// and rejections carrying the first failing word.
pub fn filter_oov(
    spans: Vec<EntitySpan>,
    tokens: &[Token],
    kg: &KnowledgeGraph,
) -> (Vec<EntitySpan>, Vec<OovRejection>) {
    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for span in spans {
        let failing = tokens[span.token_range.start..span.token_range.end]
            .iter()
            .map(number_constant_view)
            .find(|word| !kg.vocabulary().contains(*word));
        match failing {
            Some(word) => rejected.push(OovRejection {
                token_range: span.token_range,
                rejected_word: word.to_string(),
            }),
            None => kept.push(span),
        }
    }
    (kept, rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::kg::PatternRule;
    use crate::text::{analyze, LexiconConfig};

    const ROW_1: &str = "I want a computer with 1 TB of storage, graphic card to play videogames and shoes.";

    fn rule(name: &str, expression: &str, entity_type: &str, priority: i64) -> CompiledRule {
        CompiledRule::compile(PatternRule {
            name: name.into(),
            expression: expression.into(),
            entity_type: entity_type.into(),
            priority,
        })
        .unwrap()
    }

    fn gazetteer_kg(aliases: &[(&str, &str, &str)]) -> KnowledgeGraph {
        let entities: Vec<String> = aliases
            .iter()
            .map(|(id, ty, alias)| {
                format!(r#"{{"id":"{id}","type":"{ty}","aliases":["{alias}"],"description":"{alias}"}}"#)
            })
            .collect();
        let doc = format!(
            r#"{{"entities":[{}],"packages":[],"patterns":[],"extra_vocabulary":[]}}"#,
            entities.join(",")
        );
        KnowledgeGraph::from_json(doc.as_bytes(), &LexiconConfig::english()).unwrap()
    }

    fn surfaces(tokens: &[Token], spans: &[EntitySpan]) -> Vec<String> {
        spans
            .iter()
            .map(|s| {
                tokens[s.token_range.start..s.token_range.end]
                    .iter()
                    .map(|t| t.normalized.as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect()
    }

    #[test]
    fn quantity_rule_covers_both_tokens() {
        let tokens = analyze("1 TB storage", &LexiconConfig::english());
        let rules = [rule("q", r"\d+(?:tb|gb) storage", "STORAGE", 1)];
        let spans = extract_pattern(&tokens, &rules);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].token_range, TokenRange::new(0, 2));
        assert_eq!(spans[0].entity_type, "STORAGE");
        assert_eq!(spans[0].source, SpanSource::Pattern);
    }

    #[test]
    fn cpu_model_rule() {
        let tokens = analyze("i5 processor", &LexiconConfig::english());
        let rules = [rule("cpu", "i[3579]", "CPU", 1)];
        let spans = extract_pattern(&tokens, &rules);
        assert_eq!(spans[0].token_range, TokenRange::new(0, 1));
        assert_eq!(spans[0].entity_type, "CPU");
    }

    #[test]
    fn no_rule_matches_shoes_in_domain_rules() {
        let tokens = analyze("shoes", &LexiconConfig::english());
        let rules = [rule("cpu", "i[3579]", "CPU", 1), rule("s", "storage", "STORAGE", 2)];
        assert!(extract_pattern(&tokens, &rules).is_empty());
    }

    #[test]
    fn earlier_rule_claims_tokens() {
        let tokens = analyze("ram memory", &LexiconConfig::english());
        let rules = [rule("mem", "memory", "A", 1), rule("ram", "ram memory|ram", "B", 2)];
        let spans = extract_pattern(&tokens, &rules);
        assert_eq!(spans.len(), 2);
        assert_eq!(spans[0].entity_type, "B");
        assert_eq!(spans[0].token_range, TokenRange::new(0, 1));
        assert_eq!(spans[1].entity_type, "A");
    }

    #[test]
    fn pattern_matches_are_token_aligned() {
        let tokens = analyze("ssdx storage", &LexiconConfig::english());
        let rules = [rule("ssd", "ssd", "STORAGE", 1)];
        assert!(extract_pattern(&tokens, &rules).is_empty());
    }

    #[test]
    fn gazetteer_two_token_alias() {
        let kg = gazetteer_kg(&[("GRAPHIC_1", "GRAPHIC", "graphic card")]);
        let tokens = analyze("graphic card", &LexiconConfig::english());
        let spans = extract_gazetteer(&tokens, &kg);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].token_range, TokenRange::new(0, 2));
        assert_eq!(spans[0].entity_type, "GRAPHIC");
        assert_eq!(spans[0].matched_rule, "graphic card");
    }

    #[test]
    fn gazetteer_longest_match() {
        let kg = gazetteer_kg(&[
            ("GRAPHIC_1", "GRAPHIC", "graphic card"),
            ("READER_1", "READER", "graphic card reader"),
        ]);
        let tokens = analyze("graphic card reader", &LexiconConfig::english());
        let spans = extract_gazetteer(&tokens, &kg);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].token_range, TokenRange::new(0, 3));
        assert_eq!(spans[0].entity_type, "READER");
    }

    #[test]
    fn gazetteer_tie_goes_to_smallest_id() {
        let kg = gazetteer_kg(&[("B_ENTITY", "BETA", "card"), ("A_ENTITY", "ALPHA", "card")]);
        let tokens = analyze("card", &LexiconConfig::english());
        assert_eq!(extract_gazetteer(&tokens, &kg)[0].entity_type, "ALPHA");
    }

    #[test]
    fn gazetteer_absent_alias() {
        let kg = gazetteer_kg(&[("GRAPHIC_1", "GRAPHIC", "graphic card")]);
        let tokens = analyze("computer", &LexiconConfig::english());
        assert!(extract_gazetteer(&tokens, &kg).is_empty());
    }

    #[test]
    fn row_one_detection() {
        let lex = LexiconConfig::english();
        let kg = fixtures::knowledge_graph();
        let tokens = analyze(ROW_1, &lex);
        let spans = extract_entities(&tokens, &kg);
        assert_eq!(surfaces(&tokens, &spans), ["storage", "graphic card", "shoes"]);
        let types: Vec<&str> = spans.iter().map(|s| s.entity_type.as_str()).collect();
        assert_eq!(types, ["STORAGE", "GRAPHIC", "APPAREL"]);
    }

    #[test]
    fn pattern_beats_gazetteer() {
        let lex = LexiconConfig::english();
        let kg = fixtures::knowledge_graph();
        // "1tb ssd" is an alias of STORAGE_1TB, but the storage rule claims "ssd"
        let tokens = analyze("1 TB SSD", &lex);
        let spans = extract_entities(&tokens, &kg);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].source, SpanSource::Pattern);
        assert_eq!(spans[0].token_range, TokenRange::new(1, 2));
        // an alias with no competing rule is found by the gazetteer
        let tokens = analyze("an RTX 3080", &lex);
        let spans = extract_entities(&tokens, &kg);
        assert_eq!(spans.len(), 1);
        assert_eq!(spans[0].source, SpanSource::Gazetteer);
        assert_eq!(spans[0].entity_type, "GRAPHIC");
    }

    #[test]
    fn empty_input() {
        let kg = fixtures::knowledge_graph();
        assert!(extract_entities(&[], &kg).is_empty());
        assert_eq!(filter_oov(Vec::new(), &[], &kg), (Vec::new(), Vec::new()));
    }

    #[test]
    fn oov_rejects_shoes_keeps_storage() {
        let lex = LexiconConfig::english();
        let kg = fixtures::knowledge_graph();
        let tokens = analyze(ROW_1, &lex);
        let spans = extract_entities(&tokens, &kg);
        let (kept, rejected) = filter_oov(spans, &tokens, &kg);
        assert_eq!(surfaces(&tokens, &kept), ["storage", "graphic card"]);
        assert_eq!(rejected.len(), 1);
        assert_eq!(rejected[0].rejected_word, "shoes");

        let tokens = analyze("1 TB storage", &lex);
        let spans = extract_entities(&tokens, &kg);
        let (kept, rejected) = filter_oov(spans, &tokens, &kg);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].token_range, TokenRange::new(0, 2));
        assert!(rejected.is_empty());
    }
}
