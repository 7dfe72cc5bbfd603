//! Knowledge graph: entities, packages, membership edges, extraction patterns
//! and the derived domain vocabulary.
//!
//! The graph is bipartite. Packages point at entities through membership and
//! no other edge type exists. A loaded graph is immutable.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{analyze, number_constant_view, LexiconConfig, TokenKind, NUM_CONSTANT};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum KgError {
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("dangling reference at {path}: no entity {id:?}")]
    DanglingReference { path: String, id: String },
    #[error("duplicate id at {path}: {id:?}")]
    DuplicateId { path: String, id: String },
    #[error("duplicate pattern priority at {path}: {priority}")]
    DuplicatePriority { path: String, priority: i64 },
    #[error("pattern at {path} does not compile: {message}")]
    PatternCompile { path: String, message: String },
    #[error("unknown entity {0:?}")]
    UnknownEntity(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KgEntity {
    pub id: String,
    #[serde(rename = "type")]
    pub entity_type: String,
    pub aliases: Vec<String>,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KgPackage {
    pub id: String,
    #[serde(rename = "name")]
    pub display_name: String,
    pub members: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternRule {
    pub name: String,
    pub expression: String,
    pub entity_type: String,
    pub priority: i64,
}

/// A pattern rule with its anchored regex. Equality ignores the compiled form.
#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub rule: PatternRule,
    regex: Regex,
}

impl CompiledRule {
    pub fn compile(rule: PatternRule) -> Result<Self, regex::Error> {
        let regex = Regex::new(&format!("^(?:{})$", rule.expression))?;
        Ok(Self { rule, regex })
    }

    /// Whole-string match against space-joined normalized token text.
    pub fn matches(&self, text: &str) -> bool {
        self.regex.is_match(text)
    }
}

impl PartialEq for CompiledRule {
    fn eq(&self, other: &Self) -> bool {
        self.rule == other.rule
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PackageRecord {
    id: String,
    name: String,
    members: Vec<String>,
}

/// On-disk document shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KgDocument {
    entities: Vec<KgEntity>,
    packages: Vec<PackageRecord>,
    patterns: Vec<PatternRule>,
    extra_vocabulary: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    entities: BTreeMap<String, KgEntity>,
    packages: BTreeMap<String, KgPackage>,
    rules: Vec<CompiledRule>,
    vocabulary: BTreeSet<String>,
    extra_vocabulary: BTreeSet<String>,
    // normalized alias tokens -> entity id (smallest id wins)
    alias_index: HashMap<Vec<String>, String>,
    max_alias_len: usize,
}

impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.entities == other.entities
            && self.packages == other.packages
            && self.rules == other.rules
            && self.vocabulary == other.vocabulary
            && self.extra_vocabulary == other.extra_vocabulary
    }
}

fn schema_err(path: impl Into<String>, message: impl Into<String>) -> KgError {
    KgError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

/// Normalized token texts of a phrase, after quantity fusion.
pub(crate) fn phrase_tokens(phrase: &str, lexicon: &LexiconConfig) -> Vec<String> {
    analyze(phrase, lexicon).into_iter().map(|t| t.normalized).collect()
}

fn derive_vocabulary<'a>(
    entities: impl Iterator<Item = &'a KgEntity>,
    extra: &BTreeSet<String>,
    lexicon: &LexiconConfig,
) -> BTreeSet<String> {
    let mut vocab = BTreeSet::new();
    vocab.insert(NUM_CONSTANT.to_string());
    for entity in entities {
        let texts = entity.aliases.iter().chain(std::iter::once(&entity.description));
        for text in texts {
            for tok in analyze(text, lexicon) {
                if tok.kind != TokenKind::Punctuation {
                    vocab.insert(number_constant_view(&tok).to_string());
                }
            }
        }
    }
    vocab.extend(extra.iter().cloned());
    vocab
}

impl KnowledgeGraph {
    /// Parse and validate a graph document. Word-level data (vocabulary and
    /// the alias index) is derived with `lexicon`.
    pub fn from_json(document: &[u8], lexicon: &LexiconConfig) -> Result<Self, KgError> {
        let text = std::str::from_utf8(document).map_err(|e| schema_err(".", e.to_string()))?;
        let mut de = serde_json::Deserializer::from_str(text);
        let doc: KgDocument = serde_path_to_error::deserialize(&mut de)
            .map_err(|e| schema_err(e.path().to_string(), e.inner().to_string()))?;
        de.end().map_err(|e| schema_err(".", e.to_string()))?;
        Self::from_document(doc, lexicon)
    }

    fn from_document(doc: KgDocument, lexicon: &LexiconConfig) -> Result<Self, KgError> {
        let mut entities = BTreeMap::new();
        for (i, entity) in doc.entities.into_iter().enumerate() {
            let path = format!("entities[{i}]");
            if entity.id.is_empty() || entity.id.chars().any(char::is_lowercase) {
                return Err(schema_err(format!("{path}.id"), "id must be non-empty uppercase"));
            }
            if entity.entity_type.is_empty() {
                return Err(schema_err(format!("{path}.type"), "type must be non-empty"));
            }
            if let Some(j) = entity.aliases.iter().position(|a| a.trim().is_empty()) {
                return Err(schema_err(format!("{path}.aliases[{j}]"), "alias must be non-empty"));
            }
            if entities.contains_key(&entity.id) {
                return Err(KgError::DuplicateId {
                    path: format!("{path}.id"),
                    id: entity.id,
                });
            }
            entities.insert(entity.id.clone(), entity);
        }

        let mut packages = BTreeMap::new();
        for (i, record) in doc.packages.into_iter().enumerate() {
            let path = format!("packages[{i}]");
            if record.id.is_empty() {
                return Err(schema_err(format!("{path}.id"), "id must be non-empty"));
            }
            if record.members.is_empty() {
                return Err(schema_err(format!("{path}.members"), "members must be non-empty"));
            }
            for (j, member) in record.members.iter().enumerate() {
                if !entities.contains_key(member) {
                    return Err(KgError::DanglingReference {
                        path: format!("{path}.members[{j}]"),
                        id: member.clone(),
                    });
                }
            }
            if packages.contains_key(&record.id) || entities.contains_key(&record.id) {
                return Err(KgError::DuplicateId {
                    path: format!("{path}.id"),
                    id: record.id,
                });
            }
            packages.insert(
                record.id.clone(),
                KgPackage {
                    id: record.id,
                    display_name: record.name,
                    members: record.members.into_iter().collect(),
                },
            );
        }

        let mut rules = Vec::with_capacity(doc.patterns.len());
        let mut priorities = BTreeSet::new();
        let mut names = BTreeSet::new();
        for (i, rule) in doc.patterns.into_iter().enumerate() {
            let path = format!("patterns[{i}]");
            if !priorities.insert(rule.priority) {
                return Err(KgError::DuplicatePriority {
                    path: format!("{path}.priority"),
                    priority: rule.priority,
                });
            }
            if !names.insert(rule.name.clone()) {
                return Err(KgError::DuplicateId {
                    path: format!("{path}.name"),
                    id: rule.name,
                });
            }
            let compiled = CompiledRule::compile(rule).map_err(|e| KgError::PatternCompile {
                path: format!("{path}.expression"),
                message: e.to_string(),
            })?;
            rules.push(compiled);
        }
        rules.sort_by_key(|r| r.rule.priority);

        let extra_vocabulary: BTreeSet<String> = doc.extra_vocabulary.into_iter().collect();
        Ok(Self::assemble(entities, packages, rules, extra_vocabulary, lexicon))
    }

    fn assemble(
        entities: BTreeMap<String, KgEntity>,
        packages: BTreeMap<String, KgPackage>,
        rules: Vec<CompiledRule>,
        extra_vocabulary: BTreeSet<String>,
        lexicon: &LexiconConfig,
    ) -> Self {
        let vocabulary = derive_vocabulary(entities.values(), &extra_vocabulary, lexicon);
        let mut alias_index: HashMap<Vec<String>, String> = HashMap::new();
        // BTreeMap iteration is id-ascending, so the first insert is the smallest id.
        for entity in entities.values() {
            for alias in &entity.aliases {
                let key = phrase_tokens(alias, lexicon);
                if !key.is_empty() {
                    alias_index.entry(key).or_insert_with(|| entity.id.clone());
                }
            }
        }
        let max_alias_len = alias_index.keys().map(Vec::len).max().unwrap_or(0);
        Self {
            entities,
            packages,
            rules,
            vocabulary,
            extra_vocabulary,
            alias_index,
            max_alias_len,
        }
    }

    fn to_document(&self) -> KgDocument {
        KgDocument {
            entities: self.entities.values().cloned().collect(),
            packages: self
                .packages
                .values()
                .map(|p| PackageRecord {
                    id: p.id.clone(),
                    name: p.display_name.clone(),
                    members: p.members.iter().cloned().collect(),
                })
                .collect(),
            patterns: self.rules.iter().map(|r| r.rule.clone()).collect(),
            extra_vocabulary: self.extra_vocabulary.iter().cloned().collect(),
        }
    }

    /// Serialize back to the document schema accepted by [`Self::from_json`].
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document serializes")
    }

    pub fn entities(&self) -> impl Iterator<Item = &KgEntity> {
        self.entities.values()
    }

    pub fn entity(&self, id: &str) -> Option<&KgEntity> {
        self.entities.get(id)
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn packages(&self) -> impl Iterator<Item = &KgPackage> {
        self.packages.values()
    }

    pub fn package(&self, id: &str) -> Option<&KgPackage> {
        self.packages.get(id)
    }

    /// Rules in ascending priority order.
    pub fn rules(&self) -> &[CompiledRule] {
        &self.rules
    }

    pub fn vocabulary(&self) -> &BTreeSet<String> {
        &self.vocabulary
    }

    pub fn extra_vocabulary(&self) -> &BTreeSet<String> {
        &self.extra_vocabulary
    }

    pub fn entity_types(&self) -> BTreeSet<&str> {
        self.entities.values().map(|e| e.entity_type.as_str()).collect()
    }

    pub(crate) fn alias_lookup(&self, tokens: &[String]) -> Option<&str> {
        self.alias_index.get(tokens).map(String::as_str)
    }

    pub(crate) fn max_alias_len(&self) -> usize {
        self.max_alias_len
    }

    /// A copy of this graph with more authored vocabulary.
    pub fn with_extra_vocabulary(
        &self,
        words: impl IntoIterator<Item = String>,
        lexicon: &LexiconConfig,
    ) -> Self {
        let mut extra = self.extra_vocabulary.clone();
        extra.extend(words);
        Self::assemble(
            self.entities.clone(),
            self.packages.clone(),
            self.rules.clone(),
            extra,
            lexicon,
        )
    }

    fn check_known<'a>(&self, required: impl IntoIterator<Item = &'a String>) -> Result<(), KgError> {
        for id in required {
            if !self.entities.contains_key(id) {
                return Err(KgError::UnknownEntity(id.clone()));
            }
        }
        Ok(())
    }

    /// Every package whose members include all of `required`, by id.
    pub fn packages_containing_all(&self, required: &BTreeSet<String>) -> Result<Vec<&KgPackage>, KgError> {
        self.check_known(required)?;
        Ok(self
            .packages
            .values()
            .filter(|p| required.is_subset(&p.members))
            .collect())
    }

    /// Partial-coverage rows for every package, best coverage first.
    pub fn coverage_report(&self, required: &BTreeSet<String>) -> Result<Vec<CoverageRow>, KgError> {
        self.check_known(required)?;
        let mut rows: Vec<CoverageRow> = self
            .packages
            .values()
            .map(|p| {
                let missing: Vec<String> = required.difference(&p.members).cloned().collect();
                CoverageRow {
                    package_id: p.id.clone(),
                    matched: required.len() - missing.len(),
                    missing,
                }
            })
            .collect();
        rows.sort_by(|a, b| b.matched.cmp(&a.matched).then_with(|| a.package_id.cmp(&b.package_id)));
        Ok(rows)
    }

    /// Run the quality checks. Findings are data, not errors.
    pub fn validate(&self, lexicon: &LexiconConfig) -> ValidationReport {
        let mut findings = Vec::new();

        let mut by_alias: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for entity in self.entities.values() {
            for alias in &entity.aliases {
                by_alias
                    .entry(phrase_tokens(alias, lexicon).join(" "))
                    .or_default()
                    .insert(entity.id.clone());
            }
        }
        for (alias, ids) in by_alias {
            if ids.len() > 1 {
                findings.push(Finding::AliasCollision {
                    alias,
                    entity_ids: ids.into_iter().collect(),
                });
            }
        }

        let reachable: BTreeSet<&String> = self.packages.values().flat_map(|p| p.members.iter()).collect();
        for id in self.entities.keys() {
            if !reachable.contains(id) {
                findings.push(Finding::UnreachableEntity { entity_id: id.clone() });
            }
        }

        for entity in self.entities.values() {
            let has_terms = analyze(&entity.description, lexicon)
                .iter()
                .any(|t| t.kind != TokenKind::Punctuation);
            if !has_terms {
                findings.push(Finding::EmptyDescription {
                    entity_id: entity.id.clone(),
                });
            }
        }

        let expected = derive_vocabulary(self.entities.values(), &self.extra_vocabulary, lexicon);
        if expected != self.vocabulary {
            findings.push(Finding::VocabularyDrift {
                missing: expected.difference(&self.vocabulary).cloned().collect(),
                unexpected: self.vocabulary.difference(&expected).cloned().collect(),
            });
        }

        ValidationReport { findings }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub package_id: String,
    pub matched: usize,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Finding {
    AliasCollision { alias: String, entity_ids: Vec<String> },
    UnreachableEntity { entity_id: String },
    VocabularyDrift { missing: Vec<String>, unexpected: Vec<String> },
    EmptyDescription { entity_id: String },
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Finding::AliasCollision { alias, entity_ids } => {
                write!(f, "alias collision: {alias:?} maps to {}", entity_ids.join(", "))
            }
            Finding::UnreachableEntity { entity_id } => {
                write!(f, "unreachable entity: {entity_id} belongs to no package")
            }
            Finding::VocabularyDrift { missing, unexpected } => write!(
                f,
                "vocabulary drift: missing [{}], unexpected [{}]",
                missing.join(", "),
                unexpected.join(", ")
            ),
            Finding::EmptyDescription { entity_id } => {
                write!(f, "empty description: {entity_id} has no descriptive terms")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }
}
