//! End-to-end orchestration: analyze, extract, filter, build context, link,
//! assemble.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assembler::{assemble, AssembleError, AssemblyResult};
use crate::context::{build_subsentences, SubSentence};
use crate::extraction::{extract_entities, filter_oov, EntitySpan, OovRejection};
use crate::interaction::{InteractionLog, InteractionRecord};
use crate::kg::{KgError, KnowledgeGraph, ValidationReport};
use crate::linking::{disambiguate, Candidate, LinkError, LinkParams, LinkedEntity, Vectorizer};
use crate::text::{analyze, LexiconConfig, LexiconError, Token};

/// Request guard, in characters.
pub const MAX_INPUT_CHARS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Load,
    Tokenize,
    Extract,
    Oov,
    Context,
    Link,
    Assemble,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Load => "load",
            Stage::Tokenize => "tokenize",
            Stage::Extract => "extract",
            Stage::Oov => "oov",
            Stage::Context => "context",
            Stage::Link => "link",
            Stage::Assemble => "assemble",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input is {chars} characters long; the limit is {max}")]
    InputTooLong { chars: usize, max: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("[load] lexicon: {0}")]
    Lexicon(#[from] LexiconError),
    #[error("[load] knowledge graph: {0}")]
    Graph(#[from] KgError),
    #[error("[load] knowledge graph failed validation with {} finding(s)", .0.findings.len())]
    GraphFindings(ValidationReport),
    #[error("[{stage}] {message}")]
    Stage { stage: Stage, message: String },
}

impl PipelineError {
    pub fn is_input_error(&self) -> bool {
        matches!(self, PipelineError::InputTooLong { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub threshold: f64,
    pub max_candidates: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let p = LinkParams::default();
        Self {
            threshold: p.threshold,
            max_candidates: p.max_candidates,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(PipelineError::InvalidConfig(format!(
                "threshold {} is outside [0, 1]",
                self.threshold
            )));
        }
        if self.max_candidates == 0 {
            return Err(PipelineError::InvalidConfig("k must be at least 1".into()));
        }
        Ok(())
    }

    fn link_params(&self) -> LinkParams {
        LinkParams {
            threshold: self.threshold,
            max_candidates: self.max_candidates,
        }
    }
}

/// Marker-or-result for the last stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Assembly {
    Assembled(AssemblyResult),
    EmptyLinkSet,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings(pub BTreeMap<String, Duration>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub input_text: String,
    pub tokens: Vec<Token>,
    pub entity_spans: Vec<EntitySpan>,
    pub oov_rejections: Vec<OovRejection>,
    pub subsentences: Vec<SubSentence>,
    pub candidates: Vec<Candidate>,
    pub linked_entities: Vec<LinkedEntity>,
    pub assembly: Assembly,
    pub diagnostics: Vec<String>,
    /// Wall-clock time per stage. Not serialized, so identical requests
    /// render identical JSON.
    #[serde(skip)]
    pub timings: Timings,
}

impl PipelineResult {
    fn empty(text: &str, tokens: Vec<Token>) -> Self {
        Self {
            input_text: text.to_string(),
            tokens,
            entity_spans: Vec::new(),
            oov_rejections: Vec::new(),
            subsentences: Vec::new(),
            candidates: Vec::new(),
            linked_entities: Vec::new(),
            assembly: Assembly::EmptyLinkSet,
            diagnostics: Vec::new(),
            timings: Timings::default(),
        }
    }

    pub fn matched_package_ids(&self) -> Vec<&str> {
        match &self.assembly {
            Assembly::Assembled(a) => a.matched_packages.iter().map(|p| p.id.as_str()).collect(),
            Assembly::EmptyLinkSet => Vec::new(),
        }
    }

    /// Check that every cross-stage index resolves.
    pub fn check_consistency(&self) -> Result<(), String> {
        let n = self.tokens.len();
        let in_tokens = |r: &crate::extraction::TokenRange| r.start < r.end && r.end <= n;
        for (i, s) in self.entity_spans.iter().enumerate() {
            if !in_tokens(&s.token_range) {
                return Err(format!("entity span {i} is out of token range"));
            }
        }
        for w in self.entity_spans.windows(2) {
            if w[0].token_range.overlaps(&w[1].token_range) {
                return Err("entity spans overlap".into());
            }
        }
        for r in &self.oov_rejections {
            if !self.entity_spans.iter().any(|s| s.token_range == r.token_range) {
                return Err(format!("OOV rejection {:?} has no entity span", r.token_range));
            }
        }
        for (i, sub) in self.subsentences.iter().enumerate() {
            if !self.entity_spans.contains(&sub.anchor) {
                return Err(format!("sub-sentence {i} anchor is not an entity span"));
            }
            if sub.context_token_indices.iter().any(|&t| t >= n) {
                return Err(format!("sub-sentence {i} context is out of token range"));
            }
            if sub.rendered.is_empty() {
                return Err(format!("sub-sentence {i} is empty"));
            }
        }
        for c in &self.candidates {
            if c.subsentence_index >= self.subsentences.len() {
                return Err(format!("candidate {} references a missing sub-sentence", c.entity_id));
            }
        }
        for l in &self.linked_entities {
            let backed = self
                .candidates
                .iter()
                .any(|c| c.subsentence_index == l.subsentence_index && c.entity_id == l.entity_id);
            if !backed {
                return Err(format!("link {} is not among its candidates", l.entity_id));
            }
        }
        match (&self.assembly, self.linked_entities.is_empty()) {
            (Assembly::EmptyLinkSet, false) => Err("links present but assembly is empty".into()),
            (Assembly::Assembled(_), true) => Err("assembly without links".into()),
            _ => Ok(()),
        }
    }
}

/// Pretty JSON with a trailing newline. Every output surface renders results
/// through this function.
pub fn render_json(result: &PipelineResult) -> String {
    let mut out = serde_json::to_string_pretty(result).expect("result serializes");
    out.push('\n');
    out
}

/// A fitted, immutable pipeline over one graph and lexicon.
#[derive(Debug, Clone)]
pub struct Pipeline {
    kg: Arc<KnowledgeGraph>,
    lexicon: Arc<LexiconConfig>,
    vectorizer: Vectorizer,
    config: PipelineConfig,
}

impl Pipeline {
    /// Validate the graph and fit the vectorizer. Graphs with validation
    /// findings are refused.
    pub fn new(
        kg: Arc<KnowledgeGraph>,
        lexicon: Arc<LexiconConfig>,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        config.validate()?;
        let report = kg.validate(&lexicon);
        if !report.is_empty() {
            return Err(PipelineError::GraphFindings(report));
        }
        let vectorizer = Vectorizer::fit(&kg, &lexicon).map_err(|e: LinkError| PipelineError::Stage {
            stage: Stage::Link,
            message: e.to_string(),
        })?;
        Ok(Self {
            kg,
            lexicon,
            vectorizer,
            config,
        })
    }

    /// Parse both documents and build a pipeline.
    pub fn from_documents(
        kg_document: &[u8],
        lexicon_document: Option<&[u8]>,
        config: PipelineConfig,
    ) -> Result<Self, PipelineError> {
        let lexicon = match lexicon_document {
            Some(doc) => LexiconConfig::from_json(doc)?,
            None => LexiconConfig::english(),
        };
        let kg = KnowledgeGraph::from_json(kg_document, &lexicon)?;
        Self::new(Arc::new(kg), Arc::new(lexicon), config)
    }

    pub fn knowledge_graph(&self) -> &KnowledgeGraph {
        &self.kg
    }

    pub fn lexicon(&self) -> &LexiconConfig {
        &self.lexicon
    }

    pub fn vectorizer(&self) -> &Vectorizer {
        &self.vectorizer
    }

    pub fn config(&self) -> PipelineConfig {
        self.config
    }

    pub fn run(&self, text: &str) -> Result<PipelineResult, PipelineError> {
        let chars = text.chars().count();
        if chars > MAX_INPUT_CHARS {
            return Err(PipelineError::InputTooLong {
                chars,
                max: MAX_INPUT_CHARS,
            });
        }
        let mut timings = Timings::default();
        let mut clock = Instant::now();
        let mut lap = |timings: &mut Timings, stage: Stage| {
            let now = Instant::now();
            timings.0.insert(stage.to_string(), now - clock);
            clock = now;
        };

        let tokens = analyze(text, &self.lexicon);
        lap(&mut timings, Stage::Tokenize);

        let spans = extract_entities(&tokens, &self.kg);
        lap(&mut timings, Stage::Extract);
        if spans.is_empty() {
            let mut result = PipelineResult::empty(text, tokens);
            result.timings = timings;
            return Ok(result);
        }

        let (kept, oov_rejections) = filter_oov(spans.clone(), &tokens, &self.kg);
        lap(&mut timings, Stage::Oov);

        let subsentences = build_subsentences(&tokens, &kept, &self.lexicon);
        lap(&mut timings, Stage::Context);

        let mut candidates = Vec::new();
        let mut linked_entities = Vec::new();
        for (i, sub) in subsentences.iter().enumerate() {
            let (found, best) = disambiguate(sub, i, &tokens, &self.vectorizer, self.config.link_params());
            candidates.extend(found);
            linked_entities.extend(best);
        }
        lap(&mut timings, Stage::Link);

        let mut diagnostics = Vec::new();
        for (i, sub) in subsentences.iter().enumerate() {
            if !linked_entities.iter().any(|l| l.subsentence_index == i) {
                diagnostics.push(format!(
                    "sub-sentence {i} ({:?}) linked no entity at threshold {}",
                    sub.rendered, self.config.threshold
                ));
            }
        }
        diagnostics.extend(same_type_conflicts(&self.kg, &linked_entities));

        let assembly = match assemble(&self.kg, &linked_entities) {
            Ok(result) => Assembly::Assembled(result),
            Err(AssembleError::EmptyLinkSet) => Assembly::EmptyLinkSet,
            Err(AssembleError::Graph(e)) => {
                return Err(PipelineError::Stage {
                    stage: Stage::Assemble,
                    message: e.to_string(),
                })
            }
        };
        lap(&mut timings, Stage::Assemble);

        Ok(PipelineResult {
            input_text: text.to_string(),
            tokens,
            entity_spans: spans,
            oov_rejections,
            subsentences,
            candidates,
            linked_entities,
            assembly,
            diagnostics,
            timings,
        })
    }

    /// Run and append an interaction record. A logging failure never fails
    /// the request; it is reported in the result's diagnostics.
    pub fn run_logged(&self, text: &str, log: Option<&InteractionLog>) -> Result<PipelineResult, PipelineError> {
        let mut result = self.run(text)?;
        if let Some(log) = log {
            if let Err(e) = log.append(&InteractionRecord::from_result(&result)) {
                result.diagnostics.push(e.to_string());
            }
        }
        Ok(result)
    }
}

/// Distinct linked entities that share an entity type.
fn same_type_conflicts(kg: &KnowledgeGraph, linked: &[LinkedEntity]) -> Vec<String> {
    let mut by_type: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for l in linked {
        if let Some(entity) = kg.entity(&l.entity_id) {
            let ids = by_type.entry(entity.entity_type.as_str()).or_default();
            if !ids.contains(&l.entity_id.as_str()) {
                ids.push(&l.entity_id);
            }
        }
    }
    by_type
        .into_iter()
        .filter(|(_, ids)| ids.len() > 1)
        .map(|(ty, ids)| format!("conflicting {ty} entities linked: {}", ids.join(", ")))
        .collect()
}
