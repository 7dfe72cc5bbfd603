//! The bundled gaming-computer graph and English lexicon.

use std::sync::Arc;

use crate::kg::KnowledgeGraph;
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::text::LexiconConfig;

pub const KG_JSON: &str = include_str!("../fixtures/kg.json");
pub const LEXICON_JSON: &str = include_str!("../fixtures/lexicon_en.json");

pub fn lexicon() -> LexiconConfig {
    LexiconConfig::english()
}

pub fn knowledge_graph() -> KnowledgeGraph {
    KnowledgeGraph::from_json(KG_JSON.as_bytes(), &lexicon()).expect("bundled graph is valid")
}

pub fn pipeline(config: PipelineConfig) -> Pipeline {
    Pipeline::new(Arc::new(knowledge_graph()), Arc::new(lexicon()), config).expect("bundled graph validates")
}
