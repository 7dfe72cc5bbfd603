//! Entity-linking search over a product knowledge graph.
//!
//! A free-text request is tokenized, entity mentions are extracted by pattern
//! rules and an alias gazetteer, out-of-domain mentions are rejected against
//! the graph's vocabulary, each remaining mention is widened into a
//! sub-sentence and linked to a graph entity by TF-IDF cosine similarity, and
//! finally the packages containing every linked entity are returned.
//!
//! ```
//! use isabel_core::{fixtures, PipelineConfig};
//!
//! let pipeline = fixtures::pipeline(PipelineConfig::default());
//! let result = pipeline
//!     .run("I want a computer with i5 processor, 512 GB of storage and 8GB of RAM memory")
//!     .unwrap();
//! assert_eq!(result.matched_package_ids(), ["GAMING_MEDIUM"]);
//! ```

pub mod assembler;
pub mod context;
pub mod extraction;
pub mod fixtures;
pub mod interaction;
pub mod kg;
pub mod linking;
pub mod pipeline;
pub mod text;

pub use assembler::{assemble, AssemblyResult, MatchedPackage};
pub use context::{build_subsentences, SubSentence};
pub use extraction::{extract_entities, extract_gazetteer, extract_pattern, filter_oov, EntitySpan, OovRejection};
pub use interaction::{Ack, InteractionLog, InteractionRecord, LogError};
pub use kg::{CoverageRow, Finding, KgError, KgEntity, KgPackage, KnowledgeGraph, PatternRule, ValidationReport};
pub use linking::{cosine, disambiguate, Candidate, LinkParams, LinkedEntity, SparseVector, Vectorizer};
pub use pipeline::{render_json, Assembly, Pipeline, PipelineConfig, PipelineError, PipelineResult, Stage};
pub use text::{analyze, fuse_quantities, lemmatize, normalize, number_constant_view, tokenize, LexiconConfig, Token, TokenKind};
