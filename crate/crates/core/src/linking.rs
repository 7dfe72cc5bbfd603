//! TF-IDF vectorization and cosine-similarity disambiguation.
//!
//! Documents are entity descriptions. Terms are word lemmas plus the literal
//! text of numbers and quantities, so "512gb" and "1tb" stay distinct here even
//! though the OOV check treats them alike. Weights use smoothed idf,
//! `ln((1 + N) / (1 + df)) + 1`, with raw term counts, and every document
//! vector is L2-normalized.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::SubSentence;
use crate::kg::KnowledgeGraph;
use crate::text::{analyze, LexiconConfig, Token, TokenKind};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinkError {
    #[error("cannot fit a vectorizer on a graph without entities")]
    EmptyCorpus,
}

/// Sparse vector keyed by vocabulary dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector(BTreeMap<usize, f64>);

impl SparseVector {
    pub fn from_entries(entries: impl IntoIterator<Item = (usize, f64)>) -> Self {
        Self(entries.into_iter().filter(|(_, w)| *w != 0.0).collect())
    }

    pub fn get(&self, dim: usize) -> f64 {
        self.0.get(&dim).copied().unwrap_or(0.0)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.0.iter().map(|(&d, &w)| (d, w))
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.values().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (small, large) = if self.0.len() <= other.0.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.0.iter().map(|(d, w)| w * large.get(*d)).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_entries(self.entries().map(|(d, w)| (d, w * factor)))
    }

    fn normalized(self) -> Self {
        let norm = self.norm();
        if norm == 0.0 {
            return Self::default();
        }
        Self(self.0.into_iter().map(|(d, w)| (d, w / norm)).collect())
    }
}

pub fn cosine(a: &SparseVector, b: &SparseVector) -> f64 {
    let denom = a.norm() * b.norm();
    if denom == 0.0 {
        return 0.0;
    }
    (a.dot(b) / denom).clamp(-1.0, 1.0)
}

/// The vectorizer term for a token, if it has one.
pub fn term_of(token: &Token) -> Option<&str> {
    match token.kind {
        TokenKind::Word => Some(&token.lemma),
        TokenKind::Number | TokenKind::Quantity => Some(&token.normalized),
        TokenKind::Punctuation => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vectorizer {
    vocabulary_index: BTreeMap<String, usize>,
    idf: Vec<f64>,
    document_vectors: BTreeMap<String, SparseVector>,
    entity_types: BTreeMap<String, String>,
}

impl Vectorizer {
    pub fn fit(kg: &KnowledgeGraph, lexicon: &LexiconConfig) -> Result<Self, LinkError> {
        if kg.entity_count() == 0 {
            return Err(LinkError::EmptyCorpus);
        }
        let docs: Vec<(String, Vec<Token>)> = kg
            .entities()
            .map(|e| (e.id.clone(), analyze(&e.description, lexicon)))
            .collect();

        let mut vocabulary_index = BTreeMap::new();
        let mut df: Vec<usize> = Vec::new();
        for (_, tokens) in &docs {
            let mut seen = std::collections::BTreeSet::new();
            for term in tokens.iter().filter_map(term_of) {
                let next = vocabulary_index.len();
                let dim = *vocabulary_index.entry(term.to_string()).or_insert(next);
                if dim == df.len() {
                    df.push(0);
                }
                if seen.insert(dim) {
                    df[dim] += 1;
                }
            }
        }
        let n = docs.len() as f64;
        let idf: Vec<f64> = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();

        let mut v = Self {
            vocabulary_index,
            idf,
            document_vectors: BTreeMap::new(),
            entity_types: kg.entities().map(|e| (e.id.clone(), e.entity_type.clone())).collect(),
        };
        let document_vectors = docs
            .iter()
            .map(|(id, tokens)| (id.clone(), v.vectorize(tokens.iter())))
            .collect();
        v.document_vectors = document_vectors;
        Ok(v)
    }

    pub fn dimension(&self, term: &str) -> Option<usize> {
        self.vocabulary_index.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.dimension(term).map(|d| self.idf[d])
    }

    pub fn document_vector(&self, entity_id: &str) -> Option<&SparseVector> {
        self.document_vectors.get(entity_id)
    }

    /// TF-IDF vector for the given tokens, L2-normalized. Unknown terms are
    /// ignored; if nothing is known the zero vector comes back.
    pub fn vectorize<'a>(&self, tokens: impl IntoIterator<Item = &'a Token>) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for term in tokens.into_iter().filter_map(term_of) {
            if let Some(dim) = self.dimension(term) {
                *counts.entry(dim).or_default() += 1.0;
            }
        }
        SparseVector::from_entries(counts.into_iter().map(|(d, tf)| (d, tf * self.idf[d]))).normalized()
    }

    /// Score every entity (optionally of one type) against `query`; top `k`
    /// by score descending, ties by entity id.
    pub fn rank(
        &self,
        query: &SparseVector,
        entity_type: Option<&str>,
        k: usize,
        subsentence_index: usize,
    ) -> Vec<Candidate> {
        let mut scored: Vec<Candidate> = self
            .document_vectors
            .iter()
            .filter(|(id, _)| entity_type.is_none_or(|t| self.entity_types.get(*id).map(String::as_str) == Some(t)))
            .map(|(id, doc)| Candidate {
                entity_id: id.clone(),
                score: cosine(query, doc),
                subsentence_index,
            })
            .collect();
        scored.sort_by(|a, b| {
            rank_key(b.score)
                .cmp(&rank_key(a.score))
                .then_with(|| a.entity_id.cmp(&b.entity_id))
        });
        scored.truncate(k);
        scored
    }
}

/// Scores equal up to rounding noise must tie, otherwise rescaling a query
/// could reorder mathematically equal candidates.
const RANK_RESOLUTION: f64 = 1e12;

fn rank_key(score: f64) -> i64 {
    (score * RANK_RESOLUTION).round() as i64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub threshold: f64,
    pub max_candidates: usize,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            threshold: 0.25,
            max_candidates: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub entity_id: String,
    pub score: f64,
    pub subsentence_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedEntity {
    pub entity_id: String,
    pub score: f64,
    pub subsentence_index: usize,
}

/// Rank same-type entities against one sub-sentence and pick the best one
/// that clears the threshold.
pub fn disambiguate(
    sub: &SubSentence,
    subsentence_index: usize,
    tokens: &[Token],
    vectorizer: &Vectorizer,
    params: LinkParams,
) -> (Vec<Candidate>, Option<LinkedEntity>) {
    let query = vectorizer.vectorize(sub.token_indices().into_iter().map(|i| &tokens[i]));
    let candidates = vectorizer.rank(
        &query,
        Some(&sub.anchor.entity_type),
        params.max_candidates.max(1),
        subsentence_index,
    );
    let best = candidates
        .first()
        .filter(|c| c.score >= params.threshold)
        .map(|c| LinkedEntity {
            entity_id: c.entity_id.clone(),
            score: c.score,
            subsentence_index,
        });
    (candidates, best)
}
