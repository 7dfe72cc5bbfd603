//! Find the packages that group every linked entity.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{CoverageRow, KgError, KnowledgeGraph};
use crate::linking::LinkedEntity;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssembleError {
    #[error("no understood entities to assemble")]
    EmptyLinkSet,
    #[error(transparent)]
    Graph(#[from] KgError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchedPackage {
    pub id: String,
    pub name: String,
    /// Every member, sorted by id, including ones the request never named.
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyResult {
    pub matched_packages: Vec<MatchedPackage>,
    pub required: Vec<String>,
    /// Coverage rows, filled only when nothing matched.
    pub diagnostics: Vec<CoverageRow>,
}

pub fn assemble(kg: &KnowledgeGraph, linked: &[LinkedEntity]) -> Result<AssemblyResult, AssembleError> {
    if linked.is_empty() {
        return Err(AssembleError::EmptyLinkSet);
    }
    let required: BTreeSet<String> = linked.iter().map(|l| l.entity_id.clone()).collect();
    let matched_packages: Vec<MatchedPackage> = kg
        .packages_containing_all(&required)?
        .into_iter()
        .map(|p| MatchedPackage {
            id: p.id.clone(),
            name: p.display_name.clone(),
            members: p.members.iter().cloned().collect(),
        })
        .collect();
    let diagnostics = if matched_packages.is_empty() {
        kg.coverage_report(&required)?
    } else {
        Vec::new()
    };
    Ok(AssemblyResult {
        matched_packages,
        required: required.into_iter().collect(),
        diagnostics,
    })
}
