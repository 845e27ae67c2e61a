//! Similarity primitives consumed by the matcher: node-pair similarity,
//! whole-image similarity, and relation-label similarity.

use thiserror::Error;

use crate::model::{Embedding, GraphNode, RelationTable, SceneGraph};

/// Similarity assumed between two distinct labels the table does not know.
pub const UNKNOWN_RELATION_SIMILARITY: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
}

/// Cosine similarity of two embeddings, clamped to [0, 1].
pub fn clip_score(a: &Embedding, b: &Embedding) -> Result<f64, ProviderError> {
    cosine01(a.as_slice(), b.as_slice())
}

pub(crate) fn cosine01(a: &[f64], b: &[f64]) -> Result<f64, ProviderError> {
    if a.len() != b.len() {
        return Err(ProviderError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    // Scaling by the largest magnitude keeps the sums clear of overflow
    // and underflow.
    let peak = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (sa, sb) = (peak(a), peak(b));
    if sa == 0.0 || sb == 0.0 {
        return Err(ProviderError::ZeroVector);
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (x, y) = (x / sa, y / sb);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    let cos = dot / (na.sqrt() * nb.sqrt());
    Ok(cos.clamp(0.0, 1.0))
}

/// Table lookup with fallbacks for labels outside the table: identical
/// strings score 1, distinct strings score [`UNKNOWN_RELATION_SIMILARITY`].
pub fn relation_similarity(r1: &str, r2: &str, table: &RelationTable) -> f64 {
    match table.get(r1, r2) {
        Some(v) => v,
        None if r1 == r2 => 1.0,
        None => UNKNOWN_RELATION_SIMILARITY,
    }
}

/// Source of every similarity the matcher needs. Implementations must be
/// deterministic and emit values in [0, 1].
pub trait SimilarityProvider: Sync {
    fn node_similarity(&self, u: &GraphNode, v: &GraphNode) -> Result<f64, ProviderError>;

    fn image_similarity(&self, g1: &SceneGraph, g2: &SceneGraph) -> Result<f64, ProviderError>;

    fn relation_similarity(&self, r1: &str, r2: &str) -> f64;
}

/// Provider backed by the embeddings stored in the graphs and a relation table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingProvider {
    relations: RelationTable,
}

impl EmbeddingProvider {
    pub fn new(relations: RelationTable) -> Self {
        Self { relations }
    }

    pub fn relations(&self) -> &RelationTable {
        &self.relations
    }
}

impl Default for EmbeddingProvider {
    fn default() -> Self {
        Self::new(RelationTable::empty())
    }
}

impl SimilarityProvider for EmbeddingProvider {
    fn node_similarity(&self, u: &GraphNode, v: &GraphNode) -> Result<f64, ProviderError> {
        clip_score(&u.embedding, &v.embedding)
    }

    fn image_similarity(&self, g1: &SceneGraph, g2: &SceneGraph) -> Result<f64, ProviderError> {
        clip_score(&g1.image_embedding, &g2.image_embedding)
    }

    fn relation_similarity(&self, r1: &str, r2: &str) -> f64 {
        relation_similarity(r1, r2, &self.relations)
    }
}
