//! Scene-graph matching: the initial node similarity matrix, neighbor
//! propagation sweeps, the importance-weighted final assignment, and the
//! blend with the whole-image score.
//!
//! One propagation sweep replaces every entry at once:
//!
//! ```text
//! L'[u][v] = (1 - beta) * L[u][v] + beta * neighbor_score(u, v, L)
//! ```
//!
//! `neighbor_score` solves a small assignment between the neighbors of `u`
//! and those of `v`, scoring each candidate pair by
//! `alpha * L[u_k][v_l] + (1 - alpha) * R(r_1k, r_2l)` and dividing the
//! optimum by the larger neighbor count. Relation labels only compare when
//! both edges point the same way relative to `u` and `v`; opposite
//! orientations contribute zero relation similarity.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::assignment::{km_max_matching, km_max_value, Matching};
use crate::importance::{graph_importance, ImportanceDistribution, ImportanceError};
use crate::model::{
    validate_graph, HyperParams, MatchedPair, Matrix, Raster, SceneGraph, ScoreReport,
    SimilarityMatrix, Violation,
};
use crate::providers::{ProviderError, SimilarityProvider};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatchError {
    #[error("graph {which} is invalid: {}", render(.violations))]
    InvalidGraph { which: u8, violations: Vec<Violation> },
    #[error("graphs use different embedding dimensions: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("importance for graph {which} has {got} weights for {expected} nodes")]
    ImportanceSize { which: u8, got: usize, expected: usize },
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Importance(#[from] ImportanceError),
}

fn render(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Orientation {
    /// The center node is the subject of the edge.
    Outgoing,
    /// The center node is the object of the edge.
    Incoming,
}

/// Neighbor index plus every edge joining it to the center node.
type Neighborhood = Vec<(usize, Vec<(Orientation, String)>)>;

fn neighborhoods(g: &SceneGraph) -> Vec<Neighborhood> {
    let index: std::collections::HashMap<u64, usize> =
        g.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let mut maps: Vec<BTreeMap<usize, Vec<(Orientation, String)>>> =
        vec![BTreeMap::new(); g.nodes.len()];
    for e in &g.edges {
        let (Some(&s), Some(&o)) = (index.get(&e.subject), index.get(&e.object)) else {
            continue;
        };
        maps[s]
            .entry(o)
            .or_default()
            .push((Orientation::Outgoing, e.relation.clone()));
        maps[o]
            .entry(s)
            .or_default()
            .push((Orientation::Incoming, e.relation.clone()));
    }
    maps.into_iter().map(|m| m.into_iter().collect()).collect()
}

/// Everything one comparison needs, with adjacency precomputed.
pub struct MatchContext<'a> {
    pub g1: &'a SceneGraph,
    pub g2: &'a SceneGraph,
    pub provider: &'a dyn SimilarityProvider,
    pub params: HyperParams,
    pub imp1: ImportanceDistribution,
    pub imp2: ImportanceDistribution,
    n1: Vec<Neighborhood>,
    n2: Vec<Neighborhood>,
}

impl<'a> MatchContext<'a> {
    pub fn new(
        g1: &'a SceneGraph,
        g2: &'a SceneGraph,
        provider: &'a dyn SimilarityProvider,
        params: HyperParams,
        imp1: ImportanceDistribution,
        imp2: ImportanceDistribution,
    ) -> Result<Self, MatchError> {
        if g1.image_embedding.is_zero() || g2.image_embedding.is_zero() {
            return Err(ProviderError::ZeroVector.into());
        }
        let dim = g1.image_embedding.dim();
        let v1 = validate_graph(g1, Some(dim));
        if !v1.is_empty() {
            return Err(MatchError::InvalidGraph {
                which: 1,
                violations: v1,
            });
        }
        if g2.image_embedding.dim() != dim {
            return Err(MatchError::DimensionMismatch {
                left: dim,
                right: g2.image_embedding.dim(),
            });
        }
        let v2 = validate_graph(g2, Some(dim));
        if !v2.is_empty() {
            return Err(MatchError::InvalidGraph {
                which: 2,
                violations: v2,
            });
        }
        for (which, imp, g) in [(1, &imp1, g1), (2, &imp2, g2)] {
            if imp.len() != g.nodes.len() {
                return Err(MatchError::ImportanceSize {
                    which,
                    got: imp.len(),
                    expected: g.nodes.len(),
                });
            }
        }
        Ok(Self {
            n1: neighborhoods(g1),
            n2: neighborhoods(g2),
            g1,
            g2,
            provider,
            params,
            imp1,
            imp2,
        })
    }

    /// Relation term between the edge bundles `u -- u_k` and `v -- v_l`:
    /// the best same-orientation pairing, or zero if none exists.
    fn relation_term(&self, a: &[(Orientation, String)], b: &[(Orientation, String)]) -> f64 {
        let mut best = 0.0f64;
        for (oa, ra) in a {
            for (ob, rb) in b {
                if oa == ob {
                    best = best.max(self.provider.relation_similarity(ra, rb));
                }
            }
        }
        best
    }
}

pub fn initial_matrix(ctx: &MatchContext<'_>) -> Result<SimilarityMatrix, MatchError> {
    let (n, m) = (ctx.g1.nodes.len(), ctx.g2.nodes.len());
    let mut l = Matrix::zeros(n, m);
    for (i, u) in ctx.g1.nodes.iter().enumerate() {
        for (j, v) in ctx.g2.nodes.iter().enumerate() {
            l.set(i, j, ctx.provider.node_similarity(u, v)?);
        }
    }
    Ok(SimilarityMatrix::clamped(l))
}

/// Neighbor agreement of node `u` (index into g1) and `v` (index into g2)
/// under the current matrix `l`.
pub fn neighbor_score(u: usize, v: usize, l: &SimilarityMatrix, ctx: &MatchContext<'_>) -> f64 {
    let (nu, nv) = (&ctx.n1[u], &ctx.n2[v]);
    match (nu.is_empty(), nv.is_empty()) {
        (true, true) => return l.get(u, v),
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    let alpha = ctx.params.alpha;
    let local = Matrix::from_fn(nu.len(), nv.len(), |k, q| {
        let (uk, ref edges_u) = nu[k];
        let (vl, ref edges_v) = nv[q];
        alpha * l.get(uk, vl) + (1.0 - alpha) * ctx.relation_term(edges_u, edges_v)
    });
    let value = km_max_value(&local).expect("neighbor scores are finite and nonnegative");
    value / nu.len().max(nv.len()) as f64
}

fn sweep(l: &SimilarityMatrix, ctx: &MatchContext<'_>) -> SimilarityMatrix {
    let beta = ctx.params.beta;
    let next = Matrix::from_fn(l.rows(), l.cols(), |u, v| {
        (1.0 - beta) * l.get(u, v) + beta * neighbor_score(u, v, l, ctx)
    });
    SimilarityMatrix::clamped(next)
}

/// Runs `params.iterations` synchronous sweeps starting from `l0`.
pub fn iterate(l0: &SimilarityMatrix, ctx: &MatchContext<'_>) -> SimilarityMatrix {
    iterate_with_snapshots(l0, ctx, false).0
}

fn iterate_with_snapshots(
    l0: &SimilarityMatrix,
    ctx: &MatchContext<'_>,
    keep: bool,
) -> (SimilarityMatrix, Vec<SimilarityMatrix>) {
    let mut l = l0.clone();
    let mut snaps = Vec::new();
    for _ in 0..ctx.params.iterations {
        l = sweep(&l, ctx);
        if keep {
            snaps.push(l.clone());
        }
    }
    (l, snaps)
}

/// Best assignment of `l` where pair `(i, j)` counts with weight
/// `(imp1[i] + imp2[j]) / 2`.
pub fn weighted_matching_score(
    l: &SimilarityMatrix,
    imp1: &ImportanceDistribution,
    imp2: &ImportanceDistribution,
) -> (f64, Matching) {
    assert_eq!(l.rows(), imp1.len(), "importance 1 size");
    assert_eq!(l.cols(), imp2.len(), "importance 2 size");
    if l.is_empty() {
        return (
            0.0,
            Matching {
                pairs: Vec::new(),
                value: 0.0,
            },
        );
    }
    let (w1, w2) = (imp1.weights(), imp2.weights());
    let weighted = Matrix::from_fn(l.rows(), l.cols(), |i, j| {
        pair_weight(w1[i], w2[j]) * l.get(i, j)
    });
    let matching = km_max_matching(&weighted).expect("weighted scores are finite and nonnegative");
    (matching.value.clamp(0.0, 1.0), matching)
}

fn pair_weight(a: f64, b: f64) -> f64 {
    (a + b) / 2.0
}

/// Optional inputs for [`sess_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreOptions<'a> {
    /// Source raster of the first graph, for pixel-based importance.
    pub image1: Option<&'a Raster>,
    pub image2: Option<&'a Raster>,
    /// Keep the matrix after every sweep in the report.
    pub keep_snapshots: bool,
}

/// Semantic similarity of two scene graphs with importance taken from the
/// nodes' `raw_importance` (uniform when absent).
pub fn sess(
    g1: &SceneGraph,
    g2: &SceneGraph,
    provider: &dyn SimilarityProvider,
    params: &HyperParams,
) -> Result<ScoreReport, MatchError> {
    sess_with(g1, g2, provider, params, ScoreOptions::default())
}

pub fn sess_with(
    g1: &SceneGraph,
    g2: &SceneGraph,
    provider: &dyn SimilarityProvider,
    params: &HyperParams,
    opts: ScoreOptions<'_>,
) -> Result<ScoreReport, MatchError> {
    let imp1 = graph_importance(g1, opts.image1, params.k)?;
    let imp2 = graph_importance(g2, opts.image2, params.k)?;
    let ctx = MatchContext::new(g1, g2, provider, *params, imp1, imp2)?;
    score_context(&ctx, opts.keep_snapshots)
}

/// Scores a prepared context. Graph-level degenerate cases: two empty graphs
/// score the image similarity alone; one empty graph scores zero on the graph
/// term.
pub fn score_context(ctx: &MatchContext<'_>, keep_snapshots: bool) -> Result<ScoreReport, MatchError> {
    let image_score = ctx.provider.image_similarity(ctx.g1, ctx.g2)?;
    let gamma = ctx.params.gamma;
    let (n, m) = (ctx.g1.nodes.len(), ctx.g2.nodes.len());
    if n == 0 && m == 0 {
        return Ok(ScoreReport {
            sess: image_score,
            image_score,
            graph_score: image_score,
            matching: Vec::new(),
            snapshots: keep_snapshots.then(Vec::new),
            baselines: None,
        });
    }
    let l0 = initial_matrix(ctx)?;
    let (l, snaps) = iterate_with_snapshots(&l0, ctx, keep_snapshots);
    let (graph_score, matching) = weighted_matching_score(&l, &ctx.imp1, &ctx.imp2);
    let (w1, w2) = (ctx.imp1.weights(), ctx.imp2.weights());
    let matching = matching
        .pairs
        .iter()
        .map(|&(i, j)| MatchedPair {
            node1: ctx.g1.nodes[i].id,
            node2: ctx.g2.nodes[j].id,
            weight: pair_weight(w1[i], w2[j]),
            similarity: l.get(i, j),
        })
        .collect();
    let sess = ((1.0 - gamma) * graph_score + gamma * image_score).clamp(0.0, 1.0);
    Ok(ScoreReport {
        sess,
        image_score,
        graph_score,
        matching,
        snapshots: keep_snapshots.then_some(snaps),
        baselines: None,
    })
}
