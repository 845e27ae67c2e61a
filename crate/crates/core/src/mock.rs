//! Deterministic stand-ins for the neural encoders, for desk-scale testing.
//!
//! A [`MockProvider`] owns a seeded relation table over the 56 PSG predicates
//! and a seeded embedding generator. It also builds random scene graphs and
//! progressively corrupted copies of them.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::model::{
    BBox, Embedding, GraphEdge, GraphNode, ImageMeta, Region, RelationTable, SceneGraph,
};
use crate::providers::{EmbeddingProvider, ProviderError, SimilarityProvider};

/// The 56 predicate classes of the Panoptic Scene Graph dataset.
pub const PSG_RELATIONS: [&str; 56] = [
    "over",
    "in front of",
    "beside",
    "on",
    "in",
    "attached to",
    "hanging from",
    "on back of",
    "falling off",
    "going down",
    "painted on",
    "walking on",
    "running on",
    "crossing",
    "standing on",
    "lying on",
    "sitting on",
    "flying over",
    "jumping over",
    "jumping from",
    "wearing",
    "holding",
    "carrying",
    "looking at",
    "guiding",
    "kissing",
    "eating",
    "drinking",
    "feeding",
    "biting",
    "catching",
    "picking",
    "playing with",
    "chasing",
    "climbing",
    "cleaning",
    "playing",
    "touching",
    "pushing",
    "pulling",
    "opening",
    "cooking",
    "talking to",
    "throwing",
    "slicing",
    "driving",
    "riding",
    "parked on",
    "driving on",
    "about to hit",
    "kicking",
    "swinging",
    "entering",
    "exiting",
    "enclosing",
    "leaning on",
];

const OBJECT_LABELS: [&str; 12] = [
    "person", "horse", "grass", "dog", "car", "tree", "table", "cup", "bicycle", "sky", "road",
    "bench",
];

const MOCK_IMAGE_SIZE: u32 = 64;

#[derive(Debug, Clone)]
pub struct MockProvider {
    seed: u64,
    dim: usize,
    inner: EmbeddingProvider,
}

/// Builds a seeded provider over `dimension`-wide embeddings.
///
/// Panics if `dimension < 2`.
pub fn mock_provider(seed: u64, dimension: usize) -> MockProvider {
    assert!(dimension >= 2, "mock embeddings need dimension >= 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = PSG_RELATIONS.len();
    let mut matrix = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = rng.random();
            matrix[i][j] = v;
            matrix[j][i] = v;
        }
    }
    let labels = PSG_RELATIONS.iter().map(|s| s.to_string()).collect();
    let table = RelationTable::new(labels, matrix).expect("symmetric unit-diagonal table");
    MockProvider {
        seed,
        dim: dimension,
        inner: EmbeddingProvider::new(table),
    }
}

fn random_embedding(rng: &mut impl Rng, dim: usize) -> Embedding {
    let normal = Normal::new(0.5, 1.0).expect("valid normal");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
        if v.iter().any(|x| *x != 0.0) {
            return Embedding::new(v).expect("finite samples");
        }
    }
}

impl MockProvider {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn relations(&self) -> &RelationTable {
        self.inner.relations()
    }

    /// Embedding determined by `(seed, token)`.
    pub fn embedding(&self, token: u64) -> Embedding {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(token);
        random_embedding(&mut rng, self.dim)
    }

    /// Random graph with `n_nodes` nodes; each unordered node pair is joined
    /// with probability `edge_prob`, occasionally by a second edge.
    pub fn random_graph(&self, rng: &mut impl Rng, n_nodes: usize, edge_prob: f64) -> SceneGraph {
        let nodes = (0..n_nodes)
            .map(|i| {
                let w = rng.random_range(1..=MOCK_IMAGE_SIZE / 2);
                let h = rng.random_range(1..=MOCK_IMAGE_SIZE / 2);
                let x = rng.random_range(0..=MOCK_IMAGE_SIZE - w);
                let y = rng.random_range(0..=MOCK_IMAGE_SIZE - h);
                GraphNode {
                    id: i as u64 + 1,
                    label: OBJECT_LABELS.choose(rng).expect("nonempty").to_string(),
                    region: Region::from_bbox(BBox::new(x, y, w, h)),
                    embedding: random_embedding(rng, self.dim),
                    raw_importance: Some(rng.random_range(0.5..50.0)),
                }
            })
            .collect::<Vec<_>>();
        let mut edges = Vec::new();
        for i in 0..n_nodes {
            for j in (i + 1)..n_nodes {
                if !rng.random_bool(edge_prob) {
                    continue;
                }
                let (a, b) = (nodes[i].id, nodes[j].id);
                let (s, o) = if rng.random_bool(0.5) { (a, b) } else { (b, a) };
                let rel = PSG_RELATIONS.choose(rng).expect("nonempty");
                edges.push(GraphEdge::new(s, o, *rel));
                if rng.random_bool(0.1) {
                    let rel = PSG_RELATIONS.choose(rng).expect("nonempty");
                    let (s, o) = if rng.random_bool(0.5) { (s, o) } else { (o, s) };
                    edges.push(GraphEdge::new(s, o, *rel));
                }
            }
        }
        SceneGraph {
            image: ImageMeta {
                width: MOCK_IMAGE_SIZE,
                height: MOCK_IMAGE_SIZE,
                source_id: format!("mock-{}", rng.random::<u32>()),
            },
            image_embedding: random_embedding(rng, self.dim),
            nodes,
            edges,
        }
    }

    /// Copy of `g` with `round(level * n)` nodes removed (with their edges)
    /// and every remaining embedding perturbed by Gaussian noise of relative
    /// scale `level`.
    pub fn corrupt(&self, g: &SceneGraph, level: f64, rng: &mut impl Rng) -> SceneGraph {
        let n = g.nodes.len();
        let drop = ((level * n as f64).round() as usize).min(n);
        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(rng);
        let mut keep = vec![true; n];
        for &i in &order[..drop] {
            keep[i] = false;
        }
        let perturb = |e: &Embedding, rng: &mut dyn rand::RngCore| -> Embedding {
            if level == 0.0 {
                return e.clone();
            }
            let scale = level * e.norm() / (e.dim() as f64).sqrt();
            let noise = Normal::new(0.0, scale).expect("finite scale");
            let v: Vec<f64> = e.as_slice().iter().map(|x| x + noise.sample(rng)).collect();
            Embedding::new(v).expect("finite")
        };
        let nodes: Vec<GraphNode> = g
            .nodes
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(node, _)| GraphNode {
                embedding: perturb(&node.embedding, rng),
                ..node.clone()
            })
            .collect();
        let kept: std::collections::HashSet<u64> = nodes.iter().map(|n| n.id).collect();
        let edges = g
            .edges
            .iter()
            .filter(|e| kept.contains(&e.subject) && kept.contains(&e.object))
            .cloned()
            .collect();
        SceneGraph {
            image: g.image.clone(),
            image_embedding: perturb(&g.image_embedding, rng),
            nodes,
            edges,
        }
    }
}

impl SimilarityProvider for MockProvider {
    fn node_similarity(&self, u: &GraphNode, v: &GraphNode) -> Result<f64, ProviderError> {
        self.inner.node_similarity(u, v)
    }

    fn image_similarity(&self, g1: &SceneGraph, g2: &SceneGraph) -> Result<f64, ProviderError> {
        self.inner.image_similarity(g1, g2)
    }

    fn relation_similarity(&self, r1: &str, r2: &str) -> f64 {
        self.inner.relation_similarity(r1, r2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_graph;
    use crate::providers::clip_score;

    fn probe(p: &MockProvider) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..50u64 {
            out.push(clip_score(&p.embedding(i), &p.embedding(i + 100)).unwrap());
            let a = PSG_RELATIONS[i as usize % 56];
            let b = PSG_RELATIONS[(i as usize * 7 + 3) % 56];
            out.push(p.relation_similarity(a, b));
        }
        out
    }

    #[test]
    fn same_seed_is_deterministic() {
        assert_eq!(probe(&mock_provider(11, 16)), probe(&mock_provider(11, 16)));
    }

    #[test]
    fn distinct_seeds_differ_on_probe() {
        let a = probe(&mock_provider(1, 16));
        let b = probe(&mock_provider(2, 16));
        assert_eq!(a.len(), 100);
        assert!(a.iter().zip(&b).any(|(x, y)| x != y));
    }

    #[test]
    fn relation_table_is_symmetric_with_unit_diagonal() {
        for seed in 0..5 {
            let p = mock_provider(seed, 4);
            let m = p.relations().matrix();
            for i in 0..m.len() {
                assert_eq!(m[i][i], 1.0);
                for j in 0..m.len() {
                    assert_eq!(m[i][j], m[j][i]);
                    assert!((0.0..=1.0).contains(&m[i][j]));
                }
            }
        }
    }

    #[test]
    fn generated_graphs_validate() {
        let p = mock_provider(3, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 0..10 {
            let g = p.random_graph(&mut rng, n, 0.4);
            assert!(validate_graph(&g, Some(8)).is_empty());
            let c = p.corrupt(&g, 0.5, &mut rng);
            assert!(validate_graph(&c, Some(8)).is_empty());
            assert_eq!(c.nodes.len(), n - (0.5 * n as f64).round() as usize);
        }
    }

    #[test]
    #[should_panic]
    fn dimension_below_two_panics() {
        mock_provider(0, 1);
    }
}
