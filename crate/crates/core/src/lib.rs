//! Semantic image similarity by scene-graph matching.
//!
//! Two images are compared through their scene graphs: objects become nodes
//! carrying embeddings and importance weights, relations become labelled
//! edges. Node similarities are refined by propagating neighbor agreement,
//! an importance-weighted assignment turns the refined matrix into a graph
//! score, and the result is blended with a whole-image embedding similarity.
//!
//! ```
//! use sess::{mock_provider, sess, HyperParams};
//! use rand::SeedableRng;
//!
//! let provider = mock_provider(7, 16);
//! let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
//! let g = provider.random_graph(&mut rng, 4, 0.4);
//! let report = sess(&g, &g, &provider, &HyperParams::default()).unwrap();
//! assert!((report.sess - 1.0).abs() < 1e-9);
//! ```
//!
//! Reference metrics (MSE, PSNR, SSIM, MS-SSIM, ViTScore, CLIP cosine) live
//! in [`metrics`], the hyperparameter search in [`tuning`], and the file
//! formats and command-line surface in [`io`] and [`cli`].

#![allow(clippy::needless_range_loop)]

pub mod assignment;
pub mod cli;
pub mod importance;
pub mod io;
pub mod matching;
pub mod metrics;
pub mod mock;
pub mod model;
pub mod providers;
pub mod rle;
pub mod tuning;

pub use assignment::{brute_force_matching, km_max_matching, km_max_value, AssignmentError, Matching};
pub use importance::{
    graph_importance, importance_from_sums, object_importance, predict_pixel_importance,
    ImportanceDistribution, ImportanceError, ImportanceMap,
};
pub use matching::{sess, sess_with, MatchContext, MatchError, ScoreOptions};
pub use metrics::{clip_metric, ms_ssim, mse, psnr, ssim, vit_score, MetricError, PatchEmbeddingSet};
pub use mock::{mock_provider, MockProvider};
pub use model::{
    validate_graph, BBox, Embedding, GraphEdge, GraphNode, HyperParams, ImageMeta, MatchedPair,
    Matrix, ModelError, Raster, Region, RelationTable, SceneGraph, ScoreReport, SimilarityMatrix,
    Violation,
};
pub use providers::{clip_score, EmbeddingProvider, ProviderError, SimilarityProvider};
pub use rle::{Rle, RleError};
pub use tuning::{random_search, AnnotatedDataset, SearchSpace, TrialResult, TuningError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/scene-graphs.md")]
    mod scene_graphs {}
    #[doc = include_str!("../../../book/src/assignment.md")]
    mod assignment {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/importance.md")]
    mod importance {}
    #[doc = include_str!("../../../book/src/baselines.md")]
    mod baselines {}
    #[doc = include_str!("../../../book/src/tuning.md")]
    mod tuning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
