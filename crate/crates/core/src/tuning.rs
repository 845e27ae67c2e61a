//! Hyperparameter search against human similarity annotations.
//!
//! The objective is Pearson correlation between SeSS and the human scores,
//! with mean absolute error as the tie-breaker.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{sess, MatchError};
use crate::model::{HyperParams, SceneGraph};
use crate::providers::SimilarityProvider;

#[derive(Debug, Error)]
pub enum TuningError {
    #[error("graph file {path}: {reason}")]
    MissingGraphFile { path: PathBuf, reason: String },
    #[error("need at least 2 annotated pairs, got {0}")]
    InsufficientPairs(usize),
    #[error("annotation record {index}: {reason}")]
    InvalidRecord { index: usize, reason: String },
    #[error("search space: {0}")]
    InvalidSpace(String),
    #[error("trials must be >= 1")]
    NoTrials,
    #[error("pair {index}: {source}")]
    Scoring {
        index: usize,
        #[source]
        source: MatchError,
    },
}

/// One reference graph and its human-scored candidates (one line of the
/// annotation dataset file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationRecord {
    pub original: String,
    pub candidates: Vec<Candidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidate {
    pub graph: String,
    pub human_score: f64,
}

impl AnnotationRecord {
    pub fn validate(&self, index: usize) -> Result<(), TuningError> {
        let bad = |reason: String| Err(TuningError::InvalidRecord { index, reason });
        if self.candidates.is_empty() {
            return bad("no candidates".into());
        }
        for (j, c) in self.candidates.iter().enumerate() {
            if !(0.0..=1.0).contains(&c.human_score) {
                return bad(format!("candidate {j} human_score {} outside [0, 1]", c.human_score));
            }
        }
        Ok(())
    }
}

/// Graph pairs in memory with their human scores.
#[derive(Debug, Clone, Default)]
pub struct AnnotatedDataset {
    pub pairs: Vec<AnnotatedPair>,
}

#[derive(Debug, Clone)]
pub struct AnnotatedPair {
    pub original: SceneGraph,
    pub candidate: SceneGraph,
    pub human_score: f64,
}

impl AnnotatedDataset {
    /// Resolves every graph reference (relative to `base_dir`) through `load`.
    pub fn load<E: std::fmt::Display>(
        records: &[AnnotationRecord],
        base_dir: &Path,
        mut load: impl FnMut(&Path) -> Result<SceneGraph, E>,
    ) -> Result<Self, TuningError> {
        let mut resolve = |r: &str| {
            let path = base_dir.join(r);
            load(&path).map_err(|e| TuningError::MissingGraphFile {
                path: path.clone(),
                reason: e.to_string(),
            })
        };
        let mut pairs = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            rec.validate(i)?;
            let original = resolve(&rec.original)?;
            for c in &rec.candidates {
                pairs.push(AnnotatedPair {
                    original: original.clone(),
                    candidate: resolve(&c.graph)?,
                    human_score: c.human_score,
                });
            }
        }
        Ok(Self { pairs })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialResult {
    pub params: HyperParams,
    pub pearson: f64,
    pub mae: f64,
    pub n_pairs: usize,
    /// Set when either score series has zero variance; `pearson` is then 0.
    pub degenerate: bool,
}

/// Pearson correlation, or `None` when either series is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// SeSS for every annotated pair under `params`.
pub fn score_pairs(
    params: &HyperParams,
    dataset: &AnnotatedDataset,
    provider: &dyn SimilarityProvider,
) -> Result<Vec<f64>, TuningError> {
    dataset
        .pairs
        .iter()
        .enumerate()
        .map(|(index, p)| {
            sess(&p.original, &p.candidate, provider, params)
                .map(|r| r.sess)
                .map_err(|source| TuningError::Scoring { index, source })
        })
        .collect()
}

pub fn evaluate_params(
    params: &HyperParams,
    dataset: &AnnotatedDataset,
    provider: &dyn SimilarityProvider,
) -> Result<TrialResult, TuningError> {
    let n = dataset.pairs.len();
    if n < 2 {
        return Err(TuningError::InsufficientPairs(n));
    }
    let scores = score_pairs(params, dataset, provider)?;
    let human: Vec<f64> = dataset.pairs.iter().map(|p| p.human_score).collect();
    let mae = scores.iter().zip(&human).map(|(s, h)| (s - h).abs()).sum::<f64>() / n as f64;
    let (pearson, degenerate) = match pearson(&scores, &human) {
        Some(r) => (r, false),
        None => (0.0, true),
    };
    Ok(TrialResult {
        params: *params,
        pearson,
        mae,
        n_pairs: n,
        degenerate,
    })
}

/// Box bounds for random search. Continuous ranges are half-open draws
/// `[lo, hi)` (a point range `lo == hi` pins the value); iterations are
/// drawn uniformly from the inclusive integer range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub alpha: (f64, f64),
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    pub iterations: (u32, u32),
    pub k: (f64, f64),
}

pub const MAX_SEARCH_ITERATIONS: u32 = 12;
pub const MAX_SEARCH_K: f64 = 4.0;

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            alpha: (0.0, 1.0),
            beta: (0.0, 1.0),
            gamma: (0.0, 1.0),
            iterations: (0, MAX_SEARCH_ITERATIONS),
            k: (1.0, MAX_SEARCH_K),
        }
    }
}

impl SearchSpace {
    pub fn validate(&self) -> Result<(), TuningError> {
        let unit = |name: &str, (lo, hi): (f64, f64)| {
            if 0.0 <= lo && lo <= hi && hi <= 1.0 {
                Ok(())
            } else {
                Err(TuningError::InvalidSpace(format!("{name} range [{lo}, {hi}] not within [0, 1]")))
            }
        };
        unit("alpha", self.alpha)?;
        unit("beta", self.beta)?;
        unit("gamma", self.gamma)?;
        let (ilo, ihi) = self.iterations;
        if ilo > ihi || ihi > MAX_SEARCH_ITERATIONS {
            return Err(TuningError::InvalidSpace(format!(
                "iterations range [{ilo}, {ihi}] not within [0, {MAX_SEARCH_ITERATIONS}]"
            )));
        }
        let (klo, khi) = self.k;
        if !(1.0 <= klo && klo <= khi && khi <= MAX_SEARCH_K) {
            return Err(TuningError::InvalidSpace(format!(
                "k range [{klo}, {khi}] not within [1, {MAX_SEARCH_K}]"
            )));
        }
        Ok(())
    }

    /// Draws one parameter set.
    pub fn sample(&self, rng: &mut impl Rng) -> HyperParams {
        let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
        let alpha = draw(self.alpha);
        let beta = draw(self.beta);
        let gamma = draw(self.gamma);
        let k = draw(self.k);
        let iterations = rng.random_range(self.iterations.0..=self.iterations.1);
        HyperParams::new(alpha, beta, gamma, iterations, k).expect("sampled inside validated space")
    }
}

/// True when `a` beats `b`: higher correlation, then lower error.
fn better(a: &TrialResult, b: &TrialResult) -> bool {
    a.pearson > b.pearson || (a.pearson == b.pearson && a.mae < b.mae)
}

/// Seeded random search. Parameter draws happen up front in trial order, so
/// the history is the same regardless of how trials are scheduled.
pub fn random_search(
    space: &SearchSpace,
    dataset: &AnnotatedDataset,
    provider: &dyn SimilarityProvider,
    trials: usize,
    seed: u64,
    mut progress: impl FnMut(usize, &TrialResult),
) -> Result<(TrialResult, Vec<TrialResult>), TuningError> {
    space.validate()?;
    if trials == 0 {
        return Err(TuningError::NoTrials);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<HyperParams> = (0..trials).map(|_| space.sample(&mut rng)).collect();
    let history = draws
        .par_iter()
        .map(|p| evaluate_params(p, dataset, provider))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = &history[0];
    for (i, t) in history.iter().enumerate() {
        progress(i, t);
        if better(t, best) {
            best = t;
        }
    }
    Ok((best.clone(), history))
}
