//! Test-only oracles, written independently of the library internals.
#![allow(dead_code)]

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use sess::{HyperParams, Raster, SceneGraph};

/// Best total weight over all partial injective assignments, by enumeration.
pub fn brute_assign(w: &[Vec<f64>]) -> f64 {
    fn go(w: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
        if row == w.len() {
            return 0.0;
        }
        let mut best = go(w, row + 1, used);
        for c in 0..used.len() {
            if !used[c] {
                used[c] = true;
                best = best.max(w[row][c] + go(w, row + 1, used));
                used[c] = false;
            }
        }
        best
    }
    let cols = w.first().map_or(0, Vec::len);
    go(w, 0, &mut vec![false; cols])
}

fn cosine01(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// (neighbor index, subject-side flag, relation) triples per node.
fn adjacency(g: &SceneGraph) -> Vec<Vec<(usize, bool, String)>> {
    let pos: HashMap<u64, usize> = g.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect();
    let mut adj = vec![Vec::new(); g.nodes.len()];
    for e in &g.edges {
        let (s, o) = (pos[&e.subject], pos[&e.object]);
        adj[s].push((o, true, e.relation.clone()));
        adj[o].push((s, false, e.relation.clone()));
    }
    adj
}

fn importance(g: &SceneGraph, k: f64) -> Vec<f64> {
    let n = g.nodes.len();
    match g.nodes.iter().map(|v| v.raw_importance).collect::<Option<Vec<f64>>>() {
        Some(raw) => {
            let flat: Vec<f64> = raw.iter().map(|r| r.powf(1.0 / k)).collect();
            let total: f64 = flat.iter().sum();
            if total > 0.0 {
                flat.iter().map(|f| f / total).collect()
            } else {
                vec![1.0 / n as f64; n]
            }
        }
        None => vec![1.0 / n as f64; n],
    }
}

/// Straight-line scalar evaluation of the full score, with importance from
/// `raw_importance` (uniform when any node lacks it).
pub fn reference_sess(g1: &SceneGraph, g2: &SceneGraph, rel: &dyn Fn(&str, &str) -> f64, p: &HyperParams) -> f64 {
    let image = cosine01(g1.image_embedding.as_slice(), g2.image_embedding.as_slice());
    let (n, m) = (g1.nodes.len(), g2.nodes.len());
    if n == 0 && m == 0 {
        return image;
    }
    let graph = if n == 0 || m == 0 {
        0.0
    } else {
        let mut l: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..m)
                    .map(|j| cosine01(g1.nodes[i].embedding.as_slice(), g2.nodes[j].embedding.as_slice()))
                    .collect()
            })
            .collect();
        let (a1, a2) = (adjacency(g1), adjacency(g2));
        for _ in 0..p.iterations {
            let mut next = l.clone();
            for u in 0..n {
                for v in 0..m {
                    // Group edges by neighbor so each neighbor is one row/column.
                    let mut nu: Vec<usize> = a1[u].iter().map(|t| t.0).collect();
                    nu.sort();
                    nu.dedup();
                    let mut nv: Vec<usize> = a2[v].iter().map(|t| t.0).collect();
                    nv.sort();
                    nv.dedup();
                    let ns = if nu.is_empty() && nv.is_empty() {
                        l[u][v]
                    } else if nu.is_empty() || nv.is_empty() {
                        0.0
                    } else {
                        let w: Vec<Vec<f64>> = nu
                            .iter()
                            .map(|&x| {
                                nv.iter()
                                    .map(|&y| {
                                        let mut r = 0.0f64;
                                        for (xa, sa, ra) in &a1[u] {
                                            for (yb, sb, rb) in &a2[v] {
                                                if *xa == x && *yb == y && sa == sb {
                                                    r = r.max(rel(ra, rb));
                                                }
                                            }
                                        }
                                        p.alpha * l[x][y] + (1.0 - p.alpha) * r
                                    })
                                    .collect()
                            })
                            .collect();
                        brute_assign(&w) / nu.len().max(nv.len()) as f64
                    };
                    next[u][v] = ((1.0 - p.beta) * l[u][v] + p.beta * ns).clamp(0.0, 1.0);
                }
            }
            l = next;
        }
        let (i1, i2) = (importance(g1, p.k), importance(g2, p.k));
        let w: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..m).map(|j| (i1[i] + i2[j]) / 2.0 * l[i][j]).collect())
            .collect();
        brute_assign(&w).clamp(0.0, 1.0)
    };
    ((1.0 - p.gamma) * graph + p.gamma * image).clamp(0.0, 1.0)
}

/// Mean SSIM over every valid 11x11 window, evaluated window by window with
/// a 2-D Gaussian of sigma 1.5. Rasters must be single-channel.
pub fn ssim_oracle(x: &Raster, y: &Raster) -> f64 {
    assert_eq!(x.channels(), 1);
    let (w, h) = (x.width() as usize, x.height() as usize);
    let mut g = [0.0; 11];
    for (i, v) in g.iter_mut().enumerate() {
        let d = i as f64 - 5.0;
        *v = (-d * d / (2.0 * 1.5 * 1.5)).exp();
    }
    let mut kernel = [[0.0; 11]; 11];
    let mut total = 0.0;
    for i in 0..11 {
        for j in 0..11 {
            kernel[i][j] = g[i] * g[j];
            total += kernel[i][j];
        }
    }
    let (c1, c2) = ((0.01f64 * 255.0).powi(2), (0.03f64 * 255.0).powi(2));
    let (xs, ys) = (x.samples(), y.samples());
    let mut sum = 0.0;
    let mut count = 0;
    for top in 0..=(h - 11) {
        for left in 0..=(w - 11) {
            let (mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for i in 0..11 {
                for j in 0..11 {
                    let k = kernel[i][j] / total;
                    let a = xs[(top + i) * w + left + j] as f64;
                    let b = ys[(top + i) * w + left + j] as f64;
                    mx += k * a;
                    my += k * b;
                    xx += k * a * a;
                    yy += k * b * b;
                    xy += k * a * b;
                }
            }
            let (vx, vy, cov) = (xx - mx * mx, yy - my * my, xy - mx * my);
            sum += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
            count += 1;
        }
    }
    sum / count as f64
}

/// Same graph with its node and edge lists shuffled.
pub fn permuted(g: &SceneGraph, rng: &mut impl Rng) -> SceneGraph {
    let mut out = g.clone();
    out.nodes.shuffle(rng);
    out.edges.shuffle(rng);
    out
}

pub fn gray(w: u32, h: u32, f: impl FnMut(u32, u32) -> u8) -> Raster {
    Raster::gray_from_fn(w, h, f)
}

pub fn random_gray(rng: &mut impl Rng, w: u32, h: u32) -> Raster {
    Raster::gray_from_fn(w, h, |_, _| rng.random())
}

/// Annotated pairs whose human scores are the score under `planted` plus
/// Gaussian noise of `sigma`, clamped to [0, 1]. Candidates are corrupted
/// copies of the originals at several levels, plus one unrelated graph.
pub fn planted_dataset(
    provider: &sess::MockProvider,
    planted: &HyperParams,
    originals: usize,
    sigma: f64,
    seed: u64,
) -> sess::AnnotatedDataset {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut pairs = Vec::new();
    for _ in 0..originals {
        let n = rng.random_range(4..=8);
        let original = provider.random_graph(&mut rng, n, 0.35);
        let mut candidates: Vec<SceneGraph> = [0.1, 0.3, 0.5, 0.7]
            .iter()
            .map(|&level| provider.corrupt(&original, level, &mut rng))
            .collect();
        candidates.push(provider.random_graph(&mut rng, n, 0.35));
        for candidate in candidates {
            let s = sess::sess(&original, &candidate, provider, planted).unwrap().sess;
            pairs.push(sess::tuning::AnnotatedPair {
                original: original.clone(),
                candidate,
                human_score: (s + noise.sample(&mut rng)).clamp(0.0, 1.0),
            });
        }
    }
    sess::AnnotatedDataset { pairs }
}
