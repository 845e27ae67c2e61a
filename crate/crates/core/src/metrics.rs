//! Reference similarity metrics: MSE, PSNR, SSIM and MS-SSIM on rasters,
//! ClipScore and ViTScore on embeddings.
//!
//! SSIM uses the customary constants: an 11x11 Gaussian window with
//! sigma 1.5, `C1 = (0.01 * 255)^2`, `C2 = (0.03 * 255)^2`, `C3 = C2 / 2` and
//! unit exponents, so contrast and structure fold into
//! `(2 sigma_xy + C2) / (sigma_x^2 + sigma_y^2 + C2)`. Windows are evaluated
//! only where they fit entirely inside the image. RGB input is reduced to
//! BT.601 luma first.

use thiserror::Error;

use crate::model::{Embedding, Raster};
use crate::providers::{clip_score, ProviderError};

pub const DYNAMIC_RANGE: f64 = 255.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
/// Standard five-scale MS-SSIM exponents, finest scale first.
pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("raster shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((u32, u32, u8), (u32, u32, u8)),
    #[error("image of {width}x{height} is smaller than the {min}-pixel window")]
    TooSmall { width: u32, height: u32, min: usize },
    #[error("patch embeddings have different dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("patch embedding set is empty")]
    EmptySet,
    #[error("patch {0} is a zero vector")]
    ZeroPatch(usize),
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

fn shape(r: &Raster) -> (u32, u32, u8) {
    (r.width(), r.height(), r.channels())
}

fn same_shape(x: &Raster, y: &Raster) -> Result<(), MetricError> {
    if shape(x) != shape(y) {
        return Err(MetricError::ShapeMismatch(shape(x), shape(y)));
    }
    Ok(())
}

/// Mean squared difference over every sample of every channel.
pub fn mse(x: &Raster, y: &Raster) -> Result<f64, MetricError> {
    same_shape(x, y)?;
    let sum: f64 = x
        .samples()
        .iter()
        .zip(y.samples())
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    Ok(sum / x.samples().len() as f64)
}

/// Peak signal-to-noise ratio in dB; identical inputs give `f64::INFINITY`.
pub fn psnr(x: &Raster, y: &Raster) -> Result<f64, MetricError> {
    Ok(psnr_from_mse(mse(x, y)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10()
    }
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_kernel() -> [f64; SSIM_WINDOW] {
    let mut k = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Gray plane of f64 samples.
#[derive(Clone)]
struct Plane {
    w: usize,
    h: usize,
    v: Vec<f64>,
}

impl Plane {
    fn from_raster(r: &Raster) -> Self {
        Self {
            w: r.width() as usize,
            h: r.height() as usize,
            v: r.luma(),
        }
    }

    /// Valid-region separable filter with the Gaussian window.
    fn filter(&self, k: &[f64; SSIM_WINDOW]) -> Plane {
        let ow = self.w + 1 - SSIM_WINDOW;
        let oh = self.h + 1 - SSIM_WINDOW;
        let mut tmp = vec![0.0; ow * self.h];
        for y in 0..self.h {
            let row = &self.v[y * self.w..(y + 1) * self.w];
            for x in 0..ow {
                tmp[y * ow + x] = k.iter().zip(&row[x..x + SSIM_WINDOW]).map(|(a, b)| a * b).sum();
            }
        }
        let mut out = vec![0.0; ow * oh];
        for y in 0..oh {
            for x in 0..ow {
                out[y * ow + x] = (0..SSIM_WINDOW).map(|i| k[i] * tmp[(y + i) * ow + x]).sum();
            }
        }
        Plane { w: ow, h: oh, v: out }
    }

    fn zip_with(&self, o: &Plane, f: impl Fn(f64, f64) -> f64) -> Plane {
        Plane {
            w: self.w,
            h: self.h,
            v: self.v.iter().zip(&o.v).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn downsample(&self) -> Plane {
        let (w, h) = (self.w / 2, self.h / 2);
        let mut v = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let at = |dx: usize, dy: usize| self.v[(2 * y + dy) * self.w + 2 * x + dx];
                v.push((at(0, 0) + at(1, 0) + at(0, 1) + at(1, 1)) / 4.0);
            }
        }
        Plane { w, h, v }
    }
}

/// Per-scale means of the contrast-structure term and of full SSIM.
struct ScaleStats {
    cs: f64,
    ssim: f64,
}

fn scale_stats(x: &Plane, y: &Plane) -> ScaleStats {
    let k = gaussian_kernel();
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let mx = x.filter(&k);
    let my = y.filter(&k);
    let xx = x.zip_with(x, |a, b| a * b).filter(&k);
    let yy = y.zip_with(y, |a, b| a * b).filter(&k);
    let xy = x.zip_with(y, |a, b| a * b).filter(&k);
    let n = mx.v.len() as f64;
    let (mut cs_sum, mut ssim_sum) = (0.0, 0.0);
    for i in 0..mx.v.len() {
        let (ux, uy) = (mx.v[i], my.v[i]);
        let vx = xx.v[i] - ux * ux;
        let vy = yy.v[i] - uy * uy;
        let cov = xy.v[i] - ux * uy;
        let l = (2.0 * ux * uy + c1) / (ux * ux + uy * uy + c1);
        let cs = (2.0 * cov + c2) / (vx + vy + c2);
        cs_sum += cs;
        ssim_sum += l * cs;
    }
    ScaleStats {
        cs: cs_sum / n,
        ssim: ssim_sum / n,
    }
}

fn check_window(r: &Raster) -> Result<(), MetricError> {
    if (r.width() as usize) < SSIM_WINDOW || (r.height() as usize) < SSIM_WINDOW {
        return Err(MetricError::TooSmall {
            width: r.width(),
            height: r.height(),
            min: SSIM_WINDOW,
        });
    }
    Ok(())
}

pub fn ssim(x: &Raster, y: &Raster) -> Result<f64, MetricError> {
    same_shape(x, y)?;
    check_window(x)?;
    Ok(scale_stats(&Plane::from_raster(x), &Plane::from_raster(y)).ssim)
}

/// Number of dyadic scales (at most five) whose smaller side still fits the window.
pub fn ms_ssim_scales(width: u32, height: u32) -> usize {
    let mut side = width.min(height) as usize;
    let mut scales = 0;
    while scales < MS_SSIM_WEIGHTS.len() && side >= SSIM_WINDOW {
        scales += 1;
        side /= 2;
    }
    scales
}

/// Multi-scale SSIM over as many scales as fit (five for sides >= 176).
/// Truncated pyramids renormalize their weights to sum to one. Negative
/// per-scale means are clamped to zero before exponentiation.
pub fn ms_ssim(x: &Raster, y: &Raster) -> Result<f64, MetricError> {
    same_shape(x, y)?;
    check_window(x)?;
    let scales = ms_ssim_scales(x.width(), x.height());
    let weights: Vec<f64> = if scales == MS_SSIM_WEIGHTS.len() {
        MS_SSIM_WEIGHTS.to_vec()
    } else {
        let total: f64 = MS_SSIM_WEIGHTS[..scales].iter().sum();
        MS_SSIM_WEIGHTS[..scales].iter().map(|w| w / total).collect()
    };
    let (mut px, mut py) = (Plane::from_raster(x), Plane::from_raster(y));
    let mut product = 1.0;
    for (j, w) in weights.iter().enumerate() {
        let stats = scale_stats(&px, &py);
        let term = if j + 1 == scales { stats.ssim } else { stats.cs };
        product *= term.max(0.0).powf(*w);
        if j + 1 < scales {
            px = px.downsample();
            py = py.downsample();
        }
    }
    Ok(product)
}

/// Ordered patch features, each normalized to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchEmbeddingSet {
    dim: usize,
    patches: Vec<Vec<f64>>,
}

impl PatchEmbeddingSet {
    pub fn new(patches: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let dim = patches.first().ok_or(MetricError::EmptySet)?.len();
        let mut out = Vec::with_capacity(patches.len());
        for (i, p) in patches.into_iter().enumerate() {
            if p.len() != dim {
                return Err(MetricError::DimensionMismatch(dim, p.len()));
            }
            let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 || !norm.is_finite() {
                return Err(MetricError::ZeroPatch(i));
            }
            out.push(p.into_iter().map(|v| v / norm).collect());
        }
        Ok(Self { dim, patches: out })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patches(&self) -> &[Vec<f64>] {
        &self.patches
    }
}

/// F-measure of best-match patch similarities; negative dot products count as zero.
pub fn vit_score(x: &PatchEmbeddingSet, y: &PatchEmbeddingSet) -> Result<f64, MetricError> {
    if x.dim != y.dim {
        return Err(MetricError::DimensionMismatch(x.dim, y.dim));
    }
    let (n, m) = (x.len(), y.len());
    let mut row_best = vec![0.0f64; n];
    let mut col_best = vec![0.0f64; m];
    for (i, a) in x.patches.iter().enumerate() {
        for (j, b) in y.patches.iter().enumerate() {
            let d = a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>().max(0.0);
            row_best[i] = row_best[i].max(d);
            col_best[j] = col_best[j].max(d);
        }
    }
    let recall = row_best.iter().sum::<f64>() / n as f64;
    let precision = col_best.iter().sum::<f64>() / m as f64;
    if recall + precision == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * recall * precision / (recall + precision))
}

/// Whole-image ClipScore on precomputed encoder outputs.
pub fn clip_metric(a: &Embedding, b: &Embedding) -> Result<f64, MetricError> {
    Ok(clip_score(a, b)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_raster(rng: &mut ChaCha8Rng, w: u32, h: u32, c: u8) -> Raster {
        let n = (w * h) as usize * c as usize;
        Raster::new(w, h, c, (0..n).map(|_| rng.random()).collect()).unwrap()
    }

    fn naive_mse(x: &Raster, y: &Raster) -> f64 {
        let mut s = 0.0;
        let c = x.channels() as usize;
        for row in 0..x.height() as usize {
            for col in 0..x.width() as usize {
                for ch in 0..c {
                    let i = (row * x.width() as usize + col) * c + ch;
                    let d = x.samples()[i] as f64 - y.samples()[i] as f64;
                    s += d * d;
                }
            }
        }
        s / (x.width() as f64 * x.height() as f64 * c as f64)
    }

    #[test]
    fn mse_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_raster(&mut rng, 4, 4, 3);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        let a = Raster::gray_from_fn(5, 5, |i, j| (i * 10 + j) as u8);
        let b = Raster::gray_from_fn(5, 5, |i, j| (i * 10 + j + 16) as u8);
        assert_eq!(mse(&a, &b).unwrap(), 256.0);
        let y = random_raster(&mut rng, 4, 4, 3);
        assert!((mse(&x, &y).unwrap() - naive_mse(&x, &y)).abs() < 1e-9);
        let g = random_raster(&mut rng, 4, 4, 1);
        assert!(matches!(mse(&x, &g), Err(MetricError::ShapeMismatch(..))));
    }

    #[test]
    fn psnr_examples() {
        let a = Raster::gray_from_fn(3, 3, |_, _| 40);
        let b = Raster::gray_from_fn(3, 3, |_, _| 56);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        // 10 log10(65025 / 256)
        assert!((psnr(&a, &b).unwrap() - 24.0478).abs() < 0.01);
        let black = Raster::gray_from_fn(2, 2, |_, _| 0);
        let white = Raster::gray_from_fn(2, 2, |_, _| 255);
        assert_eq!(psnr(&black, &white).unwrap(), 0.0);
    }

    #[test]
    fn ssim_constant_images() {
        let a = Raster::gray_from_fn(32, 32, |_, _| 100);
        let b = Raster::gray_from_fn(32, 32, |_, _| 120);
        let c1 = (0.01f64 * 255.0).powi(2);
        let lum = (2.0 * 100.0 * 120.0 + c1) / (100.0f64.powi(2) + 120.0f64.powi(2) + c1);
        let got = ssim(&a, &b).unwrap();
        assert!((got - lum).abs() < 1e-9);
        assert!((got - 0.9836).abs() < 1e-3);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn ssim_too_small() {
        let a = Raster::gray_from_fn(10, 40, |_, _| 1);
        assert!(matches!(ssim(&a, &a), Err(MetricError::TooSmall { .. })));
    }

    #[test]
    fn ms_ssim_scale_counts() {
        assert_eq!(ms_ssim_scales(176, 300), 5);
        assert_eq!(ms_ssim_scales(175, 300), 4);
        assert_eq!(ms_ssim_scales(11, 11), 1);
        assert_eq!(ms_ssim_scales(10, 11), 0);
    }

    #[test]
    fn ms_ssim_identity_and_constant_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_raster(&mut rng, 64, 48, 3);
        assert_eq!(ms_ssim(&x, &x).unwrap(), 1.0);
        let a = Raster::gray_from_fn(176, 176, |_, _| 100);
        let b = Raster::gray_from_fn(176, 176, |_, _| 120);
        let lum = ssim(&a, &b).unwrap();
        let got = ms_ssim(&a, &b).unwrap();
        assert!((got - lum.powf(MS_SSIM_WEIGHTS[4])).abs() < 1e-12);
    }

    #[test]
    fn vit_examples() {
        let e1 = vec![1.0, 0.0, 0.0];
        let e2 = vec![0.0, 1.0, 0.0];
        let e3 = vec![0.0, 0.0, 1.0];
        let both = PatchEmbeddingSet::new(vec![e1.clone(), e2.clone()]).unwrap();
        assert_eq!(vit_score(&both, &both).unwrap(), 1.0);
        let one = PatchEmbeddingSet::new(vec![e1.clone()]).unwrap();
        assert!((vit_score(&one, &both).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((vit_score(&both, &one).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let other = PatchEmbeddingSet::new(vec![e3]).unwrap();
        assert_eq!(vit_score(&both, &other).unwrap(), 0.0);
    }

    #[test]
    fn patch_set_errors_and_normalization() {
        assert_eq!(PatchEmbeddingSet::new(vec![]), Err(MetricError::EmptySet));
        assert_eq!(
            PatchEmbeddingSet::new(vec![vec![1.0, 0.0], vec![0.0, 0.0]]),
            Err(MetricError::ZeroPatch(1))
        );
        assert_eq!(
            PatchEmbeddingSet::new(vec![vec![1.0, 0.0], vec![1.0]]),
            Err(MetricError::DimensionMismatch(2, 1))
        );
        let s = PatchEmbeddingSet::new(vec![vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.patches()[0], vec![0.6, 0.8]);
    }

    #[test]
    fn metrics_are_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..5 {
            let x = random_raster(&mut rng, 24, 20, 3);
            let y = random_raster(&mut rng, 24, 20, 3);
            assert_eq!(mse(&x, &y).unwrap(), mse(&y, &x).unwrap());
            assert!((ssim(&x, &y).unwrap() - ssim(&y, &x).unwrap()).abs() < 1e-12);
            assert!((ms_ssim(&x, &y).unwrap() - ms_ssim(&y, &x).unwrap()).abs() < 1e-12);
            let m = mse(&x, &y).unwrap();
            assert_eq!(psnr(&x, &y).unwrap(), 10.0 * (65025.0 / m).log10());
        }
    }
}
