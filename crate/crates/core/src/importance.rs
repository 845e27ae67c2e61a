//! Pixel importance maps and per-object importance weights.
//!
//! The pixel predictor is the Sobel gradient magnitude of the luma channel
//! followed by a 3x3 box filter, with edge samples replicated at the border.
//! Object weights sum the map under each object's mask (or its bbox when it
//! has no mask), flatten the sums with the exponent `1/k`, and normalize.

use thiserror::Error;

use crate::model::{GraphNode, Raster, SceneGraph};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ImportanceError {
    #[error("image is empty")]
    EmptyImage,
    #[error("no nodes to weight")]
    NoNodes,
    #[error("flattening exponent k = {0} must be >= 1")]
    InvalidExponent(f64),
    #[error("node {id} region lies outside the {width}x{height} importance map")]
    RegionOutOfBounds { id: u64, width: u32, height: u32 },
    #[error("raw importance sum {0} must be finite and nonnegative")]
    InvalidSum(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl ImportanceMap {
    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn region_sum(&self, node: &GraphNode) -> Result<f64, ImportanceError> {
        let oob = || ImportanceError::RegionOutOfBounds {
            id: node.id,
            width: self.width,
            height: self.height,
        };
        match &node.region.mask {
            Some(mask) => {
                if mask.width() != self.width || mask.height() != self.height {
                    return Err(oob());
                }
                Ok(mask.foreground().map(|(x, y)| self.get(x, y)).sum())
            }
            None => {
                let b = node.region.bbox;
                if !b.fits(self.width, self.height) {
                    return Err(oob());
                }
                let mut s = 0.0;
                for y in b.y..b.y + b.h {
                    for x in b.x..b.x + b.w {
                        s += self.get(x, y);
                    }
                }
                Ok(s)
            }
        }
    }
}

/// Per-node weights; nonnegative and summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceDistribution {
    weights: Vec<f64>,
}

impl ImportanceDistribution {
    pub fn uniform(n: usize) -> Self {
        Self {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

pub fn predict_pixel_importance(image: &Raster) -> Result<ImportanceMap, ImportanceError> {
    let (w, h) = (image.width() as usize, image.height() as usize);
    if w == 0 || h == 0 {
        return Err(ImportanceError::EmptyImage);
    }
    let luma = image.luma();
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        luma[yc * w + xc]
    };
    let mut grad = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            grad[y as usize * w + x as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    let g = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        grad[yc * w + xc]
    };
    let mut values = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut s = 0.0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    s += g(x + dx, y + dy);
                }
            }
            values[y as usize * w + x as usize] = s / 9.0;
        }
    }
    Ok(ImportanceMap {
        width: image.width(),
        height: image.height(),
        values,
    })
}

/// Flattens raw importance sums with exponent `1/k` and normalizes them.
/// All-zero input yields the uniform distribution.
pub fn importance_from_sums(sums: &[f64], k: f64) -> Result<ImportanceDistribution, ImportanceError> {
    if sums.is_empty() {
        return Err(ImportanceError::NoNodes);
    }
    if !(k >= 1.0 && k.is_finite()) {
        return Err(ImportanceError::InvalidExponent(k));
    }
    if let Some(&bad) = sums.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
        return Err(ImportanceError::InvalidSum(bad));
    }
    let flat: Vec<f64> = sums.iter().map(|s| s.powf(1.0 / k)).collect();
    let total: f64 = flat.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Ok(ImportanceDistribution::uniform(sums.len()));
    }
    Ok(ImportanceDistribution {
        weights: flat.into_iter().map(|t| t / total).collect(),
    })
}

pub fn object_importance(
    map: &ImportanceMap,
    nodes: &[GraphNode],
    k: f64,
) -> Result<ImportanceDistribution, ImportanceError> {
    if nodes.is_empty() {
        return Err(ImportanceError::NoNodes);
    }
    let sums = nodes
        .iter()
        .map(|n| map.region_sum(n))
        .collect::<Result<Vec<_>, _>>()?;
    importance_from_sums(&sums, k)
}

/// Importance for a whole graph: precomputed `raw_importance` when every node
/// carries one, else the pixel map of `image` when given, else uniform.
/// Empty graphs give an empty distribution.
pub fn graph_importance(
    g: &SceneGraph,
    image: Option<&Raster>,
    k: f64,
) -> Result<ImportanceDistribution, ImportanceError> {
    if g.nodes.is_empty() {
        return Ok(ImportanceDistribution { weights: Vec::new() });
    }
    let raw: Option<Vec<f64>> = g.nodes.iter().map(|n| n.raw_importance).collect();
    if let Some(sums) = raw {
        return importance_from_sums(&sums, k);
    }
    match image {
        Some(img) => object_importance(&predict_pixel_importance(img)?, &g.nodes, k),
        None => Ok(ImportanceDistribution::uniform(g.nodes.len())),
    }
}
