//! Domain types shared across the engine: embeddings, regions, scene graphs,
//! relation tables, hyperparameters, similarity matrices and score reports.
//!
//! Scene graphs are plain data. They may be built in any shape and then
//! checked with [`validate_graph`], which reports every broken invariant
//! instead of stopping at the first one. The scoring entry points validate
//! their inputs before touching them.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::rle::Rle;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("embedding must have at least one entry")]
    EmptyEmbedding,
    #[error("embedding entry {index} is not finite")]
    NonFiniteEmbedding { index: usize },
    #[error("relation table: {0}")]
    RelationTable(String),
    #[error("hyperparameter {name} = {value} outside {range}")]
    HyperParam {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("matrix of shape {rows}x{cols} needs {expected} entries, got {got}")]
    MatrixShape {
        rows: usize,
        cols: usize,
        expected: usize,
        got: usize,
    },
    #[error("similarity entry ({row}, {col}) = {value} outside [0, 1]")]
    SimilarityRange { row: usize, col: usize, value: f64 },
    #[error("raster: {0}")]
    Raster(String),
}

/// A raw encoder output. Never normalized on construction; cosine similarity
/// normalizes at comparison time.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.is_empty() {
            return Err(ModelError::EmptyEmbedding);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(ModelError::NonFiniteEmbedding { index });
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// True when every entry is zero; cosine similarity is undefined then.
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = ModelError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(values)
    }
}

impl<'de> Deserialize<'de> for Embedding {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(d)?;
        Embedding::new(values).map_err(serde::de::Error::custom)
    }
}

/// Axis-aligned box in pixels: top-left corner plus extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl BBox {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Self { x, y, w, h }
    }

    pub fn fits(&self, width: u32, height: u32) -> bool {
        self.w > 0
            && self.h > 0
            && u64::from(self.x) + u64::from(self.w) <= u64::from(width)
            && u64::from(self.y) + u64::from(self.h) <= u64::from(height)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub bbox: BBox,
    pub mask: Option<Rle>,
}

impl Region {
    pub fn from_bbox(bbox: BBox) -> Self {
        Self { bbox, mask: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphNode {
    pub id: u64,
    pub label: String,
    pub region: Region,
    pub embedding: Embedding,
    pub raw_importance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GraphEdge {
    pub subject: u64,
    pub object: u64,
    pub relation: String,
}

impl GraphEdge {
    pub fn new(subject: u64, object: u64, relation: impl Into<String>) -> Self {
        Self {
            subject,
            object,
            relation: relation.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageMeta {
    pub width: u32,
    pub height: u32,
    pub source_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub image: ImageMeta,
    pub image_embedding: Embedding,
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl SceneGraph {
    /// Position of the node with `id` in `nodes`.
    pub fn node_index(&self, id: u64) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }
}

/// One broken invariant, e.g. `edge 0: object id 7 unresolved`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: String,
}

impl Violation {
    fn new(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            rule: rule.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// Checks every scene-graph invariant and returns the violations found.
///
/// `session_dim` is the embedding dimension shared by the comparison session;
/// when `None`, the graph's own image embedding dimension is used.
pub fn validate_graph(g: &SceneGraph, session_dim: Option<usize>) -> Vec<Violation> {
    let mut out = Vec::new();
    let (width, height) = (g.image.width, g.image.height);
    if width == 0 || height == 0 {
        out.push(Violation::new(
            "image",
            format!("dimensions {width}x{height} must be positive"),
        ));
    }
    let dim = session_dim.unwrap_or_else(|| g.image_embedding.dim());
    if g.image_embedding.dim() != dim {
        out.push(Violation::new(
            "image.embedding",
            format!("dimension {} != session dimension {dim}", g.image_embedding.dim()),
        ));
    }
    if g.image_embedding.is_zero() {
        out.push(Violation::new("image.embedding", "zero vector"));
    }

    let mut seen = HashSet::new();
    for (i, node) in g.nodes.iter().enumerate() {
        let field = format!("node {i}");
        if !seen.insert(node.id) {
            out.push(Violation::new(&field, format!("duplicate id {}", node.id)));
        }
        if node.embedding.dim() != dim {
            out.push(Violation::new(
                &field,
                format!(
                    "embedding dimension {} != session dimension {dim}",
                    node.embedding.dim()
                ),
            ));
        }
        if node.embedding.is_zero() {
            out.push(Violation::new(&field, "embedding is a zero vector"));
        }
        if let Some(raw) = node.raw_importance {
            if !(raw.is_finite() && raw >= 0.0) {
                out.push(Violation::new(
                    &field,
                    format!("raw_importance {raw} must be finite and nonnegative"),
                ));
            }
        }
        if !node.region.bbox.fits(width, height) {
            let b = node.region.bbox;
            out.push(Violation::new(
                &field,
                format!(
                    "bbox [{}, {}, {}, {}] outside {width}x{height} image or empty",
                    b.x, b.y, b.w, b.h
                ),
            ));
        }
        if let Some(mask) = &node.region.mask {
            if mask.width() != width || mask.height() != height {
                out.push(Violation::new(
                    &field,
                    format!(
                        "mask size {}x{} != image size {width}x{height}",
                        mask.width(),
                        mask.height()
                    ),
                ));
            } else if mask.area() == 0 {
                out.push(Violation::new(&field, "mask is empty"));
            }
        }
    }

    for (i, edge) in g.edges.iter().enumerate() {
        let field = format!("edge {i}");
        if !seen.contains(&edge.subject) {
            out.push(Violation::new(
                &field,
                format!("subject id {} unresolved", edge.subject),
            ));
        }
        if !seen.contains(&edge.object) {
            out.push(Violation::new(
                &field,
                format!("object id {} unresolved", edge.object),
            ));
        }
        if edge.subject == edge.object {
            out.push(Violation::new(
                &field,
                format!("self-loop on id {}", edge.subject),
            ));
        }
    }
    out
}

/// Symmetric label-by-label similarity with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationTable {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
    index: HashMap<String, usize>,
}

impl RelationTable {
    pub fn new(labels: Vec<String>, matrix: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let n = labels.len();
        let bad = |msg: String| Err(ModelError::RelationTable(msg));
        if matrix.len() != n {
            return bad(format!("{} rows for {n} labels", matrix.len()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return bad(format!("duplicate label {label:?}"));
            }
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return bad(format!("row {i} has {} entries, expected {n}", row.len()));
            }
            for (j, &v) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    return bad(format!("entry ({i}, {j}) = {v} outside [0, 1]"));
                }
            }
            if row[i] != 1.0 {
                return bad(format!("diagonal entry {i} = {} is not 1", row[i]));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if (matrix[i][j] - matrix[j][i]).abs() > 1e-9 {
                    return bad(format!("entries ({i}, {j}) and ({j}, {i}) differ"));
                }
            }
        }
        Ok(Self {
            labels,
            matrix,
            index,
        })
    }

    pub fn empty() -> Self {
        Self {
            labels: Vec::new(),
            matrix: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Table entry for the two labels, if both are present.
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = *self.index.get(a)?;
        let j = *self.index.get(b)?;
        Some(self.matrix[i][j])
    }
}

/// Parameters of the graph matching algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperParams {
    /// Weight of node similarity against relation similarity in neighbor matching.
    pub alpha: f64,
    /// Update rate of each propagation sweep.
    pub beta: f64,
    /// Weight of the whole-image score in the final blend.
    pub gamma: f64,
    /// Number of propagation sweeps.
    pub iterations: u32,
    /// Flattening exponent for object importance (weights ∝ sum^(1/k)).
    pub k: f64,
}

impl HyperParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, iterations: u32, k: f64) -> Result<Self, ModelError> {
        let unit = |name, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ModelError::HyperParam {
                    name,
                    value,
                    range: "[0, 1]",
                })
            }
        };
        unit("alpha", alpha)?;
        unit("beta", beta)?;
        unit("gamma", gamma)?;
        if !(k >= 1.0 && k.is_finite()) {
            return Err(ModelError::HyperParam {
                name: "k",
                value: k,
                range: "[1, inf)",
            });
        }
        Ok(Self {
            alpha,
            beta,
            gamma,
            iterations,
            k,
        })
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self, ModelError> {
        Self::new(self.alpha, self.beta, gamma, self.iterations, self.k)
    }

    pub fn with_beta(self, beta: f64) -> Result<Self, ModelError> {
        Self::new(self.alpha, beta, self.gamma, self.iterations, self.k)
    }

    pub fn with_iterations(self, iterations: u32) -> Self {
        Self { iterations, ..self }
    }
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            alpha: 0.25,
            beta: 0.05,
            gamma: 0.10,
            iterations: 7,
            k: 2.25,
        }
    }
}

impl<'de> Deserialize<'de> for HyperParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            alpha: Option<f64>,
            beta: Option<f64>,
            gamma: Option<f64>,
            iterations: Option<u32>,
            k: Option<f64>,
        }
        let raw = Raw::deserialize(d)?;
        let def = HyperParams::default();
        HyperParams::new(
            raw.alpha.unwrap_or(def.alpha),
            raw.beta.unwrap_or(def.beta),
            raw.gamma.unwrap_or(def.gamma),
            raw.iterations.unwrap_or(def.iterations),
            raw.k.unwrap_or(def.k),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Dense row-major matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, ModelError> {
        if data.len() != rows * cols {
            return Err(ModelError::MatrixShape {
                rows,
                cols,
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged matrix rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }
}

/// Node-pair similarities between two graphs; every entry lies in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix(Matrix);

impl SimilarityMatrix {
    pub fn new(m: Matrix) -> Result<Self, ModelError> {
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                let v = m.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(ModelError::SimilarityRange {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Self(m))
    }

    /// Clamps every entry into [0, 1]. NaN becomes 0.
    pub fn clamped(mut m: Matrix) -> Self {
        for v in &mut m.data {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }
}

impl std::ops::Deref for SimilarityMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl Serialize for SimilarityMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.to_rows().serialize(s)
    }
}

/// 8-bit raster with one (gray) or three (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    channels: u8,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, channels: u8, data: Vec<u8>) -> Result<Self, ModelError> {
        if width == 0 || height == 0 {
            return Err(ModelError::Raster(format!(
                "dimensions {width}x{height} must be positive"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(ModelError::Raster(format!(
                "{channels} channels; expected 1 or 3"
            )));
        }
        let expected = width as usize * height as usize * channels as usize;
        if data.len() != expected {
            return Err(ModelError::Raster(format!(
                "{} samples for {width}x{height}x{channels}; expected {expected}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn gray_from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, 1, data).expect("valid gray raster")
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.data
    }

    /// BT.601 luma, row-major, unrounded.
    pub fn luma(&self) -> Vec<f64> {
        match self.channels {
            1 => self.data.iter().map(|&v| f64::from(v)).collect(),
            _ => self
                .data
                .chunks_exact(3)
                .map(|p| 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]))
                .collect(),
        }
    }
}

/// One matched node pair in the final assignment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchedPair {
    pub node1: u64,
    pub node2: u64,
    /// Mean importance of the two nodes.
    pub weight: f64,
    /// Final propagated similarity of the pair.
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub sess: f64,
    pub image_score: f64,
    pub graph_score: f64,
    pub matching: Vec<MatchedPair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<Vec<SimilarityMatrix>>,
    #[serde(
        skip_serializing_if = "Option::is_none",
        serialize_with = "serialize_baselines"
    )]
    pub baselines: Option<BTreeMap<String, f64>>,
}

/// Renders a metric value, writing infinities as `inf` / `-inf`.
pub fn format_metric(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn serialize_baselines<S: Serializer>(
    map: &Option<BTreeMap<String, f64>>,
    s: S,
) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let Some(map) = map else {
        return s.serialize_none();
    };
    let mut out = s.serialize_map(Some(map.len()))?;
    for (k, v) in map {
        if v.is_finite() {
            out.serialize_entry(k, v)?;
        } else {
            out.serialize_entry(k, &format_metric(*v))?;
        }
    }
    out.end()
}
