//! Scene-graph JSON files.
//!
//! ```json
//! {"schema_version": "1",
//!  "image": {"id": "img-1", "width": 64, "height": 48, "embedding": [0.1, 0.2]},
//!  "nodes": [{"id": 1, "label": "person", "bbox": [0, 0, 10, 20],
//!             "mask_rle": "...", "embedding": [0.3, 0.1], "raw_importance": 2.5}],
//!  "edges": [{"subject": 1, "object": 2, "relation": "riding"}]}
//! ```
//!
//! `mask_rle` and `raw_importance` are optional. Unknown fields are an error
//! in strict mode and ignored otherwise. The canonical form written by
//! [`graph_to_canonical_json`] is compact JSON with sorted keys and
//! shortest round-trip float formatting, so load, save, load is a fixpoint.

use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};

use super::{check_fields, parse_json, read_text, IoError};
use crate::model::{
    validate_graph, BBox, Embedding, GraphEdge, GraphNode, ImageMeta, Region, SceneGraph,
};
use crate::rle::Rle;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Deserialize)]
struct RawGraph {
    schema_version: String,
    image: RawImage,
    #[serde(default)]
    nodes: Vec<RawNode>,
    #[serde(default)]
    edges: Vec<RawEdge>,
}

#[derive(Deserialize)]
struct RawImage {
    id: String,
    width: u32,
    height: u32,
    embedding: Vec<f64>,
}

#[derive(Deserialize)]
struct RawNode {
    id: u64,
    label: String,
    bbox: [u32; 4],
    mask_rle: Option<String>,
    embedding: Vec<f64>,
    raw_importance: Option<f64>,
}

#[derive(Deserialize)]
struct RawEdge {
    subject: u64,
    object: u64,
    relation: String,
}

const TOP_FIELDS: &[&str] = &["schema_version", "image", "nodes", "edges"];
const IMAGE_FIELDS: &[&str] = &["id", "width", "height", "embedding"];
const NODE_FIELDS: &[&str] = &["id", "label", "bbox", "mask_rle", "embedding", "raw_importance"];
const EDGE_FIELDS: &[&str] = &["subject", "object", "relation"];

fn strict_check(path: &Path, v: &Value) -> Result<(), IoError> {
    let Some(top) = v.as_object() else {
        return Ok(());
    };
    check_fields(path, "", top, TOP_FIELDS)?;
    if let Some(img) = top.get("image").and_then(Value::as_object) {
        check_fields(path, "image", img, IMAGE_FIELDS)?;
    }
    for (key, known) in [("nodes", NODE_FIELDS), ("edges", EDGE_FIELDS)] {
        if let Some(items) = top.get(key).and_then(Value::as_array) {
            for (i, item) in items.iter().enumerate() {
                if let Some(obj) = item.as_object() {
                    check_fields(path, &format!("{key}[{i}]"), obj, known)?;
                }
            }
        }
    }
    Ok(())
}

/// Parses and validates a graph document.
pub fn parse_graph(path: &Path, text: &str, strict: bool) -> Result<SceneGraph, IoError> {
    let value = parse_json(path, text)?;
    if strict {
        strict_check(path, &value)?;
    }
    let schema = |field: String, message: String| IoError::Schema {
        path: path.to_path_buf(),
        field,
        message,
    };
    let raw: RawGraph = serde_json::from_value(value).map_err(|e| schema("(document)".into(), e.to_string()))?;
    if raw.schema_version != SCHEMA_VERSION {
        return Err(schema(
            "schema_version".into(),
            format!("expected {SCHEMA_VERSION:?}, got {:?}", raw.schema_version),
        ));
    }
    let image_embedding = Embedding::new(raw.image.embedding)
        .map_err(|e| schema("image.embedding".into(), e.to_string()))?;
    let (width, height) = (raw.image.width, raw.image.height);
    let mut nodes = Vec::with_capacity(raw.nodes.len());
    for (i, n) in raw.nodes.into_iter().enumerate() {
        let embedding = Embedding::new(n.embedding)
            .map_err(|e| schema(format!("nodes[{i}].embedding"), e.to_string()))?;
        let mask = n
            .mask_rle
            .map(|s| Rle::parse(&s, width, height))
            .transpose()
            .map_err(|e| schema(format!("nodes[{i}].mask_rle"), e.to_string()))?;
        let [x, y, w, h] = n.bbox;
        nodes.push(GraphNode {
            id: n.id,
            label: n.label,
            region: Region {
                bbox: BBox::new(x, y, w, h),
                mask,
            },
            embedding,
            raw_importance: n.raw_importance,
        });
    }
    let edges = raw
        .edges
        .into_iter()
        .map(|e| GraphEdge::new(e.subject, e.object, e.relation))
        .collect();
    let graph = SceneGraph {
        image: ImageMeta {
            width,
            height,
            source_id: raw.image.id,
        },
        image_embedding,
        nodes,
        edges,
    };
    let violations = validate_graph(&graph, None);
    if !violations.is_empty() {
        return Err(IoError::Invalid {
            path: path.to_path_buf(),
            violations,
        });
    }
    Ok(graph)
}

pub fn read_graph(path: &Path, strict: bool) -> Result<SceneGraph, IoError> {
    parse_graph(path, &read_text(path)?, strict)
}

fn graph_value(g: &SceneGraph) -> Value {
    let nodes: Vec<Value> = g
        .nodes
        .iter()
        .map(|n| {
            let b = n.region.bbox;
            let mut obj = Map::new();
            obj.insert("id".into(), json!(n.id));
            obj.insert("label".into(), json!(n.label));
            obj.insert("bbox".into(), json!([b.x, b.y, b.w, b.h]));
            obj.insert("embedding".into(), json!(n.embedding.as_slice()));
            if let Some(mask) = &n.region.mask {
                obj.insert("mask_rle".into(), json!(mask.to_compressed()));
            }
            if let Some(raw) = n.raw_importance {
                obj.insert("raw_importance".into(), json!(raw));
            }
            Value::Object(obj)
        })
        .collect();
    let edges: Vec<Value> = g
        .edges
        .iter()
        .map(|e| json!({"subject": e.subject, "object": e.object, "relation": e.relation}))
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "image": {
            "id": g.image.source_id,
            "width": g.image.width,
            "height": g.image.height,
            "embedding": g.image_embedding.as_slice(),
        },
        "nodes": nodes,
        "edges": edges,
    })
}

/// Canonical text of a graph: compact, sorted keys, newline-terminated.
pub fn graph_to_canonical_json(g: &SceneGraph) -> String {
    let mut s = serde_json::to_string(&graph_value(g)).expect("graph values serialize");
    s.push('\n');
    s
}
