//! File formats: scene graphs, relation tables, manifests, annotation
//! datasets, binary embedding sidecars, rasters, and DOT match exports.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::model::Violation;

pub mod annotations;
pub mod dot;
pub mod embeddings;
pub mod graph_file;
pub mod manifest;
pub mod raster;
pub mod relation_file;

pub use annotations::read_annotations;
pub use dot::matching_to_dot;
pub use embeddings::{read_embeddings, write_embeddings};
pub use graph_file::{graph_to_canonical_json, parse_graph, read_graph};
pub use manifest::{read_manifest, ManifestEntry};
pub use raster::{decode_raster, read_raster};
pub use relation_file::{read_relation_table, relation_table_to_json};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid JSON at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        path: PathBuf,
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: field {field}: {message}")]
    Schema {
        path: PathBuf,
        field: String,
        message: String,
    },
    #[error("{path}: {}", render(.violations))]
    Invalid {
        path: PathBuf,
        violations: Vec<Violation>,
    },
    #[error("{path}: unsupported format: {message}")]
    UnsupportedFormat { path: PathBuf, message: String },
    #[error("{path}: corrupt file: {message}")]
    CorruptFile { path: PathBuf, message: String },
}

fn render(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>, IoError> {
    std::fs::read(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    let bytes = read_file(path)?;
    String::from_utf8(bytes).map_err(|e| IoError::CorruptFile {
        path: path.to_path_buf(),
        message: format!("not UTF-8 at byte {}", e.utf8_error().valid_up_to()),
    })
}

/// Byte offset of a 1-based (line, column) position reported by serde_json.
pub fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in text.split_inclusive('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len();
    }
    text.len()
}

pub(crate) fn parse_json(path: &Path, text: &str) -> Result<serde_json::Value, IoError> {
    serde_json::from_str(text).map_err(|e| IoError::Json {
        path: path.to_path_buf(),
        offset: byte_offset(text, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

/// Rejects keys of `obj` outside `known`.
pub(crate) fn check_fields(
    path: &Path,
    field: &str,
    obj: &serde_json::Map<String, serde_json::Value>,
    known: &[&str],
) -> Result<(), IoError> {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            return Err(IoError::Schema {
                path: path.to_path_buf(),
                field: if field.is_empty() {
                    key.clone()
                } else {
                    format!("{field}.{key}")
                },
                message: "unknown field".into(),
            });
        }
    }
    Ok(())
}
