//! Annotation datasets: JSON lines of [`AnnotationRecord`]s, e.g.
//!
//! ```json
//! {"original": "orig.json", "candidates": [{"graph": "a.json", "human_score": 0.8},
//!                                          {"graph": "b.json", "human_score": 0.35}]}
//! ```

use std::path::Path;

use super::{read_text, IoError};
use crate::tuning::AnnotationRecord;

pub fn parse_annotations(path: &Path, text: &str) -> Result<Vec<AnnotationRecord>, IoError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: AnnotationRecord = serde_json::from_str(line).map_err(|e| IoError::Schema {
            path: path.to_path_buf(),
            field: format!("line {}", i + 1),
            message: e.to_string(),
        })?;
        rec.validate(out.len()).map_err(|e| IoError::Schema {
            path: path.to_path_buf(),
            field: format!("line {}", i + 1),
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>, IoError> {
    parse_annotations(path, &read_text(path)?)
}
