//! Relation similarity tables: `{"labels": [...], "matrix": [[...], ...]}`,
//! row-major, one row per label.

use std::path::Path;

use serde::Deserialize;
use serde_json::json;

use super::{check_fields, parse_json, read_text, IoError};
use crate::model::RelationTable;

#[derive(Deserialize)]
struct RawTable {
    labels: Vec<String>,
    matrix: Vec<Vec<f64>>,
}

pub fn parse_relation_table(path: &Path, text: &str, strict: bool) -> Result<RelationTable, IoError> {
    let value = parse_json(path, text)?;
    if strict {
        if let Some(obj) = value.as_object() {
            check_fields(path, "", obj, &["labels", "matrix"])?;
        }
    }
    let schema = |field: &str, message: String| IoError::Schema {
        path: path.to_path_buf(),
        field: field.to_string(),
        message,
    };
    let raw: RawTable = serde_json::from_value(value).map_err(|e| schema("(document)", e.to_string()))?;
    RelationTable::new(raw.labels, raw.matrix).map_err(|e| schema("matrix", e.to_string()))
}

pub fn read_relation_table(path: &Path, strict: bool) -> Result<RelationTable, IoError> {
    parse_relation_table(path, &read_text(path)?, strict)
}

pub fn relation_table_to_json(t: &RelationTable) -> String {
    let mut s = serde_json::to_string(&json!({"labels": t.labels(), "matrix": t.matrix()}))
        .expect("table serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_reject() {
        let p = Path::new("r.json");
        let t = parse_relation_table(p, r#"{"labels": ["on"], "matrix": [[1.0]]}"#, true).unwrap();
        assert_eq!(t.get("on", "on"), Some(1.0));
        assert_eq!(parse_relation_table(p, &relation_table_to_json(&t), true).unwrap(), t);
        let asym = r#"{"labels": ["a", "b"], "matrix": [[1, 0.2], [0.3, 1]]}"#;
        assert!(matches!(parse_relation_table(p, asym, false), Err(IoError::Schema { .. })));
        let extra = r#"{"labels": ["on"], "matrix": [[1.0]], "model": "clip"}"#;
        assert!(parse_relation_table(p, extra, false).is_ok());
        assert!(parse_relation_table(p, extra, true).is_err());
    }
}
