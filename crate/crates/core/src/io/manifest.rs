//! Experiment manifests: JSON lines, one comparison per nonblank line.
//!
//! ```json
//! {"ref_graph": "ref.json", "cand_graph": "cand.json",
//!  "condition": {"name": "bpp", "value": 0.25},
//!  "ref_image": "ref.png", "cand_image": "cand.png",
//!  "ref_patches": "ref.emb", "cand_patches": "cand.emb"}
//! ```
//!
//! Relative paths resolve against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{check_fields, read_text, IoError};

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct Condition {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    /// 1-based line number in the manifest.
    pub line: usize,
    pub ref_graph: PathBuf,
    pub cand_graph: PathBuf,
    pub condition: Condition,
    pub ref_image: Option<PathBuf>,
    pub cand_image: Option<PathBuf>,
    pub ref_patches: Option<PathBuf>,
    pub cand_patches: Option<PathBuf>,
}

#[derive(Deserialize)]
struct RawEntry {
    ref_graph: PathBuf,
    cand_graph: PathBuf,
    condition: Condition,
    ref_image: Option<PathBuf>,
    cand_image: Option<PathBuf>,
    ref_patches: Option<PathBuf>,
    cand_patches: Option<PathBuf>,
}

const FIELDS: &[&str] = &[
    "ref_graph",
    "cand_graph",
    "condition",
    "ref_image",
    "cand_image",
    "ref_patches",
    "cand_patches",
];

pub fn parse_manifest(path: &Path, text: &str, strict: bool) -> Result<Vec<ManifestEntry>, IoError> {
    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 1;
        let at_line = |e: IoError| match e {
            IoError::Json {
                path,
                column,
                message,
                ..
            } => IoError::Json {
                offset: text
                    .lines()
                    .take(i)
                    .map(|l| l.len() + 1)
                    .sum::<usize>()
                    + column.saturating_sub(1),
                path,
                line: lineno,
                column,
                message,
            },
            other => other,
        };
        let value = super::parse_json(path, line).map_err(at_line)?;
        if strict {
            if let Some(obj) = value.as_object() {
                check_fields(path, &format!("line {lineno}"), obj, FIELDS)?;
            }
        }
        let raw: RawEntry = serde_json::from_value(value).map_err(|e| IoError::Schema {
            path: path.to_path_buf(),
            field: format!("line {lineno}"),
            message: e.to_string(),
        })?;
        let resolve = |p: PathBuf| base.join(p);
        out.push(ManifestEntry {
            line: lineno,
            ref_graph: resolve(raw.ref_graph),
            cand_graph: resolve(raw.cand_graph),
            condition: raw.condition,
            ref_image: raw.ref_image.map(resolve),
            cand_image: raw.cand_image.map(resolve),
            ref_patches: raw.ref_patches.map(resolve),
            cand_patches: raw.cand_patches.map(resolve),
        });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path, strict: bool) -> Result<Vec<ManifestEntry>, IoError> {
    parse_manifest(path, &read_text(path)?, strict)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lines_and_resolves_paths() {
        let text = "{\"ref_graph\": \"a.json\", \"cand_graph\": \"b.json\", \"condition\": {\"name\": \"bpp\", \"value\": 0.5}}\n\n{\"ref_graph\": \"/abs/a.json\", \"cand_graph\": \"b.json\", \"condition\": {\"name\": \"snr_db\", \"value\": 10}, \"ref_image\": \"a.png\"}\n";
        let m = parse_manifest(Path::new("dir/m.jsonl"), text, true).unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m[0].ref_graph, PathBuf::from("dir/a.json"));
        assert_eq!(m[1].ref_graph, PathBuf::from("/abs/a.json"));
        assert_eq!(m[1].line, 3);
        assert_eq!(m[1].condition.value, 10.0);
        assert_eq!(m[1].ref_image, Some(PathBuf::from("dir/a.png")));
    }

    #[test]
    fn errors_name_the_line() {
        let text = "{\"ref_graph\": \"a\", \"cand_graph\": \"b\", \"condition\": {\"name\": \"x\", \"value\": 1}}\n{\"ref_graph\": \n";
        match parse_manifest(Path::new("m.jsonl"), text, false) {
            Err(IoError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let text = "{\"ref_graph\": \"a\", \"condition\": {\"name\": \"x\", \"value\": 1}}\n";
        assert!(matches!(parse_manifest(Path::new("m.jsonl"), text, false), Err(IoError::Schema { .. })));
    }
}
