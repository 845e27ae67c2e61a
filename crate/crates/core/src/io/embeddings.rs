//! Binary embedding sidecars: the 4-byte magic `SEMB`, then the dimension
//! and the vector count as little-endian `u32`, then `count * dimension`
//! little-endian `f32` values, vector by vector.

use std::path::Path;

use super::{read_file, IoError};

pub const MAGIC: &[u8; 4] = b"SEMB";
const HEADER: usize = 12;

pub fn decode_embeddings(path: &Path, bytes: &[u8]) -> Result<Vec<Vec<f64>>, IoError> {
    let corrupt = |message: String| IoError::CorruptFile {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(IoError::UnsupportedFormat {
            path: path.to_path_buf(),
            message: "missing SEMB magic".into(),
        });
    }
    if bytes.len() < HEADER {
        return Err(corrupt("truncated header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes")) as usize;
    let (dim, count) = (word(4), word(8));
    if dim == 0 {
        return Err(corrupt("dimension is zero".into()));
    }
    let expected = dim
        .checked_mul(count)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER))
        .ok_or_else(|| corrupt("header sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(corrupt(format!("{} bytes, header implies {expected}", bytes.len())));
    }
    let values: Vec<f64> = bytes[HEADER..]
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes(c.try_into().expect("4 bytes"))))
        .collect();
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(corrupt(format!("value {i} is not finite")));
    }
    Ok(values.chunks(dim).map(<[f64]>::to_vec).collect())
}

pub fn read_embeddings(path: &Path) -> Result<Vec<Vec<f64>>, IoError> {
    decode_embeddings(path, &read_file(path)?)
}

/// Encodes vectors of equal length; values are narrowed to `f32`.
pub fn encode_embeddings(vectors: &[Vec<f64>]) -> Vec<u8> {
    let dim = vectors.first().map_or(0, Vec::len);
    assert!(vectors.iter().all(|v| v.len() == dim), "ragged embeddings");
    let mut out = Vec::with_capacity(HEADER + vectors.len() * dim * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(vectors.len() as u32).to_le_bytes());
    for v in vectors.iter().flatten() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn write_embeddings(path: &Path, vectors: &[Vec<f64>]) -> Result<(), IoError> {
    std::fs::write(path, encode_embeddings(vectors)).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}
