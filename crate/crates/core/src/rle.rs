//! COCO-style run-length encoded binary masks.
//!
//! Runs are counted in column-major order and alternate between background
//! and foreground, starting with background. The compressed string form is
//! the one used by the COCO API: each count (delta-coded against the count
//! two places earlier, from the fourth count on) is written as little-endian
//! groups of 5 bits offset by ASCII `0`, with bit 0x20 marking continuation.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RleError {
    #[error("invalid character {0:?} in RLE string")]
    BadChar(char),
    #[error("RLE string ends inside a count")]
    Truncated,
    #[error("RLE run {index} is negative")]
    NegativeRun { index: usize },
    #[error("RLE runs cover {covered} pixels, mask has {expected}")]
    Coverage { covered: u64, expected: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rle {
    width: u32,
    height: u32,
    counts: Vec<u32>,
}

impl Rle {
    pub fn new(width: u32, height: u32, counts: Vec<u32>) -> Result<Self, RleError> {
        let covered: u64 = counts.iter().map(|&c| u64::from(c)).sum();
        let expected = u64::from(width) * u64::from(height);
        if covered != expected {
            return Err(RleError::Coverage { covered, expected });
        }
        Ok(Self {
            width,
            height,
            counts,
        })
    }

    /// Encodes a row-major boolean mask.
    pub fn from_mask(width: u32, height: u32, mask: &[bool]) -> Self {
        assert_eq!(mask.len(), width as usize * height as usize, "mask size");
        let mut counts = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for x in 0..width as usize {
            for y in 0..height as usize {
                let v = mask[y * width as usize + x];
                if v != current {
                    counts.push(run);
                    run = 0;
                    current = v;
                }
                run += 1;
            }
        }
        counts.push(run);
        Self {
            width,
            height,
            counts,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Number of foreground pixels.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| u64::from(c)).sum()
    }

    /// Row-major boolean mask.
    pub fn decode(&self) -> Vec<bool> {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut out = vec![false; w * h];
        for (x, y) in self.foreground() {
            out[y as usize * w + x as usize] = true;
        }
        debug_assert_eq!(out.len(), w * h);
        out
    }

    /// Foreground pixel coordinates `(x, y)` in column-major order.
    pub fn foreground(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let h = u64::from(self.height.max(1));
        let mut offset = 0u64;
        self.counts.iter().enumerate().flat_map(move |(i, &c)| {
            let start = offset;
            offset += u64::from(c);
            let fg = i % 2 == 1;
            (start..start + if fg { u64::from(c) } else { 0 })
                .map(move |p| ((p / h) as u32, (p % h) as u32))
        })
    }

    pub fn parse(s: &str, width: u32, height: u32) -> Result<Self, RleError> {
        let bytes = s.as_bytes();
        let mut counts: Vec<i64> = Vec::new();
        let mut p = 0;
        while p < bytes.len() {
            let mut x: i64 = 0;
            let mut k = 0;
            loop {
                let Some(&b) = bytes.get(p) else {
                    return Err(RleError::Truncated);
                };
                if !(48..48 + 64).contains(&b) {
                    return Err(RleError::BadChar(b as char));
                }
                let c = i64::from(b - 48);
                x |= (c & 0x1f) << (5 * k);
                p += 1;
                k += 1;
                if c & 0x20 == 0 {
                    if c & 0x10 != 0 {
                        x |= -1i64 << (5 * k);
                    }
                    break;
                }
                if k > 12 {
                    return Err(RleError::Truncated);
                }
            }
            let m = counts.len();
            if m > 2 {
                x += counts[m - 2];
            }
            counts.push(x);
        }
        let mut out = Vec::with_capacity(counts.len());
        for (index, c) in counts.into_iter().enumerate() {
            let c = u32::try_from(c).map_err(|_| RleError::NegativeRun { index })?;
            out.push(c);
        }
        Self::new(width, height, out)
    }

    pub fn to_compressed(&self) -> String {
        let mut s = String::new();
        for i in 0..self.counts.len() {
            let mut x = i64::from(self.counts[i]);
            if i > 2 {
                x -= i64::from(self.counts[i - 2]);
            }
            loop {
                let mut c = x & 0x1f;
                x >>= 5;
                let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
                if more {
                    c |= 0x20;
                }
                s.push((c as u8 + 48) as char);
                if !more {
                    break;
                }
            }
        }
        s
    }
}
