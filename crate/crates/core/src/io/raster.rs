//! Raster decoding: 8-bit PNG (gray, gray+alpha, RGB, RGBA, palette) and
//! binary PGM/PPM with maxval 255. Alpha is dropped; samples are returned
//! exactly as stored.

use std::io::Cursor;
use std::path::Path;

use super::{read_file, IoError};
use crate::model::Raster;

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

pub fn decode_raster(path: &Path, bytes: &[u8]) -> Result<Raster, IoError> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(path, bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        decode_pnm(path, bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && bytes[1].is_ascii_digit() {
        Err(unsupported(path, format!("PNM variant P{} (only P5 and P6 are read)", bytes[1] as char)))
    } else {
        Err(unsupported(path, "not a PNG, PGM or PPM file".into()))
    }
}

pub fn read_raster(path: &Path) -> Result<Raster, IoError> {
    decode_raster(path, &read_file(path)?)
}

fn unsupported(path: &Path, message: String) -> IoError {
    IoError::UnsupportedFormat {
        path: path.to_path_buf(),
        message,
    }
}

fn corrupt(path: &Path, message: impl Into<String>) -> IoError {
    IoError::CorruptFile {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn decode_png(path: &Path, bytes: &[u8]) -> Result<Raster, IoError> {
    let png_err = |e: png::DecodingError| match e {
        png::DecodingError::LimitsExceeded => unsupported(path, "image exceeds decoder limits".into()),
        other => corrupt(path, other.to_string()),
    };
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| unsupported(path, "image too large".into()))?;
    let mut buf = vec![0; size];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    reader.finish().map_err(png_err)?;
    if info.bit_depth != png::BitDepth::Eight {
        return Err(unsupported(path, format!("{:?}-bit samples", info.bit_depth)));
    }
    buf.truncate(info.buffer_size());
    let (stride, channels) = match info.color_type {
        png::ColorType::Grayscale => (1, 1),
        png::ColorType::GrayscaleAlpha => (2, 1),
        png::ColorType::Rgb => (3, 3),
        png::ColorType::Rgba => (4, 3),
        png::ColorType::Indexed => return Err(unsupported(path, "unexpanded palette".into())),
    };
    let data: Vec<u8> = if stride == channels {
        buf
    } else {
        buf.chunks_exact(stride).flat_map(|px| px[..channels].iter().copied()).collect()
    };
    Raster::new(info.width, info.height, channels as u8, data).map_err(|e| corrupt(path, e.to_string()))
}

struct PnmHeader {
    channels: u8,
    width: u32,
    height: u32,
    data_start: usize,
}

fn parse_pnm_header(path: &Path, bytes: &[u8]) -> Result<PnmHeader, IoError> {
    let channels = if bytes[1] == b'5' { 1 } else { 3 };
    let mut pos = 2;
    let mut fields = [0u64; 3];
    for field in &mut fields {
        loop {
            match bytes.get(pos) {
                None => return Err(corrupt(path, "truncated header")),
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n' && b != b'\r') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(_) => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(corrupt(path, format!("expected a number at byte {start}")));
        }
        let digits = std::str::from_utf8(&bytes[start..pos]).expect("ascii digits");
        *field = digits
            .parse()
            .map_err(|_| corrupt(path, format!("number out of range at byte {start}")))?;
    }
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        None => return Err(corrupt(path, "truncated header")),
        Some(_) => return Err(corrupt(path, format!("expected whitespace at byte {pos}"))),
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(unsupported(path, format!("maxval {maxval} (only 255 is read)")));
    }
    let dim = |v: u64, what: &str| {
        u32::try_from(v)
            .ok()
            .filter(|&v| v > 0)
            .ok_or_else(|| corrupt(path, format!("invalid {what} {v}")))
    };
    Ok(PnmHeader {
        channels,
        width: dim(width, "width")?,
        height: dim(height, "height")?,
        data_start: pos,
    })
}

fn decode_pnm(path: &Path, bytes: &[u8]) -> Result<Raster, IoError> {
    let h = parse_pnm_header(path, bytes)?;
    let len = h.width as usize * h.height as usize * h.channels as usize;
    let data = &bytes[h.data_start..];
    if data.len() < len {
        return Err(corrupt(path, format!("{} sample bytes, expected {len}", data.len())));
    }
    Raster::new(h.width, h.height, h.channels, data[..len].to_vec()).map_err(|e| corrupt(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_with_comments() {
        let bytes = b"P5\n# made by hand\n2 2\n255\n\x00\x40\x80\xff";
        let r = decode_raster(Path::new("a.pgm"), bytes).unwrap();
        assert_eq!((r.width(), r.height(), r.channels()), (2, 2, 1));
        assert_eq!(r.samples(), &[0, 64, 128, 255]);
    }

    #[test]
    fn ppm_and_rejections() {
        let bytes = b"P6 1 1 255 \x01\x02\x03";
        let r = decode_raster(Path::new("a.ppm"), bytes).unwrap();
        assert_eq!(r.samples(), &[1, 2, 3]);
        let p = Path::new("x");
        assert!(matches!(decode_raster(p, b"P6 1 1 255 \x01\x02"), Err(IoError::CorruptFile { .. })));
        assert!(matches!(decode_raster(p, b"P6 1 1"), Err(IoError::CorruptFile { .. })));
        assert!(matches!(decode_raster(p, b"P5 1 1 65535 \x00\x00"), Err(IoError::UnsupportedFormat { .. })));
        assert!(matches!(decode_raster(p, b"P2 1 1 255 0"), Err(IoError::UnsupportedFormat { .. })));
        assert!(matches!(decode_raster(p, b"GIF89a"), Err(IoError::UnsupportedFormat { .. })));
    }

    fn encode_png(w: u32, h: u32, color: png::ColorType, depth: png::BitDepth, data: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut out, w, h);
            enc.set_color(color);
            enc.set_depth(depth);
            let mut writer = enc.write_header().unwrap();
            writer.write_image_data(data).unwrap();
        }
        out
    }

    #[test]
    fn png_alpha_is_stripped() {
        let bytes = encode_png(2, 1, png::ColorType::Rgba, png::BitDepth::Eight, &[1, 2, 3, 9, 4, 5, 6, 0]);
        let r = decode_raster(Path::new("a.png"), &bytes).unwrap();
        assert_eq!(r.channels(), 3);
        assert_eq!(r.samples(), &[1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn png_16_bit_and_truncation() {
        let p = Path::new("a.png");
        let deep = encode_png(1, 1, png::ColorType::Grayscale, png::BitDepth::Sixteen, &[1, 2]);
        assert!(matches!(decode_raster(p, &deep), Err(IoError::UnsupportedFormat { .. })));
        let ok = encode_png(4, 4, png::ColorType::Grayscale, png::BitDepth::Eight, &[7; 16]);
        assert!(matches!(decode_raster(p, &ok[..ok.len() - 20]), Err(IoError::CorruptFile { .. })));
    }
}
