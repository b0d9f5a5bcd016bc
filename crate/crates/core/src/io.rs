//! PFM and binary PPM reading and writing.
//!
//! PFM floats are rounded to the nearest binary16 (ties to even). NaN
//! payloads are carried bit-for-bit in both directions so that
//! `read_pfm(write_pfm(img)) == img` for every code.

use std::fs;
use std::path::Path;

use half::f16;
use thiserror::Error;

use crate::model::{code_to_half, half_to_code, make_image, HdrImage, PixelType};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("unsupported PFM: {0}")]
    UnsupportedPfm(&'static str),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("maxval {0} is not a 16-bit PPM maxval")]
    MaxvalUnsupported(u32),
    #[error("truncated pixel data: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("sample {sample} exceeds maxval {maxval}")]
    SampleAboveMaxval { sample: u16, maxval: u16 },
    #[error("{0:?} images cannot be written in this format")]
    WrongPixelType(PixelType),
    #[error("unrecognized image format")]
    UnknownFormat,
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
    #[error(transparent)]
    Os(#[from] std::io::Error),
}

/// binary32 -> binary16, round to nearest even; NaN keeps sign and the top
/// ten payload bits.
pub fn f32_to_code(v: f32) -> u16 {
    if v.is_nan() {
        let b = v.to_bits();
        let sign = ((b >> 16) & 0x8000) as u16;
        let mantissa = ((b >> 13) & 0x03FF) as u16;
        return sign | 0x7C00 | if mantissa == 0 { 0x0200 } else { mantissa };
    }
    half_to_code(f16::from_f32(v))
}

/// binary16 -> binary32, exact; NaN payloads are shifted into place.
pub fn code_to_f32(c: u16) -> f32 {
    if c & 0x7C00 == 0x7C00 && c & 0x03FF != 0 {
        let sign = ((c & 0x8000) as u32) << 16;
        return f32::from_bits(sign | 0x7F80_0000 | ((c & 0x03FF) as u32) << 13);
    }
    code_to_half(c).to_f32()
}

/// Reads `count` whitespace-separated header tokens, skipping `#` comments,
/// and returns them with the offset of the single whitespace byte that
/// ends the header.
fn header_tokens(data: &[u8], count: usize) -> Result<(Vec<String>, usize), IoError> {
    let mut tokens = Vec::with_capacity(count);
    let mut pos = 0;
    while tokens.len() < count {
        while pos < data.len() && data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if data.get(pos) == Some(&b'#') {
            while pos < data.len() && data[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < data.len() && !data[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos || pos >= data.len() {
            return Err(IoError::MalformedHeader("header ends early".into()));
        }
        let tok = std::str::from_utf8(&data[start..pos])
            .map_err(|_| IoError::MalformedHeader("non-ASCII header".into()))?;
        tokens.push(tok.to_string());
    }
    Ok((tokens, pos + 1))
}

fn dimension(tok: &str) -> Result<usize, IoError> {
    match tok.parse::<usize>() {
        Ok(v) if v > 0 && v <= u32::MAX as usize => Ok(v),
        _ => Err(IoError::MalformedHeader(format!("bad dimension {tok:?}"))),
    }
}

fn pixel_bytes(w: usize, h: usize, bytes_per_pixel: usize) -> Result<usize, IoError> {
    w.checked_mul(h)
        .and_then(|n| n.checked_mul(bytes_per_pixel))
        .ok_or_else(|| IoError::MalformedHeader("image too large".into()))
}

fn body(data: &[u8], start: usize, expected: usize) -> Result<&[u8], IoError> {
    let found = data.len().saturating_sub(start);
    if found < expected {
        return Err(IoError::Truncated { expected, found });
    }
    Ok(&data[start..start + expected])
}

pub fn decode_pfm(data: &[u8]) -> Result<HdrImage, IoError> {
    match data.get(..2) {
        Some(b"PF") => {}
        Some(b"Pf") => return Err(IoError::UnsupportedPfm("grayscale PFM")),
        _ => return Err(IoError::MalformedHeader("not a PFM file".into())),
    }
    let (t, start) = header_tokens(data, 4)?;
    if t[0] != "PF" {
        return Err(IoError::MalformedHeader("bad magic".into()));
    }
    let (w, h) = (dimension(&t[1])?, dimension(&t[2])?);
    let scale: f64 = t[3]
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| IoError::MalformedHeader(format!("bad scale {:?}", t[3])))?;
    let little = scale < 0.0;
    let raw = body(data, start, pixel_bytes(w, h, 12)?)?;
    let mut planes: [Vec<u16>; 3] = std::array::from_fn(|_| vec![0; w * h]);
    for (i, px) in raw.chunks_exact(12).enumerate() {
        // Rows are stored bottom-up.
        let (x, y) = (i % w, h - 1 - i / w);
        for c in 0..3 {
            let b: [u8; 4] = px[4 * c..4 * c + 4].try_into().unwrap();
            let v = if little { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
            planes[c][y * w + x] = f32_to_code(v);
        }
    }
    Ok(make_image(w, h, planes, PixelType::HalfFloat)?)
}

/// Little-endian PFM (scale -1).
pub fn encode_pfm(img: &HdrImage) -> Result<Vec<u8>, IoError> {
    if img.pixel_type() != PixelType::HalfFloat {
        return Err(IoError::WrongPixelType(img.pixel_type()));
    }
    let (w, h) = (img.width(), img.height());
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for y in (0..h).rev() {
        for x in 0..w {
            for c in 0..3 {
                out.extend_from_slice(&code_to_f32(img.plane(c).get(x, y)).to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Parses a binary PPM. Maxval up to 255 gives `UInt(8)`; otherwise the
/// bit depth is the bit length of maxval.
pub fn decode_ppm(data: &[u8]) -> Result<HdrImage, IoError> {
    if data.get(..2) != Some(b"P6") {
        return Err(IoError::MalformedHeader("not a binary PPM file".into()));
    }
    let (t, start) = header_tokens(data, 4)?;
    if t[0] != "P6" {
        return Err(IoError::MalformedHeader("bad magic".into()));
    }
    let (w, h) = (dimension(&t[1])?, dimension(&t[2])?);
    let maxval: u32 = match t[3].parse() {
        Ok(m) if (1..=65535).contains(&m) => m,
        _ => return Err(IoError::MalformedHeader(format!("bad maxval {:?}", t[3]))),
    };
    let wide = maxval > 255;
    let depth = if wide { 32 - maxval.leading_zeros() } else { 8 } as u8;
    let raw = body(data, start, pixel_bytes(w, h, if wide { 6 } else { 3 })?)?;
    let mut planes: [Vec<u16>; 3] = std::array::from_fn(|_| Vec::with_capacity(w * h));
    let samples: Box<dyn Iterator<Item = u16>> = if wide {
        Box::new(raw.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])))
    } else {
        Box::new(raw.iter().map(|&b| b as u16))
    };
    for (i, s) in samples.enumerate() {
        if s as u32 > maxval {
            return Err(IoError::SampleAboveMaxval {
                sample: s,
                maxval: maxval as u16,
            });
        }
        planes[i % 3].push(s);
    }
    Ok(make_image(w, h, planes, PixelType::uint(depth)?)?)
}

/// Like [`decode_ppm`], restricted to two-byte samples.
pub fn decode_ppm16(data: &[u8]) -> Result<HdrImage, IoError> {
    let img = decode_ppm(data)?;
    if img.pixel_type() == PixelType::UInt(8) {
        let (t, _) = header_tokens(data, 4)?;
        return Err(IoError::MaxvalUnsupported(t[3].parse().unwrap_or(0)));
    }
    Ok(img)
}

/// Binary PPM with maxval `2^d - 1`; one-byte samples for `UInt(8)`.
pub fn encode_ppm(img: &HdrImage) -> Result<Vec<u8>, IoError> {
    let PixelType::UInt(d) = img.pixel_type() else {
        return Err(IoError::WrongPixelType(img.pixel_type()));
    };
    let (w, h) = (img.width(), img.height());
    let maxval = img.pixel_type().max_code();
    let mut out = format!("P6\n{w} {h}\n{maxval}\n").into_bytes();
    let wide = d > 8;
    out.reserve(w * h * if wide { 6 } else { 3 });
    for i in 0..w * h {
        for c in 0..3 {
            let s = img.plane(c).samples()[i];
            if wide {
                out.extend_from_slice(&s.to_be_bytes());
            } else {
                out.push(s as u8);
            }
        }
    }
    Ok(out)
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<HdrImage, IoError> {
    decode_pfm(&fs::read(path)?)
}

pub fn write_pfm(img: &HdrImage, path: impl AsRef<Path>) -> Result<(), IoError> {
    Ok(fs::write(path, encode_pfm(img)?)?)
}

pub fn read_ppm16(path: impl AsRef<Path>) -> Result<HdrImage, IoError> {
    decode_ppm16(&fs::read(path)?)
}

pub fn write_ppm16(img: &HdrImage, path: impl AsRef<Path>) -> Result<(), IoError> {
    Ok(fs::write(path, encode_ppm(img)?)?)
}

/// Decodes PFM or PPM by magic.
pub fn decode_image(data: &[u8]) -> Result<HdrImage, IoError> {
    match data.get(..2) {
        Some(b"PF") | Some(b"Pf") => decode_pfm(data),
        Some(b"P6") => decode_ppm(data),
        _ => Err(IoError::UnknownFormat),
    }
}

/// PFM for half-float images, PPM otherwise.
pub fn encode_image(img: &HdrImage) -> Result<Vec<u8>, IoError> {
    match img.pixel_type() {
        PixelType::HalfFloat => encode_pfm(img),
        PixelType::UInt(_) => encode_ppm(img),
    }
}

pub fn read_image(path: impl AsRef<Path>) -> Result<HdrImage, IoError> {
    decode_image(&fs::read(path)?)
}

pub fn write_image(img: &HdrImage, path: impl AsRef<Path>) -> Result<(), IoError> {
    Ok(fs::write(path, encode_image(img)?)?)
}
