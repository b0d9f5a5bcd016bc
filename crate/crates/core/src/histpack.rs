//! Histograms, sparseness, histogram packing and the unpacking table format.
//!
//! Packing replaces each sample by the rank of its value among the values
//! that actually occur, so the packed plane ("index plane") has a dense
//! histogram over `0..N`. The sorted list of occurring values is the
//! unpacking table; it is strictly increasing, so it is stored as a DPCM
//! of `delta - 1` varints and then DEFLATE-compressed.
//!
//! Serialized layout, before compression:
//!
//! ```text
//! varint(N) ‖ zigzag-varint(values[0]) ‖ varint(values[i] - values[i-1] - 1), i = 1..N
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;
use thiserror::Error;

use crate::model::Plane;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HistPackError {
    #[error("empty plane")]
    EmptyPlane,
    #[error("sample {sample} at position {position} is not in the unpacking table")]
    ValueNotInTable { sample: i32, position: usize },
    #[error("index {index} at position {position} exceeds table of {len} entries")]
    IndexOutOfTable {
        index: u32,
        position: usize,
        len: usize,
    },
    #[error("corrupt unpacking table: {0}")]
    CorruptTable(String),
    #[error("unpacking table values must be strictly increasing")]
    NotIncreasing,
    #[error("index plane exceeds the supported index range")]
    IndexRange,
    #[error("plane size mismatch: {0}")]
    Dimensions(String),
}

/// Sparse value -> count map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    counts: BTreeMap<i32, u64>,
    total: u64,
}

impl Histogram {
    pub fn counts(&self) -> &BTreeMap<i32, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn used_bins(&self) -> usize {
        self.counts.len()
    }

    pub fn min(&self) -> Option<i32> {
        self.counts.keys().next().copied()
    }

    pub fn max(&self) -> Option<i32> {
        self.counts.keys().next_back().copied()
    }
}

pub fn build_histogram(p: &Plane<i32>) -> Result<Histogram, HistPackError> {
    if p.is_empty() {
        return Err(HistPackError::EmptyPlane);
    }
    let mut sorted = p.samples().to_vec();
    sorted.sort_unstable();
    let mut counts = BTreeMap::new();
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let run = sorted[i..].iter().take_while(|&&s| s == v).count();
        counts.insert(v, run as u64);
        i += run;
    }
    Ok(Histogram {
        counts,
        total: sorted.len() as u64,
    })
}

/// `alpha = |X| / (max X - min X + 1)` over the occupied bins `X`.
///
/// `alpha = 1` is a fully dense histogram; [`Sparseness::emptiness`] is the
/// complementary fraction of empty bins inside the span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sparseness {
    pub alpha: f64,
    pub used_bins: u64,
    pub span: u64,
}

impl Sparseness {
    pub fn emptiness(&self) -> f64 {
        1.0 - self.alpha
    }

    /// `(used_bins, span)`, the exact rational form of alpha.
    pub fn ratio(&self) -> (u64, u64) {
        (self.used_bins, self.span)
    }
}

pub fn sparseness(h: &Histogram) -> Result<Sparseness, HistPackError> {
    let (min, max) = match (h.min(), h.max()) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(HistPackError::EmptyPlane),
    };
    let used_bins = h.used_bins() as u64;
    let span = (max as i64 - min as i64 + 1) as u64;
    Ok(Sparseness {
        alpha: used_bins as f64 / span as f64,
        used_bins,
        span,
    })
}

/// Strictly increasing list of sample values; index `i` stands for `values[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnpackingTable {
    values: Vec<i32>,
}

impl UnpackingTable {
    pub fn new(values: Vec<i32>) -> Result<Self, HistPackError> {
        if values.is_empty() {
            return Err(HistPackError::EmptyPlane);
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(HistPackError::NotIncreasing);
        }
        Ok(UnpackingTable { values })
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sparseness of any plane this table was built from.
    pub fn sparseness(&self) -> Sparseness {
        let used_bins = self.values.len() as u64;
        let span = (*self.values.last().unwrap() as i64 - self.values[0] as i64 + 1) as u64;
        Sparseness {
            alpha: used_bins as f64 / span as f64,
            used_bins,
            span,
        }
    }
}

pub fn build_packing(h: &Histogram) -> Result<UnpackingTable, HistPackError> {
    UnpackingTable::new(h.counts.keys().copied().collect())
}

/// Largest index value any plane may carry.
pub const MAX_INDEX: u32 = (1 << 31) - 1;

/// Plane of non-negative indices bounded by `max_index`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPlane {
    width: usize,
    height: usize,
    max_index: u32,
    indices: Vec<u32>,
}

impl IndexPlane {
    pub fn new(
        width: usize,
        height: usize,
        max_index: u32,
        indices: Vec<u32>,
    ) -> Result<Self, HistPackError> {
        if width.checked_mul(height) != Some(indices.len()) {
            return Err(HistPackError::Dimensions(format!(
                "{width}x{height} vs {} indices",
                indices.len()
            )));
        }
        if max_index > MAX_INDEX || indices.iter().any(|&i| i > max_index) {
            return Err(HistPackError::IndexRange);
        }
        Ok(IndexPlane {
            width,
            height,
            max_index,
            indices,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_index(&self) -> u32 {
        self.max_index
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn to_plane(&self) -> Plane<i32> {
        Plane::new(
            self.width,
            self.height,
            self.indices.iter().map(|&i| i as i32).collect(),
        )
        .expect("validated dims")
    }
}

pub fn pack_plane(p: &Plane<i32>, t: &UnpackingTable) -> Result<IndexPlane, HistPackError> {
    if t.len() - 1 > MAX_INDEX as usize {
        return Err(HistPackError::IndexRange);
    }
    let mut indices = Vec::with_capacity(p.len());
    for (position, &sample) in p.samples().iter().enumerate() {
        let i = t
            .values
            .binary_search(&sample)
            .map_err(|_| HistPackError::ValueNotInTable { sample, position })?;
        indices.push(i as u32);
    }
    Ok(IndexPlane {
        width: p.width(),
        height: p.height(),
        max_index: (t.len() - 1) as u32,
        indices,
    })
}

pub fn unpack_plane(ip: &IndexPlane, t: &UnpackingTable) -> Result<Plane<i32>, HistPackError> {
    let samples = ip
        .indices
        .iter()
        .enumerate()
        .map(|(position, &index)| {
            t.values
                .get(index as usize)
                .copied()
                .ok_or(HistPackError::IndexOutOfTable {
                    index,
                    position,
                    len: t.len(),
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plane::new(ip.width, ip.height, samples).expect("validated dims"))
}

/// Offsets a plane so its minimum becomes index 0, without packing.
///
/// Returns the index plane and the offset (the plane minimum).
pub fn offset_plane(p: &Plane<i32>) -> Result<(IndexPlane, i32), HistPackError> {
    let min = *p.samples().iter().min().ok_or(HistPackError::EmptyPlane)?;
    let max = *p.samples().iter().max().unwrap();
    let span = max as i64 - min as i64;
    if span > MAX_INDEX as i64 {
        return Err(HistPackError::IndexRange);
    }
    let indices = p.samples().iter().map(|&s| (s as i64 - min as i64) as u32).collect();
    Ok((
        IndexPlane {
            width: p.width(),
            height: p.height(),
            max_index: span as u32,
            indices,
        },
        min,
    ))
}

pub fn unoffset_plane(ip: &IndexPlane, offset: i32) -> Result<Plane<i32>, HistPackError> {
    let samples = ip
        .indices
        .iter()
        .map(|&i| i32::try_from(offset as i64 + i as i64).map_err(|_| HistPackError::IndexRange))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Plane::new(ip.width, ip.height, samples).expect("validated dims"))
}

pub(crate) fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

pub(crate) fn get_varint(data: &[u8], pos: &mut usize) -> Option<u64> {
    let mut v = 0u64;
    for shift in (0..64).step_by(7) {
        let b = *data.get(*pos)?;
        *pos += 1;
        v |= ((b & 0x7F) as u64) << shift;
        if b & 0x80 == 0 {
            return Some(v);
        }
    }
    None
}

#[inline]
pub(crate) fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

#[inline]
pub(crate) fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

/// DPCM payload of a table, before compression.
pub fn table_payload(t: &UnpackingTable) -> Vec<u8> {
    let mut out = Vec::with_capacity(t.len() + 8);
    put_varint(&mut out, t.len() as u64);
    put_varint(&mut out, zigzag(t.values[0] as i64));
    for w in t.values.windows(2) {
        put_varint(&mut out, (w[1] as i64 - w[0] as i64 - 1) as u64);
    }
    out
}

pub fn serialize_table(t: &UnpackingTable) -> Vec<u8> {
    let mut enc = DeflateEncoder::new(Vec::new(), Compression::best());
    enc.write_all(&table_payload(t)).expect("in-memory write");
    enc.finish().expect("in-memory write")
}

// A table never has more entries than its plane has samples; this bounds
// decompression of hostile input.
const MAX_PAYLOAD: usize = 1 << 28;

fn inflate(data: &[u8]) -> Result<Vec<u8>, HistPackError> {
    let corrupt = |r: String| HistPackError::CorruptTable(r);
    if data.is_empty() {
        return Err(corrupt("empty stream".into()));
    }
    let mut dec = DeflateDecoder::new(data);
    let mut out = Vec::new();
    (&mut dec)
        .take(MAX_PAYLOAD as u64 + 1)
        .read_to_end(&mut out)
        .map_err(|e| corrupt(format!("deflate: {e}")))?;
    if out.len() > MAX_PAYLOAD {
        return Err(corrupt("table payload too large".into()));
    }
    if dec.total_in() as usize != data.len() {
        return Err(corrupt("trailing bytes after deflate stream".into()));
    }
    Ok(out)
}

pub fn deserialize_payload(payload: &[u8]) -> Result<UnpackingTable, HistPackError> {
    let corrupt = |r: &str| HistPackError::CorruptTable(r.to_string());
    let mut pos = 0;
    let n = get_varint(payload, &mut pos).ok_or_else(|| corrupt("truncated length"))?;
    if n == 0 {
        return Err(corrupt("zero-length table"));
    }
    // Every entry needs at least one byte.
    if n as usize > payload.len() {
        return Err(corrupt("declared length exceeds payload"));
    }
    let first = get_varint(payload, &mut pos).ok_or_else(|| corrupt("truncated value"))?;
    let mut v = unzigzag(first);
    let mut values = Vec::with_capacity(n as usize);
    for i in 0..n {
        if i > 0 {
            let d = get_varint(payload, &mut pos).ok_or_else(|| corrupt("truncated value"))?;
            v = v
                .checked_add(d as i64)
                .and_then(|s| s.checked_add(1))
                .filter(|_| d <= u32::MAX as u64)
                .ok_or_else(|| corrupt("delta out of range"))?;
        }
        let value = i32::try_from(v).map_err(|_| corrupt("value out of range"))?;
        values.push(value);
    }
    if pos != payload.len() {
        return Err(corrupt("trailing bytes after table"));
    }
    UnpackingTable::new(values).map_err(|_| corrupt("values not strictly increasing"))
}

pub fn deserialize_table(bytes: &[u8]) -> Result<UnpackingTable, HistPackError> {
    deserialize_payload(&inflate(bytes)?)
}
