//! Fixed-width MSB-first packing at `ceil(log2(max_index + 1))` bits per
//! sample; zero bits (empty payload) when `max_index` is 0.

use super::bitio::{BitReader, BitWriter};
use super::CodecError;
use crate::histpack::IndexPlane;

pub fn bits_per_sample(max_index: u32) -> u32 {
    32 - max_index.leading_zeros()
}

pub fn encode(ip: &IndexPlane) -> Vec<u8> {
    let b = bits_per_sample(ip.max_index());
    let mut w = BitWriter::new();
    for &i in ip.indices() {
        w.put(i, b);
    }
    w.finish()
}

pub fn decode(
    width: usize,
    height: usize,
    max_index: u32,
    payload: &[u8],
) -> Result<Vec<u32>, CodecError> {
    let n = width * height;
    let b = bits_per_sample(max_index);
    let expected = (n as u64 * b as u64).div_ceil(8);
    if payload.len() as u64 != expected {
        return Err(CodecError::CorruptPayload {
            offset: payload.len().min(expected as usize),
            reason: "payload length does not match plane size",
        });
    }
    let mut r = BitReader::new(payload);
    let mut out = Vec::with_capacity(n);
    for position in 0..n {
        let v = r.bits(b).expect("length checked");
        if v > max_index {
            return Err(CodecError::IndexOverflow {
                position,
                value: v as i64,
            });
        }
        out.push(v);
    }
    r.finish().map_err(|_| CodecError::CorruptPayload {
        offset: payload.len().saturating_sub(1),
        reason: "non-zero padding bits",
    })?;
    Ok(out)
}
