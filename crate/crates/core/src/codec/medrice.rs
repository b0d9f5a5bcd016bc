//! Median-edge-detector prediction with adaptive Golomb-Rice residual codes.
//!
//! Per sample, in raster order:
//!
//! * prediction `p = MED(left, top, top_left)`, out-of-bounds neighbors are 0;
//! * `u = zigzag(x - p)`;
//! * `k` = index of the highest set bit of `A / N` (0 when the mean is 0);
//! * if `u >> k < UNARY_LIMIT`: `u >> k` one-bits, a zero-bit, then the low
//!   `k` bits of `u`; otherwise `UNARY_LIMIT` one-bits and `u` in 32 bits;
//! * `A += u`, `N += 1`; when `N` reaches `RESET` both are halved.
//!
//! `A` and `N` start at [`INIT_A`] and [`INIT_N`]. A plane whose
//! `max_index` is 0 has an empty payload.

use super::bitio::{BitError, BitReader, BitWriter};
use super::CodecError;
use crate::histpack::IndexPlane;

pub const INIT_A: u64 = 4;
pub const INIT_N: u64 = 1;
pub const RESET: u64 = 64;
pub const UNARY_LIMIT: u32 = 24;

#[inline]
pub fn med(a: i64, b: i64, c: i64) -> i64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    if c >= hi {
        lo
    } else if c <= lo {
        hi
    } else {
        a + b - c
    }
}

#[inline]
fn neighbors(buf: &[u32], width: usize, i: usize) -> (i64, i64, i64) {
    let (x, y) = (i % width, i / width);
    let a = if x > 0 { buf[i - 1] as i64 } else { 0 };
    let b = if y > 0 { buf[i - width] as i64 } else { 0 };
    let c = if x > 0 && y > 0 { buf[i - width - 1] as i64 } else { 0 };
    (a, b, c)
}

struct Adaptive {
    a: u64,
    n: u64,
}

impl Adaptive {
    fn new() -> Self {
        Adaptive { a: INIT_A, n: INIT_N }
    }

    #[inline]
    fn k(&self) -> u32 {
        let mean = self.a / self.n;
        if mean == 0 {
            0
        } else {
            63 - mean.leading_zeros()
        }
    }

    #[inline]
    fn update(&mut self, u: u64) {
        self.a += u;
        self.n += 1;
        if self.n == RESET {
            self.a >>= 1;
            self.n >>= 1;
        }
    }
}

#[inline]
fn zigzag(e: i64) -> u64 {
    ((e << 1) ^ (e >> 63)) as u64
}

#[inline]
fn unzigzag(u: u64) -> i64 {
    ((u >> 1) as i64) ^ -((u & 1) as i64)
}

pub fn encode(ip: &IndexPlane) -> Vec<u8> {
    if ip.max_index() == 0 {
        return Vec::new();
    }
    let data = ip.indices();
    let width = ip.width();
    let mut w = BitWriter::new();
    let mut state = Adaptive::new();
    for (i, &x) in data.iter().enumerate() {
        let (a, b, c) = neighbors(data, width, i);
        let u = zigzag(x as i64 - med(a, b, c));
        let k = state.k();
        let q = u >> k;
        if q < UNARY_LIMIT as u64 {
            w.ones(q as u32);
            w.put(0, 1);
            w.put(u as u32, k);
        } else {
            w.ones(UNARY_LIMIT);
            w.put(u as u32, 32);
        }
        state.update(u);
    }
    w.finish()
}

fn bit_err(e: BitError) -> CodecError {
    match e {
        BitError::Eof(offset) => CodecError::CorruptPayload {
            offset,
            reason: "payload ends early",
        },
        BitError::Trailing(offset) => CodecError::CorruptPayload {
            offset,
            reason: "non-zero padding or trailing bytes",
        },
    }
}

pub fn decode(
    width: usize,
    height: usize,
    max_index: u32,
    payload: &[u8],
) -> Result<Vec<u32>, CodecError> {
    let n = width * height;
    if max_index == 0 {
        if !payload.is_empty() {
            return Err(CodecError::CorruptPayload {
                offset: 0,
                reason: "payload for a constant plane",
            });
        }
        return Ok(vec![0; n]);
    }
    // Every sample costs at least one bit.
    if n > payload.len() * 8 {
        return Err(CodecError::CorruptPayload {
            offset: payload.len(),
            reason: "payload too short for plane size",
        });
    }
    let mut out = Vec::with_capacity(n);
    let mut r = BitReader::new(payload);
    let mut state = Adaptive::new();
    for i in 0..n {
        let k = state.k();
        let q = r.unary(UNARY_LIMIT).map_err(bit_err)?;
        let u = if q == UNARY_LIMIT {
            r.bits(32).map_err(bit_err)? as u64
        } else {
            ((q as u64) << k) | r.bits(k).map_err(bit_err)? as u64
        };
        let (a, b, c) = neighbors(&out, width, i);
        let x = med(a, b, c) + unzigzag(u);
        if x < 0 || x > max_index as i64 {
            return Err(CodecError::IndexOverflow { position: i, value: x });
        }
        out.push(x as u32);
        state.update(u);
    }
    r.finish().map_err(bit_err)?;
    Ok(out)
}
