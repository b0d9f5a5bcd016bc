//! Fixed-point 8x8 DCT shared by the encoder and decoder.
//!
//! The basis `K[x][u] = round(4096 * c(u)/2 * cos((2x+1)uπ/16))` is exact
//! integer data, both passes accumulate in `i64` without intermediate
//! rounding, and the single descale at the end rounds half up. Any two
//! implementations of this file therefore reconstruct identical samples.

/// `round(2048 * cos(mπ/16))` for m = 0..=8.
const COS_Q11: [i64; 9] = [2048, 2009, 1892, 1703, 1448, 1138, 784, 400, 0];
/// `round(4096 * (1/√2) / 2)`.
const DC_Q12: i64 = 1448;

pub const DESCALE_BITS: u32 = 24;

const fn basis() -> [[i64; 8]; 8] {
    let mut k = [[0i64; 8]; 8];
    let mut x = 0;
    while x < 8 {
        k[x][0] = DC_Q12;
        let mut u = 1;
        while u < 8 {
            let mut a = ((2 * x + 1) * u) % 32;
            if a > 16 {
                a = 32 - a;
            }
            k[x][u] = if a <= 8 { COS_Q11[a] } else { -COS_Q11[16 - a] };
            u += 1;
        }
        x += 1;
    }
    k
}

/// Basis indexed `[spatial][frequency]`, scaled by 2^12.
pub const BASIS: [[i64; 8]; 8] = basis();

/// Rounds `n / d` to nearest, ties away from zero. `d > 0`.
#[inline]
fn div_round(n: i64, d: i64) -> i64 {
    if n >= 0 {
        (n + d / 2) / d
    } else {
        -((-n + d / 2) / d)
    }
}

/// Forward DCT of level-shifted samples followed by quantization.
///
/// `block` and `quant` are natural order; the output is natural order.
pub fn forward_quantize(block: &[i32; 64], quant: &[u16; 64]) -> [i32; 64] {
    let mut rows = [0i64; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut acc = 0i64;
            for x in 0..8 {
                acc += BASIS[x][u] * block[y * 8 + x] as i64;
            }
            rows[y * 8 + u] = acc;
        }
    }
    let mut out = [0i32; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut acc = 0i64;
            for y in 0..8 {
                acc += BASIS[y][v] * rows[y * 8 + u];
            }
            let d = (quant[v * 8 + u] as i64) << DESCALE_BITS;
            out[v * 8 + u] = div_round(acc, d) as i32;
        }
    }
    out
}

/// Dequantized coefficients (natural order) to 8-bit samples.
pub fn inverse(coeffs: &[i32; 64]) -> [u8; 64] {
    let mut cols = [0i64; 64];
    for v in 0..8 {
        for x in 0..8 {
            let mut acc = 0i64;
            for u in 0..8 {
                acc += BASIS[x][u] * coeffs[v * 8 + u] as i64;
            }
            cols[v * 8 + x] = acc;
        }
    }
    let mut out = [0u8; 64];
    let half = 1i64 << (DESCALE_BITS - 1);
    for y in 0..8 {
        for x in 0..8 {
            let mut acc = 0i64;
            for v in 0..8 {
                acc += BASIS[y][v] * cols[v * 8 + x];
            }
            let s = ((acc + half) >> DESCALE_BITS) + 128;
            out[y * 8 + x] = s.clamp(0, 255) as u8;
        }
    }
    out
}
