use rayon::prelude::*;

use super::dct;
use super::huffman::{HuffmanEncoder, HuffmanSpec};
use super::tables::*;
use super::{color, marker, BaseError, LdrImage};

struct BitWriter {
    out: Vec<u8>,
    acc: u32,
    nbits: u32,
}

impl BitWriter {
    fn new(out: Vec<u8>) -> Self {
        BitWriter {
            out,
            acc: 0,
            nbits: 0,
        }
    }

    #[inline]
    fn put(&mut self, bits: u32, len: u8) {
        debug_assert!(len <= 16);
        self.acc = (self.acc << len) | (bits & ((1 << len) - 1));
        self.nbits += len as u32;
        while self.nbits >= 8 {
            let b = (self.acc >> (self.nbits - 8)) as u8;
            self.out.push(b);
            if b == 0xFF {
                self.out.push(0x00);
            }
            self.nbits -= 8;
        }
        self.acc &= (1 << self.nbits) - 1;
    }

    /// Pads the final byte with one-bits.
    fn finish(mut self) -> Vec<u8> {
        if self.nbits > 0 {
            let pad = 8 - self.nbits as u8;
            self.put((1 << pad) - 1, pad);
        }
        self.out
    }
}

/// Magnitude category and appended bits of a coefficient.
#[inline]
fn category(v: i32) -> (u8, u32) {
    if v == 0 {
        return (0, 0);
    }
    let size = 32 - v.unsigned_abs().leading_zeros();
    let bits = if v < 0 { v - 1 } else { v } as u32 & ((1 << size) - 1);
    (size as u8, bits)
}

fn segment(out: &mut Vec<u8>, marker: u8, body: &[u8]) {
    out.extend_from_slice(&[0xFF, marker]);
    out.extend_from_slice(&((body.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(body);
}

fn write_headers(out: &mut Vec<u8>, width: u16, height: u16, luma: &[u16; 64], chroma: &[u16; 64]) {
    out.extend_from_slice(&[0xFF, marker::SOI]);
    // JFIF 1.02, no units, 1:1 density, no thumbnail.
    segment(
        out,
        marker::APP0,
        &[b'J', b'F', b'I', b'F', 0, 1, 2, 0, 0, 1, 0, 1, 0, 0],
    );
    for (id, table) in [(0u8, luma), (1u8, chroma)] {
        let mut body = vec![id];
        body.extend(ZIGZAG.iter().map(|&n| table[n] as u8));
        segment(out, marker::DQT, &body);
    }
    let mut sof = vec![8];
    sof.extend_from_slice(&height.to_be_bytes());
    sof.extend_from_slice(&width.to_be_bytes());
    sof.push(3);
    for (id, tq) in [(1u8, 0u8), (2, 1), (3, 1)] {
        sof.extend_from_slice(&[id, 0x11, tq]);
    }
    segment(out, marker::SOF0, &sof);
    for (class_id, bits, vals) in [
        (0x00u8, &DC_LUMA_BITS, &DC_LUMA_VALS[..]),
        (0x10, &AC_LUMA_BITS, &AC_LUMA_VALS[..]),
        (0x01, &DC_CHROMA_BITS, &DC_CHROMA_VALS[..]),
        (0x11, &AC_CHROMA_BITS, &AC_CHROMA_VALS[..]),
    ] {
        let mut body = vec![class_id];
        body.extend_from_slice(bits);
        body.extend_from_slice(vals);
        segment(out, marker::DHT, &body);
    }
    segment(
        out,
        marker::SOS,
        &[3, 1, 0x00, 2, 0x11, 3, 0x11, 0, 63, 0],
    );
}

/// Quantized coefficient blocks of one component in raster block order.
fn component_blocks(samples: &[u8], width: usize, height: usize, quant: &[u16; 64]) -> Vec<[i32; 64]> {
    let bw = width.div_ceil(8);
    let bh = height.div_ceil(8);
    (0..bw * bh)
        .map(|b| {
            let (bx, by) = (b % bw, b / bw);
            let block: [i32; 64] = std::array::from_fn(|i| {
                // Edge replication for partial blocks.
                let x = (bx * 8 + i % 8).min(width - 1);
                let y = (by * 8 + i / 8).min(height - 1);
                samples[y * width + x] as i32 - 128
            });
            dct::forward_quantize(&block, quant)
        })
        .collect()
}

fn encode_block(
    w: &mut BitWriter,
    coeffs: &[i32; 64],
    pred: &mut i32,
    dc: &HuffmanEncoder,
    ac: &HuffmanEncoder,
) {
    let diff = coeffs[0] - *pred;
    *pred = coeffs[0];
    let (size, bits) = category(diff);
    let (code, len) = dc.code(size);
    w.put(code as u32, len);
    w.put(bits, size);

    let mut run = 0u8;
    for &n in &ZIGZAG[1..] {
        let v = coeffs[n];
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let (code, len) = ac.code(0xF0);
            w.put(code as u32, len);
            run -= 16;
        }
        let (size, bits) = category(v);
        let (code, len) = ac.code((run << 4) | size);
        w.put(code as u32, len);
        w.put(bits, size);
        run = 0;
    }
    if run > 0 {
        let (code, len) = ac.code(0x00);
        w.put(code as u32, len);
    }
}

/// Encodes an 8-bit RGB image as a baseline, 4:4:4, JFIF JPEG stream.
pub fn jpeg_encode(ldr: &LdrImage, q: QualityFactor) -> Result<Vec<u8>, BaseError> {
    let (width, height) = (ldr.width(), ldr.height());
    if width == 0 || height == 0 || width > 0xFFFF || height > 0xFFFF {
        return Err(BaseError::UnsupportedDimensions { width, height });
    }
    let (luma_q, chroma_q) = quality_to_tables(q);
    let ycc = color::rgb_to_ycbcr(ldr);
    let blocks: Vec<Vec<[i32; 64]>> = ycc
        .par_iter()
        .enumerate()
        .map(|(c, p)| {
            let table = if c == 0 { &luma_q } else { &chroma_q };
            component_blocks(p, width, height, table)
        })
        .collect();

    let mut out = Vec::with_capacity(width * height / 2 + 1024);
    write_headers(&mut out, width as u16, height as u16, &luma_q, &chroma_q);
    let dc = [
        HuffmanEncoder::new(&HuffmanSpec::new(&DC_LUMA_BITS, &DC_LUMA_VALS)),
        HuffmanEncoder::new(&HuffmanSpec::new(&DC_CHROMA_BITS, &DC_CHROMA_VALS)),
    ];
    let ac = [
        HuffmanEncoder::new(&HuffmanSpec::new(&AC_LUMA_BITS, &AC_LUMA_VALS)),
        HuffmanEncoder::new(&HuffmanSpec::new(&AC_CHROMA_BITS, &AC_CHROMA_VALS)),
    ];
    let mut w = BitWriter::new(out);
    let mut pred = [0i32; 3];
    for b in 0..blocks[0].len() {
        for (c, comp) in blocks.iter().enumerate() {
            let t = (c != 0) as usize;
            encode_block(&mut w, &comp[b], &mut pred[c], &dc[t], &ac[t]);
        }
    }
    let mut out = w.finish();
    out.extend_from_slice(&[0xFF, marker::EOI]);
    Ok(out)
}
