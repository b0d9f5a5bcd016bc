use crate::model::Plane;

use super::dct;
use super::huffman::{HuffmanDecoder, HuffmanSpec};
use super::tables::ZIGZAG;
use super::{color, marker, BaseError, LdrImage};

struct FrameComponent {
    id: u8,
    tq: usize,
}

struct Frame {
    width: usize,
    height: usize,
    components: Vec<FrameComponent>,
}

#[derive(Default)]
struct State {
    quant: [Option<[u16; 64]>; 4],
    dc: [Option<HuffmanDecoder>; 4],
    ac: [Option<HuffmanDecoder>; 4],
    frame: Option<Frame>,
    planes: Option<Vec<Vec<u8>>>,
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    bit: u32,
    base_offset: usize,
}

impl BitReader<'_> {
    #[inline]
    fn bit(&mut self) -> Result<u32, BaseError> {
        let byte = *self
            .data
            .get(self.pos)
            .ok_or_else(|| BaseError::malformed(self.base_offset + self.pos, "entropy data truncated"))?;
        let b = (byte >> (7 - self.bit)) & 1;
        self.bit += 1;
        if self.bit == 8 {
            self.bit = 0;
            self.pos += 1;
        }
        Ok(b as u32)
    }

    fn bits(&mut self, n: u8) -> Result<u32, BaseError> {
        let mut v = 0;
        for _ in 0..n {
            v = (v << 1) | self.bit()?;
        }
        Ok(v)
    }

    fn receive_extend(&mut self, size: u8) -> Result<i32, BaseError> {
        if size == 0 {
            return Ok(0);
        }
        if size > 16 {
            return Err(BaseError::malformed(self.base_offset + self.pos, "coefficient size > 16"));
        }
        let v = self.bits(size)? as i32;
        Ok(if v < (1 << (size - 1)) {
            v - (1 << size) + 1
        } else {
            v
        })
    }
}

fn read_u16(data: &[u8], pos: usize) -> Result<u16, BaseError> {
    data.get(pos..pos + 2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]))
        .ok_or_else(|| BaseError::malformed(pos, "unexpected end of stream"))
}

fn parse_dqt(state: &mut State, body: &[u8], offset: usize) -> Result<(), BaseError> {
    let mut i = 0;
    while i < body.len() {
        let (pq, tq) = (body[i] >> 4, (body[i] & 15) as usize);
        if pq != 0 {
            return Err(BaseError::UnsupportedFeature("16-bit quantization tables"));
        }
        if tq > 3 {
            return Err(BaseError::malformed(offset + i, "quantization table id > 3"));
        }
        let raw = body
            .get(i + 1..i + 65)
            .ok_or_else(|| BaseError::malformed(offset + i, "short DQT segment"))?;
        let mut table = [0u16; 64];
        for (k, &v) in raw.iter().enumerate() {
            table[ZIGZAG[k]] = v as u16;
        }
        state.quant[tq] = Some(table);
        i += 65;
    }
    Ok(())
}

fn parse_dht(state: &mut State, body: &[u8], offset: usize) -> Result<(), BaseError> {
    let mut i = 0;
    while i < body.len() {
        let (tc, th) = (body[i] >> 4, (body[i] & 15) as usize);
        if tc > 1 || th > 3 {
            return Err(BaseError::malformed(offset + i, "bad Huffman table class/id"));
        }
        let bits: [u8; 16] = body
            .get(i + 1..i + 17)
            .ok_or_else(|| BaseError::malformed(offset + i, "short DHT segment"))?
            .try_into()
            .unwrap();
        let n: usize = bits.iter().map(|&b| b as usize).sum();
        let values = body
            .get(i + 17..i + 17 + n)
            .ok_or_else(|| BaseError::malformed(offset + i, "short DHT segment"))?;
        let dec = HuffmanDecoder::new(&HuffmanSpec::new(&bits, values))
            .map_err(|_| BaseError::malformed(offset + i, "invalid Huffman table"))?;
        if tc == 0 {
            state.dc[th] = Some(dec);
        } else {
            state.ac[th] = Some(dec);
        }
        i += 17 + n;
    }
    Ok(())
}

fn parse_sof(state: &mut State, body: &[u8], offset: usize) -> Result<(), BaseError> {
    if state.frame.is_some() {
        return Err(BaseError::malformed(offset, "multiple frames"));
    }
    if body.len() < 6 {
        return Err(BaseError::malformed(offset, "short SOF segment"));
    }
    if body[0] != 8 {
        return Err(BaseError::UnsupportedFeature("sample precision other than 8 bits"));
    }
    let height = u16::from_be_bytes([body[1], body[2]]) as usize;
    let width = u16::from_be_bytes([body[3], body[4]]) as usize;
    let n = body[5] as usize;
    if width == 0 || height == 0 {
        return Err(BaseError::UnsupportedFeature("zero or DNL-defined dimensions"));
    }
    if n != 1 && n != 3 {
        return Err(BaseError::UnsupportedFeature("component count other than 1 or 3"));
    }
    if body.len() != 6 + 3 * n {
        return Err(BaseError::malformed(offset, "SOF length mismatch"));
    }
    let mut components = Vec::with_capacity(n);
    for c in 0..n {
        let b = &body[6 + 3 * c..9 + 3 * c];
        if n > 1 && b[1] != 0x11 {
            return Err(BaseError::UnsupportedFeature("chroma subsampling"));
        }
        if b[2] > 3 {
            return Err(BaseError::malformed(offset, "quantization table id > 3"));
        }
        components.push(FrameComponent {
            id: b[0],
            tq: b[2] as usize,
        });
    }
    state.frame = Some(Frame {
        width,
        height,
        components,
    });
    Ok(())
}

/// Returns the unstuffed entropy-coded bytes and the offset of the marker
/// that terminates them.
fn entropy_segment(data: &[u8], start: usize) -> (Vec<u8>, usize) {
    let mut out = Vec::with_capacity(data.len().saturating_sub(start));
    let mut i = start;
    while i < data.len() {
        let b = data[i];
        if b != 0xFF {
            out.push(b);
            i += 1;
            continue;
        }
        match data.get(i + 1) {
            Some(0x00) => {
                out.push(0xFF);
                i += 2;
            }
            _ => break,
        }
    }
    (out, i)
}

fn decode_scan(state: &mut State, body: &[u8], data: &[u8], start: usize) -> Result<usize, BaseError> {
    let frame = state
        .frame
        .as_ref()
        .ok_or_else(|| BaseError::malformed(start, "SOS before SOF"))?;
    if state.planes.is_some() {
        return Err(BaseError::UnsupportedFeature("multiple scans"));
    }
    let ns = *body.first().unwrap_or(&0) as usize;
    if ns != frame.components.len() {
        return Err(BaseError::UnsupportedFeature("scan not covering all components"));
    }
    if body.len() != 4 + 2 * ns {
        return Err(BaseError::malformed(start, "SOS length mismatch"));
    }
    let tail = &body[1 + 2 * ns..];
    if tail != [0, 63, 0] {
        return Err(BaseError::UnsupportedFeature("non-baseline spectral selection"));
    }
    struct ScanComp<'a> {
        quant: &'a [u16; 64],
        dc: &'a HuffmanDecoder,
        ac: &'a HuffmanDecoder,
    }
    let mut comps = Vec::with_capacity(ns);
    for s in 0..ns {
        let (cs, tables) = (body[1 + 2 * s], body[2 + 2 * s]);
        let fc = frame
            .components
            .iter()
            .position(|c| c.id == cs)
            .ok_or_else(|| BaseError::malformed(start, "scan references unknown component"))?;
        if fc != s {
            return Err(BaseError::UnsupportedFeature("component order differs between frame and scan"));
        }
        let (td, ta) = ((tables >> 4) as usize, (tables & 15) as usize);
        let missing = || BaseError::malformed(start, "scan references undefined table");
        comps.push(ScanComp {
            quant: state.quant[frame.components[fc].tq].as_ref().ok_or_else(missing)?,
            dc: state.dc.get(td).and_then(Option::as_ref).ok_or_else(missing)?,
            ac: state.ac.get(ta).and_then(Option::as_ref).ok_or_else(missing)?,
        });
    }

    let (width, height) = (frame.width, frame.height);
    let (bw, bh) = (width.div_ceil(8), height.div_ceil(8));
    let (entropy, end) = entropy_segment(data, start);
    let mut reader = BitReader {
        data: &entropy,
        pos: 0,
        bit: 0,
        base_offset: start,
    };
    // Each block costs at least two bits (a DC and an AC code), which bounds
    // the allocation for hostile frame sizes.
    if bw * bh * ns > entropy.len() * 4 {
        return Err(BaseError::malformed(start, "entropy data too short for frame size"));
    }
    let mut planes = vec![vec![0u8; width * height]; ns];
    let mut pred = vec![0i32; ns];
    for by in 0..bh {
        for bx in 0..bw {
            for (c, sc) in comps.iter().enumerate() {
                let mut coeffs = [0i32; 64];
                let size = sc.dc.decode(|| reader.bit())?;
                // Hostile streams can walk the predictor arbitrarily far.
                pred[c] = pred[c].wrapping_add(reader.receive_extend(size)?);
                coeffs[0] = pred[c].wrapping_mul(sc.quant[0] as i32);
                let mut k = 1;
                while k < 64 {
                    let rs = sc.ac.decode(|| reader.bit())?;
                    let (run, size) = ((rs >> 4) as usize, rs & 15);
                    if size == 0 {
                        if run == 15 {
                            k += 16;
                            continue;
                        }
                        break;
                    }
                    k += run;
                    if k > 63 {
                        return Err(BaseError::malformed(start + reader.pos, "AC run past block end"));
                    }
                    let n = ZIGZAG[k];
                    coeffs[n] = reader.receive_extend(size)?.wrapping_mul(sc.quant[n] as i32);
                    k += 1;
                }
                if k > 64 {
                    return Err(BaseError::malformed(start + reader.pos, "AC run past block end"));
                }
                let px = dct::inverse(&coeffs);
                let plane = &mut planes[c];
                for y in 0..8 {
                    let yy = by * 8 + y;
                    if yy >= height {
                        break;
                    }
                    for x in 0..8 {
                        let xx = bx * 8 + x;
                        if xx < width {
                            plane[yy * width + xx] = px[y * 8 + x];
                        }
                    }
                }
            }
        }
    }
    state.planes = Some(planes);
    Ok(end)
}

/// Decodes a baseline JPEG stream (1 or 3 components, no subsampling).
pub fn jpeg_decode(data: &[u8]) -> Result<LdrImage, BaseError> {
    if data.get(..2) != Some(&[0xFF, marker::SOI]) {
        return Err(BaseError::malformed(0, "missing SOI"));
    }
    let mut state = State::default();
    let mut pos = 2;
    loop {
        if pos >= data.len() {
            return Err(BaseError::malformed(pos, "missing EOI"));
        }
        if data[pos] != 0xFF {
            return Err(BaseError::malformed(pos, "expected marker"));
        }
        while data.get(pos + 1) == Some(&0xFF) {
            pos += 1;
        }
        let m = *data
            .get(pos + 1)
            .ok_or_else(|| BaseError::malformed(pos, "missing EOI"))?;
        pos += 2;
        match m {
            marker::EOI => break,
            0xD0..=0xD7 | 0x01 | 0x00 => {
                return Err(BaseError::malformed(pos - 2, "unexpected standalone marker"));
            }
            _ => {}
        }
        let len = read_u16(data, pos)? as usize;
        if len < 2 || pos + len > data.len() {
            return Err(BaseError::malformed(pos, "segment length out of bounds"));
        }
        let body = &data[pos + 2..pos + len];
        let body_off = pos + 2;
        pos += len;
        match m {
            marker::SOF0 | marker::SOF1 => parse_sof(&mut state, body, body_off)?,
            0xC2 | 0xC6 | 0xCA | 0xCE => {
                return Err(BaseError::UnsupportedFeature("progressive JPEG"));
            }
            0xC3 | 0xC5 | 0xC7 | 0xCB | 0xCF => {
                return Err(BaseError::UnsupportedFeature("lossless/hierarchical JPEG"));
            }
            0xC9 | 0xCD => return Err(BaseError::UnsupportedFeature("arithmetic coding")),
            marker::DHT => parse_dht(&mut state, body, body_off)?,
            marker::DQT => parse_dqt(&mut state, body, body_off)?,
            marker::DRI => {
                if body.len() != 2 {
                    return Err(BaseError::malformed(body_off, "bad DRI length"));
                }
                if body != [0, 0] {
                    return Err(BaseError::UnsupportedFeature("restart intervals"));
                }
            }
            marker::SOS => pos = decode_scan(&mut state, body, data, pos)?,
            _ => {}
        }
    }
    let frame = state
        .frame
        .ok_or_else(|| BaseError::malformed(pos, "no frame header"))?;
    let planes = state
        .planes
        .ok_or_else(|| BaseError::malformed(pos, "no scan data"))?;
    let (w, h) = (frame.width, frame.height);
    let rgb = if planes.len() == 3 {
        let mut it = planes.into_iter();
        let ycc = [it.next().unwrap(), it.next().unwrap(), it.next().unwrap()];
        color::ycbcr_to_rgb(w, h, ycc)
    } else {
        let p = Plane::new(w, h, planes.into_iter().next().unwrap()).expect("sized above");
        [p.clone(), p.clone(), p]
    };
    Ok(LdrImage::from_planes(rgb))
}
