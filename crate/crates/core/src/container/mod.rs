//! Multiplexing of the base JPEG and the extension payloads into one file.
//!
//! Each payload is split into chunks carried by APP11 segments placed right
//! after the APP0 segment (or after SOI when there is none):
//!
//! ```text
//! FF EB ‖ length(u16) ‖ "HP10" ‖ box_type(4) ‖ component(u8) ‖ seq(u16) ‖ total(u16) ‖ chunk
//! ```
//!
//! `seq` counts from 1 to `total`. Legacy decoders skip these segments.

mod metadata;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::base::marker;

pub use metadata::{Metadata, FORMAT_VERSION, METADATA_LEN};

pub const MAGIC: [u8; 4] = *b"HP10";
pub const CHUNK_HEADER: usize = 13;
/// Largest chunk per segment: 65535 minus the length field and the header.
pub const CHUNK_CAPACITY: usize = 65535 - 2 - CHUNK_HEADER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BoxType {
    Meta,
    Utbl,
    Extc,
}

impl BoxType {
    pub fn tag(self) -> [u8; 4] {
        match self {
            BoxType::Meta => *b"META",
            BoxType::Utbl => *b"UTBL",
            BoxType::Extc => *b"EXTC",
        }
    }

    pub fn from_tag(tag: [u8; 4]) -> Option<Self> {
        match &tag {
            b"META" => Some(BoxType::Meta),
            b"UTBL" => Some(BoxType::Utbl),
            b"EXTC" => Some(BoxType::Extc),
            _ => None,
        }
    }
}

impl std::fmt::Display for BoxType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(std::str::from_utf8(&self.tag()).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtPayload {
    pub box_type: BoxType,
    pub component: u8,
    pub data: Vec<u8>,
}

impl ExtPayload {
    pub fn new(box_type: BoxType, component: u8, data: Vec<u8>) -> Self {
        ExtPayload {
            box_type,
            component,
            data,
        }
    }

    fn key(&self) -> (u8, BoxType) {
        (self.component, self.box_type)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContainerError {
    #[error("invalid base stream at offset {offset}: {reason}")]
    InvalidBaseStream { offset: usize, reason: &'static str },
    #[error("incomplete payload set: {0}")]
    PayloadSetIncomplete(String),
    #[error("payload {box_type}[{component}] is too large to chunk")]
    PayloadTooLarge { box_type: BoxType, component: u8 },
    #[error("missing chunk {seq} of {box_type}[{component}]")]
    MissingChunk {
        box_type: BoxType,
        component: u8,
        seq: u16,
    },
    #[error("duplicate chunk {seq} of {box_type}[{component}]")]
    DuplicateChunk {
        box_type: BoxType,
        component: u8,
        seq: u16,
    },
    #[error("corrupt extension segment at offset {offset}: {reason}")]
    CorruptSegment { offset: usize, reason: &'static str },
    #[error("bad metadata: {0}")]
    BadMetadata(&'static str),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
}

/// A marker segment of the JPEG header, `start..end` including fill bytes,
/// the marker and the length-counted body.
#[derive(Debug, Clone, Copy)]
struct Segment {
    marker: u8,
    start: usize,
    body: usize,
    end: usize,
}

/// Walks header segments up to and including SOS and checks the stream ends
/// with EOI.
fn header_segments(data: &[u8]) -> Result<Vec<Segment>, ContainerError> {
    let invalid = |offset, reason| ContainerError::InvalidBaseStream { offset, reason };
    if data.get(..2) != Some(&[0xFF, marker::SOI]) {
        return Err(invalid(0, "missing SOI"));
    }
    if data.len() < 4 || data[data.len() - 2..] != [0xFF, marker::EOI] {
        return Err(invalid(data.len(), "missing EOI"));
    }
    let mut segs = Vec::new();
    let mut pos = 2;
    loop {
        let start = pos;
        if data.get(pos) != Some(&0xFF) {
            return Err(invalid(pos, "expected marker"));
        }
        while data.get(pos + 1) == Some(&0xFF) {
            pos += 1;
        }
        let m = *data.get(pos + 1).ok_or(invalid(pos, "truncated marker"))?;
        match m {
            0x00 | 0x01 | 0xD0..=0xD9 => return Err(invalid(pos, "unexpected marker in header")),
            _ => {}
        }
        let len = data
            .get(pos + 2..pos + 4)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as usize)
            .ok_or(invalid(pos, "truncated segment length"))?;
        if len < 2 || pos + 2 + len > data.len() {
            return Err(invalid(pos, "segment overruns stream"));
        }
        let end = pos + 2 + len;
        segs.push(Segment {
            marker: m,
            start,
            body: pos + 4,
            end,
        });
        pos = end;
        if m == marker::SOS {
            return Ok(segs);
        }
    }
}

fn is_ours(data: &[u8], s: &Segment) -> bool {
    s.marker == marker::APP11 && data[s.body..s.end].starts_with(&MAGIC)
}

fn sorted_payloads(payloads: &[ExtPayload]) -> Vec<&ExtPayload> {
    let mut v: Vec<&ExtPayload> = payloads.iter().collect();
    v.sort_by_key(|p| p.key());
    v
}

/// Checks for exactly one META (component 0) and one UTBL and EXTC per
/// component 0..=2.
pub fn check_payload_set(payloads: &[ExtPayload]) -> Result<(), ContainerError> {
    let mut expected = vec![(0u8, BoxType::Meta)];
    for c in 0..3 {
        expected.push((c, BoxType::Utbl));
        expected.push((c, BoxType::Extc));
    }
    let got: Vec<_> = sorted_payloads(payloads).iter().map(|p| p.key()).collect();
    if got != expected {
        let list: Vec<String> = got.iter().map(|(c, b)| format!("{b}[{c}]")).collect();
        return Err(ContainerError::PayloadSetIncomplete(format!(
            "expected META[0] and UTBL/EXTC for components 0..2, got {}",
            list.join(", ")
        )));
    }
    Ok(())
}

/// Inserts the payloads into `base_jpeg`.
pub fn mux(base_jpeg: &[u8], payloads: &[ExtPayload]) -> Result<Vec<u8>, ContainerError> {
    let segs = header_segments(base_jpeg)?;
    if segs.iter().any(|s| is_ours(base_jpeg, s)) {
        return Err(ContainerError::InvalidBaseStream {
            offset: 0,
            reason: "base stream already carries extension segments",
        });
    }
    check_payload_set(payloads)?;
    let at = segs
        .iter()
        .find(|s| s.marker == marker::APP0)
        .map_or(2, |s| s.end);
    let extra: usize = payloads
        .iter()
        .map(|p| p.data.len() + (p.data.len() / CHUNK_CAPACITY + 1) * (CHUNK_HEADER + 4))
        .sum();
    let mut out = Vec::with_capacity(base_jpeg.len() + extra);
    out.extend_from_slice(&base_jpeg[..at]);
    for p in sorted_payloads(payloads) {
        let total = p.data.len().div_ceil(CHUNK_CAPACITY).max(1);
        let total = u16::try_from(total).map_err(|_| ContainerError::PayloadTooLarge {
            box_type: p.box_type,
            component: p.component,
        })?;
        let mut chunks = p.data.chunks(CHUNK_CAPACITY);
        for seq in 1..=total {
            let chunk = chunks.next().unwrap_or(&[]);
            out.extend_from_slice(&[0xFF, marker::APP11]);
            out.extend_from_slice(&((2 + CHUNK_HEADER + chunk.len()) as u16).to_be_bytes());
            out.extend_from_slice(&MAGIC);
            out.extend_from_slice(&p.box_type.tag());
            out.push(p.component);
            out.extend_from_slice(&seq.to_be_bytes());
            out.extend_from_slice(&total.to_be_bytes());
            out.extend_from_slice(chunk);
        }
    }
    out.extend_from_slice(&base_jpeg[at..]);
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demuxed {
    /// The input with every `HP10` segment removed.
    pub base_jpeg: Vec<u8>,
    /// Reassembled payloads in (component, box type) order; empty for a
    /// legacy file.
    pub payloads: Vec<ExtPayload>,
    pub metadata: Option<Metadata>,
}

impl Demuxed {
    pub fn is_legacy(&self) -> bool {
        self.payloads.is_empty()
    }

    pub fn payload(&self, box_type: BoxType, component: u8) -> Option<&ExtPayload> {
        self.payloads
            .iter()
            .find(|p| p.box_type == box_type && p.component == component)
    }
}

struct Pending<'a> {
    total: u16,
    chunks: BTreeMap<u16, &'a [u8]>,
}

/// Splits a file into the base JPEG and its reassembled payloads.
///
/// APP11 segments with other magics stay in the base stream.
pub fn demux(file: &[u8]) -> Result<Demuxed, ContainerError> {
    let segs = header_segments(file)?;
    let corrupt = |offset, reason| ContainerError::CorruptSegment { offset, reason };
    let mut base = Vec::with_capacity(file.len());
    let mut pending: BTreeMap<(u8, BoxType), Pending> = BTreeMap::new();
    let mut copied = 0;
    for s in segs.iter().filter(|s| is_ours(file, s)) {
        base.extend_from_slice(&file[copied..s.start]);
        copied = s.end;
        let body = &file[s.body..s.end];
        if body.len() < CHUNK_HEADER {
            return Err(corrupt(s.start, "segment shorter than chunk header"));
        }
        let box_type = BoxType::from_tag(body[4..8].try_into().unwrap())
            .ok_or(corrupt(s.start, "unknown box type"))?;
        let component = body[8];
        if component > 2 || (box_type == BoxType::Meta && component != 0) {
            return Err(corrupt(s.start, "component index out of range"));
        }
        let seq = u16::from_be_bytes([body[9], body[10]]);
        let total = u16::from_be_bytes([body[11], body[12]]);
        if total == 0 || seq == 0 || seq > total {
            return Err(corrupt(s.start, "chunk sequence out of range"));
        }
        let entry = pending.entry((component, box_type)).or_insert(Pending {
            total,
            chunks: BTreeMap::new(),
        });
        if entry.total != total {
            return Err(corrupt(s.start, "inconsistent chunk totals"));
        }
        if entry.chunks.insert(seq, &body[CHUNK_HEADER..]).is_some() {
            return Err(ContainerError::DuplicateChunk {
                box_type,
                component,
                seq,
            });
        }
    }
    base.extend_from_slice(&file[copied..]);

    let mut payloads = Vec::with_capacity(pending.len());
    for ((component, box_type), p) in pending {
        if let Some(seq) = (1..=p.total).find(|s| !p.chunks.contains_key(s)) {
            return Err(ContainerError::MissingChunk {
                box_type,
                component,
                seq,
            });
        }
        let data = p.chunks.values().flat_map(|c| c.iter().copied()).collect();
        payloads.push(ExtPayload::new(box_type, component, data));
    }
    let metadata = if payloads.is_empty() {
        None
    } else {
        check_payload_set(&payloads)?;
        let meta = payloads.iter().find(|p| p.box_type == BoxType::Meta).unwrap();
        Some(Metadata::from_bytes(&meta.data)?)
    };
    Ok(Demuxed {
        base_jpeg: base,
        payloads,
        metadata,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::base::{QualityFactor, TmoParams};
    use crate::codec::CodecId;
    use crate::model::PixelType;
    use proptest::prelude::*;

    /// SOI, APP0, a foreign APP11, DQT-ish filler, SOS, entropy bytes, EOI.
    fn fake_jpeg() -> Vec<u8> {
        let mut v = vec![0xFF, 0xD8];
        v.extend_from_slice(&[0xFF, 0xE0, 0, 7, b'J', b'F', b'I', b'F', 0]);
        v.extend_from_slice(&[0xFF, 0xEB, 0, 8, b'J', b'P', 0, 0, 1, 2]);
        v.extend_from_slice(&[0xFF, 0xDB, 0, 3, 9]);
        v.extend_from_slice(&[0xFF, 0xDA, 0, 4, 1, 2, 0x12, 0xFF, 0x00, 0x34]);
        v.extend_from_slice(&[0xFF, 0xD9]);
        v
    }

    fn meta_bytes() -> Vec<u8> {
        Metadata {
            format_version: FORMAT_VERSION,
            pixel_type: PixelType::HalfFloat,
            width: 3,
            height: 4,
            q: QualityFactor::new(50),
            tmo: TmoParams::reinhard(),
            lut_rule: 1,
            transform: true,
            packing: true,
            codec_ids: [CodecId::MEDRICE; 3],
        }
        .to_bytes()
    }

    fn payload_set(sizes: [usize; 6]) -> Vec<ExtPayload> {
        let mut v = vec![ExtPayload::new(BoxType::Meta, 0, meta_bytes())];
        for c in 0..3u8 {
            for (i, b) in [BoxType::Utbl, BoxType::Extc].into_iter().enumerate() {
                let n = sizes[2 * c as usize + i];
                let data = (0..n).map(|j| (j * 31 + c as usize + i) as u8).collect();
                v.push(ExtPayload::new(b, c, data));
            }
        }
        v
    }

    fn our_segments(file: &[u8]) -> Vec<(BoxType, u8, u16, u16, usize)> {
        header_segments(file)
            .unwrap()
            .iter()
            .filter(|s| is_ours(file, s))
            .map(|s| {
                let b = &file[s.body..s.end];
                (
                    BoxType::from_tag(b[4..8].try_into().unwrap()).unwrap(),
                    b[8],
                    u16::from_be_bytes([b[9], b[10]]),
                    u16::from_be_bytes([b[11], b[12]]),
                    s.end - s.start,
                )
            })
            .collect()
    }

    #[test]
    fn capacity() {
        assert_eq!(CHUNK_CAPACITY, 65520);
    }

    #[test]
    fn layout_and_round_trip() {
        let base = fake_jpeg();
        let p = payload_set([3, 0, 5, 200_000, 1, 65520]);
        let file = mux(&base, &p).unwrap();
        assert_eq!(&file[..2], &[0xFF, 0xD8]);
        assert_eq!(&file[file.len() - 2..], &[0xFF, 0xD9]);
        // Inserted right after APP0.
        assert_eq!(&file[11..13], &[0xFF, 0xEB]);
        assert_eq!(&file[15..19], b"HP10");
        let segs = our_segments(&file);
        let extc0: Vec<_> = segs.iter().filter(|s| s.0 == BoxType::Extc && s.1 == 0).collect();
        assert_eq!(extc0.len(), 1);
        assert_eq!((extc0[0].2, extc0[0].3, extc0[0].4), (1, 1, 2 + 2 + CHUNK_HEADER));
        let big: Vec<_> = segs.iter().filter(|s| s.0 == BoxType::Extc && s.1 == 1).collect();
        assert_eq!(big.iter().map(|s| s.2).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert!(big.iter().all(|s| s.3 == 4));
        assert!(segs.iter().all(|s| s.4 - 2 <= 65535));
        let exact: Vec<_> = segs.iter().filter(|s| s.0 == BoxType::Extc && s.1 == 2).collect();
        assert_eq!(exact.len(), 1);
        assert_eq!(exact[0].4, 2 + 65535);

        let d = demux(&file).unwrap();
        assert_eq!(d.base_jpeg, base);
        assert_eq!(d.payloads, p);
        assert_eq!(d.metadata.unwrap().width, 3);
    }

    #[test]
    fn no_app0_inserts_after_soi() {
        let mut base = fake_jpeg();
        base.drain(2..11);
        let file = mux(&base, &payload_set([1; 6])).unwrap();
        assert_eq!(&file[2..4], &[0xFF, 0xEB]);
        assert_eq!(demux(&file).unwrap().base_jpeg, base);
    }

    #[test]
    fn legacy_file() {
        let base = fake_jpeg();
        let d = demux(&base).unwrap();
        assert!(d.is_legacy());
        assert_eq!(d.base_jpeg, base);
        assert_eq!(d.metadata, None);
    }

    #[test]
    fn bad_bases_rejected() {
        let p = payload_set([1; 6]);
        assert!(matches!(mux(&[0xFF, 0xD9], &p), Err(ContainerError::InvalidBaseStream { .. })));
        let mut no_eoi = fake_jpeg();
        no_eoi.truncate(no_eoi.len() - 2);
        assert!(matches!(mux(&no_eoi, &p), Err(ContainerError::InvalidBaseStream { .. })));
        let mut overrun = fake_jpeg();
        overrun[4..6].copy_from_slice(&[0xFF, 0xF0]);
        assert!(matches!(mux(&overrun, &p), Err(ContainerError::InvalidBaseStream { .. })));
        let file = mux(&fake_jpeg(), &p).unwrap();
        assert!(matches!(mux(&file, &p), Err(ContainerError::InvalidBaseStream { .. })));
    }

    #[test]
    fn incomplete_sets_rejected() {
        let base = fake_jpeg();
        let mut p = payload_set([1; 6]);
        p.pop();
        assert!(matches!(mux(&base, &p), Err(ContainerError::PayloadSetIncomplete(_))));
        let mut p = payload_set([1; 6]);
        p.push(ExtPayload::new(BoxType::Utbl, 1, vec![]));
        assert!(matches!(mux(&base, &p), Err(ContainerError::PayloadSetIncomplete(_))));
    }

    /// Removes the `index`-th HP10 segment from a file.
    fn drop_segment(file: &[u8], index: usize) -> Vec<u8> {
        let segs = header_segments(file).unwrap();
        let s = segs.iter().filter(|s| is_ours(file, s)).nth(index).unwrap();
        [&file[..s.start], &file[s.end..]].concat()
    }

    #[test]
    fn missing_and_duplicate_chunks() {
        let p = payload_set([1, 1, 1, 150_000, 1, 1]);
        let file = mux(&fake_jpeg(), &p).unwrap();
        let segs = our_segments(&file);
        let second = segs.iter().position(|s| s.0 == BoxType::Extc && s.1 == 1 && s.2 == 2).unwrap();
        assert_eq!(
            demux(&drop_segment(&file, second)),
            Err(ContainerError::MissingChunk {
                box_type: BoxType::Extc,
                component: 1,
                seq: 2
            })
        );
        // Duplicate the first UTBL segment.
        let hs = header_segments(&file).unwrap();
        let s = hs.iter().find(|s| is_ours(&file, s)).unwrap();
        let dup = [&file[..s.end], &file[s.start..]].concat();
        assert!(matches!(demux(&dup), Err(ContainerError::DuplicateChunk { seq: 1, .. })));
        // A whole payload missing.
        let first_meta = segs.iter().position(|s| s.0 == BoxType::Meta).unwrap();
        assert!(matches!(
            demux(&drop_segment(&file, first_meta)),
            Err(ContainerError::PayloadSetIncomplete(_))
        ));
    }

    #[test]
    fn corrupt_segments() {
        let file = mux(&fake_jpeg(), &payload_set([1; 6])).unwrap();
        let body = 15;
        for (offset, value) in [(body + 4, b'X'), (body + 8, 3), (body + 10, 0), (body + 12, 0)] {
            let mut f = file.clone();
            f[offset] = value;
            assert!(matches!(demux(&f), Err(ContainerError::CorruptSegment { .. })), "{offset}");
        }
        let mut short = file[..11].to_vec();
        short.extend_from_slice(&[0xFF, 0xEB, 0, 8, b'H', b'P', b'1', b'0', 0, 0]);
        short.extend_from_slice(&file[11..]);
        assert!(matches!(demux(&short), Err(ContainerError::CorruptSegment { .. })));
    }

    proptest! {
        #[test]
        fn mux_demux_round_trip(
            sizes in proptest::array::uniform6(prop_oneof![0usize..300, 65000usize..140000]),
            order in Just(()).prop_perturb(|_, mut rng| {
                let mut idx: Vec<usize> = (0..7).collect();
                for i in (1..7).rev() { idx.swap(i, rng.next_u32() as usize % (i + 1)); }
                idx
            }),
        ) {
            let p = payload_set(sizes);
            let shuffled: Vec<_> = order.iter().map(|&i| p[i].clone()).collect();
            let base = fake_jpeg();
            let file = mux(&base, &shuffled).unwrap();
            prop_assert_eq!(&file, &mux(&base, &p).unwrap());
            prop_assert!(our_segments(&file).iter().all(|s| s.4 - 2 <= 65535));

            // Reassembly does not depend on segment order.
            let hs = header_segments(&file).unwrap();
            let ours: Vec<_> = hs.iter().filter(|s| is_ours(&file, s)).collect();
            let (first, last) = (ours[0].start, ours.last().unwrap().end);
            let mut reordered = file[..first].to_vec();
            for s in ours.iter().rev() {
                reordered.extend_from_slice(&file[s.start..s.end]);
            }
            reordered.extend_from_slice(&file[last..]);
            for f in [&file, &reordered] {
                let d = demux(f).unwrap();
                prop_assert_eq!(&d.base_jpeg, &base);
                prop_assert_eq!(&d.payloads, &p);
            }
        }

        #[test]
        fn demux_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200), cut in 0usize..200) {
            let file = mux(&fake_jpeg(), &payload_set([2; 6])).unwrap();
            let _ = demux(&bytes);
            let mut f = file.clone();
            let i = cut % f.len();
            f[i] ^= 0x5A;
            let _ = demux(&f);
            let _ = demux(&file[..cut.min(file.len())]);
        }
    }
}
