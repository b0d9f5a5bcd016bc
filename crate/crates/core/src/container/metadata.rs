//! Fixed-layout binary metadata carried in the `META` box.
//!
//! ```text
//! version(u8) ‖ pixel_tag(u8) ‖ bit_depth(u8) ‖ width(u32) ‖ height(u32) ‖ q(u8)
//! ‖ tmo_kind(u8) ‖ exposure(f64) ‖ gamma(f64) ‖ lut_rule(u8) ‖ transform(u8)
//! ‖ packing(u8) ‖ codec_id[0..3](4 bytes each)
//! ```
//!
//! All integers and floats are big-endian.

use super::ContainerError;
use crate::base::{QualityFactor, TmoKind, TmoParams};
use crate::codec::CodecId;
use crate::model::PixelType;

pub const FORMAT_VERSION: u8 = 1;
pub const METADATA_LEN: usize = 44;

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub format_version: u8,
    pub pixel_type: PixelType,
    pub width: u32,
    pub height: u32,
    pub q: QualityFactor,
    pub tmo: TmoParams,
    pub lut_rule: u8,
    pub transform: bool,
    pub packing: bool,
    pub codec_ids: [CodecId; 3],
}

impl Metadata {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(METADATA_LEN);
        out.push(self.format_version);
        match self.pixel_type {
            PixelType::HalfFloat => out.extend_from_slice(&[0, 16]),
            PixelType::UInt(d) => out.extend_from_slice(&[1, d]),
        }
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.push(self.q.get());
        out.push(match self.tmo.kind {
            TmoKind::ReinhardGlobal => 0,
            TmoKind::BitShift => 1,
        });
        out.extend_from_slice(&self.tmo.exposure_scale.to_be_bytes());
        out.extend_from_slice(&self.tmo.gamma.to_be_bytes());
        out.push(self.lut_rule);
        out.push(self.transform as u8);
        out.push(self.packing as u8);
        for id in &self.codec_ids {
            out.extend_from_slice(&id.0);
        }
        debug_assert_eq!(out.len(), METADATA_LEN);
        out
    }

    pub fn from_bytes(b: &[u8]) -> Result<Self, ContainerError> {
        let bad = ContainerError::BadMetadata;
        let version = *b.first().ok_or(bad("empty"))?;
        if version != FORMAT_VERSION {
            return Err(ContainerError::UnsupportedVersion(version));
        }
        if b.len() != METADATA_LEN {
            return Err(bad("wrong length"));
        }
        let u32_at = |i: usize| u32::from_be_bytes(b[i..i + 4].try_into().unwrap());
        let f64_at = |i: usize| f64::from_be_bytes(b[i..i + 8].try_into().unwrap());
        let flag = |v: u8| match v {
            0 => Ok(false),
            1 => Ok(true),
            _ => Err(bad("flag not 0 or 1")),
        };
        let pixel_type = match (b[1], b[2]) {
            (0, 16) => PixelType::HalfFloat,
            (1, d) => PixelType::uint(d).map_err(|_| bad("bit depth"))?,
            _ => return Err(bad("pixel type")),
        };
        let (width, height) = (u32_at(3), u32_at(7));
        if width == 0 || height == 0 {
            return Err(bad("zero dimension"));
        }
        let q = b[11];
        if !(1..=100).contains(&q) {
            return Err(bad("quality out of range"));
        }
        let kind = match b[12] {
            0 => TmoKind::ReinhardGlobal,
            1 => TmoKind::BitShift,
            _ => return Err(bad("tone mapping kind")),
        };
        let tmo = TmoParams::new(kind, f64_at(13), f64_at(21)).map_err(|_| bad("tone mapping parameters"))?;
        let codec_id = |i: usize| CodecId(b[32 + 4 * i..36 + 4 * i].try_into().unwrap());
        Ok(Metadata {
            format_version: version,
            pixel_type,
            width,
            height,
            q: QualityFactor::new(q as i32),
            tmo,
            lut_rule: b[29],
            transform: flag(b[30])?,
            packing: flag(b[31])?,
            codec_ids: [codec_id(0), codec_id(1), codec_id(2)],
        })
    }
}
