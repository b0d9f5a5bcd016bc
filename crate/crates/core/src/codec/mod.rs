//! Lossless plane codecs for index planes.
//!
//! Each codec is identified by a 4-byte ASCII tag. A [`CodedPlane`] carries
//! the tag, the plane geometry and the codec payload:
//!
//! ```text
//! codec_id(4) ‖ width(u32 BE) ‖ height(u32 BE) ‖ max_index(u32 BE) ‖ payload
//! ```

pub mod bitio;
pub mod medrice;
pub mod raw;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::histpack::{IndexPlane, MAX_INDEX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CodecId(pub [u8; 4]);

impl CodecId {
    pub const MEDRICE: CodecId = CodecId(*b"MRC1");
    pub const RAW: CodecId = CodecId(*b"RAW1");
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            if b.is_ascii_graphic() {
                write!(f, "{}", b as char)?;
            } else {
                write!(f, "\\x{b:02x}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("unknown codec id {0}")]
    UnknownCodec(CodecId),
    #[error("corrupt payload at byte {offset}: {reason}")]
    CorruptPayload { offset: usize, reason: &'static str },
    #[error("decoded value {value} at position {position} exceeds max_index")]
    IndexOverflow { position: usize, value: i64 },
    #[error("codec id {0} registered twice")]
    DuplicateId(CodecId),
    #[error("coded plane header: {0}")]
    BadHeader(&'static str),
}

/// A lossless coder for index planes. Implementations are stateless between
/// planes.
pub trait PlaneCodec: Send + Sync {
    fn id(&self) -> CodecId;
    fn encode(&self, ip: &IndexPlane) -> Vec<u8>;
    fn decode(
        &self,
        width: usize,
        height: usize,
        max_index: u32,
        payload: &[u8],
    ) -> Result<Vec<u32>, CodecError>;
}

pub struct MedRice;
pub struct Raw;

impl PlaneCodec for MedRice {
    fn id(&self) -> CodecId {
        CodecId::MEDRICE
    }
    fn encode(&self, ip: &IndexPlane) -> Vec<u8> {
        medrice::encode(ip)
    }
    fn decode(&self, w: usize, h: usize, m: u32, p: &[u8]) -> Result<Vec<u32>, CodecError> {
        medrice::decode(w, h, m, p)
    }
}

impl PlaneCodec for Raw {
    fn id(&self) -> CodecId {
        CodecId::RAW
    }
    fn encode(&self, ip: &IndexPlane) -> Vec<u8> {
        raw::encode(ip)
    }
    fn decode(&self, w: usize, h: usize, m: u32, p: &[u8]) -> Result<Vec<u32>, CodecError> {
        raw::decode(w, h, m, p)
    }
}

#[derive(Clone)]
pub struct CodecRegistry {
    codecs: BTreeMap<CodecId, Arc<dyn PlaneCodec>>,
}

impl CodecRegistry {
    pub fn empty() -> Self {
        CodecRegistry {
            codecs: BTreeMap::new(),
        }
    }

    /// Registry holding `MRC1` and `RAW1`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(MedRice)).expect("distinct ids");
        r.register(Arc::new(Raw)).expect("distinct ids");
        r
    }

    pub fn register(&mut self, codec: Arc<dyn PlaneCodec>) -> Result<(), CodecError> {
        let id = codec.id();
        if self.codecs.contains_key(&id) {
            return Err(CodecError::DuplicateId(id));
        }
        self.codecs.insert(id, codec);
        Ok(())
    }

    pub fn get(&self, id: CodecId) -> Result<&dyn PlaneCodec, CodecError> {
        self.codecs
            .get(&id)
            .map(|c| c.as_ref())
            .ok_or(CodecError::UnknownCodec(id))
    }

    pub fn ids(&self) -> impl Iterator<Item = CodecId> + '_ {
        self.codecs.keys().copied()
    }

    pub fn encode(&self, id: CodecId, ip: &IndexPlane) -> Result<CodedPlane, CodecError> {
        let payload = self.get(id)?.encode(ip);
        Ok(CodedPlane {
            codec_id: id,
            width: ip.width() as u32,
            height: ip.height() as u32,
            max_index: ip.max_index(),
            payload,
        })
    }

    pub fn decode(&self, cp: &CodedPlane) -> Result<IndexPlane, CodecError> {
        let codec = self.get(cp.codec_id)?;
        if cp.max_index > MAX_INDEX {
            return Err(CodecError::BadHeader("max_index out of range"));
        }
        let (w, h) = (cp.width as usize, cp.height as usize);
        w.checked_mul(h)
            .ok_or(CodecError::BadHeader("plane too large"))?;
        let indices = codec.decode(w, h, cp.max_index, &cp.payload)?;
        if indices.len() != w * h {
            return Err(CodecError::CorruptPayload {
                offset: cp.payload.len(),
                reason: "codec returned wrong sample count",
            });
        }
        if let Some(position) = indices.iter().position(|&i| i > cp.max_index) {
            return Err(CodecError::IndexOverflow {
                position,
                value: indices[position] as i64,
            });
        }
        Ok(IndexPlane::new(w, h, cp.max_index, indices).expect("validated"))
    }
}

impl Default for CodecRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

impl fmt::Debug for CodecRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.codecs.keys()).finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedPlane {
    pub codec_id: CodecId,
    pub width: u32,
    pub height: u32,
    pub max_index: u32,
    pub payload: Vec<u8>,
}

pub const CODED_PLANE_HEADER: usize = 16;

impl CodedPlane {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(CODED_PLANE_HEADER + self.payload.len());
        out.extend_from_slice(&self.codec_id.0);
        out.extend_from_slice(&self.width.to_be_bytes());
        out.extend_from_slice(&self.height.to_be_bytes());
        out.extend_from_slice(&self.max_index.to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodecError> {
        if bytes.len() < CODED_PLANE_HEADER {
            return Err(CodecError::BadHeader("truncated coded plane header"));
        }
        let word = |i: usize| u32::from_be_bytes(bytes[i..i + 4].try_into().unwrap());
        Ok(CodedPlane {
            codec_id: CodecId(bytes[0..4].try_into().unwrap()),
            width: word(4),
            height: word(8),
            max_index: word(12),
            payload: bytes[CODED_PLANE_HEADER..].to_vec(),
        })
    }
}

pub fn encode_plane_raw(ip: &IndexPlane) -> CodedPlane {
    CodecRegistry::builtin()
        .encode(CodecId::RAW, ip)
        .expect("builtin codec")
}

pub fn encode_plane_medrice(ip: &IndexPlane) -> CodedPlane {
    CodecRegistry::builtin()
        .encode(CodecId::MEDRICE, ip)
        .expect("builtin codec")
}

/// Decodes with the builtin codecs.
pub fn decode_plane(cp: &CodedPlane) -> Result<IndexPlane, CodecError> {
    CodecRegistry::builtin().decode(cp)
}
