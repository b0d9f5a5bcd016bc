//! Base layer: tone mapping and a self-contained baseline JPEG codec.
//!
//! The decoder is the reference for the residual path: the encoder subtracts
//! its prediction from what [`jpeg_decode`] reconstructs, so the IDCT and
//! color conversion here are fully integer and specified in [`dct`].

mod color;
pub mod dct;
mod decoder;
mod encoder;
mod huffman;
pub mod tables;
mod tmo;

use thiserror::Error;

use crate::model::{PixelType, Plane};

pub use decoder::jpeg_decode;
pub use encoder::jpeg_encode;
pub use tables::{quality_to_tables, QualityFactor};
pub use tmo::{tone_map, TmoKind, TmoParams};
#[cfg(test)]
pub(crate) use tmo::reinhard_code;

pub mod marker {
    pub const SOF0: u8 = 0xC0;
    pub const SOF1: u8 = 0xC1;
    pub const DHT: u8 = 0xC4;
    pub const SOI: u8 = 0xD8;
    pub const EOI: u8 = 0xD9;
    pub const SOS: u8 = 0xDA;
    pub const DQT: u8 = 0xDB;
    pub const DRI: u8 = 0xDD;
    pub const APP0: u8 = 0xE0;
    pub const APP11: u8 = 0xEB;
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaseError {
    #[error("tone mapping {kind:?} does not apply to {pixel_type:?} images")]
    UnsupportedKind { kind: TmoKind, pixel_type: PixelType },
    #[error("tone mapping parameters must be positive and finite")]
    InvalidTmoParams,
    #[error("malformed JPEG stream at offset {offset}: {reason}")]
    MalformedStream { offset: usize, reason: &'static str },
    #[error("unsupported JPEG feature: {0}")]
    UnsupportedFeature(&'static str),
    #[error("{width}x{height} cannot be coded as a baseline JPEG")]
    UnsupportedDimensions { width: usize, height: usize },
}

impl BaseError {
    pub(crate) fn malformed(offset: usize, reason: &'static str) -> Self {
        BaseError::MalformedStream { offset, reason }
    }
}

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdrImage {
    planes: [Plane<u8>; 3],
}

impl LdrImage {
    /// Planes must share dimensions.
    pub fn from_planes(planes: [Plane<u8>; 3]) -> Self {
        assert!(planes[0].same_dims(&planes[1]) && planes[0].same_dims(&planes[2]));
        LdrImage { planes }
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn planes(&self) -> &[Plane<u8>; 3] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &Plane<u8> {
        &self.planes[c]
    }
}
