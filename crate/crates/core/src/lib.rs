//! Two-layer lossless HDR image codec.
//!
//! The base layer is a baseline JPEG of a tone-mapped 8-bit rendition. The
//! extension layer stores the residual between the original codes and a
//! prediction from the decoded base layer, histogram-packed and coded by a
//! pluggable lossless plane codec. Both travel in one JPEG file, with the
//! extension data in APP11 segments that legacy decoders skip.
//!
//! ```no_run
//! use hdrpack::{decode_file, encode_file, EncodeOptions};
//! # fn demo(img: hdrpack::model::HdrImage) -> Result<(), hdrpack::Error> {
//! let file = encode_file(&img, &EncodeOptions::default())?;
//! assert_eq!(decode_file(&file.bytes)?, img);
//! # Ok(()) }
//! ```

pub mod base;
pub mod codec;
pub mod container;
mod error;
pub mod histpack;
pub mod io;
pub mod model;
mod pipeline;
pub mod report;
pub mod residual;
pub mod synth;

pub use error::Error;
pub use pipeline::{
    decode_file, decode_file_with, decode_layers, decode_layers_with, encode_file,
    encode_file_with, DecodedLayers, EncodeOptions, EncodedFile,
};
