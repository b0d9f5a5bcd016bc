use thiserror::Error;

use crate::base::BaseError;
use crate::codec::CodecError;
use crate::container::ContainerError;
use crate::histpack::HistPackError;
use crate::model::ModelError;
use crate::residual::ResidualError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Base(#[from] BaseError),
    #[error(transparent)]
    Residual(#[from] ResidualError),
    #[error(transparent)]
    Container(#[from] ContainerError),
    #[error("component {component}: {source}")]
    CorruptTable {
        component: usize,
        source: HistPackError,
    },
    #[error("component {component}: {source}")]
    Packing {
        component: usize,
        source: HistPackError,
    },
    #[error("component {component}: {source}")]
    Codec {
        component: usize,
        source: CodecError,
    },
    #[error("file has no extension layer; only the base JPEG can be decoded")]
    LegacyOnlyFile,
    #[error("extension layer does not match the base layer: {0}")]
    Inconsistent(&'static str),
}

impl Error {
    /// True for errors caused by the input data rather than by a bug.
    pub fn is_format_error(&self) -> bool {
        !matches!(self, Error::Model(_))
    }
}
