use crate::model::{code_to_half, HdrImage, PixelType, Plane};

use super::{BaseError, LdrImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TmoKind {
    /// `L / (1 + L)` followed by display gamma, for half-float input.
    ReinhardGlobal,
    /// Keeps the top eight bits of an integer code.
    BitShift,
}

impl TmoKind {
    pub fn default_for(pixel_type: PixelType) -> Self {
        match pixel_type {
            PixelType::HalfFloat => TmoKind::ReinhardGlobal,
            PixelType::UInt(_) => TmoKind::BitShift,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmoParams {
    pub kind: TmoKind,
    /// Linear scale applied to every channel before the curve.
    pub exposure_scale: f64,
    pub gamma: f64,
}

impl TmoParams {
    pub const DEFAULT_GAMMA: f64 = 2.2;

    pub fn new(kind: TmoKind, exposure_scale: f64, gamma: f64) -> Result<Self, BaseError> {
        let p = TmoParams {
            kind,
            exposure_scale,
            gamma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn reinhard() -> Self {
        TmoParams {
            kind: TmoKind::ReinhardGlobal,
            exposure_scale: 1.0,
            gamma: Self::DEFAULT_GAMMA,
        }
    }

    pub fn bitshift() -> Self {
        TmoParams {
            kind: TmoKind::BitShift,
            exposure_scale: 1.0,
            gamma: Self::DEFAULT_GAMMA,
        }
    }

    pub fn default_for(pixel_type: PixelType) -> Self {
        match TmoKind::default_for(pixel_type) {
            TmoKind::ReinhardGlobal => Self::reinhard(),
            TmoKind::BitShift => Self::bitshift(),
        }
    }

    pub fn validate(&self) -> Result<(), BaseError> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if ok(self.exposure_scale) && ok(self.gamma) {
            Ok(())
        } else {
            Err(BaseError::InvalidTmoParams)
        }
    }

    pub fn check_pixel_type(&self, pixel_type: PixelType) -> Result<(), BaseError> {
        match (self.kind, pixel_type) {
            (TmoKind::ReinhardGlobal, PixelType::HalfFloat) => Ok(()),
            (TmoKind::BitShift, PixelType::UInt(_)) => Ok(()),
            (kind, pixel_type) => Err(BaseError::UnsupportedKind { kind, pixel_type }),
        }
    }
}

/// Scalar Reinhard curve for one half-float code.
///
/// Negative, zero and NaN inputs map to 0, positive infinity to 255.
pub(crate) fn reinhard_code(code: u16, exposure: f64, inv_gamma: f64) -> u8 {
    let x = exposure * code_to_half(code).to_f64();
    if x.is_nan() || x <= 0.0 {
        return 0;
    }
    if x.is_infinite() {
        return 255;
    }
    let t = x / (1.0 + x);
    (t.powf(inv_gamma) * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn tone_map(hdr: &HdrImage, params: &TmoParams) -> Result<LdrImage, BaseError> {
    params.validate()?;
    params.check_pixel_type(hdr.pixel_type())?;
    let planes: [Plane<u8>; 3] = match (params.kind, hdr.pixel_type()) {
        (TmoKind::BitShift, PixelType::UInt(d)) => {
            let shift = d - 8;
            std::array::from_fn(|c| hdr.plane(c).map(|&v| (v >> shift) as u8))
        }
        _ => {
            let inv_gamma = 1.0 / params.gamma;
            let exposure = params.exposure_scale;
            // Only 2^16 possible codes: tabulate once.
            let table: Vec<u8> = (0..=u16::MAX)
                .map(|c| reinhard_code(c, exposure, inv_gamma))
                .collect();
            std::array::from_fn(|c| hdr.plane(c).map(|&v| table[v as usize]))
        }
    };
    Ok(LdrImage::from_planes(planes))
}
