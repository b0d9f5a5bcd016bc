//! HDR prediction from the decoded base layer, residual computation and the
//! reversible inter-component transform.

use half::f16;
use thiserror::Error;

use crate::base::{BaseError, LdrImage, TmoKind, TmoParams};
use crate::model::{make_image_from_planes, HdrImage, ModelError, PixelType, Plane};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResidualError {
    #[error(transparent)]
    Tmo(#[from] BaseError),
    #[error("dimension mismatch between prediction and image")]
    DimensionMismatch,
    #[error("reconstructed sample out of code range in plane {plane} at index {index}")]
    RangeViolation { plane: usize, index: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Version of the rule used by [`build_inverse_lut`]; stored in file metadata.
pub const LUT_RULE_VERSION: u8 = 1;

/// Predicted HDR code for every LDR code, per component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InverseTmoLut {
    pub tables: [[u16; 256]; 3],
}

impl InverseTmoLut {
    pub fn predict(&self, ldr: &LdrImage) -> [Plane<u16>; 3] {
        std::array::from_fn(|c| ldr.plane(c).map(|&v| self.tables[c][v as usize]))
    }
}

fn reinhard_inverse(v: u8, params: &TmoParams) -> u16 {
    if v == 0 {
        return 0;
    }
    let max_finite = f16::MAX.to_f64();
    let t = (v as f64 / 255.0).powf(params.gamma);
    let x = if v == 255 { max_finite } else { t / (1.0 - t) };
    let value = (x / params.exposure_scale).min(max_finite);
    f16::from_f64(value).to_bits()
}

/// Builds the deterministic prediction table for a tone mapping.
pub fn build_inverse_lut(
    params: &TmoParams,
    pixel_type: PixelType,
) -> Result<InverseTmoLut, ResidualError> {
    params.validate()?;
    params.check_pixel_type(pixel_type)?;
    let table: [u16; 256] = match (params.kind, pixel_type) {
        (TmoKind::BitShift, PixelType::UInt(d)) => {
            let shift = d as u32 - 8;
            let mid = if shift == 0 { 0 } else { 1u32 << (shift - 1) };
            std::array::from_fn(|v| ((v as u32) << shift | mid) as u16)
        }
        _ => std::array::from_fn(|v| reinhard_inverse(v as u8, params)),
    };
    Ok(InverseTmoLut {
        tables: [table; 3],
    })
}

/// Signed residual planes, RGB before [`rct_forward`], YUV after.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualPlanes(pub [Plane<i32>; 3]);

pub fn compute_residual(
    orig: &HdrImage,
    predicted: &[Plane<u16>; 3],
) -> Result<ResidualPlanes, ResidualError> {
    if predicted.iter().any(|p| !p.same_dims(orig.plane(0))) {
        return Err(ResidualError::DimensionMismatch);
    }
    Ok(ResidualPlanes(std::array::from_fn(|c| {
        let (o, p) = (orig.plane(c), &predicted[c]);
        let samples = o
            .samples()
            .iter()
            .zip(p.samples())
            .map(|(&a, &b)| a as i32 - b as i32)
            .collect();
        Plane::new(o.width(), o.height(), samples).expect("same dims")
    })))
}

/// Adds residuals back onto the prediction.
///
/// A sum outside the code range of `pixel_type` means the extension data
/// does not belong to this base layer.
pub fn reconstruct(
    pred: &[Plane<u16>; 3],
    residual: &ResidualPlanes,
    pixel_type: PixelType,
) -> Result<HdrImage, ResidualError> {
    let max = pixel_type.max_code() as i32;
    let mut planes: [Plane<u16>; 3] = Default::default();
    for c in 0..3 {
        let (p, r) = (&pred[c], &residual.0[c]);
        if !p.same_dims(r) || !p.same_dims(&pred[0]) {
            return Err(ResidualError::DimensionMismatch);
        }
        let mut out = Vec::with_capacity(p.len());
        for (index, (&a, &b)) in p.samples().iter().zip(r.samples()).enumerate() {
            let v = a as i32 + b;
            if !(0..=max).contains(&v) {
                return Err(ResidualError::RangeViolation { plane: c, index });
            }
            out.push(v as u16);
        }
        planes[c] = Plane::new(p.width(), p.height(), out).expect("same dims");
    }
    Ok(make_image_from_planes(planes, pixel_type)?)
}

#[inline]
pub fn rct_forward_sample(r: i32, g: i32, b: i32) -> (i32, i32, i32) {
    ((r + 2 * g + b) >> 2, b - g, r - g)
}

#[inline]
pub fn rct_inverse_sample(y: i32, u: i32, v: i32) -> (i32, i32, i32) {
    let g = y - ((u + v) >> 2);
    (v + g, g, u + g)
}

fn rct_apply(
    planes: &[Plane<i32>; 3],
    f: fn(i32, i32, i32) -> (i32, i32, i32),
) -> [Plane<i32>; 3] {
    let [a, b, c] = planes;
    assert!(a.same_dims(b) && a.same_dims(c), "planes differ in size");
    let n = a.len();
    let mut out = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for i in 0..n {
        let (x, y, z) = f(a.samples()[i], b.samples()[i], c.samples()[i]);
        out[0].push(x);
        out[1].push(y);
        out[2].push(z);
    }
    out.map(|v| Plane::new(a.width(), a.height(), v).expect("same dims"))
}

/// RGB residual planes to `(y, u, v)` with `y = floor((r+2g+b)/4)`,
/// `u = b-g`, `v = r-g`.
pub fn rct_forward(rgb: &[Plane<i32>; 3]) -> [Plane<i32>; 3] {
    rct_apply(rgb, rct_forward_sample)
}

pub fn rct_inverse(yuv: &[Plane<i32>; 3]) -> [Plane<i32>; 3] {
    rct_apply(yuv, rct_inverse_sample)
}
