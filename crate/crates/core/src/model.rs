//! Pixel and image data model.
//!
//! HDR samples are always carried as unsigned 16-bit codes. Half-float images
//! store the raw binary16 bit pattern of each sample, so every input,
//! including NaN and infinity patterns, survives the codec untouched.

use half::f16;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sample out of range in plane {plane} at index {index}")]
    SampleOutOfRange { plane: usize, index: usize },
    #[error("unsupported integer bit depth {0} (expected 8..=16)")]
    InvalidBitDepth(u8),
    #[error("zero-sized image")]
    Empty,
}

/// How the 16-bit codes of an [`HdrImage`] are to be interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelType {
    /// IEEE 754 binary16 bit patterns.
    HalfFloat,
    /// Native unsigned integers of the given bit depth (8..=16).
    UInt(u8),
}

impl PixelType {
    pub fn uint(bit_depth: u8) -> Result<Self, ModelError> {
        if (8..=16).contains(&bit_depth) {
            Ok(PixelType::UInt(bit_depth))
        } else {
            Err(ModelError::InvalidBitDepth(bit_depth))
        }
    }

    pub fn bit_depth(self) -> u8 {
        match self {
            PixelType::HalfFloat => 16,
            PixelType::UInt(d) => d,
        }
    }

    /// Largest code admissible for this pixel type.
    pub fn max_code(self) -> u16 {
        match self {
            PixelType::HalfFloat => u16::MAX,
            PixelType::UInt(d) => ((1u32 << d) - 1) as u16,
        }
    }
}

/// Rectangular, row-major array of samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    samples: Vec<T>,
}

impl<T> Plane<T> {
    pub fn new(width: usize, height: usize, samples: Vec<T>) -> Result<Self, ModelError> {
        if width.checked_mul(height) != Some(samples.len()) {
            return Err(ModelError::DimensionMismatch(format!(
                "{}x{} plane needs {} samples, got {}",
                width,
                height,
                width.saturating_mul(height),
                samples.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            samples,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn same_dims<U>(&self, other: &Plane<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Plane<U> {
        Plane {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(f).collect(),
        }
    }
}

impl<T: Copy> Plane<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.samples[y * self.width + x]
    }
}

impl<T> Default for Plane<T> {
    fn default() -> Self {
        Plane {
            width: 0,
            height: 0,
            samples: Vec::new(),
        }
    }
}

/// Three-component (RGB) image of 16-bit codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HdrImage {
    width: usize,
    height: usize,
    planes: [Plane<u16>; 3],
    pixel_type: PixelType,
}

impl HdrImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn pixel_type(&self) -> PixelType {
        self.pixel_type
    }

    pub fn planes(&self) -> &[Plane<u16>; 3] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &Plane<u16> {
        &self.planes[c]
    }

    pub fn into_planes(self) -> [Plane<u16>; 3] {
        self.planes
    }
}

/// Reinterprets a binary16 value as its 16-bit code.
#[inline]
pub fn half_to_code(h: f16) -> u16 {
    h.to_bits()
}

/// Inverse of [`half_to_code`].
#[inline]
pub fn code_to_half(c: u16) -> f16 {
    f16::from_bits(c)
}

/// Builds a validated [`HdrImage`].
///
/// Every plane must contain exactly `width * height` samples and, for
/// `UInt(d)` images, every code must be below `2^d`.
pub fn make_image(
    width: usize,
    height: usize,
    planes: [Vec<u16>; 3],
    pixel_type: PixelType,
) -> Result<HdrImage, ModelError> {
    if width == 0 || height == 0 {
        return Err(ModelError::Empty);
    }
    if let PixelType::UInt(d) = pixel_type {
        PixelType::uint(d)?;
    }
    let [r, g, b] = planes;
    let planes = [
        Plane::new(width, height, r)?,
        Plane::new(width, height, g)?,
        Plane::new(width, height, b)?,
    ];
    let max = pixel_type.max_code();
    for (plane, p) in planes.iter().enumerate() {
        if let Some(index) = p.samples().iter().position(|&c| c > max) {
            return Err(ModelError::SampleOutOfRange { plane, index });
        }
    }
    Ok(HdrImage {
        width,
        height,
        planes,
        pixel_type,
    })
}

/// Same as [`make_image`] for planes that are already shaped.
pub fn make_image_from_planes(
    planes: [Plane<u16>; 3],
    pixel_type: PixelType,
) -> Result<HdrImage, ModelError> {
    let (w, h) = (planes[0].width(), planes[0].height());
    if !planes.iter().all(|p| p.width() == w && p.height() == h) {
        return Err(ModelError::DimensionMismatch(
            "planes differ in size".into(),
        ));
    }
    let [r, g, b] = planes;
    make_image(
        w,
        h,
        [r.into_samples(), g.into_samples(), b.into_samples()],
        pixel_type,
    )
}
