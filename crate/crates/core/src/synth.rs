//! Seeded synthetic test images.

use half::f16;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{half_to_code, make_image, HdrImage, PixelType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// Smooth luminance ramps with mild noise.
    Gradient,
    /// Uniformly random codes over the whole code range.
    Random,
    Constant,
    /// Few distinct values spread far apart.
    Sparse,
    /// Gradient sprinkled with NaN, infinity, negative zero and subnormals.
    Specials,
    /// Checkerboard of the minimum and maximum codes.
    Extreme,
    /// Sum of sinusoids plus noise.
    Natural,
}

pub const KINDS: [Kind; 7] = [
    Kind::Gradient,
    Kind::Random,
    Kind::Constant,
    Kind::Sparse,
    Kind::Specials,
    Kind::Extreme,
    Kind::Natural,
];

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Gradient => "gradient",
            Kind::Random => "random",
            Kind::Constant => "constant",
            Kind::Sparse => "sparse",
            Kind::Specials => "specials",
            Kind::Extreme => "extreme",
            Kind::Natural => "natural",
        }
    }
}

fn noise(rng: &mut impl Rng) -> f64 {
    // Roughly normal, unit variance.
    (0..4).map(|_| rng.gen::<f64>()).sum::<f64>() * 3f64.sqrt() - 2.0 * 3f64.sqrt()
}

/// Smooth field in [0, 1] for channel `c`.
fn field(x: usize, y: usize, w: usize, h: usize, c: usize, phase: f64) -> f64 {
    let (u, v) = (x as f64 / w.max(2) as f64, y as f64 / h.max(2) as f64);
    let s = (6.0 * u + phase + c as f64).sin() * (4.0 * v - phase).cos()
        + 0.5 * (11.0 * (u + v) + 2.0 * phase).sin();
    0.5 + s / 3.0
}

fn from_value(v: f64, pt: PixelType) -> u16 {
    match pt {
        // `v` in [0, 1] spans about 14 stops of linear light.
        PixelType::HalfFloat => half_to_code(f16::from_f64((2f64).powf(-6.0 + 14.0 * v))),
        PixelType::UInt(_) => (v.clamp(0.0, 1.0) * pt.max_code() as f64).round() as u16,
    }
}

const SPECIAL_HALVES: [u16; 12] = [
    0x7C00, 0xFC00, 0x7E00, 0x7C01, 0x7FFF, 0xFE00, 0xFFFF, 0x8000, 0x0001, 0x03FF, 0x7BFF, 0xBC00,
];

pub fn generate(kind: Kind, w: usize, h: usize, pt: PixelType, seed: u64) -> HdrImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = w * h;
    let max = pt.max_code();
    let phase = rng.gen::<f64>() * 6.0;
    let planes: [Vec<u16>; 3] = match kind {
        Kind::Gradient => std::array::from_fn(|c| {
            (0..n)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    let t = (x + y) as f64 / (w + h) as f64 + 0.1 * c as f64;
                    from_value((t + 0.002 * noise(&mut rng)).clamp(0.0, 1.0), pt)
                })
                .collect()
        }),
        Kind::Natural => std::array::from_fn(|c| {
            (0..n)
                .map(|i| {
                    let v = field(i % w, i / w, w, h, c, phase) + 0.01 * noise(&mut rng);
                    from_value(v.clamp(0.0, 1.0), pt)
                })
                .collect()
        }),
        Kind::Random => std::array::from_fn(|_| (0..n).map(|_| rng.gen_range(0..=max)).collect()),
        Kind::Constant => {
            let v: [u16; 3] = std::array::from_fn(|_| match pt {
                PixelType::HalfFloat => from_value(rng.gen(), pt),
                _ => rng.gen_range(0..=max),
            });
            std::array::from_fn(|c| vec![v[c]; n])
        }
        Kind::Sparse => {
            let values = sparse_values(&mut rng, pt);
            std::array::from_fn(|_| (0..n).map(|_| values[rng.gen_range(0..values.len())]).collect())
        }
        Kind::Specials => std::array::from_fn(|c| {
            (0..n)
                .map(|i| {
                    if pt == PixelType::HalfFloat && rng.gen_bool(0.2) {
                        SPECIAL_HALVES[rng.gen_range(0..SPECIAL_HALVES.len())]
                    } else if pt != PixelType::HalfFloat && rng.gen_bool(0.2) {
                        [0, max, max - 1, 1][rng.gen_range(0..4)]
                    } else {
                        from_value(field(i % w, i / w, w, h, c, phase), pt)
                    }
                })
                .collect()
        }),
        Kind::Extreme => {
            let (lo, hi) = match pt {
                PixelType::HalfFloat => (0x0000, 0xFFFF),
                _ => (0, max),
            };
            std::array::from_fn(|c| {
                (0..n)
                    .map(|i| if (i % w + i / w + c).is_multiple_of(2) { lo } else { hi })
                    .collect()
            })
        }
    };
    make_image(w, h, planes, pt).expect("generated codes are in range")
}

fn sparse_values(rng: &mut impl Rng, pt: PixelType) -> Vec<u16> {
    let count = rng.gen_range(2..12);
    match pt {
        // Anywhere in the code space, including NaN patterns.
        PixelType::HalfFloat => (0..count).map(|_| rng.gen()).collect(),
        PixelType::UInt(d) => {
            let steps = 1u32 << (d - 8);
            let c = rng.gen_range(0..256u32.min(pt.max_code() as u32 + 1));
            (0..count)
                .map(|_| (rng.gen_range(0..256) * steps + c % steps) as u16)
                .collect()
        }
    }
}

/// UInt(16) image whose values are `256·m + c` for a handful of `m` and one
/// offset `c` per channel, so every channel's values are spaced by
/// multiples of 256.
pub fn sparse_lattice(w: usize, h: usize, seed: u64) -> HdrImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ms: Vec<u32> = (0..rng.gen_range(4..16)).map(|_| rng.gen_range(0..256)).collect();
    let planes = std::array::from_fn(|_| {
        let c = rng.gen_range(0..256u32);
        (0..w * h)
            .map(|_| (ms[rng.gen_range(0..ms.len())] * 256 + c) as u16)
            .collect()
    });
    make_image(w, h, planes, PixelType::UInt(16)).unwrap()
}

const SIZES: [(usize, usize); 9] = [
    (1, 1),
    (1, 97),
    (83, 1),
    (7, 5),
    (33, 17),
    (512, 512),
    (128, 96),
    (255, 3),
    (64, 65),
];

const CORPUS_TYPES: [PixelType; 3] = [PixelType::HalfFloat, PixelType::UInt(12), PixelType::UInt(16)];

/// The desk corpus: `count` images cycling over every kind, pixel type and
/// a range of sizes from 1×1 to 512×512.
pub fn corpus(count: usize, seed: u64) -> Vec<(String, HdrImage)> {
    (0..count)
        .map(|i| {
            let kind = KINDS[i % KINDS.len()];
            let pt = CORPUS_TYPES[(i / KINDS.len()) % CORPUS_TYPES.len()];
            let (w, h) = SIZES[i % SIZES.len()];
            let tag = match pt {
                PixelType::HalfFloat => "half".to_string(),
                PixelType::UInt(d) => format!("u{d}"),
            };
            let name = format!("{i:03}_{}_{tag}_{w}x{h}", kind.name());
            (name, generate(kind, w, h, pt, seed.wrapping_add(i as u64)))
        })
        .collect()
}
