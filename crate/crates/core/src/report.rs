//! Per-run measurements and the benchmark sweep.
//!
//! CSV columns, in order:
//!
//! ```text
//! image,width,height,pixel_type,codec,q,packing,total_bytes,total_bits,bpp,
//! base_bytes,ext_bytes_0,ext_bytes_1,ext_bytes_2,table_bytes_0,table_bytes_1,
//! table_bytes_2,alpha_0,alpha_1,alpha_2,table_overhead,wall_time_ms
//! ```
//!
//! `bpp` is total bits per pixel (not per component sample). `ext_bytes_c`
//! is the coded plane of component `c`, `table_bytes_c` its serialized
//! unpacking table. `wall_time_ms` is the only non-deterministic column.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use crate::base::QualityFactor;
use crate::codec::CodecId;
use crate::model::{HdrImage, PixelType};
use crate::{encode_file, EncodeOptions, EncodedFile, Error};

pub const CSV_HEADER: [&str; 22] = [
    "image",
    "width",
    "height",
    "pixel_type",
    "codec",
    "q",
    "packing",
    "total_bytes",
    "total_bits",
    "bpp",
    "base_bytes",
    "ext_bytes_0",
    "ext_bytes_1",
    "ext_bytes_2",
    "table_bytes_0",
    "table_bytes_1",
    "table_bytes_2",
    "alpha_0",
    "alpha_1",
    "alpha_2",
    "table_overhead",
    "wall_time_ms",
];

/// Quality values swept by [`bench`]: 10, 20, ..., 100.
pub const BENCH_QUALITIES: [u8; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub image: String,
    pub width: usize,
    pub height: usize,
    pub pixel_type: PixelType,
    pub codec: CodecId,
    pub q: u8,
    pub packing: bool,
    pub total_bytes: usize,
    pub base_bytes: usize,
    pub ext_bytes: [usize; 3],
    pub table_bytes: [usize; 3],
    pub alpha: [f64; 3],
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn from_encoded(image: &str, hdr: &HdrImage, enc: &EncodedFile, wall_time_ms: f64) -> Self {
        RunReport {
            image: image.to_string(),
            width: hdr.width(),
            height: hdr.height(),
            pixel_type: hdr.pixel_type(),
            codec: enc.metadata.codec_ids[0],
            q: enc.metadata.q.get(),
            packing: enc.metadata.packing,
            total_bytes: enc.total_bytes(),
            base_bytes: enc.base_bytes,
            ext_bytes: enc.plane_bytes,
            table_bytes: enc.table_bytes,
            alpha: enc.sparseness.map(|s| s.alpha),
            wall_time_ms,
        }
    }

    pub fn total_bits(&self) -> u64 {
        self.total_bytes as u64 * 8
    }

    pub fn bpp(&self) -> f64 {
        self.total_bits() as f64 / (self.width * self.height) as f64
    }

    pub fn table_overhead(&self) -> f64 {
        self.table_bytes.iter().sum::<usize>() as f64 / self.total_bytes as f64
    }

    pub fn csv_record(&self) -> Vec<String> {
        let pt = match self.pixel_type {
            PixelType::HalfFloat => "half".to_string(),
            PixelType::UInt(d) => format!("uint{d}"),
        };
        let mut r = vec![
            self.image.clone(),
            self.width.to_string(),
            self.height.to_string(),
            pt,
            self.codec.to_string(),
            self.q.to_string(),
            (if self.packing { "on" } else { "off" }).to_string(),
            self.total_bytes.to_string(),
            self.total_bits().to_string(),
            format!("{:.6}", self.bpp()),
            self.base_bytes.to_string(),
        ];
        r.extend(self.ext_bytes.iter().map(|v| v.to_string()));
        r.extend(self.table_bytes.iter().map(|v| v.to_string()));
        r.extend(self.alpha.iter().map(|v| format!("{v:.8}")));
        r.push(format!("{:.8}", self.table_overhead()));
        r.push(format!("{:.3}", self.wall_time_ms));
        r
    }
}

pub fn write_csv<W: Write>(out: W, reports: &[RunReport]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_record())?;
    }
    w.flush()?;
    Ok(())
}

/// Encodes once and times it.
pub fn measure(name: &str, hdr: &HdrImage, opts: &EncodeOptions) -> Result<RunReport, Error> {
    let start = Instant::now();
    let enc = encode_file(hdr, opts)?;
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    Ok(RunReport::from_encoded(name, hdr, &enc, ms))
}

/// Sweeps images × `qualities` × packing on/off × `codecs`, in that nesting
/// order. Images are processed concurrently; row order is fixed.
pub fn bench(
    images: &[(String, HdrImage)],
    qualities: &[u8],
    codecs: &[CodecId],
) -> Result<Vec<RunReport>, Error> {
    let per_image: Vec<Vec<RunReport>> = images
        .par_iter()
        .map(|(name, img)| {
            let mut rows = Vec::with_capacity(qualities.len() * 2 * codecs.len());
            for &q in qualities {
                for packing in [true, false] {
                    for &codec in codecs {
                        let opts = EncodeOptions {
                            q: QualityFactor::new(q as i32),
                            codec,
                            packing,
                            ..Default::default()
                        };
                        rows.push(measure(name, img, &opts)?);
                    }
                }
            }
            Ok(rows)
        })
        .collect::<Result<_, Error>>()?;
    Ok(per_image.into_iter().flatten().collect())
}
