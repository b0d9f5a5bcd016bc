//! End-to-end encode and decode of container files.

use rayon::prelude::*;

use crate::base::{jpeg_decode, jpeg_encode, tone_map, LdrImage, QualityFactor, TmoParams};
use crate::codec::{CodecId, CodecRegistry, CodedPlane};
use crate::container::{demux, mux, BoxType, Demuxed, ExtPayload, Metadata, FORMAT_VERSION};
use crate::error::Error;
use crate::histpack::{
    build_histogram, build_packing, deserialize_table, offset_plane, pack_plane, serialize_table,
    sparseness, unoffset_plane, unpack_plane, IndexPlane, Sparseness, UnpackingTable,
};
use crate::model::{HdrImage, Plane};
use crate::residual::{
    build_inverse_lut, compute_residual, rct_forward, rct_inverse, reconstruct, ResidualPlanes,
    LUT_RULE_VERSION,
};

#[derive(Debug, Clone, PartialEq)]
pub struct EncodeOptions {
    pub q: QualityFactor,
    /// Defaults to the natural tone mapping of the pixel type.
    pub tmo: Option<TmoParams>,
    pub codec: CodecId,
    pub packing: bool,
    /// Apply the reversible color transform to the residual.
    pub transform: bool,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            q: QualityFactor::default(),
            tmo: None,
            codec: CodecId::MEDRICE,
            packing: true,
            transform: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedFile {
    pub bytes: Vec<u8>,
    pub metadata: Metadata,
    pub base_bytes: usize,
    /// Serialized UTBL payload size per component.
    pub table_bytes: [usize; 3],
    /// Coded plane (EXTC payload) size per component.
    pub plane_bytes: [usize; 3],
    /// Sparseness of each residual plane that was coded.
    pub sparseness: [Sparseness; 3],
}

impl EncodedFile {
    pub fn total_bytes(&self) -> usize {
        self.bytes.len()
    }

    /// UTBL plus EXTC payload bytes over all components.
    pub fn extension_bytes(&self) -> usize {
        self.table_bytes.iter().sum::<usize>() + self.plane_bytes.iter().sum::<usize>()
    }

    pub fn table_overhead(&self) -> f64 {
        self.table_bytes.iter().sum::<usize>() as f64 / self.bytes.len() as f64
    }
}

struct CodedComponent {
    table: Vec<u8>,
    plane: Vec<u8>,
    sparseness: Sparseness,
}

fn code_component(
    registry: &CodecRegistry,
    component: usize,
    plane: &Plane<i32>,
    opts: &EncodeOptions,
) -> Result<CodedComponent, Error> {
    let packing_err = |source| Error::Packing { component, source };
    let hist = build_histogram(plane).map_err(packing_err)?;
    let sp = sparseness(&hist).map_err(packing_err)?;
    let (ip, table) = if opts.packing {
        let t = build_packing(&hist).map_err(packing_err)?;
        (pack_plane(plane, &t).map_err(packing_err)?, t)
    } else {
        let (ip, min) = offset_plane(plane).map_err(packing_err)?;
        (ip, UnpackingTable::new(vec![min]).expect("single entry"))
    };
    let coded = registry
        .encode(opts.codec, &ip)
        .map_err(|source| Error::Codec { component, source })?;
    Ok(CodedComponent {
        table: serialize_table(&table),
        plane: coded.to_bytes(),
        sparseness: sp,
    })
}

/// Residual planes as coded: RGB differences, or their reversible transform.
fn residual_planes(hdr: &HdrImage, base: &LdrImage, tmo: &TmoParams, transform: bool) -> Result<[Plane<i32>; 3], Error> {
    let lut = build_inverse_lut(tmo, hdr.pixel_type())?;
    let ResidualPlanes(rgb) = compute_residual(hdr, &lut.predict(base))?;
    Ok(if transform { rct_forward(&rgb) } else { rgb })
}

pub fn encode_file(hdr: &HdrImage, opts: &EncodeOptions) -> Result<EncodedFile, Error> {
    encode_file_with(&CodecRegistry::builtin(), hdr, opts)
}

pub fn encode_file_with(
    registry: &CodecRegistry,
    hdr: &HdrImage,
    opts: &EncodeOptions,
) -> Result<EncodedFile, Error> {
    registry
        .get(opts.codec)
        .map_err(|source| Error::Codec { component: 0, source })?;
    let tmo = opts.tmo.unwrap_or_else(|| TmoParams::default_for(hdr.pixel_type()));
    let ldr = tone_map(hdr, &tmo)?;
    let jpeg = jpeg_encode(&ldr, opts.q)?;
    let decoded = jpeg_decode(&jpeg)?;
    let planes = residual_planes(hdr, &decoded, &tmo, opts.transform)?;

    let coded: Vec<CodedComponent> = planes
        .par_iter()
        .enumerate()
        .map(|(c, p)| code_component(registry, c, p, opts))
        .collect::<Result<_, _>>()?;

    let metadata = Metadata {
        format_version: FORMAT_VERSION,
        pixel_type: hdr.pixel_type(),
        width: hdr.width() as u32,
        height: hdr.height() as u32,
        q: opts.q,
        tmo,
        lut_rule: LUT_RULE_VERSION,
        transform: opts.transform,
        packing: opts.packing,
        codec_ids: [opts.codec; 3],
    };
    let mut payloads = vec![ExtPayload::new(BoxType::Meta, 0, metadata.to_bytes())];
    for (c, cc) in coded.iter().enumerate() {
        payloads.push(ExtPayload::new(BoxType::Utbl, c as u8, cc.table.clone()));
        payloads.push(ExtPayload::new(BoxType::Extc, c as u8, cc.plane.clone()));
    }
    let bytes = mux(&jpeg, &payloads)?;
    Ok(EncodedFile {
        bytes,
        metadata,
        base_bytes: jpeg.len(),
        table_bytes: std::array::from_fn(|c| coded[c].table.len()),
        plane_bytes: std::array::from_fn(|c| coded[c].plane.len()),
        sparseness: std::array::from_fn(|c| coded[c].sparseness),
    })
}

/// A parsed container file with its extension planes decoded.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedLayers {
    pub metadata: Metadata,
    pub base_jpeg: Vec<u8>,
    pub base: LdrImage,
    pub tables: [UnpackingTable; 3],
    pub index_planes: [IndexPlane; 3],
    /// Residual planes as coded (after the transform when it was applied).
    pub residual: [Plane<i32>; 3],
    pub table_bytes: [usize; 3],
    pub plane_bytes: [usize; 3],
}

fn demux_extended(bytes: &[u8]) -> Result<(Demuxed, Metadata), Error> {
    let d = demux(bytes)?;
    match d.metadata.clone() {
        Some(m) => Ok((d, m)),
        None => Err(Error::LegacyOnlyFile),
    }
}

pub fn decode_layers(bytes: &[u8]) -> Result<DecodedLayers, Error> {
    decode_layers_with(&CodecRegistry::builtin(), bytes)
}

pub fn decode_layers_with(registry: &CodecRegistry, bytes: &[u8]) -> Result<DecodedLayers, Error> {
    let (d, meta) = demux_extended(bytes)?;
    if meta.lut_rule != LUT_RULE_VERSION {
        return Err(Error::Inconsistent("unknown prediction rule version"));
    }
    let base = jpeg_decode(&d.base_jpeg)?;
    let (w, h) = (meta.width as usize, meta.height as usize);
    if base.width() != w || base.height() != h {
        return Err(Error::Inconsistent("base layer size differs from metadata"));
    }
    let decoded: Vec<(UnpackingTable, IndexPlane, Plane<i32>)> = (0..3)
        .into_par_iter()
        .map(|c| {
            let utbl = d.payload(BoxType::Utbl, c as u8).expect("complete set");
            let extc = d.payload(BoxType::Extc, c as u8).expect("complete set");
            let table = deserialize_table(&utbl.data)
                .map_err(|source| Error::CorruptTable { component: c, source })?;
            let codec_err = |source| Error::Codec { component: c, source };
            let cp = CodedPlane::from_bytes(&extc.data).map_err(codec_err)?;
            if cp.codec_id != meta.codec_ids[c] {
                return Err(Error::Inconsistent("plane codec differs from metadata"));
            }
            if (cp.width as usize, cp.height as usize) != (w, h) {
                return Err(Error::Inconsistent("plane size differs from metadata"));
            }
            let ip = registry.decode(&cp).map_err(codec_err)?;
            let packing_err = |source| Error::Packing { component: c, source };
            let plane = if meta.packing {
                unpack_plane(&ip, &table).map_err(packing_err)?
            } else {
                if table.len() != 1 {
                    return Err(Error::CorruptTable {
                        component: c,
                        source: crate::histpack::HistPackError::CorruptTable(
                            "offset table must have one entry".into(),
                        ),
                    });
                }
                unoffset_plane(&ip, table.values()[0]).map_err(packing_err)?
            };
            Ok((table, ip, plane))
        })
        .collect::<Result<_, _>>()?;
    let mut it = decoded.into_iter();
    let mut next = || it.next().unwrap();
    let (a, b, c) = (next(), next(), next());
    Ok(DecodedLayers {
        table_bytes: std::array::from_fn(|i| d.payload(BoxType::Utbl, i as u8).unwrap().data.len()),
        plane_bytes: std::array::from_fn(|i| d.payload(BoxType::Extc, i as u8).unwrap().data.len()),
        metadata: meta,
        base_jpeg: d.base_jpeg,
        base,
        tables: [a.0, b.0, c.0],
        index_planes: [a.1, b.1, c.1],
        residual: [a.2, b.2, c.2],
    })
}

pub fn decode_file(bytes: &[u8]) -> Result<HdrImage, Error> {
    decode_file_with(&CodecRegistry::builtin(), bytes)
}

pub fn decode_file_with(registry: &CodecRegistry, bytes: &[u8]) -> Result<HdrImage, Error> {
    let layers = decode_layers_with(registry, bytes)?;
    let meta = &layers.metadata;
    let lut = build_inverse_lut(&meta.tmo, meta.pixel_type)?;
    let rgb = if meta.transform {
        rct_inverse(&layers.residual)
    } else {
        layers.residual
    };
    Ok(reconstruct(&lut.predict(&layers.base), &ResidualPlanes(rgb), meta.pixel_type)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histpack::HistPackError;
    use crate::model::{make_image, PixelType};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut impl Rng, w: usize, h: usize, pt: PixelType) -> HdrImage {
        let max = pt.max_code();
        let planes = std::array::from_fn(|_| (0..w * h).map(|_| rng.gen_range(0..=max)).collect());
        make_image(w, h, planes, pt).unwrap()
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for pt in [PixelType::HalfFloat, PixelType::UInt(12), PixelType::UInt(16), PixelType::UInt(8)] {
            for (w, h) in [(1, 1), (9, 7), (16, 16)] {
                let img = random_image(&mut rng, w, h, pt);
                for (packing, transform, codec) in [
                    (true, true, CodecId::MEDRICE),
                    (false, true, CodecId::MEDRICE),
                    (true, false, CodecId::RAW),
                ] {
                    let opts = EncodeOptions { q: QualityFactor::new(75), packing, transform, codec, ..Default::default() };
                    let enc = encode_file(&img, &opts).unwrap();
                    assert_eq!(decode_file(&enc.bytes).unwrap(), img, "{pt:?} {w}x{h} {opts:?}");
                }
            }
        }
    }

    #[test]
    fn deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let img = random_image(&mut rng, 40, 24, PixelType::HalfFloat);
        let a = encode_file(&img, &EncodeOptions::default()).unwrap();
        let b = encode_file(&img, &EncodeOptions::default()).unwrap();
        assert_eq!(a.bytes, b.bytes);
    }

    #[test]
    fn legacy_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let img = random_image(&mut rng, 8, 8, PixelType::UInt(12));
        let enc = encode_file(&img, &EncodeOptions::default()).unwrap();
        let base = demux(&enc.bytes).unwrap().base_jpeg;
        assert_eq!(decode_file(&base), Err(Error::LegacyOnlyFile));
    }

    #[test]
    fn corrupt_table_names_component() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let img = random_image(&mut rng, 8, 8, PixelType::UInt(12));
        let enc = encode_file(&img, &EncodeOptions::default()).unwrap();
        let d = demux(&enc.bytes).unwrap();
        let mut payloads = d.payloads.clone();
        let utbl = payloads
            .iter_mut()
            .find(|p| p.box_type == BoxType::Utbl && p.component == 1)
            .unwrap();
        utbl.data = vec![0xFF, 0x00, 0x13];
        let file = mux(&d.base_jpeg, &payloads).unwrap();
        assert!(matches!(
            decode_file(&file),
            Err(Error::CorruptTable {
                component: 1,
                source: HistPackError::CorruptTable(_)
            })
        ));
    }

    #[test]
    fn constant_image_is_fully_dense() {
        let img = make_image(5, 3, [vec![1000; 15], vec![20; 15], vec![4095; 15]], PixelType::UInt(12)).unwrap();
        let enc = encode_file(&img, &EncodeOptions::default()).unwrap();
        for s in &enc.sparseness {
            assert_eq!(s.ratio(), (1, 1));
        }
    }

    #[test]
    fn unknown_codec_rejected_before_work() {
        let img = make_image(1, 1, [vec![0], vec![0], vec![0]], PixelType::UInt(8)).unwrap();
        let opts = EncodeOptions { codec: CodecId(*b"NOPE"), ..Default::default() };
        assert!(matches!(encode_file(&img, &opts), Err(Error::Codec { .. })));
    }
}
