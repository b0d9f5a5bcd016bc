//! Python module `pyhdrpack`.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use hdrpack::base::{QualityFactor, TmoKind, TmoParams};
use hdrpack::codec::CodecId;
use hdrpack::histpack::{build_histogram, sparseness};
use hdrpack::model::{self, make_image, PixelType, Plane};
use hdrpack::residual;
use hdrpack::synth::{self, KINDS};
use hdrpack::EncodeOptions;

create_exception!(pyhdrpack, HdrpackError, PyValueError);

fn err(e: impl std::fmt::Display) -> PyErr {
    HdrpackError::new_err(e.to_string())
}

fn parse_pixel_type(s: &str) -> PyResult<PixelType> {
    match s {
        "half" => Ok(PixelType::HalfFloat),
        _ => s
            .strip_prefix("uint")
            .and_then(|d| d.parse::<u8>().ok())
            .ok_or_else(|| err(format!("unknown pixel type {s:?}")))
            .and_then(|d| PixelType::uint(d).map_err(err)),
    }
}

fn pixel_type_name(pt: PixelType) -> String {
    match pt {
        PixelType::HalfFloat => "half".into(),
        PixelType::UInt(d) => format!("uint{d}"),
    }
}

/// Three-plane image of 16-bit codes ("half" bit patterns or "uintD").
#[pyclass(name = "HdrImage", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyHdrImage(pub model::HdrImage);

#[pymethods]
impl PyHdrImage {
    #[new]
    fn new(width: usize, height: usize, planes: [Vec<u16>; 3], pixel_type: &str) -> PyResult<Self> {
        let pt = parse_pixel_type(pixel_type)?;
        Ok(PyHdrImage(make_image(width, height, planes, pt).map_err(err)?))
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn pixel_type(&self) -> String {
        pixel_type_name(self.0.pixel_type())
    }

    fn planes(&self) -> Vec<Vec<u16>> {
        self.0.planes().iter().map(|p| p.samples().to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!("HdrImage({}x{}, {})", self.0.width(), self.0.height(), self.pixel_type())
    }
}

fn codec_id(name: &str) -> PyResult<CodecId> {
    match name {
        "medrice" => Ok(CodecId::MEDRICE),
        "raw" => Ok(CodecId::RAW),
        _ => Err(err(format!("unknown codec {name:?}"))),
    }
}

/// Encodes an image into container bytes.
#[pyfunction]
#[pyo3(signature = (image, q=80, tmo=None, codec="medrice", packing=true, transform=true, exposure=1.0, gamma=TmoParams::DEFAULT_GAMMA))]
#[allow(clippy::too_many_arguments)]
fn encode<'py>(
    py: Python<'py>,
    image: &PyHdrImage,
    q: i32,
    tmo: Option<&str>,
    codec: &str,
    packing: bool,
    transform: bool,
    exposure: f64,
    gamma: f64,
) -> PyResult<Bound<'py, PyBytes>> {
    let kind = match tmo {
        None => TmoKind::default_for(image.0.pixel_type()),
        Some("reinhard") => TmoKind::ReinhardGlobal,
        Some("bitshift") => TmoKind::BitShift,
        Some(other) => return Err(err(format!("unknown tone mapping {other:?}"))),
    };
    let opts = EncodeOptions {
        q: QualityFactor::new(q),
        tmo: Some(TmoParams::new(kind, exposure, gamma).map_err(err)?),
        codec: codec_id(codec)?,
        packing,
        transform,
    };
    let enc = py.detach(|| hdrpack::encode_file(&image.0, &opts)).map_err(err)?;
    Ok(PyBytes::new(py, &enc.bytes))
}

#[pyfunction]
fn decode(py: Python<'_>, data: Vec<u8>) -> PyResult<PyHdrImage> {
    py.detach(|| hdrpack::decode_file(&data))
        .map(PyHdrImage)
        .map_err(err)
}

/// Metadata, layer sizes and per-component sparseness of a container file.
#[pyfunction]
fn info<'py>(py: Python<'py>, data: Vec<u8>) -> PyResult<Bound<'py, PyDict>> {
    let layers = hdrpack::decode_layers(&data).map_err(err)?;
    let m = &layers.metadata;
    let d = PyDict::new(py);
    d.set_item("width", m.width)?;
    d.set_item("height", m.height)?;
    d.set_item("pixel_type", pixel_type_name(m.pixel_type))?;
    d.set_item("q", m.q.get())?;
    d.set_item("packing", m.packing)?;
    d.set_item("transform", m.transform)?;
    d.set_item("file_bytes", data.len())?;
    d.set_item("base_bytes", layers.base_jpeg.len())?;
    d.set_item("plane_bytes", layers.plane_bytes.to_vec())?;
    d.set_item("table_bytes", layers.table_bytes.to_vec())?;
    let mut alpha = Vec::new();
    for p in &layers.residual {
        alpha.push(sparseness(&build_histogram(p).map_err(err)?).map_err(err)?.alpha);
    }
    d.set_item("alpha", alpha)?;
    Ok(d)
}

/// Exact sparseness `(used_bins, span)` of a list of samples.
#[pyfunction]
fn sparseness_ratio(samples: Vec<i32>) -> PyResult<(u64, u64)> {
    let n = samples.len();
    let plane = Plane::new(n, 1, samples).map_err(err)?;
    let s = sparseness(&build_histogram(&plane).map_err(err)?).map_err(err)?;
    Ok(s.ratio())
}

#[pyfunction]
fn rct_forward(r: i32, g: i32, b: i32) -> (i32, i32, i32) {
    residual::rct_forward_sample(r, g, b)
}

#[pyfunction]
fn rct_inverse(y: i32, u: i32, v: i32) -> (i32, i32, i32) {
    residual::rct_inverse_sample(y, u, v)
}

#[pyfunction]
fn read_image(path: &str) -> PyResult<PyHdrImage> {
    hdrpack::io::read_image(path).map(PyHdrImage).map_err(err)
}

#[pyfunction]
fn write_image(image: &PyHdrImage, path: &str) -> PyResult<()> {
    hdrpack::io::write_image(&image.0, path).map_err(err)
}

/// Seeded synthetic image; `kind` is one of `synth_kinds()`.
#[pyfunction]
fn synthesize(kind: &str, width: usize, height: usize, pixel_type: &str, seed: u64) -> PyResult<PyHdrImage> {
    let k = KINDS
        .iter()
        .copied()
        .find(|k| k.name() == kind)
        .ok_or_else(|| err(format!("unknown kind {kind:?}")))?;
    if width == 0 || height == 0 {
        return Err(err("zero-sized image"));
    }
    Ok(PyHdrImage(synth::generate(k, width, height, parse_pixel_type(pixel_type)?, seed)))
}

#[pyfunction]
fn synth_kinds() -> Vec<&'static str> {
    KINDS.iter().map(|k| k.name()).collect()
}

#[pymodule]
fn pyhdrpack(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HdrpackError", m.py().get_type::<HdrpackError>())?;
    m.add_class::<PyHdrImage>()?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(info, m)?)?;
    m.add_function(wrap_pyfunction!(sparseness_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(rct_forward, m)?)?;
    m.add_function(wrap_pyfunction!(rct_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(write_image, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(synth_kinds, m)?)?;
    Ok(())
}
