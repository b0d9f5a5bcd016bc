use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use hdrpack::base::{QualityFactor, TmoKind, TmoParams};
use hdrpack::codec::CodecId;
use hdrpack::histpack::{build_histogram, sparseness};
use hdrpack::io::{read_image, write_image, IoError};
use hdrpack::model::PixelType;
use hdrpack::report::{bench, write_csv, BENCH_QUALITIES};
use hdrpack::{decode_file, decode_layers, encode_file, EncodeOptions};

#[derive(Parser)]
#[command(name = "hdrpack", version, about = "Two-layer lossless HDR image codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tmo {
    Reinhard,
    Bitshift,
}

#[derive(Clone, Copy, ValueEnum)]
enum Codec {
    Medrice,
    Raw,
}

impl Codec {
    fn id(self) -> CodecId {
        match self {
            Codec::Medrice => CodecId::MEDRICE,
            Codec::Raw => CodecId::RAW,
        }
    }
}

#[derive(clap::Args)]
struct CodingArgs {
    /// Tone mapping; defaults to reinhard for PFM input, bitshift for PPM.
    #[arg(long, value_enum)]
    tmo: Option<Tmo>,
    /// Exposure scale for the reinhard curve.
    #[arg(long, default_value_t = 1.0)]
    exposure: f64,
    #[arg(long, default_value_t = TmoParams::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, value_enum, default_value = "medrice")]
    codec: Codec,
    /// Code residuals directly instead of histogram-packed.
    #[arg(long)]
    no_pack: bool,
    /// Skip the reversible color transform of the residual.
    #[arg(long)]
    no_transform: bool,
}

impl CodingArgs {
    fn options(&self, q: i32, pixel_type: PixelType) -> Result<EncodeOptions, Failure> {
        let kind = match self.tmo {
            Some(Tmo::Reinhard) => TmoKind::ReinhardGlobal,
            Some(Tmo::Bitshift) => TmoKind::BitShift,
            None => TmoKind::default_for(pixel_type),
        };
        let tmo = TmoParams::new(kind, self.exposure, self.gamma).map_err(Failure::format)?;
        Ok(EncodeOptions {
            q: QualityFactor::new(q),
            tmo: Some(tmo),
            codec: self.codec.id(),
            packing: !self.no_pack,
            transform: !self.no_transform,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Encode a PFM or PPM image into a container file.
    Encode {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Base layer quality, 1..=100.
        #[arg(long, default_value_t = 80)]
        q: i32,
        #[command(flatten)]
        coding: CodingArgs,
    },
    /// Decode a container file to PFM (half-float) or PPM (integer).
    Decode {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Encode, decode and compare bit for bit. Accepts a file or a directory.
    Verify {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long, num_args = 1.., default_values_t = [80])]
        q: Vec<i32>,
        #[command(flatten)]
        coding: CodingArgs,
    },
    /// Print metadata, layer sizes and per-component sparseness.
    Info {
        #[arg(short, long)]
        input: PathBuf,
    },
    /// Sweep q = 10..=100 × packing on/off × codecs over a directory; write CSV.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, num_args = 1.., default_values = ["medrice", "raw"])]
        codecs: Vec<Codec>,
    },
    /// Write the synthetic desk corpus as PFM/PPM files.
    Corpus {
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long, default_value_t = 54)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

const EXIT_MISMATCH: u8 = 1;
const EXIT_FORMAT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn format(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_FORMAT,
            message: format!("format error: {e}"),
        }
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: format!("internal error: {e}"),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_FORMAT,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<hdrpack::Error> for Failure {
    fn from(e: hdrpack::Error) -> Self {
        if e.is_format_error() {
            Failure::format(e)
        } else {
            Failure::internal(e)
        }
    }
}

fn input_files(path: &Path) -> Result<Vec<PathBuf>, Failure> {
    if !path.is_dir() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Failure::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pfm" | "ppm")
            )
        })
        .collect();
    files.sort();
    Ok(files)
}

fn load(path: &Path) -> Result<hdrpack::model::HdrImage, Failure> {
    read_image(path).map_err(|e| match e {
        IoError::Os(_) => Failure::io(path, e),
        e => Failure::format(format!("{}: {e}", path.display())),
    })
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Encode {
            input,
            output,
            q,
            coding,
        } => {
            let img = load(&input)?;
            let enc = encode_file(&img, &coding.options(q, img.pixel_type())?)?;
            fs::write(&output, &enc.bytes).map_err(|e| Failure::io(&output, e))?;
            println!(
                "{}: {} bytes (base {}, extension {}), {:.4} bpp",
                output.display(),
                enc.total_bytes(),
                enc.base_bytes,
                enc.extension_bytes(),
                enc.total_bytes() as f64 * 8.0 / img.pixel_count() as f64
            );
        }
        Command::Decode { input, output } => {
            let bytes = fs::read(&input).map_err(|e| Failure::io(&input, e))?;
            let img = decode_file(&bytes)?;
            write_image(&img, &output).map_err(|e| Failure::io(&output, e))?;
        }
        Command::Verify { input, q, coding } => {
            let mut mismatches = 0;
            for path in input_files(&input)? {
                let img = load(&path)?;
                for &qv in &q {
                    let opts = coding.options(qv, img.pixel_type())?;
                    let enc = encode_file(&img, &opts)?;
                    let ok = decode_file(&enc.bytes)? == img;
                    println!(
                        "{} q={} {} ({} bytes)",
                        path.display(),
                        opts.q.get(),
                        if ok { "ok" } else { "MISMATCH" },
                        enc.total_bytes()
                    );
                    mismatches += usize::from(!ok);
                }
            }
            if mismatches > 0 {
                return Err(Failure {
                    code: EXIT_MISMATCH,
                    message: format!("{mismatches} verification mismatch(es)"),
                });
            }
        }
        Command::Info { input } => {
            let bytes = fs::read(&input).map_err(|e| Failure::io(&input, e))?;
            let layers = decode_layers(&bytes)?;
            let m = &layers.metadata;
            let tables: usize = layers.table_bytes.iter().sum();
            println!("format version: {}", m.format_version);
            println!("size: {}x{}", m.width, m.height);
            println!("pixel type: {:?}", m.pixel_type);
            println!("q: {}", m.q.get());
            println!(
                "tmo: {:?} exposure={} gamma={}",
                m.tmo.kind, m.tmo.exposure_scale, m.tmo.gamma
            );
            println!("transform: {}", if m.transform { "on" } else { "off" });
            println!("packing: {}", if m.packing { "on" } else { "off" });
            println!("file bytes: {}", bytes.len());
            println!("base layer bytes: {}", layers.base_jpeg.len());
            for c in 0..3 {
                let hist = build_histogram(&layers.residual[c]).map_err(Failure::internal)?;
                let s = sparseness(&hist).map_err(Failure::internal)?;
                let (used, span) = s.ratio();
                println!(
                    "component {c}: codec {} plane bytes {} table bytes {} alpha {:.6} ({used}/{span}) emptiness {:.6}",
                    m.codec_ids[c],
                    layers.plane_bytes[c],
                    layers.table_bytes[c],
                    s.alpha,
                    s.emptiness()
                );
            }
            println!(
                "table overhead: {:.6} ({tables} of {} bytes)",
                tables as f64 / bytes.len() as f64,
                bytes.len()
            );
        }
        Command::Bench { dir, out, codecs } => {
            let images = input_files(&dir)?
                .iter()
                .map(|p| {
                    let name = p.file_name().unwrap().to_string_lossy().into_owned();
                    Ok((name, load(p)?))
                })
                .collect::<Result<Vec<_>, Failure>>()?;
            let ids: Vec<CodecId> = codecs.iter().map(|c| c.id()).collect();
            let rows = bench(&images, &BENCH_QUALITIES, &ids)?;
            let file = fs::File::create(&out).map_err(|e| Failure::io(&out, e))?;
            write_csv(file, &rows).map_err(|e| Failure::io(&out, e))?;
            println!("{}: {} rows", out.display(), rows.len());
        }
        Command::Corpus { out, count, seed } => {
            fs::create_dir_all(&out).map_err(|e| Failure::io(&out, e))?;
            for (name, img) in hdrpack::synth::corpus(count, seed) {
                let ext = match img.pixel_type() {
                    PixelType::HalfFloat => "pfm",
                    PixelType::UInt(_) => "ppm",
                };
                let path = out.join(format!("{name}.{ext}"));
                write_image(&img, &path).map_err(|e| Failure::io(&path, e))?;
            }
            println!("{}: {count} images", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("hdrpack: {}", f.message);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(EXIT_INTERNAL),
    }
}
