//! Acceptance criteria. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

use std::collections::BTreeSet;
use std::io::Cursor;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hdrpack::base::{jpeg_decode, jpeg_encode, LdrImage, QualityFactor};
use hdrpack::codec::{decode_plane, encode_plane_medrice, encode_plane_raw, CodecId};
use hdrpack::container::{Metadata, FORMAT_VERSION};
use hdrpack::base::TmoParams;
use hdrpack::container::{demux, mux, BoxType, ExtPayload};
use hdrpack::histpack::{
    build_histogram, build_packing, deserialize_table, pack_plane, serialize_table, sparseness,
    unpack_plane, IndexPlane, UnpackingTable,
};
use hdrpack::io::{code_to_f32, f32_to_code};
use hdrpack::model::{code_to_half, half_to_code, PixelType, Plane};
use hdrpack::residual::{rct_forward_sample, rct_inverse_sample};
use hdrpack::synth::{corpus, generate, sparse_lattice, Kind};
use hdrpack::{encode_file, EncodeOptions};

const BIN: &str = env!("CARGO_BIN_EXE_hdrpack");
const CORPUS_SIZE: usize = 54;
const QUALITIES: [i32; 5] = [1, 10, 50, 80, 100];

fn hdrpack(args: &[&str], threads: Option<usize>) -> std::process::Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("RAYON_NUM_THREADS", t.to_string());
    }
    cmd.output().expect("run hdrpack")
}

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: String) -> Outcome {
    if cond {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn losslessness(dir: &Path) -> Outcome {
    let start = Instant::now();
    let d = dir.to_str().unwrap();
    let mut args = vec!["verify", "-i", d, "--q"];
    let qs: Vec<String> = QUALITIES.iter().map(|q| q.to_string()).collect();
    args.extend(qs.iter().map(|s| s.as_str()));
    let out = hdrpack(&args, None);
    let stdout = String::from_utf8_lossy(&out.stdout);
    let ok = stdout.lines().filter(|l| l.contains(" ok (")).count();
    let bad = stdout.lines().filter(|l| l.contains("MISMATCH")).count();
    let expected = CORPUS_SIZE * QUALITIES.len();
    check(
        out.status.code() == Some(0) && ok == expected && bad == 0,
        format!(
            "{ok}/{expected} verifications bit-exact, {bad} mismatches, exit {:?}, {:.1}s",
            out.status.code(),
            start.elapsed().as_secs_f64()
        ),
    )
}

/// Baseline JPEG marker grammar. Returns the number of APP11 segments.
fn baseline_grammar(f: &[u8]) -> Result<usize, String> {
    if f.get(..2) != Some(&[0xFF, 0xD8]) {
        return Err("no SOI".into());
    }
    let be16 = |i: usize| -> Result<usize, String> {
        f.get(i..i + 2)
            .map(|b| u16::from_be_bytes([b[0], b[1]]) as usize)
            .ok_or_else(|| format!("truncated at {i}"))
    };
    let mut pos = 2;
    let mut frame: Option<Vec<u8>> = None;
    let (mut qt, mut dc, mut ac) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
    let mut app11 = 0;
    let mut segment_index = 0;
    let mut scans = 0;
    let mut ext_run_done = false;
    loop {
        if f.get(pos) != Some(&0xFF) {
            return Err(format!("expected marker at {pos}"));
        }
        while f.get(pos + 1) == Some(&0xFF) {
            pos += 1;
        }
        let m = *f.get(pos + 1).ok_or("truncated marker")?;
        pos += 2;
        if m == 0xD9 {
            if scans == 0 {
                return Err("EOI before any scan".into());
            }
            if pos != f.len() {
                return Err("bytes after EOI".into());
            }
            return Ok(app11);
        }
        let len = be16(pos)?;
        if len < 2 || pos + len > f.len() {
            return Err(format!("segment {m:02X} overruns file"));
        }
        let body = &f[pos + 2..pos + len];
        segment_index += 1;
        match m {
            0xE0 => {
                if segment_index != 1 || !body.starts_with(b"JFIF\0") {
                    return Err("APP0 JFIF is not the first segment".into());
                }
            }
            0xEB => {
                if body.starts_with(b"HP10") {
                    if ext_run_done {
                        return Err("extension segments are not contiguous after APP0".into());
                    }
                    app11 += 1;
                }
            }
            0xE1..=0xEF | 0xFE => {}
            0xDB => {
                let mut b = body;
                while !b.is_empty() {
                    let (pq, tq) = (b[0] >> 4, b[0] & 15);
                    if pq != 0 || tq > 3 || b.len() < 65 {
                        return Err("DQT not baseline".into());
                    }
                    if b[1..65].contains(&0) {
                        return Err("zero quantizer".into());
                    }
                    qt.insert(tq);
                    b = &b[65..];
                }
            }
            0xC4 => {
                let mut b = body;
                while !b.is_empty() {
                    let (tc, th) = (b[0] >> 4, b[0] & 15);
                    if tc > 1 || th > 1 || b.len() < 17 {
                        return Err("DHT not baseline".into());
                    }
                    let n: usize = b[1..17].iter().map(|&c| c as usize).sum();
                    if n == 0 || n > 256 || b.len() < 17 + n {
                        return Err("bad DHT counts".into());
                    }
                    if tc == 0 { dc.insert(th) } else { ac.insert(th) };
                    b = &b[17 + n..];
                }
            }
            0xC0 => {
                if frame.is_some() {
                    return Err("second frame".into());
                }
                let nf = *body.get(5).ok_or("short SOF")? as usize;
                if body[0] != 8 || body.len() != 6 + 3 * nf || !(nf == 1 || nf == 3) {
                    return Err("SOF0 header invalid".into());
                }
                let (h, w) = (u16::from_be_bytes([body[1], body[2]]), u16::from_be_bytes([body[3], body[4]]));
                if h == 0 || w == 0 {
                    return Err("zero dimension".into());
                }
                let mut ids = Vec::new();
                for c in 0..nf {
                    let comp = &body[6 + 3 * c..9 + 3 * c];
                    if !qt.contains(&comp[2]) {
                        return Err("component uses undefined quantizer".into());
                    }
                    if comp[1] >> 4 == 0 || comp[1] & 15 == 0 {
                        return Err("bad sampling factors".into());
                    }
                    ids.push(comp[0]);
                }
                frame = Some(ids);
            }
            0xC1..=0xCF => return Err(format!("non-baseline marker {m:02X}")),
            0xDD => {
                if len != 4 {
                    return Err("bad DRI".into());
                }
            }
            0xDA => {
                let ids = frame.as_ref().ok_or("SOS before SOF")?;
                let ns = body[0] as usize;
                if body.len() != 4 + 2 * ns || ns == 0 {
                    return Err("SOS header invalid".into());
                }
                for c in 0..ns {
                    let (id, t) = (body[1 + 2 * c], body[2 + 2 * c]);
                    if !ids.contains(&id) || !dc.contains(&(t >> 4)) || !ac.contains(&(t & 15)) {
                        return Err("scan references undefined component or table".into());
                    }
                }
                if body[1 + 2 * ns..] != [0, 63, 0] {
                    return Err("not a sequential full-spectrum scan".into());
                }
                scans += 1;
                pos += len;
                // Entropy-coded data runs to the next non-stuffed, non-RST marker.
                loop {
                    let b = *f.get(pos).ok_or("entropy data runs off the end")?;
                    if b == 0xFF {
                        match f.get(pos + 1) {
                            Some(0x00) | Some(0xD0..=0xD7) => pos += 2,
                            Some(_) => break,
                            None => return Err("truncated entropy data".into()),
                        }
                    } else {
                        pos += 1;
                    }
                }
                continue;
            }
            _ => return Err(format!("unexpected marker {m:02X}")),
        }
        if m != 0xEB && m != 0xE0 && app11 > 0 {
            ext_run_done = true;
        }
        pos += len;
    }
}

fn zune_decode(data: &[u8]) -> Result<(usize, usize, Vec<u8>), String> {
    let mut d = zune_jpeg::JpegDecoder::new(Cursor::new(data));
    let px = d.decode().map_err(|e| format!("{e:?}"))?;
    let info = d.info().ok_or("no info")?;
    Ok((info.width as usize, info.height as usize, px))
}

fn backward_compatibility() -> Outcome {
    let mut files = 0;
    let mut worst = 0u8;
    for (name, img) in corpus(CORPUS_SIZE, 1) {
        for q in QUALITIES {
            let opts = EncodeOptions { q: QualityFactor::new(q), ..Default::default() };
            let file = encode_file(&img, &opts).map_err(|e| format!("{name}: {e}"))?.bytes;
            let segs = baseline_grammar(&file).map_err(|e| format!("{name} q={q}: {e}"))?;
            if segs < 7 {
                return Err(format!("{name} q={q}: only {segs} extension segments"));
            }
            let base = demux(&file).map_err(|e| e.to_string())?.base_jpeg;
            baseline_grammar(&base).map_err(|e| format!("{name} q={q} base: {e}"))?;
            let (w, h, px) = zune_decode(&file).map_err(|e| format!("{name} q={q}: {e}"))?;
            if (w, h) != (img.width(), img.height()) {
                return Err(format!("{name}: independent decoder saw {w}x{h}"));
            }
            if px != zune_decode(&base)?.2 {
                return Err(format!("{name} q={q}: extension segments alter the legacy decode"));
            }
            let ours = jpeg_decode(&base).map_err(|e| e.to_string())?;
            for (i, p) in px.chunks(3).enumerate() {
                for c in 0..3 {
                    worst = worst.max(p[c].abs_diff(ours.plane(c).samples()[i]));
                }
            }
            files += 1;
        }
    }
    check(
        worst <= 4,
        format!("{files}/{files} files pass grammar and independent decode; max deviation from built-in decoder {worst}"),
    )
}

fn packing_benefit() -> Outcome {
    const N: usize = 24;
    let mut improved = 0;
    let mut reductions = Vec::new();
    let mut worst_alpha: f64 = 0.0;
    for seed in 0..N as u64 {
        let img = sparse_lattice(96, 80, 100 + seed);
        for p in img.planes() {
            let distinct: BTreeSet<u16> = p.samples().iter().copied().collect();
            let v: Vec<u16> = distinct.into_iter().collect();
            if v.windows(2).any(|w| w[1] - w[0] < 256) {
                return Err(format!("suite image {seed} has values closer than 256"));
            }
            let plane = Plane::new(p.width(), p.height(), p.samples().iter().map(|&s| s as i32).collect()).unwrap();
            worst_alpha = worst_alpha.max(sparseness(&build_histogram(&plane).unwrap()).unwrap().alpha);
        }
        let on = encode_file(&img, &EncodeOptions::default()).map_err(|e| e.to_string())?;
        let off = encode_file(&img, &EncodeOptions { packing: false, ..Default::default() }).map_err(|e| e.to_string())?;
        worst_alpha = worst_alpha.max(on.sparseness.iter().map(|s| s.alpha).fold(0.0, f64::max));
        let (a, b) = (on.extension_bytes(), off.extension_bytes());
        improved += usize::from(a < b);
        reductions.push(1.0 - a as f64 / b as f64);
    }
    let mean = reductions.iter().sum::<f64>() / N as f64;
    let share = improved as f64 / N as f64;
    check(
        share >= 0.95 && mean >= 0.20 && worst_alpha <= 0.05,
        format!(
            "{improved}/{N} images smaller with packing ({:.0}%), mean extension reduction {:.1}%, max alpha {worst_alpha:.4}",
            share * 100.0,
            mean * 100.0
        ),
    )
}

fn table_overhead() -> Outcome {
    let images = [
        (Kind::Natural, PixelType::HalfFloat, 1024, 1024),
        (Kind::Natural, PixelType::UInt(16), 1024, 1024),
        (Kind::Natural, PixelType::UInt(12), 1280, 800),
        (Kind::Gradient, PixelType::HalfFloat, 1280, 832),
    ];
    let mut max: f64 = 0.0;
    for (i, (kind, pt, w, h)) in images.into_iter().enumerate() {
        let img = generate(kind, w, h, pt, 40 + i as u64);
        for q in [10, 50, 80, 100] {
            let enc = encode_file(&img, &EncodeOptions { q: QualityFactor::new(q), ..Default::default() })
                .map_err(|e| e.to_string())?;
            max = max.max(enc.table_overhead());
        }
    }
    check(max <= 0.01, format!("max table share of file bytes {:.4}% over 16 encodes of >=1 MP images", max * 100.0))
}

fn sparseness_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for i in 0..1000 {
        let (w, h) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let lo = rng.gen_range(-200_000..200_000);
        let spread = [1, 3, 300, 70_000][i % 4];
        let stride = [1, 2, 256, 1000][(i / 4) % 4];
        let samples: Vec<i32> = (0..w * h).map(|_| lo + stride * rng.gen_range(0..spread)).collect();
        // Brute force: mark every occurring value over the occupied span.
        let (min, max) = (*samples.iter().min().unwrap(), *samples.iter().max().unwrap());
        let span = (max - min) as u64 + 1;
        let mut seen = vec![false; span as usize];
        for &s in &samples {
            seen[(s - min) as usize] = true;
        }
        let used = seen.iter().filter(|&&b| b).count() as u64;
        let s = sparseness(&build_histogram(&Plane::new(w, h, samples).unwrap()).unwrap()).unwrap();
        let (u, sp) = s.ratio();
        if u * span != used * sp || u > sp || s.alpha != used as f64 / span as f64 {
            return Err(format!("plane {i}: {u}/{sp} vs brute force {used}/{span}"));
        }
    }
    Ok("1000/1000 planes match the brute-force scan exactly".into())
}

fn component_inverses() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut counts = Vec::new();

    for c in 0..=u16::MAX {
        if half_to_code(code_to_half(c)) != c || f32_to_code(code_to_f32(c)) != c {
            return Err(format!("half code {c:#06x} does not survive"));
        }
    }
    counts.push("65536 half codes".to_string());

    const TRIPLES: usize = 1_000_000;
    let r = 1 << 17;
    for _ in 0..TRIPLES {
        let t = (rng.gen_range(-r..=r), rng.gen_range(-r..=r), rng.gen_range(-r..=r));
        let (y, u, v) = rct_forward_sample(t.0, t.1, t.2);
        if rct_inverse_sample(y, u, v) != t {
            return Err(format!("transform fails on {t:?}"));
        }
    }
    counts.push(format!("{TRIPLES} transform triples"));

    for i in 0..500 {
        let (w, h) = (rng.gen_range(1..30), rng.gen_range(1..30));
        let stride = [1, 7, 256, 65536][i % 4];
        let base = rng.gen_range(-100_000..100_000);
        let p = Plane::new(w, h, (0..w * h).map(|_| base + stride * rng.gen_range(-50..50)).collect()).unwrap();
        let t = build_packing(&build_histogram(&p).unwrap()).unwrap();
        let ip = pack_plane(&p, &t).unwrap();
        if unpack_plane(&ip, &t).unwrap() != p {
            return Err(format!("pack/unpack plane {i}"));
        }
        if deserialize_table(&serialize_table(&t)).unwrap() != t {
            return Err(format!("table round trip {i}"));
        }
    }
    for i in 0..500 {
        let n = rng.gen_range(1..2000);
        let mut v: Vec<i32> = (0..n).map(|_| rng.gen_range(-(1 << 30)..(1 << 30))).collect();
        v.sort();
        v.dedup();
        let t = UnpackingTable::new(v).unwrap();
        if deserialize_table(&serialize_table(&t)).unwrap() != t {
            return Err(format!("random table {i}"));
        }
    }
    counts.push("500 pack/unpack planes, 1000 tables".into());

    let mut planes = 0;
    let shapes = [(1, 1), (1, 50), (50, 1), (17, 13), (31, 33)];
    for max in [0u32, 1, 255, (1 << 17) - 1] {
        for &(w, h) in &shapes {
            for _ in 0..20 {
                let ip = IndexPlane::new(w, h, max, (0..w * h).map(|_| rng.gen_range(0..=max)).collect()).unwrap();
                for cp in [encode_plane_raw(&ip), encode_plane_medrice(&ip)] {
                    if decode_plane(&cp).map_err(|e| e.to_string())? != ip {
                        return Err(format!("{} plane {w}x{h} max {max}", cp.codec_id));
                    }
                    planes += 1;
                }
            }
        }
    }
    counts.push(format!("{planes} coded planes"));

    let ldr = LdrImage::from_planes(std::array::from_fn(|_| Plane::from_fn(24, 16, |x, y| (x * 9 + y * 5) as u8)));
    let base = jpeg_encode(&ldr, QualityFactor::new(75)).unwrap();
    for i in 0..200 {
        let meta = Metadata {
            format_version: FORMAT_VERSION,
            pixel_type: PixelType::UInt(rng.gen_range(8..=16)),
            width: rng.gen_range(1..100_000),
            height: rng.gen_range(1..100_000),
            q: QualityFactor::new(rng.gen_range(1..=100)),
            tmo: TmoParams::bitshift(),
            lut_rule: 1,
            transform: rng.gen(),
            packing: rng.gen(),
            codec_ids: std::array::from_fn(|_| if rng.gen() { CodecId::RAW } else { CodecId::MEDRICE }),
        };
        let mut payloads = vec![ExtPayload::new(BoxType::Meta, 0, meta.to_bytes())];
        for c in 0..3u8 {
            for b in [BoxType::Utbl, BoxType::Extc] {
                let n = if rng.gen_bool(0.1) { rng.gen_range(65_000..200_000) } else { rng.gen_range(0..500) };
                payloads.push(ExtPayload::new(b, c, (0..n).map(|_| rng.gen()).collect()));
            }
        }
        let file = mux(&base, &payloads).map_err(|e| e.to_string())?;
        let d = demux(&file).map_err(|e| format!("demux {i}: {e}"))?;
        if d.base_jpeg != base || d.payloads != payloads || d.metadata.as_ref() != Some(&meta) {
            return Err(format!("mux/demux {i}"));
        }
        let stripped = strip_extension(&file);
        if stripped != base {
            return Err(format!("stripping segments from file {i} does not restore the base"));
        }
    }
    counts.push("200 mux/demux sets".into());
    Ok(format!("zero failures over {}", counts.join(", ")))
}

/// Drops every APP11 "HP10" segment, walking markers independently.
fn strip_extension(f: &[u8]) -> Vec<u8> {
    let mut out = f[..2].to_vec();
    let mut pos = 2;
    while f[pos + 1] != 0xDA {
        let len = u16::from_be_bytes([f[pos + 2], f[pos + 3]]) as usize;
        let seg = &f[pos..pos + 2 + len];
        if !(seg[1] == 0xEB && seg[4..].starts_with(b"HP10")) {
            out.extend_from_slice(seg);
        }
        pos += 2 + len;
    }
    out.extend_from_slice(&f[pos..]);
    out
}

fn determinism(dir: &Path, work: &Path) -> Outcome {
    let mut inputs: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    inputs.sort();
    for input in &inputs {
        let mut outputs = Vec::new();
        for (run, threads) in [(0, 4), (1, 4), (2, 1)] {
            let out = work.join(format!("run{run}.hdrp"));
            let o = hdrpack(&["encode", "-i", input.to_str().unwrap(), "-o", out.to_str().unwrap()], Some(threads));
            if !o.status.success() {
                return Err(format!("{}: encode failed", input.display()));
            }
            outputs.push(std::fs::read(&out).unwrap());
        }
        if outputs[0] != outputs[1] || outputs[0] != outputs[2] {
            return Err(format!("{}: encodes differ", input.display()));
        }
    }
    let bench_dir = work.join("bench_in");
    std::fs::create_dir_all(&bench_dir).unwrap();
    for p in inputs.iter().filter(|p| std::fs::metadata(p).unwrap().len() < 4000).take(4) {
        std::fs::copy(p, bench_dir.join(p.file_name().unwrap())).unwrap();
    }
    let mut csvs = Vec::new();
    for (run, threads) in [(0, 4), (1, 1)] {
        let out = work.join(format!("bench{run}.csv"));
        let o = hdrpack(&["bench", "--dir", bench_dir.to_str().unwrap(), "--out", out.to_str().unwrap()], Some(threads));
        if !o.status.success() {
            return Err("bench failed".into());
        }
        let text = std::fs::read_to_string(&out).unwrap();
        // Drop the wall-time column.
        let rows: Vec<String> = text.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect();
        csvs.push(rows);
    }
    check(
        csvs[0] == csvs[1],
        format!(
            "{} images byte-identical over 2 runs at 4 threads and 1 run at 1 thread; bench CSV identical ({} rows)",
            inputs.len(),
            csvs[0].len() - 1
        ),
    )
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("corpus");
    let o = hdrpack(&["corpus", "-o", dir.to_str().unwrap(), "--count", &CORPUS_SIZE.to_string()], None);
    assert!(o.status.success(), "corpus generation failed");

    let criteria: Vec<Criterion> = vec![
        ("losslessness", Box::new(|| losslessness(&dir))),
        ("backward compatibility", Box::new(backward_compatibility)),
        ("packing benefit", Box::new(packing_benefit)),
        ("table overhead", Box::new(table_overhead)),
        ("sparseness oracle", Box::new(sparseness_oracle)),
        ("component inverses", Box::new(component_inverses)),
        ("determinism", Box::new(|| determinism(&dir, tmp.path()))),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(msg) => println!("criterion {} ({name}): PASS: {msg}", i + 1),
            Err(msg) => {
                println!("criterion {} ({name}): FAIL: {msg}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
