use hdrpack::io::{read_image, read_pfm, read_ppm16, write_image, write_pfm, write_ppm16, IoError};
use hdrpack::model::PixelType;
use hdrpack::synth::{generate, Kind};

#[test]
fn files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let half = generate(Kind::Specials, 31, 17, PixelType::HalfFloat, 1);
    let p = dir.path().join("a.pfm");
    write_pfm(&half, &p).unwrap();
    assert_eq!(read_pfm(&p).unwrap(), half);
    assert_eq!(read_image(&p).unwrap(), half);

    for d in [12, 16] {
        let img = generate(Kind::Natural, 9, 30, PixelType::UInt(d), 2);
        let p = dir.path().join(format!("b{d}.ppm"));
        write_ppm16(&img, &p).unwrap();
        assert_eq!(read_ppm16(&p).unwrap(), img);
    }

    let eight = generate(Kind::Random, 4, 4, PixelType::UInt(8), 3);
    let p = dir.path().join("c.ppm");
    write_image(&eight, &p).unwrap();
    assert!(matches!(read_ppm16(&p), Err(IoError::MaxvalUnsupported(255))));
    assert_eq!(read_image(&p).unwrap(), eight);
    assert!(matches!(write_pfm(&eight, dir.path().join("d.pfm")), Err(IoError::WrongPixelType(_))));
    assert!(matches!(read_pfm(dir.path().join("missing.pfm")), Err(IoError::Os(_))));
}
