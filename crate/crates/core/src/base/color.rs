//! JFIF RGB <-> YCbCr in 16-bit fixed point.

use crate::model::Plane;

use super::LdrImage;

pub fn rgb_to_ycbcr(img: &LdrImage) -> [Vec<u8>; 3] {
    let [r, g, b] = img.planes();
    let n = r.len();
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for i in 0..n {
        let (r, g, b) = (
            r.samples()[i] as i32,
            g.samples()[i] as i32,
            b.samples()[i] as i32,
        );
        y.push(((19595 * r + 38470 * g + 7471 * b + 32768) >> 16) as u8);
        cb.push(((-11059 * r - 21709 * g + 32768 * b + (128 << 16) + 32767) >> 16) as u8);
        cr.push(((32768 * r - 27439 * g - 5329 * b + (128 << 16) + 32767) >> 16) as u8);
    }
    [y, cb, cr]
}

#[inline]
fn clamp8(v: i32) -> u8 {
    v.clamp(0, 255) as u8
}

pub fn ycbcr_to_rgb(width: usize, height: usize, ycc: [Vec<u8>; 3]) -> [Plane<u8>; 3] {
    let [y, cb, cr] = ycc;
    let n = y.len();
    let mut r = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let yy = y[i] as i32;
        let cb = cb[i] as i32 - 128;
        let cr = cr[i] as i32 - 128;
        r.push(clamp8(yy + ((91881 * cr + 32768) >> 16)));
        g.push(clamp8(yy + ((-22554 * cb - 46802 * cr + 32768) >> 16)));
        b.push(clamp8(yy + ((116130 * cb + 32768) >> 16)));
    }
    let mk = |v| Plane::new(width, height, v).expect("sized by caller");
    [mk(r), mk(g), mk(b)]
}
