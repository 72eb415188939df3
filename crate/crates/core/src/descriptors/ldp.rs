//! Local directional patterns over Kirsch edge responses.

use super::{require_margin, CodeImage, LdpParams};
use crate::error::Result;
use crate::raster::GrayImage;

/// The eight Kirsch masks, direction index = bit index. Rows are listed top
/// to bottom; each mask carries the coefficients {5,5,5,-3,-3,-3,-3,-3} on
/// the ring and 0 at the center, rotated counter-clockwise from east.
pub const KIRSCH_MASKS: [[i32; 9]; 8] = [
    // m0 east
    [-3, -3, 5, -3, 0, 5, -3, -3, 5],
    // m1 northeast
    [-3, 5, 5, -3, 0, 5, -3, -3, -3],
    // m2 north
    [5, 5, 5, -3, 0, -3, -3, -3, -3],
    // m3 northwest
    [5, 5, -3, 5, 0, -3, -3, -3, -3],
    // m4 west
    [5, -3, -3, 5, 0, -3, 5, -3, -3],
    // m5 southwest
    [-3, -3, -3, 5, 0, -3, 5, 5, -3],
    // m6 south
    [-3, -3, -3, -3, 0, -3, 5, 5, 5],
    // m7 southeast
    [-3, -3, -3, -3, 0, 5, -3, 5, 5],
];

/// Sets bit `i` for the `k` largest absolute Kirsch responses. Ties are
/// broken toward the lower direction index, so a constant image (all
/// responses zero) encodes as bits 0..k-1.
pub fn ldp_encode(img: &GrayImage, params: &LdpParams) -> Result<CodeImage> {
    params.validate()?;
    require_margin(img, 1)?;
    let k = params.active_bits;
    let ow = img.width() - 2;
    let oh = img.height() - 2;
    let mut codes = Vec::with_capacity(ow * oh);
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            // 3x3 patch values, row-major, all integer-exact in f64
            let mut patch = [0i64; 9];
            let mut idx = 0;
            for dy in -1i32..=1 {
                for dx in -1i32..=1 {
                    patch[idx] = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize) as i64;
                    idx += 1;
                }
            }
            let mut responses = [0i64; 8];
            for (dir, mask) in KIRSCH_MASKS.iter().enumerate() {
                let mut acc = 0i64;
                for (m, v) in mask.iter().zip(patch.iter()) {
                    acc += *m as i64 * v;
                }
                responses[dir] = acc.abs();
            }
            let mut order: [usize; 8] = [0, 1, 2, 3, 4, 5, 6, 7];
            order.sort_by(|&a, &b| responses[b].cmp(&responses[a]).then(a.cmp(&b)));
            let mut code = 0u8;
            for &dir in order.iter().take(k) {
                code |= 1 << dir;
            }
            codes.push(code);
        }
    }
    Ok(CodeImage::new(ow, oh, codes, params.tag()))
}
