//! Local ternary patterns.

use super::{require_margin, CodeImage, LtpParams, SQUARE3X3_OFFSETS};
use crate::error::Result;
use crate::raster::GrayImage;

/// Encodes the 3x3 neighborhood ternary pattern as an (upper, lower) code
/// pair: neighbor `v` quantizes to +1 when `v > center + t`, to -1 when
/// `v < center - t`, and to 0 inside the dead zone. Bit `p` of the upper
/// code marks +1, bit `p` of the lower code marks -1.
pub fn ltp_encode(img: &GrayImage, params: &LtpParams) -> Result<(CodeImage, CodeImage)> {
    params.validate()?;
    require_margin(img, 1)?;
    let t = params.threshold;
    let ow = img.width() - 2;
    let oh = img.height() - 2;
    let mut upper = Vec::with_capacity(ow * oh);
    let mut lower = Vec::with_capacity(ow * oh);
    for y in 1..img.height() - 1 {
        for x in 1..img.width() - 1 {
            let center = img.getf(x, y);
            let mut up = 0u8;
            let mut lo = 0u8;
            for (p, &(dx, dy)) in SQUARE3X3_OFFSETS.iter().enumerate() {
                let v = img.getf((x as i32 + dx) as usize, (y as i32 + dy) as usize);
                if v > center + t {
                    up |= 1 << p;
                } else if v < center - t {
                    lo |= 1 << p;
                }
            }
            upper.push(up);
            lower.push(lo);
        }
    }
    let base = params.base_tag();
    Ok((
        CodeImage::new(ow, oh, upper, format!("{base}-upper")),
        CodeImage::new(ow, oh, lower, format!("{base}-lower")),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patch(center: u8, neighbor_east: u8) -> GrayImage {
        let mut data = vec![center; 9];
        data[4] = center;
        data[5] = neighbor_east; // offset (1, 0) = sample index 0
        GrayImage::new(3, 3, data).unwrap()
    }

    #[test]
    fn neighbor_above_band_sets_upper_bit_only() {
        let img = patch(100, 110);
        let (up, lo) = ltp_encode(&img, &LtpParams::default()).unwrap();
        assert_eq!(up.codes()[0] & 1, 1);
        assert_eq!(lo.codes()[0] & 1, 0);
    }

    #[test]
    fn neighbor_inside_dead_zone_sets_nothing() {
        let img = patch(100, 103);
        let (up, lo) = ltp_encode(&img, &LtpParams::default()).unwrap();
        assert_eq!(up.codes()[0] & 1, 0);
        assert_eq!(lo.codes()[0] & 1, 0);
    }

    #[test]
    fn neighbor_below_band_sets_lower_bit_only() {
        let img = patch(100, 90);
        let (up, lo) = ltp_encode(&img, &LtpParams::default()).unwrap();
        assert_eq!(up.codes()[0] & 1, 0);
        assert_eq!(lo.codes()[0] & 1, 1);
    }

    #[test]
    fn band_edges_are_exclusive() {
        // exactly center + t and center - t stay in the dead zone
        let hi = patch(100, 105);
        let (up, lo) = ltp_encode(&hi, &LtpParams::default()).unwrap();
        assert_eq!((up.codes()[0] & 1, lo.codes()[0] & 1), (0, 0));
        let lo_img = patch(100, 95);
        let (up, lo) = ltp_encode(&lo_img, &LtpParams::default()).unwrap();
        assert_eq!((up.codes()[0] & 1, lo.codes()[0] & 1), (0, 0));
    }

    #[test]
    fn upper_and_lower_bits_are_disjoint() {
        let img = super::super::tests::random_image(16, 16, 55);
        let (up, lo) = ltp_encode(&img, &LtpParams::default()).unwrap();
        for (u, l) in up.codes().iter().zip(lo.codes()) {
            assert_eq!(u & l, 0);
        }
    }
}
