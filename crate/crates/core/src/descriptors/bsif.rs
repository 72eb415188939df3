//! Binarized statistical image features.

use super::{CodeImage, FilterBank};
use crate::error::{Error, Result};
use crate::raster::{convolve_valid, GrayImage};

/// Responses at or below this bound quantize to bit 0. Learned kernels are
/// zero-mean, so constant regions leak only float noise (orders of magnitude
/// below this), while whitened-filter responses on real structure are O(1).
pub const BSIF_DEADZONE: f64 = 1e-3;

/// Bit `i` of each code is 1 iff the response of kernel `i` exceeds the
/// deadzone; kernel 0 is the least significant bit.
pub fn bsif_encode(img: &GrayImage, bank: &FilterBank) -> Result<CodeImage> {
    let side = bank.side();
    if side > img.width() || side > img.height() {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            margin: (side - 1) / 2,
        });
    }
    let ow = img.width() - side + 1;
    let oh = img.height() - side + 1;
    let mut codes = vec![0u8; ow * oh];
    for (bit, kernel) in bank.kernels().iter().enumerate() {
        let response = convolve_valid(img, kernel)?;
        let mask = 1u8 << bit;
        for (code, &r) in codes.iter_mut().zip(&response.data) {
            if r > BSIF_DEADZONE {
                *code |= mask;
            }
        }
    }
    Ok(CodeImage::new(ow, oh, codes, bank.tag()))
}

#[cfg(test)]
mod tests {
    use super::super::bank::random_bank;
    use super::*;
    use crate::raster::Kernel;

    #[test]
    fn constant_image_with_zero_mean_kernels_encodes_to_zero() {
        let bank = random_bank(8, 5, 99);
        let img = GrayImage::filled(24, 24, 137);
        let codes = bsif_encode(&img, &bank).unwrap();
        assert_eq!((codes.width(), codes.height()), (20, 20));
        assert!(codes.codes().iter().all(|&c| c == 0));
    }

    #[test]
    fn center_delta_kernel_fires_where_pixel_beats_window_mean() {
        // +1 at the center minus the kernel mean: response equals
        // center value minus the window average.
        let side = 3;
        let mut weights = vec![0.0; 9];
        weights[4] = 1.0;
        let mut k = Kernel::new(side, weights).unwrap();
        k.center();
        let bank = FilterBank::new(vec![k]).unwrap();

        let mut data = vec![10u8; 25];
        data[2 * 5 + 2] = 200; // bright center pixel
        let img = GrayImage::new(5, 5, data).unwrap();
        let codes = bsif_encode(&img, &bank).unwrap();
        // at the bright pixel: 200 - mean(window) > 0 -> bit set
        assert_eq!(codes.get(1, 1), 1);
        // corner window centers on a dim pixel -> negative response -> clear
        assert_eq!(codes.get(0, 0), 0);
    }

    #[test]
    fn tag_names_count_and_side() {
        let bank = random_bank(8, 17, 5);
        assert_eq!(bank.tag(), "bsif-k8-s17");
    }

    #[test]
    fn image_smaller_than_kernel_is_rejected() {
        let bank = random_bank(2, 5, 11);
        let img = GrayImage::filled(4, 4, 0);
        assert!(matches!(
            bsif_encode(&img, &bank),
            Err(Error::ImageTooSmall { .. })
        ));
    }
}
