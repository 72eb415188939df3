//! Local phase quantization.
//!
//! The M x M window around each pixel is analyzed with a uniform-window
//! short-time Fourier transform at the four lowest non-DC frequencies
//! `u1 = (a, 0)`, `u2 = (0, a)`, `u3 = (a, a)`, `u4 = (a, -a)` with
//! `a = 1/M`, using the kernel `exp(-j*2*pi*(ux*tx + uy*ty))` over window
//! offsets `tx, ty in -r..=r`, `r = (M-1)/2`. The transform separates into
//! one complex 1-D pass per axis. The 8-vector
//! `[Re F1, Re F2, Re F3, Re F4, Im F1, Im F2, Im F3, Im F4]` is sign
//! quantized into the code, bit j set iff component j exceeds the deadzone.

use super::{require_margin, CodeImage, LpqParams};
use crate::error::Result;
use crate::raster::GrayImage;

/// Components with magnitude at or below this quantize to 0. All four
/// frequencies sum to zero over the full window period, so constant areas
/// produce components at float-noise level, orders of magnitude below this
/// bound, while real structure sits orders of magnitude above it.
pub const LPQ_DEADZONE: f64 = 1e-7;

struct ComplexRaster {
    width: usize,
    height: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

/// Horizontal pass: complex 1-D kernel over x, output width shrinks by M-1.
fn row_pass(img: &GrayImage, kre: &[f64], kim: &[f64]) -> ComplexRaster {
    let m = kre.len();
    let ow = img.width() - m + 1;
    let h = img.height();
    let mut re = vec![0.0; ow * h];
    let mut im = vec![0.0; ow * h];
    for y in 0..h {
        let src = img.row(y);
        let dst_re = &mut re[y * ow..(y + 1) * ow];
        let dst_im = &mut im[y * ow..(y + 1) * ow];
        for t in 0..m {
            let (wr, wi) = (kre[t], kim[t]);
            let s = &src[t..t + ow];
            for x in 0..ow {
                let v = s[x] as f64;
                dst_re[x] += wr * v;
                dst_im[x] += wi * v;
            }
        }
    }
    ComplexRaster {
        width: ow,
        height: h,
        re,
        im,
    }
}

/// Vertical pass over an already row-filtered raster.
fn col_pass(input: &ComplexRaster, kre: &[f64], kim: &[f64]) -> ComplexRaster {
    let m = kre.len();
    let w = input.width;
    let oh = input.height - m + 1;
    let mut re = vec![0.0; w * oh];
    let mut im = vec![0.0; w * oh];
    for y in 0..oh {
        let dst_re = &mut re[y * w..(y + 1) * w];
        let dst_im = &mut im[y * w..(y + 1) * w];
        for t in 0..m {
            let (wr, wi) = (kre[t], kim[t]);
            let src_re = &input.re[(y + t) * w..(y + t + 1) * w];
            let src_im = &input.im[(y + t) * w..(y + t + 1) * w];
            for x in 0..w {
                // complex multiply-accumulate (wr + j wi)(sr + j si)
                dst_re[x] += wr * src_re[x] - wi * src_im[x];
                dst_im[x] += wr * src_im[x] + wi * src_re[x];
            }
        }
    }
    ComplexRaster {
        width: w,
        height: oh,
        re,
        im,
    }
}

pub fn lpq_encode(img: &GrayImage, params: &LpqParams) -> Result<CodeImage> {
    params.validate()?;
    let m = params.window;
    let r = (m - 1) / 2;
    require_margin(img, r)?;

    // 1-D kernels over offsets t = -r..=r: e0 = all-ones, e1 = exp(-j*2pi*t/M)
    let a = 1.0 / m as f64;
    let e0_re: Vec<f64> = vec![1.0; m];
    let e0_im: Vec<f64> = vec![0.0; m];
    let mut e1_re = Vec::with_capacity(m);
    let mut e1_im = Vec::with_capacity(m);
    for t in 0..m {
        let phase = -2.0 * std::f64::consts::PI * a * (t as f64 - r as f64);
        e1_re.push(phase.cos());
        e1_im.push(phase.sin());
    }
    // conjugate for the (a, -a) vertical component
    let e1c_re = e1_re.clone();
    let e1c_im: Vec<f64> = e1_im.iter().map(|v| -v).collect();

    let rows_e1 = row_pass(img, &e1_re, &e1_im);
    let rows_e0 = row_pass(img, &e0_re, &e0_im);

    let f1 = col_pass(&rows_e1, &e0_re, &e0_im); // (a, 0)
    let f2 = col_pass(&rows_e0, &e1_re, &e1_im); // (0, a)
    let f3 = col_pass(&rows_e1, &e1_re, &e1_im); // (a, a)
    let f4 = col_pass(&rows_e1, &e1c_re, &e1c_im); // (a, -a)

    let ow = f1.width;
    let oh = f1.height;
    let mut codes = Vec::with_capacity(ow * oh);
    for i in 0..ow * oh {
        let comps = [
            f1.re[i], f2.re[i], f3.re[i], f4.re[i], f1.im[i], f2.im[i], f3.im[i], f4.im[i],
        ];
        let mut code = 0u8;
        for (j, &c) in comps.iter().enumerate() {
            if c > LPQ_DEADZONE {
                code |= 1 << j;
            }
        }
        codes.push(code);
    }
    Ok(CodeImage::new(ow, oh, codes, params.tag()))
}
