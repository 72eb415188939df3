//! The five local dense descriptors: LBP, LTP, LDP, LPQ and BSIF.
//!
//! Every encoder walks the pixels whose full neighborhood or window fits
//! inside the image (no padding is ever invented) and emits one 8-bit code
//! per pixel, least-significant bit first: bit `p` belongs to sample index
//! `p`, direction `p`, or filter `p`. LTP is the exception and produces an
//! upper/lower code pair because ternary values do not fit 8 bits.
//!
//! Responses that are algebraically zero (constant images under zero-mean
//! or zero-sum filters) do not evaluate to exactly 0.0 in floating point,
//! so the sign quantizers in LPQ and BSIF use a small deadzone instead of
//! a strict `> 0` test. The deadzones sit far below any meaningful filter
//! response and both the encoders and their reference oracles share them.

mod bank;
mod bsif;
mod ldp;
mod lpq;
mod ltp;

pub use bank::FilterBank;
pub use bsif::{bsif_encode, BSIF_DEADZONE};
pub use ldp::{ldp_encode, KIRSCH_MASKS};
pub use lpq::{lpq_encode, LPQ_DEADZONE};
pub use ltp::ltp_encode;

use crate::error::{Error, Result};
use crate::raster::GrayImage;

/// Raster of per-pixel descriptor codes over the valid region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeImage {
    width: usize,
    height: usize,
    codes: Vec<u8>,
    tag: String,
}

impl CodeImage {
    pub(crate) fn new(width: usize, height: usize, codes: Vec<u8>, tag: String) -> Self {
        debug_assert_eq!(codes.len(), width * height);
        Self {
            width,
            height,
            codes,
            tag,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    /// Identifier of the descriptor and parameters that produced the codes.
    pub fn tag(&self) -> &str {
        &self.tag
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.codes[y * self.width + x]
    }
}

/// Neighborhood shape for LBP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LbpTopology {
    /// `neighbors` samples on a circle of `radius`, bilinear off-grid.
    Circle,
    /// The eight surrounding pixels of the 3x3 patch, no interpolation.
    Square3x3,
}

impl std::fmt::Display for LbpTopology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LbpTopology::Circle => write!(f, "circle"),
            LbpTopology::Square3x3 => write!(f, "square3x3"),
        }
    }
}

/// LBP parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LbpParams {
    pub neighbors: usize,
    pub radius: f64,
    pub topology: LbpTopology,
}

impl Default for LbpParams {
    fn default() -> Self {
        Self {
            neighbors: 8,
            radius: 1.0,
            topology: LbpTopology::Circle,
        }
    }
}

impl LbpParams {
    pub fn validate(&self) -> Result<()> {
        if !(4..=8).contains(&self.neighbors) {
            return Err(Error::InvalidParams(format!(
                "lbp neighbors must be in 4..=8 (codes are 8-bit), got {}",
                self.neighbors
            )));
        }
        if self.radius <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "lbp radius must be positive, got {}",
                self.radius
            )));
        }
        if self.topology == LbpTopology::Square3x3 && self.neighbors != 8 {
            return Err(Error::InvalidParams(
                "square3x3 topology has exactly 8 neighbors".to_string(),
            ));
        }
        Ok(())
    }

    pub fn tag(&self) -> String {
        format!("lbp-p{}-r{}-{}", self.neighbors, self.radius, self.topology)
    }
}

/// LTP parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LtpParams {
    pub threshold: f64,
    pub split_mode: LtpSplit,
}

/// How the ternary code pair is turned into one feature vector downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtpSplit {
    /// Only the upper (positive) code histogram, 256 bins.
    UpperOnly,
    /// Upper and lower histograms concatenated, jointly normalized, 512 bins.
    ConcatUpperLower,
}

impl Default for LtpParams {
    fn default() -> Self {
        Self {
            threshold: 5.0,
            split_mode: LtpSplit::ConcatUpperLower,
        }
    }
}

impl LtpParams {
    pub fn validate(&self) -> Result<()> {
        if self.threshold < 0.0 {
            return Err(Error::InvalidParams(format!(
                "ltp threshold must be non-negative, got {}",
                self.threshold
            )));
        }
        Ok(())
    }

    pub fn base_tag(&self) -> String {
        format!("ltp-t{}", self.threshold)
    }
}

/// LDP parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LdpParams {
    /// Number of strongest edge responses whose bits are set.
    pub active_bits: usize,
}

impl Default for LdpParams {
    fn default() -> Self {
        Self { active_bits: 3 }
    }
}

impl LdpParams {
    pub fn validate(&self) -> Result<()> {
        if !(1..=8).contains(&self.active_bits) {
            return Err(Error::InvalidParams(format!(
                "ldp active bits must be in 1..=8, got {}",
                self.active_bits
            )));
        }
        Ok(())
    }

    pub fn tag(&self) -> String {
        format!("ldp-k{}", self.active_bits)
    }
}

/// LPQ parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LpqParams {
    /// Square STFT window side, odd.
    pub window: usize,
}

impl Default for LpqParams {
    fn default() -> Self {
        Self { window: 7 }
    }
}

impl LpqParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window.is_multiple_of(2) {
            return Err(Error::InvalidParams(format!(
                "lpq window must be odd and >= 3, got {}",
                self.window
            )));
        }
        Ok(())
    }

    pub fn tag(&self) -> String {
        format!("lpq-m{}", self.window)
    }
}

/// Ring offsets of the 3x3 patch, counter-clockwise from east, matching the
/// circular sampling convention (y grows downward). Shared by LBP square
/// topology and LTP.
pub(crate) const SQUARE3X3_OFFSETS: [(i32, i32); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

pub(crate) fn require_margin(img: &GrayImage, margin: usize) -> Result<()> {
    if img.width() <= 2 * margin || img.height() <= 2 * margin {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            margin,
        });
    }
    Ok(())
}

/// LBP: bit `p` is 1 iff neighbor `p` is greater than or equal to the
/// center value. Equality counts as 1.
pub fn lbp_encode(img: &GrayImage, params: &LbpParams) -> Result<CodeImage> {
    params.validate()?;
    let tag = params.tag();
    match params.topology {
        LbpTopology::Square3x3 => {
            require_margin(img, 1)?;
            let ow = img.width() - 2;
            let oh = img.height() - 2;
            let mut codes = Vec::with_capacity(ow * oh);
            for y in 1..img.height() - 1 {
                for x in 1..img.width() - 1 {
                    let center = img.get(x, y);
                    let mut code = 0u8;
                    for (p, &(dx, dy)) in SQUARE3X3_OFFSETS.iter().enumerate() {
                        let v = img.get((x as i32 + dx) as usize, (y as i32 + dy) as usize);
                        if v >= center {
                            code |= 1 << p;
                        }
                    }
                    codes.push(code);
                }
            }
            Ok(CodeImage::new(ow, oh, codes, tag))
        }
        LbpTopology::Circle => {
            let margin = params.radius.ceil() as usize + 1;
            require_margin(img, margin)?;
            // sample offsets fixed per pixel; same arithmetic as sample_circular
            let offsets: Vec<(f64, f64)> = (0..params.neighbors)
                .map(|p| {
                    let angle =
                        2.0 * std::f64::consts::PI * p as f64 / params.neighbors as f64;
                    (params.radius * angle.cos(), -(params.radius * angle.sin()))
                })
                .collect();
            let ow = img.width() - 2 * margin;
            let oh = img.height() - 2 * margin;
            let mut codes = Vec::with_capacity(ow * oh);
            for y in margin..img.height() - margin {
                for x in margin..img.width() - margin {
                    let center = img.getf(x, y);
                    let mut code = 0u8;
                    for (p, &(dx, dy)) in offsets.iter().enumerate() {
                        let v = img.bilinear(x as f64 + dx, y as f64 + dy);
                        if v >= center {
                            code |= 1 << p;
                        }
                    }
                    codes.push(code);
                }
            }
            Ok(CodeImage::new(ow, oh, codes, tag))
        }
    }
}
