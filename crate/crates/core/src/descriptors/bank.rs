//! Filter bank for BSIF and its text interchange format.

use crate::error::{Error, Result};
use crate::raster::Kernel;
use std::io::Write;
use std::path::Path;

/// Ordered set of square zero-mean kernels; kernel 0 drives code bit 0.
///
/// Text format, stable across implementations:
///
/// ```text
/// BSIF <count> <side>
/// <side*side whitespace-separated reals, row-major>   (repeated count times)
/// ```
///
/// Values are written with Rust's shortest round-trip float formatting, so
/// a write/read cycle preserves every weight to well below 1e-12.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    side: usize,
    kernels: Vec<Kernel>,
}

impl FilterBank {
    /// Validates and mean-centers the kernels. Incoming kernels must already
    /// be zero-mean within 1e-6; centering then removes the residual so a
    /// constant image yields responses at float-noise level.
    pub fn new(kernels: Vec<Kernel>) -> Result<Self> {
        if kernels.is_empty() {
            return Err(Error::InvalidFilterBank("bank has no kernels".to_string()));
        }
        if kernels.len() > 8 {
            return Err(Error::InvalidFilterBank(format!(
                "bank has {} kernels; codes are 8-bit so at most 8 are allowed",
                kernels.len()
            )));
        }
        let side = kernels[0].side();
        for k in &kernels {
            if k.side() != side {
                return Err(Error::MixedKernelSizes {
                    first: side,
                    other: k.side(),
                });
            }
            if k.mean().abs() > 1e-6 {
                return Err(Error::InvalidFilterBank(format!(
                    "kernel mean {} exceeds the 1e-6 zero-mean bound",
                    k.mean()
                )));
            }
        }
        let mut kernels = kernels;
        for k in &mut kernels {
            k.center();
        }
        Ok(Self { side, kernels })
    }

    pub fn count(&self) -> usize {
        self.kernels.len()
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn kernels(&self) -> &[Kernel] {
        &self.kernels
    }

    pub fn tag(&self) -> String {
        format!("bsif-k{}-s{}", self.count(), self.side)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("BSIF {} {}\n", self.count(), self.side);
        for kernel in &self.kernels {
            for row in 0..self.side {
                let mut line = String::new();
                for col in 0..self.side {
                    if col > 0 {
                        line.push(' ');
                    }
                    line.push_str(&kernel.weights()[row * self.side + col].to_string());
                }
                out.push_str(&line);
                out.push('\n');
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidFilterBank("empty file".to_string()))?;
        let mut parts = header.split_whitespace();
        let magic = parts.next().unwrap_or("");
        if magic != "BSIF" {
            return Err(Error::InvalidFilterBank(format!(
                "bad header `{header}` (expected `BSIF <count> <side>`)"
            )));
        }
        let count: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidFilterBank("missing kernel count".to_string()))?;
        let side: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::InvalidFilterBank("missing kernel side".to_string()))?;
        let rest: String = lines.collect::<Vec<_>>().join(" ");
        let values: Vec<f64> = rest
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::InvalidFilterBank(format!("bad weight `{t}`: {e}")))
            })
            .collect::<Result<_>>()?;
        let need = count * side * side;
        if values.len() != need {
            return Err(Error::InvalidFilterBank(format!(
                "expected {need} weights, found {}",
                values.len()
            )));
        }
        let kernels = values
            .chunks(side * side)
            .map(|chunk| Kernel::new(side, chunk.to_vec()))
            .collect::<Result<Vec<_>>>()?;
        FilterBank::new(kernels)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::UnreadableFile {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        Self::from_text(&text)
    }
}

/// Random centered bank for tests.
#[cfg(test)]
pub(crate) fn random_bank(count: usize, side: usize, seed: u64) -> FilterBank {
    use crate::rng::SplitMix64;
    let mut rng = SplitMix64::new(seed);
    let kernels = (0..count)
        .map(|_| {
            let mut k = Kernel::new(
                side,
                (0..side * side).map(|_| rng.range_f64(-1.0, 1.0)).collect(),
            )
            .unwrap();
            k.center();
            k
        })
        .collect();
    FilterBank::new(kernels).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_preserves_weights() {
        let bank = random_bank(8, 5, 1234);
        let back = FilterBank::from_text(&bank.to_text()).unwrap();
        assert_eq!(back.count(), 8);
        assert_eq!(back.side(), 5);
        for (a, b) in bank.kernels().iter().zip(back.kernels()) {
            for (x, y) in a.weights().iter().zip(b.weights()) {
                assert!((x - y).abs() < 1e-12, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn header_is_as_documented() {
        let bank = random_bank(3, 3, 7);
        assert!(bank.to_text().starts_with("BSIF 3 3\n"));
    }

    #[test]
    fn mixed_sides_are_rejected() {
        let a = Kernel::new(3, vec![0.0; 9]).unwrap();
        let b = Kernel::new(5, vec![0.0; 25]).unwrap();
        assert!(matches!(
            FilterBank::new(vec![a, b]),
            Err(Error::MixedKernelSizes { .. })
        ));
    }

    #[test]
    fn non_zero_mean_kernels_are_rejected() {
        let k = Kernel::new(3, vec![1.0; 9]).unwrap();
        assert!(matches!(
            FilterBank::new(vec![k]),
            Err(Error::InvalidFilterBank(_))
        ));
    }

    #[test]
    fn more_than_eight_kernels_are_rejected() {
        let kernels: Vec<Kernel> = (0..9).map(|_| Kernel::new(1, vec![0.0]).unwrap()).collect();
        assert!(FilterBank::new(kernels).is_err());
    }
}
