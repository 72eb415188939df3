//! Histogram feature vectors — the template and probe representation.

use crate::descriptors::CodeImage;
use crate::error::{Error, Result};

/// Number of histogram bins for an 8-bit code raster.
pub const CODE_BINS: usize = 256;

/// How raw code frequencies become a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureNorm {
    /// Relative frequencies, bins sum to 1. The default.
    #[default]
    SumToOne,
    /// Relative frequencies with the mean bin value subtracted, so the
    /// vector is centered at zero instead of summing to 1. Provided as an
    /// alternative reading of "normalized and centered"; selected rules
    /// that need non-negative bins reject these vectors by tag.
    ZeroMean,
}

/// Dense histogram of descriptor codes. Comparable only when tags match.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    bins: Vec<f64>,
    tag: String,
}

impl FeatureVector {
    /// Wraps precomputed bins; used by fusion and (de)serialization.
    pub fn from_bins(bins: Vec<f64>, tag: impl Into<String>) -> Self {
        Self {
            bins,
            tag: tag.into(),
        }
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn sum(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub(crate) fn check_same_tag(&self, other: &FeatureVector) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::TagMismatch {
                left: self.tag.clone(),
                right: other.tag.clone(),
            });
        }
        Ok(())
    }

    /// CSV row `tag, bin_0, ..., bin_{n-1}` with 12 significant digits.
    pub fn to_csv_row(&self) -> String {
        let mut row = self.tag.clone();
        for b in &self.bins {
            row.push(',');
            row.push_str(&format!("{b:.11e}"));
        }
        row
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let mut parts = row.split(',');
        let tag = parts
            .next()
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .ok_or_else(|| Error::InvalidManifest {
                line: 0,
                detail: "feature row is missing its tag".to_string(),
            })?;
        let bins: Vec<f64> = parts
            .map(|t| {
                t.trim().parse::<f64>().map_err(|e| Error::InvalidManifest {
                    line: 0,
                    detail: format!("bad bin value `{t}`: {e}"),
                })
            })
            .collect::<Result<_>>()?;
        if bins.is_empty() {
            return Err(Error::InvalidManifest {
                line: 0,
                detail: "feature row has no bins".to_string(),
            });
        }
        Ok(Self::from_bins(bins, tag))
    }
}

/// Sum-to-one histogram of a code raster; the tag is inherited from the
/// code image.
pub fn histogram(codes: &CodeImage) -> Result<FeatureVector> {
    if codes.codes().is_empty() {
        return Err(Error::EmptyCodeImage);
    }
    let mut counts = [0u64; CODE_BINS];
    for &c in codes.codes() {
        counts[c as usize] += 1;
    }
    let total = codes.codes().len() as f64;
    let bins: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(FeatureVector::from_bins(bins, codes.tag()))
}

/// Centers a vector's bins at zero mean and marks the tag with `-zm`.
/// Applied after histogramming (and after LTP concatenation) when the
/// zero-mean reading of normalization is selected.
pub fn zero_mean(fv: &FeatureVector) -> FeatureVector {
    let mean = fv.sum() / fv.len() as f64;
    let bins = fv.bins().iter().map(|b| b - mean).collect();
    FeatureVector::from_bins(bins, format!("{}-zm", fv.tag()))
}

/// Histogram under the requested normalization mode.
pub fn histogram_with(codes: &CodeImage, norm: FeatureNorm) -> Result<FeatureVector> {
    let fv = histogram(codes)?;
    Ok(match norm {
        FeatureNorm::SumToOne => fv,
        FeatureNorm::ZeroMean => zero_mean(&fv),
    })
}

/// Joins the LTP upper/lower histograms into one jointly normalized
/// 512-bin vector `[upper/2, lower/2]`.
pub fn concat_normalize(upper: &FeatureVector, lower: &FeatureVector) -> Result<FeatureVector> {
    let (base_u, kind_u) = split_ltp_tag(upper.tag())?;
    let (base_l, kind_l) = split_ltp_tag(lower.tag())?;
    if base_u != base_l || kind_u != "upper" || kind_l != "lower" {
        return Err(Error::TagMismatch {
            left: upper.tag().to_string(),
            right: lower.tag().to_string(),
        });
    }
    if upper.len() != CODE_BINS || lower.len() != CODE_BINS {
        return Err(Error::DimensionMismatch(format!(
            "concat needs two 256-bin vectors, got {} and {}",
            upper.len(),
            lower.len()
        )));
    }
    let mut bins = Vec::with_capacity(2 * CODE_BINS);
    bins.extend(upper.bins().iter().map(|b| b / 2.0));
    bins.extend(lower.bins().iter().map(|b| b / 2.0));
    Ok(FeatureVector::from_bins(bins, format!("{base_u}-cat")))
}

fn split_ltp_tag(tag: &str) -> Result<(&str, &str)> {
    let err = || Error::TagMismatch {
        left: tag.to_string(),
        right: "ltp-*-upper / ltp-*-lower".to_string(),
    };
    if !tag.starts_with("ltp-") {
        return Err(err());
    }
    let idx = tag.rfind('-').ok_or_else(err)?;
    Ok((&tag[..idx], &tag[idx + 1..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn code_image(codes: Vec<u8>, tag: &str) -> CodeImage {
        let w = codes.len();
        CodeImage::new(w, 1, codes, tag.to_string())
    }

    #[test]
    fn direct_count_histogram() {
        let codes = code_image(vec![0, 0, 1, 255], "t");
        let fv = histogram(&codes).unwrap();
        assert_eq!(fv.bins()[0], 0.5);
        assert_eq!(fv.bins()[1], 0.25);
        assert_eq!(fv.bins()[255], 0.25);
        assert_eq!(fv.bins().iter().filter(|&&b| b != 0.0).count(), 3);
    }

    #[test]
    fn delta_histogram() {
        let codes = code_image(vec![255; 10], "t");
        let fv = histogram(&codes).unwrap();
        assert_eq!(fv.bins()[255], 1.0);
        assert_eq!(fv.sum(), 1.0);
    }

    #[test]
    fn random_codes_match_naive_counting() {
        let mut rng = SplitMix64::new(5);
        let raw: Vec<u8> = (0..400).map(|_| rng.below(256) as u8).collect();
        let fv = histogram(&code_image(raw.clone(), "t")).unwrap();
        for value in 0..256usize {
            let count = raw.iter().filter(|&&c| c as usize == value).count();
            assert_eq!(fv.bins()[value], count as f64 / 400.0);
        }
        assert!((fv.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_is_permutation_invariant() {
        let mut rng = SplitMix64::new(6);
        let mut raw: Vec<u8> = (0..300).map(|_| rng.below(256) as u8).collect();
        let a = histogram(&code_image(raw.clone(), "t")).unwrap();
        rng.shuffle(&mut raw);
        let b = histogram(&code_image(raw, "t")).unwrap();
        assert_eq!(a.bins(), b.bins());
    }

    #[test]
    fn empty_codes_are_rejected() {
        let codes = CodeImage::new(0, 0, vec![], "t".to_string());
        assert!(matches!(histogram(&codes), Err(Error::EmptyCodeImage)));
    }

    #[test]
    fn zero_mean_norm_centers_and_retags() {
        let codes = code_image(vec![0, 0, 1, 255], "lbp-p8-r1-circle");
        let fv = histogram_with(&codes, FeatureNorm::ZeroMean).unwrap();
        assert!(fv.sum().abs() < 1e-12);
        assert_eq!(fv.tag(), "lbp-p8-r1-circle-zm");
    }

    #[test]
    fn concat_of_deltas() {
        let upper = FeatureVector::from_bins(
            {
                let mut b = vec![0.0; 256];
                b[0] = 1.0;
                b
            },
            "ltp-t5-upper",
        );
        let lower = FeatureVector::from_bins(
            {
                let mut b = vec![0.0; 256];
                b[255] = 1.0;
                b
            },
            "ltp-t5-lower",
        );
        let cat = concat_normalize(&upper, &lower).unwrap();
        assert_eq!(cat.bins()[0], 0.5);
        assert_eq!(cat.bins()[511], 0.5);
        assert_eq!(cat.tag(), "ltp-t5-cat");
    }

    #[test]
    fn concat_of_identical_halves_halves_each_bin() {
        let mut bins = vec![0.0; 256];
        bins[3] = 0.25;
        bins[7] = 0.75;
        let upper = FeatureVector::from_bins(bins.clone(), "ltp-t5-upper");
        let lower = FeatureVector::from_bins(bins, "ltp-t5-lower");
        let cat = concat_normalize(&upper, &lower).unwrap();
        assert_eq!(cat.bins()[3], 0.125);
        assert_eq!(cat.bins()[256 + 7], 0.375);
        assert!((cat.sum() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn concat_rejects_swapped_or_foreign_tags() {
        let a = FeatureVector::from_bins(vec![0.0; 256], "ltp-t5-lower");
        let b = FeatureVector::from_bins(vec![0.0; 256], "ltp-t5-upper");
        assert!(concat_normalize(&a, &b).is_err());
        let c = FeatureVector::from_bins(vec![0.0; 256], "lbp-p8-r1-circle");
        assert!(concat_normalize(&c, &b).is_err());
    }

    #[test]
    fn csv_row_round_trips() {
        let mut rng = SplitMix64::new(9);
        let bins: Vec<f64> = (0..16).map(|_| rng.next_f64()).collect();
        let total: f64 = bins.iter().sum();
        let bins: Vec<f64> = bins.into_iter().map(|b| b / total).collect();
        let fv = FeatureVector::from_bins(bins, "lpq-m7");
        let back = FeatureVector::from_csv_row(&fv.to_csv_row()).unwrap();
        assert_eq!(back.tag(), "lpq-m7");
        for (a, b) in fv.bins().iter().zip(back.bins()) {
            assert!((a - b).abs() < 1e-11);
        }
    }
}
