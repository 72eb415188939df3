//! Descriptor selection and the image -> feature-vector path shared by the
//! CLI and the evaluation drivers.

use crate::descriptors::{
    bsif_encode, lbp_encode, ldp_encode, lpq_encode, ltp_encode, FilterBank, LbpParams, LdpParams,
    LpqParams, LtpParams, LtpSplit,
};
use crate::error::Result;
use crate::evaluation::FeatureSet;
use crate::features::{concat_normalize, histogram, zero_mean, FeatureNorm, FeatureVector};
use crate::manifest::Manifest;
use crate::raster::{load_image, GrayImage};
use rayon::prelude::*;

/// A fully parameterized descriptor choice.
#[derive(Debug, Clone)]
pub enum Descriptor {
    Lbp(LbpParams),
    Ltp(LtpParams),
    Ldp(LdpParams),
    Lpq(LpqParams),
    Bsif(FilterBank),
}

impl Descriptor {
    pub fn validate(&self) -> Result<()> {
        match self {
            Descriptor::Lbp(p) => p.validate(),
            Descriptor::Ltp(p) => p.validate(),
            Descriptor::Ldp(p) => p.validate(),
            Descriptor::Lpq(p) => p.validate(),
            Descriptor::Bsif(_) => Ok(()),
        }
    }

    /// Tag of the feature vectors this descriptor produces (before any
    /// zero-mean suffix).
    pub fn feature_tag(&self) -> String {
        match self {
            Descriptor::Lbp(p) => p.tag(),
            Descriptor::Ltp(p) => match p.split_mode {
                LtpSplit::UpperOnly => format!("{}-upper", p.base_tag()),
                LtpSplit::ConcatUpperLower => format!("{}-cat", p.base_tag()),
            },
            Descriptor::Ldp(p) => p.tag(),
            Descriptor::Lpq(p) => p.tag(),
            Descriptor::Bsif(bank) => bank.tag(),
        }
    }

    /// Encodes and histograms one image.
    pub fn extract(&self, img: &GrayImage, norm: FeatureNorm) -> Result<FeatureVector> {
        let fv = match self {
            Descriptor::Lbp(p) => histogram(&lbp_encode(img, p)?)?,
            Descriptor::Ldp(p) => histogram(&ldp_encode(img, p)?)?,
            Descriptor::Lpq(p) => histogram(&lpq_encode(img, p)?)?,
            Descriptor::Bsif(bank) => histogram(&bsif_encode(img, bank)?)?,
            Descriptor::Ltp(p) => {
                let (upper, lower) = ltp_encode(img, p)?;
                match p.split_mode {
                    LtpSplit::UpperOnly => histogram(&upper)?,
                    LtpSplit::ConcatUpperLower => {
                        concat_normalize(&histogram(&upper)?, &histogram(&lower)?)?
                    }
                }
            }
        };
        Ok(match norm {
            FeatureNorm::SumToOne => fv,
            FeatureNorm::ZeroMean => zero_mean(&fv),
        })
    }
}

/// Loads every manifest image and extracts features in parallel, keeping
/// manifest order. Errors name the offending row.
pub fn extract_manifest(
    manifest: &Manifest,
    descriptor: &Descriptor,
    norm: FeatureNorm,
) -> Result<Vec<FeatureVector>> {
    descriptor.validate()?;
    manifest
        .rows()
        .par_iter()
        .map(|row| {
            let img = load_image(&row.path)?;
            descriptor.extract(&img, norm).map_err(|e| {
                crate::error::Error::InvalidManifest {
                    line: 0,
                    detail: format!("row {}: {e}", row.key()),
                }
            })
        })
        .collect()
}

/// Extracts features for a whole manifest into the protocol input form.
pub fn feature_set_from_manifest(
    manifest: &Manifest,
    descriptor: &Descriptor,
    norm: FeatureNorm,
) -> Result<FeatureSet> {
    let vectors = extract_manifest(manifest, descriptor, norm)?;
    let mut set = FeatureSet::default();
    for (row, fv) in manifest.rows().iter().zip(vectors) {
        set.insert(&row.subject_id, row.session, row.sample_index, fv);
    }
    set.finalize();
    Ok(set)
}

/// Extracts features for in-memory images keyed by (subject, session,
/// sample); avoids filesystem round-trips in tests and fitness checks.
pub fn feature_set_from_images(
    images: &[(String, u32, u32, GrayImage)],
    descriptor: &Descriptor,
    norm: FeatureNorm,
) -> Result<FeatureSet> {
    descriptor.validate()?;
    let vectors: Vec<Result<FeatureVector>> = images
        .par_iter()
        .map(|(_, _, _, img)| descriptor.extract(img, norm))
        .collect();
    let mut set = FeatureSet::default();
    for ((subject, session, sample, _), fv) in images.iter().zip(vectors) {
        set.insert(subject, *session, *sample, fv?);
    }
    set.finalize();
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn random_image(w: usize, h: usize, seed: u64) -> GrayImage {
        let mut rng = SplitMix64::new(seed);
        GrayImage::new(w, h, (0..w * h).map(|_| rng.below(256) as u8).collect()).unwrap()
    }

    #[test]
    fn every_descriptor_produces_a_unit_histogram() {
        let img = random_image(32, 32, 1);
        let mut rng = SplitMix64::new(2);
        let kernels = (0..4)
            .map(|_| {
                let mut k = crate::raster::Kernel::new(
                    5,
                    (0..25).map(|_| rng.range_f64(-1.0, 1.0)).collect(),
                )
                .unwrap();
                k.center();
                k
            })
            .collect();
        let bank = FilterBank::new(kernels).unwrap();
        let descriptors = [
            Descriptor::Lbp(LbpParams::default()),
            Descriptor::Ltp(LtpParams::default()),
            Descriptor::Ldp(LdpParams::default()),
            Descriptor::Lpq(LpqParams::default()),
            Descriptor::Bsif(bank),
        ];
        for d in &descriptors {
            let fv = d.extract(&img, FeatureNorm::SumToOne).unwrap();
            assert!((fv.sum() - 1.0).abs() < 1e-9, "{}", d.feature_tag());
            assert_eq!(fv.tag(), d.feature_tag());
            let expected_len = match d {
                Descriptor::Ltp(_) => 512,
                _ => 256,
            };
            assert_eq!(fv.len(), expected_len);
        }
    }

    #[test]
    fn zero_mean_mode_retags_and_centers() {
        let img = random_image(24, 24, 3);
        let d = Descriptor::Lbp(LbpParams::default());
        let fv = d.extract(&img, FeatureNorm::ZeroMean).unwrap();
        assert!(fv.tag().ends_with("-zm"));
        assert!(fv.sum().abs() < 1e-9);
    }
}
