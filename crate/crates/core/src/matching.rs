//! Euclidean matching: verification against a claimed subject's templates
//! and closed-set identification over a gallery.

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::fusion::TemplateSet;

/// A labeled comparison outcome, the audit unit of a protocol run.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    pub distance: f64,
    pub claimed_subject: String,
    pub probe_id: String,
    pub genuine: bool,
}

impl MatchScore {
    pub fn new(
        distance: f64,
        claimed_subject: impl Into<String>,
        probe_id: impl Into<String>,
        genuine: bool,
    ) -> Self {
        debug_assert!(distance >= 0.0);
        Self {
            distance,
            claimed_subject: claimed_subject.into(),
            probe_id: probe_id.into(),
            genuine,
        }
    }
}

/// Root-form Euclidean distance between two feature vectors.
pub fn euclidean(a: &FeatureVector, b: &FeatureVector) -> Result<f64> {
    a.check_same_tag(b)?;
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.bins().iter().zip(b.bins()) {
        let d = x - y;
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// Distance of a probe to a subject: the minimum over the subject's
/// (possibly fused) templates. A verification decision elsewhere accepts
/// iff this distance is at or below the operating threshold.
pub fn verify(probe: &FeatureVector, templates: &TemplateSet) -> Result<f64> {
    let mut best = f64::INFINITY;
    for t in templates.vectors() {
        let d = euclidean(probe, t)?;
        if d < best {
            best = d;
        }
    }
    Ok(best)
}

/// Ranks gallery subjects by ascending best-template distance, ties broken
/// by ascending subject identifier, and returns the first `rank` subjects.
pub fn identify(
    probe: &FeatureVector,
    gallery: &[TemplateSet],
    rank: usize,
) -> Result<Vec<String>> {
    if gallery.is_empty() {
        return Err(Error::EmptyGallery);
    }
    let mut scored: Vec<(f64, &str)> = Vec::with_capacity(gallery.len());
    for set in gallery {
        scored.push((verify(probe, set)?, set.subject_id.as_str()));
    }
    scored.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(b.1))
    });
    Ok(scored
        .into_iter()
        .take(rank)
        .map(|(_, id)| id.to_string())
        .collect())
}
