//! Multi-snapshot feature-level fusion.
//!
//! A subject with `n` snapshots is expanded into all `n*(n-1)/2` unordered
//! pair combinations. Pairwise averaging is the rule used by the main
//! protocols; sqrt (geometric mean), product, and absolute difference exist
//! for rule-comparison experiments and are renormalized so distances stay
//! scale-comparable across rules.

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use serde::{Deserialize, Serialize};

/// Pairwise combination rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineRule {
    Mean,
    Sqrt,
    Product,
    AbsDiff,
}

impl std::fmt::Display for CombineRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            CombineRule::Mean => "mean",
            CombineRule::Sqrt => "sqrt",
            CombineRule::Product => "product",
            CombineRule::AbsDiff => "absdiff",
        };
        write!(f, "{name}")
    }
}

/// A subject's enrolled feature vectors.
#[derive(Debug, Clone)]
pub struct TemplateSet {
    pub subject_id: String,
    vectors: Vec<FeatureVector>,
    fused: bool,
}

impl TemplateSet {
    pub fn new(subject_id: impl Into<String>, vectors: Vec<FeatureVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyTemplateSet);
        }
        for v in &vectors[1..] {
            vectors[0].check_same_tag(v)?;
        }
        Ok(Self {
            subject_id: subject_id.into(),
            vectors,
            fused: false,
        })
    }

    /// Expands the source vectors into all pairwise combinations under
    /// `rule` and marks the set as fused.
    pub fn fused_from(
        subject_id: impl Into<String>,
        vectors: Vec<FeatureVector>,
        rule: CombineRule,
    ) -> Result<Self> {
        let fused = combine_pairs(&vectors, rule)?;
        Ok(Self {
            subject_id: subject_id.into(),
            vectors: fused,
            fused: true,
        })
    }

    pub fn vectors(&self) -> &[FeatureVector] {
        &self.vectors
    }

    pub fn is_fused(&self) -> bool {
        self.fused
    }

    pub fn tag(&self) -> &str {
        self.vectors[0].tag()
    }
}

fn combine_bins(a: &[f64], b: &[f64], rule: CombineRule) -> Vec<f64> {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| match rule {
            CombineRule::Mean => (x + y) / 2.0,
            CombineRule::Sqrt => (x * y).sqrt(),
            CombineRule::Product => x * y,
            CombineRule::AbsDiff => (x - y).abs(),
        })
        .collect()
}

/// Combines two vectors elementwise under `rule`. Non-mean rules are
/// re-normalized to sum 1; an all-zero result (absdiff of identical inputs,
/// product of disjoint supports) is an error.
pub fn combine(a: &FeatureVector, b: &FeatureVector, rule: CombineRule) -> Result<FeatureVector> {
    a.check_same_tag(b)?;
    let mut bins = combine_bins(a.bins(), b.bins(), rule);
    if rule != CombineRule::Mean {
        let total: f64 = bins.iter().sum();
        if total <= 0.0 {
            return Err(Error::DegenerateZeroVector);
        }
        for v in &mut bins {
            *v /= total;
        }
    }
    Ok(FeatureVector::from_bins(bins, a.tag()))
}

/// All unordered pairs `{i, j}`, `i < j`, in lexicographic `(i, j)` order,
/// combined under `rule`. `n` inputs produce `n*(n-1)/2` outputs.
pub fn combine_pairs(vectors: &[FeatureVector], rule: CombineRule) -> Result<Vec<FeatureVector>> {
    if vectors.len() < 2 {
        return Err(Error::TooFewVectors(vectors.len()));
    }
    for v in &vectors[1..] {
        vectors[0].check_same_tag(v)?;
    }
    let n = vectors.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            out.push(combine(&vectors[i], &vectors[j], rule)?);
        }
    }
    Ok(out)
}

/// Pairwise averaging over all unordered pairs — the main fusion rule.
pub fn fuse_pairs(vectors: &[FeatureVector]) -> Result<Vec<FeatureVector>> {
    combine_pairs(vectors, CombineRule::Mean)
}

/// Averages the two samples submitted at recognition time.
pub fn fuse_probe(a: &FeatureVector, b: &FeatureVector) -> Result<FeatureVector> {
    combine(a, b, CombineRule::Mean)
}
