//! ROC construction and the scalar performance indicators.

use super::ScoreSet;
use crate::error::{Error, Result};
use serde::Serialize;

/// Normal quantile for the two-sided 90% confidence level.
pub const Z_90: f64 = 1.6449;

/// One operating point of the ROC sweep. Acceptance is `distance <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
}

/// Sweeps the acceptance threshold over the sorted union of all observed
/// distances plus one sentinel below the minimum and one above the maximum.
/// `far` counts impostor scores at or below the threshold, `frr` counts
/// genuine scores above it.
pub fn roc(scores: &ScoreSet) -> Result<Vec<RocPoint>> {
    if scores.genuine.is_empty() || scores.impostor.is_empty() {
        return Err(Error::EmptyScores);
    }
    let mut genuine = scores.genuine.clone();
    let mut impostor = scores.impostor.clone();
    genuine.sort_by(|a, b| a.partial_cmp(b).unwrap());
    impostor.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut thresholds: Vec<f64> = genuine.iter().chain(impostor.iter()).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).unwrap());
    thresholds.dedup();
    let lo = thresholds[0] - 1.0;
    let hi = thresholds[thresholds.len() - 1] + 1.0;
    thresholds.insert(0, lo);
    thresholds.push(hi);

    let ng = genuine.len() as f64;
    let ni = impostor.len() as f64;
    let points: Vec<RocPoint> = thresholds
        .into_iter()
        .map(|t| {
            let accepted_impostor = impostor.partition_point(|&d| d <= t);
            let accepted_genuine = genuine.partition_point(|&d| d <= t);
            RocPoint {
                threshold: t,
                far: accepted_impostor as f64 / ni,
                frr: (genuine.len() - accepted_genuine) as f64 / ng,
            }
        })
        .collect();
    debug_assert!(points.windows(2).all(|w| w[0].far <= w[1].far));
    debug_assert!(points.windows(2).all(|w| w[0].frr >= w[1].frr));
    Ok(points)
}

/// Equal error rate in percent plus the threshold it occurs at.
///
/// `far - frr` is non-decreasing along the sweep; the first point where it
/// reaches zero is returned exactly, otherwise the crossing is linearly
/// interpolated between the bracketing thresholds.
pub fn eer(points: &[RocPoint]) -> Result<(f64, f64)> {
    check_roc(points)?;
    for (i, p) in points.iter().enumerate() {
        let d = p.far - p.frr;
        if d == 0.0 {
            return Ok((p.far * 100.0, p.threshold));
        }
        if d > 0.0 {
            let prev = points[i - 1];
            let d0 = prev.far - prev.frr;
            let t = -d0 / (d - d0);
            let value = prev.far + t * (p.far - prev.far);
            let threshold = prev.threshold + t * (p.threshold - prev.threshold);
            return Ok((value * 100.0, threshold));
        }
    }
    unreachable!("the high sentinel has far 1, frr 0");
}

/// Minimum over swept thresholds of `(far + frr) / 2`, in percent.
/// Never exceeds the interpolated EER.
pub fn min_hter(points: &[RocPoint]) -> Result<f64> {
    check_roc(points)?;
    let best = points
        .iter()
        .map(|p| (p.far + p.frr) / 2.0)
        .fold(f64::INFINITY, f64::min);
    Ok(best * 100.0)
}

fn check_roc(points: &[RocPoint]) -> Result<()> {
    // two sentinels plus a single distinct score means the sweep cannot
    // separate anything
    if points.len() < 4 {
        return Err(Error::DegenerateRoc);
    }
    Ok(())
}

/// Mean and half-width of the two-sided 90% parametric confidence interval.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Ci {
    pub mean: f64,
    pub half_width: f64,
    /// True when fewer than two runs were available.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    #[serde(default)]
    pub degenerate: bool,
}

/// `mean +/- z * s / sqrt(n)` with `z = 1.6449` and the n-1 sample
/// standard deviation. A single run yields half-width zero, flagged.
pub fn confidence_interval(values: &[f64]) -> Ci {
    assert!(!values.is_empty(), "confidence interval of no runs");
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Ci {
            mean,
            half_width: 0.0,
            degenerate: true,
        };
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ci {
        mean,
        half_width: Z_90 * var.sqrt() / n.sqrt(),
        degenerate: false,
    }
}
