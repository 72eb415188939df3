//! Score generation under the two evaluation protocols and the statistical
//! performance indicators (EER, GAR@EER, minHTER, Rank-1) with 90%
//! parametric confidence intervals across runs.

mod indicators;
mod protocol;

pub use indicators::{confidence_interval, eer, min_hter, roc, Ci, RocPoint, Z_90};
pub use protocol::{
    assemble_run, evaluate_runs, mean_cmc, partition_run, run_protocol, score_run, summarize,
    FeatureSet, IndicatorReport, RunIndicators, RunMaterial, RunOutcome, SubjectFeatures,
    SubjectPartition,
};

use serde::{Deserialize, Serialize};

/// Labeled distance collections produced by one protocol run.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub genuine: Vec<f64>,
    pub impostor: Vec<f64>,
    pub run_id: usize,
}

/// Which partitioning protocol drives the runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Repeated random disjoint template/probe splits.
    Holdout,
    /// Enroll one acquisition session, probe the other; exactly two runs.
    SessionSplit,
}

/// Protocol configuration shared by library callers and the CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub protocol: Protocol,
    /// Samples enrolled per subject under holdout; ignored by session split.
    pub templates_per_subject: usize,
    /// Holdout repetitions. Session split always runs exactly twice.
    pub repetitions: usize,
    /// Pairwise fusion rule applied to both sides, or none.
    pub fusion: Option<crate::fusion::CombineRule>,
    pub rng_seed: u64,
}

impl ProtocolConfig {
    /// Number of runs the protocol will actually execute.
    pub fn effective_runs(&self) -> usize {
        match self.protocol {
            Protocol::Holdout => self.repetitions,
            Protocol::SessionSplit => 2,
        }
    }

    /// Rejects impossible configurations and returns human-readable
    /// warnings for legal but non-canonical ones.
    pub fn validate(&self) -> crate::error::Result<Vec<String>> {
        let mut warnings = Vec::new();
        match self.protocol {
            Protocol::Holdout => {
                if self.templates_per_subject == 0 {
                    return Err(crate::error::Error::InvalidParams(
                        "holdout needs at least one template per subject".to_string(),
                    ));
                }
                if self.repetitions == 0 {
                    return Err(crate::error::Error::InvalidParams(
                        "holdout needs at least one repetition".to_string(),
                    ));
                }
                if !(2..=4).contains(&self.templates_per_subject) {
                    warnings.push(format!(
                        "templates_per_subject = {} is outside the canonical 2..=4 range",
                        self.templates_per_subject
                    ));
                }
            }
            Protocol::SessionSplit => {
                if self.repetitions != 2 {
                    warnings.push(format!(
                        "session split always runs exactly twice; repetitions = {} is ignored",
                        self.repetitions
                    ));
                }
            }
        }
        if self.fusion.is_some() && self.protocol == Protocol::Holdout
            && self.templates_per_subject < 2
        {
            return Err(crate::error::Error::InvalidParams(
                "pairwise fusion needs at least 2 templates per subject".to_string(),
            ));
        }
        Ok(warnings)
    }
}
