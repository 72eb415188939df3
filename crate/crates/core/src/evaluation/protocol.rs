//! Partitioning protocols and score generation.
//!
//! Partitions are driven by a splitmix64 stream seeded with
//! `rng_seed + run_index` (wrapping add). Within a run, subjects are visited
//! in ascending identifier order and each subject's samples — pre-sorted by
//! `(session, sample_index)` — are Fisher-Yates shuffled once; the first
//! `templates_per_subject` entries of the shuffle become templates and the
//! rest probes. The session-split protocol ignores the stream entirely: run
//! 0 enrolls session 1 and probes session 2, run 1 swaps them.

use super::indicators::{confidence_interval, eer, min_hter, roc, Ci};
use super::{Protocol, ProtocolConfig, ScoreSet};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::fusion::{combine_pairs, TemplateSet};
use crate::matching::{identify, verify};
use crate::rng::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Features of one subject's samples, in `(session, sample_index)` order.
#[derive(Debug, Clone)]
pub struct SubjectFeatures {
    pub subject_id: String,
    /// `(session, sample_index)` labels parallel to `vectors`.
    pub keys: Vec<(u32, u32)>,
    pub vectors: Vec<FeatureVector>,
}

/// All extracted features, keyed by subject, the input to a protocol run.
#[derive(Debug, Clone, Default)]
pub struct FeatureSet {
    subjects: BTreeMap<String, SubjectFeatures>,
}

impl FeatureSet {
    pub fn insert(&mut self, subject_id: &str, session: u32, sample_index: u32, fv: FeatureVector) {
        let entry = self
            .subjects
            .entry(subject_id.to_string())
            .or_insert_with(|| SubjectFeatures {
                subject_id: subject_id.to_string(),
                keys: Vec::new(),
                vectors: Vec::new(),
            });
        entry.keys.push((session, sample_index));
        entry.vectors.push(fv);
    }

    /// Sorts every subject's samples into canonical order. Must be called
    /// once after the last `insert`.
    pub fn finalize(&mut self) {
        for subject in self.subjects.values_mut() {
            let mut order: Vec<usize> = (0..subject.keys.len()).collect();
            order.sort_by_key(|&i| subject.keys[i]);
            subject.keys = order.iter().map(|&i| subject.keys[i]).collect();
            let mut vectors = std::mem::take(&mut subject.vectors);
            let mut reordered: Vec<Option<FeatureVector>> =
                vectors.drain(..).map(Some).collect();
            subject.vectors = order
                .iter()
                .map(|&i| reordered[i].take().expect("each index moved once"))
                .collect();
        }
    }

    pub fn subjects(&self) -> impl Iterator<Item = &SubjectFeatures> {
        self.subjects.values()
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }
}

/// Template/probe split of one subject for one run, as indices into the
/// subject's canonical sample order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubjectPartition {
    pub subject_id: String,
    pub template_idx: Vec<usize>,
    pub probe_idx: Vec<usize>,
}

/// Computes the per-subject partition for `run_index` under `cfg`.
pub fn partition_run(
    features: &FeatureSet,
    cfg: &ProtocolConfig,
    run_index: usize,
) -> Result<Vec<SubjectPartition>> {
    match cfg.protocol {
        Protocol::Holdout => {
            let t = cfg.templates_per_subject;
            let mut rng = SplitMix64::new(cfg.rng_seed.wrapping_add(run_index as u64));
            let mut parts = Vec::with_capacity(features.subject_count());
            for subject in features.subjects() {
                let n = subject.vectors.len();
                if n < t + 1 {
                    return Err(Error::InsufficientSamples {
                        subject: subject.subject_id.clone(),
                        have: n,
                        need: t + 1,
                    });
                }
                let mut order: Vec<usize> = (0..n).collect();
                rng.shuffle(&mut order);
                parts.push(SubjectPartition {
                    subject_id: subject.subject_id.clone(),
                    template_idx: order[..t].to_vec(),
                    probe_idx: order[t..].to_vec(),
                });
            }
            Ok(parts)
        }
        Protocol::SessionSplit => {
            let (template_session, probe_session) = if run_index == 0 { (1, 2) } else { (2, 1) };
            let mut parts = Vec::with_capacity(features.subject_count());
            for subject in features.subjects() {
                let pick = |session: u32| -> Vec<usize> {
                    subject
                        .keys
                        .iter()
                        .enumerate()
                        .filter(|(_, &(s, _))| s == session)
                        .map(|(i, _)| i)
                        .collect()
                };
                let template_idx = pick(template_session);
                let probe_idx = pick(probe_session);
                for (idx, session) in [(&template_idx, template_session), (&probe_idx, probe_session)]
                {
                    if idx.is_empty() {
                        return Err(Error::MissingSession {
                            subject: subject.subject_id.clone(),
                            session,
                        });
                    }
                }
                parts.push(SubjectPartition {
                    subject_id: subject.subject_id.clone(),
                    template_idx,
                    probe_idx,
                });
            }
            Ok(parts)
        }
    }
}

/// Enrolled gallery and probe lists of one run, post-fusion.
pub struct RunMaterial {
    pub gallery: Vec<TemplateSet>,
    /// Per subject (gallery order): that subject's probe vectors.
    pub probes: Vec<Vec<FeatureVector>>,
}

/// Assembles template sets and probe lists for a run, applying pairwise
/// fusion to both sides when the config requests it.
pub fn assemble_run(
    features: &FeatureSet,
    parts: &[SubjectPartition],
    cfg: &ProtocolConfig,
) -> Result<RunMaterial> {
    let by_id: BTreeMap<&str, &SubjectFeatures> = features
        .subjects()
        .map(|s| (s.subject_id.as_str(), s))
        .collect();
    let mut gallery = Vec::with_capacity(parts.len());
    let mut probes = Vec::with_capacity(parts.len());
    for part in parts {
        let subject = by_id[part.subject_id.as_str()];
        let templates: Vec<FeatureVector> = part
            .template_idx
            .iter()
            .map(|&i| subject.vectors[i].clone())
            .collect();
        let probe_vecs: Vec<FeatureVector> = part
            .probe_idx
            .iter()
            .map(|&i| subject.vectors[i].clone())
            .collect();
        match cfg.fusion {
            Some(rule) => {
                gallery.push(TemplateSet::fused_from(&part.subject_id, templates, rule)?);
                probes.push(combine_pairs(&probe_vecs, rule)?);
            }
            None => {
                gallery.push(TemplateSet::new(&part.subject_id, templates)?);
                probes.push(probe_vecs);
            }
        }
    }
    Ok(RunMaterial { gallery, probes })
}

/// Verification scores plus identification outcome of a single run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scores: ScoreSet,
    pub rank1_percent: f64,
    /// Identification rate per rank, `cmc[0]` being rank 1, as fractions.
    pub cmc: Vec<f64>,
}

/// Per-subject scoring intermediates: genuine distances, impostor
/// distances, rank-1 hits, and the rank of the true subject per probe.
type SubjectScores = (Vec<f64>, Vec<f64>, usize, Vec<usize>);

/// Scores one assembled run. Genuine scores come first per subject in probe
/// order, impostor scores iterate claimed subjects in gallery order for each
/// probe. Per-subject work runs in parallel; ordering is input-determined.
pub fn score_run(material: &RunMaterial, run_id: usize) -> Result<RunOutcome> {
    let n_subjects = material.gallery.len();
    let per_subject: Vec<Result<SubjectScores>> = (0..n_subjects)
        .into_par_iter()
        .map(|owner| {
            let mut genuine = Vec::new();
            let mut impostor = Vec::new();
            let mut rank1_hits = 0usize;
            let mut ranks = Vec::new();
            for probe in &material.probes[owner] {
                genuine.push(verify(probe, &material.gallery[owner])?);
                for (claimed, set) in material.gallery.iter().enumerate() {
                    if claimed != owner {
                        impostor.push(verify(probe, set)?);
                    }
                }
                let ranking = identify(probe, &material.gallery, n_subjects)?;
                let true_id = material.gallery[owner].subject_id.as_str();
                let position = ranking
                    .iter()
                    .position(|id| id == true_id)
                    .expect("own subject is in the gallery");
                if position == 0 {
                    rank1_hits += 1;
                }
                ranks.push(position);
            }
            Ok((genuine, impostor, rank1_hits, ranks))
        })
        .collect();

    let mut genuine = Vec::new();
    let mut impostor = Vec::new();
    let mut rank1_hits = 0usize;
    let mut rank_histogram = vec![0usize; n_subjects];
    let mut probe_count = 0usize;
    for entry in per_subject {
        let (g, i, hits, ranks) = entry?;
        genuine.extend(g);
        impostor.extend(i);
        rank1_hits += hits;
        probe_count += ranks.len();
        for r in ranks {
            rank_histogram[r] += 1;
        }
    }

    let mut cmc = Vec::with_capacity(n_subjects);
    let mut cumulative = 0usize;
    for count in rank_histogram {
        cumulative += count;
        cmc.push(cumulative as f64 / probe_count as f64);
    }

    Ok(RunOutcome {
        scores: ScoreSet {
            genuine,
            impostor,
            run_id,
        },
        rank1_percent: 100.0 * rank1_hits as f64 / probe_count as f64,
        cmc,
    })
}

/// Runs every repetition of the protocol and returns one ScoreSet per run.
pub fn run_protocol(features: &FeatureSet, cfg: &ProtocolConfig) -> Result<Vec<ScoreSet>> {
    Ok(evaluate_runs(features, cfg)?
        .into_iter()
        .map(|o| o.scores)
        .collect())
}

/// Runs every repetition and keeps verification and identification results.
pub fn evaluate_runs(features: &FeatureSet, cfg: &ProtocolConfig) -> Result<Vec<RunOutcome>> {
    let runs = cfg.effective_runs();
    let mut outcomes = Vec::with_capacity(runs);
    for run in 0..runs {
        let parts = partition_run(features, cfg, run)?;
        let material = assemble_run(features, &parts, cfg)?;
        outcomes.push(score_run(&material, run)?);
    }
    Ok(outcomes)
}

/// Scalar indicators of one run, all in percent.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RunIndicators {
    pub run_id: usize,
    pub eer: f64,
    pub gar_at_eer: f64,
    pub min_hter: f64,
    pub rank1: f64,
    pub threshold: f64,
    pub genuine_count: usize,
    pub impostor_count: usize,
}

/// Indicator means with 90% confidence half-widths across runs.
#[derive(Debug, Clone, Serialize)]
pub struct IndicatorReport {
    pub eer: Ci,
    pub gar_at_eer: Ci,
    pub min_hter: Ci,
    pub rank1: Ci,
    pub runs: usize,
}

/// Reduces per-run outcomes to per-run indicators plus their intervals.
pub fn summarize(outcomes: &[RunOutcome]) -> Result<(Vec<RunIndicators>, IndicatorReport)> {
    let mut per_run = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        let points = roc(&o.scores)?;
        let (eer_pct, threshold) = eer(&points)?;
        let hter = min_hter(&points)?;
        per_run.push(RunIndicators {
            run_id: o.scores.run_id,
            eer: eer_pct,
            gar_at_eer: 100.0 - eer_pct,
            min_hter: hter,
            rank1: o.rank1_percent,
            threshold,
            genuine_count: o.scores.genuine.len(),
            impostor_count: o.scores.impostor.len(),
        });
    }
    let collect = |f: fn(&RunIndicators) -> f64| -> Vec<f64> { per_run.iter().map(f).collect() };
    let report = IndicatorReport {
        eer: confidence_interval(&collect(|r| r.eer)),
        gar_at_eer: confidence_interval(&collect(|r| r.gar_at_eer)),
        min_hter: confidence_interval(&collect(|r| r.min_hter)),
        rank1: confidence_interval(&collect(|r| r.rank1)),
        runs: outcomes.len(),
    };
    Ok((per_run, report))
}

/// Identification rate per rank averaged across runs, as fractions.
pub fn mean_cmc(outcomes: &[RunOutcome]) -> Vec<f64> {
    if outcomes.is_empty() {
        return Vec::new();
    }
    let ranks = outcomes[0].cmc.len();
    let mut mean = vec![0.0; ranks];
    for o in outcomes {
        for (m, v) in mean.iter_mut().zip(&o.cmc) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= outcomes.len() as f64;
    }
    mean
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::CombineRule;
    use crate::rng::SplitMix64;

    /// Synthetic feature set: each subject has a noisy delta signature so
    /// genuine distances are small and impostor distances large.
    pub(crate) fn synthetic_features(
        subjects: usize,
        samples: usize,
        bins: usize,
        noise: f64,
        seed: u64,
    ) -> FeatureSet {
        let mut fs = FeatureSet::default();
        let mut rng = SplitMix64::new(seed);
        for s in 0..subjects {
            let anchor = s % bins;
            for i in 0..samples {
                let mut raw = vec![0.0f64; bins];
                raw[anchor] = 1.0;
                for v in raw.iter_mut() {
                    *v += noise * rng.next_f64();
                }
                let total: f64 = raw.iter().sum();
                let fv = FeatureVector::from_bins(
                    raw.into_iter().map(|v| v / total).collect(),
                    "synthetic",
                );
                let session = if i < samples / 2 { 1 } else { 2 };
                fs.insert(&format!("s{s:03}"), session, i as u32, fv);
            }
        }
        fs.finalize();
        fs
    }

    fn holdout_cfg(templates: usize, reps: usize, fusion: Option<CombineRule>) -> ProtocolConfig {
        ProtocolConfig {
            protocol: Protocol::Holdout,
            templates_per_subject: templates,
            repetitions: reps,
            fusion,
            rng_seed: 2025,
        }
    }

    #[test]
    fn hand_enumerated_counts_for_two_subjects() {
        // 2 subjects x 4 samples, 2 templates / 2 probes, no fusion:
        // 2 x 2 = 4 genuine and 2 x 1 x 2 = 4 impostor scores
        let fs = synthetic_features(2, 4, 8, 0.3, 1);
        let sets = run_protocol(&fs, &holdout_cfg(2, 1, None)).unwrap();
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].genuine.len(), 4);
        assert_eq!(sets[0].impostor.len(), 4);
    }

    #[test]
    fn score_counts_follow_the_protocol_arithmetic() {
        // S subjects, P probes each: S*P genuine, S*(S-1)*P impostor
        let fs = synthetic_features(10, 12, 16, 0.3, 2);
        let no_fusion = run_protocol(&fs, &holdout_cfg(4, 2, None)).unwrap();
        for set in &no_fusion {
            assert_eq!(set.genuine.len(), 10 * 8);
            assert_eq!(set.impostor.len(), 10 * 9 * 8);
        }
        // with fusion: 8 probes -> C(8,2) = 28 fused probes
        let fused = run_protocol(&fs, &holdout_cfg(4, 2, Some(CombineRule::Mean))).unwrap();
        for set in &fused {
            assert_eq!(set.genuine.len(), 10 * 28);
            assert_eq!(set.impostor.len(), 10 * 9 * 28);
        }
    }

    #[test]
    fn partitions_are_disjoint_and_cover_templates() {
        let fs = synthetic_features(6, 12, 16, 0.3, 3);
        let cfg = holdout_cfg(4, 10, None);
        for run in 0..10 {
            for part in partition_run(&fs, &cfg, run).unwrap() {
                assert_eq!(part.template_idx.len(), 4);
                assert_eq!(part.probe_idx.len(), 8);
                let mut all: Vec<usize> = part
                    .template_idx
                    .iter()
                    .chain(&part.probe_idx)
                    .copied()
                    .collect();
                all.sort_unstable();
                assert_eq!(all, (0..12).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn runs_differ_only_by_partition() {
        let fs = synthetic_features(4, 6, 8, 0.3, 4);
        let cfg = holdout_cfg(2, 2, None);
        let a = partition_run(&fs, &cfg, 0).unwrap();
        let b = partition_run(&fs, &cfg, 1).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn identical_seed_reproduces_bit_identical_scores() {
        let fs = synthetic_features(5, 8, 16, 0.4, 5);
        let cfg = holdout_cfg(3, 4, Some(CombineRule::Mean));
        let a = run_protocol(&fs, &cfg).unwrap();
        let b = run_protocol(&fs, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            let bits = |v: &[f64]| v.iter().map(|d| d.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&x.genuine), bits(&y.genuine));
            assert_eq!(bits(&x.impostor), bits(&y.impostor));
        }
    }

    #[test]
    fn insufficient_samples_are_rejected() {
        let fs = synthetic_features(3, 4, 8, 0.3, 6);
        let cfg = holdout_cfg(4, 1, None);
        assert!(matches!(
            run_protocol(&fs, &cfg),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn session_split_runs_twice_and_swaps_sides() {
        let fs = synthetic_features(4, 8, 16, 0.3, 7);
        let cfg = ProtocolConfig {
            protocol: Protocol::SessionSplit,
            templates_per_subject: 0,
            repetitions: 10, // ignored: session split is exactly two runs
            fusion: None,
            rng_seed: 1,
        };
        assert_eq!(cfg.effective_runs(), 2);
        let p0 = partition_run(&fs, &cfg, 0).unwrap();
        let p1 = partition_run(&fs, &cfg, 1).unwrap();
        assert_eq!(p0[0].template_idx, p1[0].probe_idx);
        assert_eq!(p0[0].probe_idx, p1[0].template_idx);
        let sets = run_protocol(&fs, &cfg).unwrap();
        assert_eq!(sets.len(), 2);
        // 4 subjects x 4 probes genuine, x3 others impostor
        assert_eq!(sets[0].genuine.len(), 16);
        assert_eq!(sets[0].impostor.len(), 48);
    }

    #[test]
    fn missing_session_is_reported() {
        let mut fs = FeatureSet::default();
        let fv = FeatureVector::from_bins(vec![1.0], "t");
        fs.insert("s000", 1, 0, fv.clone());
        fs.insert("s000", 1, 1, fv.clone());
        fs.finalize();
        let cfg = ProtocolConfig {
            protocol: Protocol::SessionSplit,
            templates_per_subject: 0,
            repetitions: 2,
            fusion: None,
            rng_seed: 1,
        };
        assert!(matches!(
            run_protocol(&fs, &cfg),
            Err(Error::MissingSession { session: 2, .. })
        ));
    }

    #[test]
    fn clean_synthetic_data_reaches_perfect_rank1() {
        let fs = synthetic_features(6, 8, 16, 0.05, 8);
        let outcomes = evaluate_runs(&fs, &holdout_cfg(3, 2, None)).unwrap();
        for o in &outcomes {
            assert_eq!(o.rank1_percent, 100.0);
            assert_eq!(*o.cmc.last().unwrap(), 1.0);
            assert!(o.cmc.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn summarize_keeps_the_gar_identity_per_run() {
        let fs = synthetic_features(6, 8, 16, 0.8, 9);
        let outcomes = evaluate_runs(&fs, &holdout_cfg(3, 5, None)).unwrap();
        let (per_run, report) = summarize(&outcomes).unwrap();
        for r in &per_run {
            assert_eq!(r.gar_at_eer, 100.0 - r.eer);
            assert!(r.min_hter <= r.eer + 1e-12);
        }
        assert_eq!(report.runs, 5);
        assert!((report.eer.mean + report.gar_at_eer.mean - 100.0).abs() < 1e-9);
    }
}
