//! Command definitions, validation, and execution.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use veintex::descriptors::{
    FilterBank, LbpParams, LbpTopology, LdpParams, LpqParams, LtpParams, LtpSplit,
};
use veintex::error::Error;
use veintex::evaluation::{
    evaluate_runs, mean_cmc, roc, summarize, IndicatorReport, Protocol, ProtocolConfig,
    RunIndicators, ScoreSet,
};
use veintex::features::FeatureNorm;
use veintex::fusion::CombineRule;
use veintex::manifest::Manifest;
use veintex::pipeline::{extract_manifest, feature_set_from_manifest, Descriptor};

#[derive(Parser)]
#[command(
    name = "veintex",
    version,
    about = "Vein-texture biometrics: descriptors, fusion, matching, evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Extract one feature vector per manifest sample into a CSV file.
    Extract(ExtractArgs),
    /// Run a full evaluation protocol and emit report.json, roc.csv, cmc.csv.
    Evaluate(EvaluateArgs),
    /// Learn a BSIF filter bank from an image corpus directory.
    LearnFilters(LearnArgs),
    /// Generate a deterministic synthetic vein-texture dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DescriptorKind {
    Lbp,
    Ltp,
    Ldp,
    Lpq,
    Bsif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TopologyArg {
    Circle,
    Square3x3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LtpSplitArg {
    /// Upper and lower histograms concatenated (512 bins).
    Concat,
    /// Upper histogram only (256 bins).
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    None,
    Mean,
    Sqrt,
    Product,
    Absdiff,
}

impl FusionArg {
    fn rule(self) -> Option<CombineRule> {
        match self {
            FusionArg::None => None,
            FusionArg::Mean => Some(CombineRule::Mean),
            FusionArg::Sqrt => Some(CombineRule::Sqrt),
            FusionArg::Product => Some(CombineRule::Product),
            FusionArg::Absdiff => Some(CombineRule::AbsDiff),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Holdout,
    SessionSplit,
}

/// Descriptor selection flags shared by `extract` and `evaluate`.
#[derive(Args, Debug, Clone)]
pub struct DescriptorArgs {
    #[arg(long, value_enum)]
    pub descriptor: DescriptorKind,

    /// LBP sample count (4..=8).
    #[arg(long, default_value_t = 8)]
    pub lbp_neighbors: usize,
    /// LBP circle radius in pixels.
    #[arg(long, default_value_t = 1.0)]
    pub lbp_radius: f64,
    #[arg(long, value_enum, default_value_t = TopologyArg::Circle)]
    pub lbp_topology: TopologyArg,

    /// LTP dead-zone half width.
    #[arg(long, default_value_t = 5.0)]
    pub ltp_threshold: f64,
    #[arg(long, value_enum, default_value_t = LtpSplitArg::Concat)]
    pub ltp_split: LtpSplitArg,

    /// LDP active bit count (1..=8).
    #[arg(long, default_value_t = 3)]
    pub ldp_bits: usize,

    /// LPQ window side (odd, >= 3).
    #[arg(long, default_value_t = 7)]
    pub lpq_window: usize,

    /// BSIF filter bank file (required for --descriptor bsif).
    #[arg(long)]
    pub filter_bank: Option<PathBuf>,

    /// Center each feature vector at zero mean instead of sum-to-one.
    #[arg(long, default_value_t = false)]
    pub zero_mean: bool,
}

impl DescriptorArgs {
    fn build(&self) -> Result<Descriptor, Error> {
        let descriptor = match self.descriptor {
            DescriptorKind::Lbp => Descriptor::Lbp(LbpParams {
                neighbors: self.lbp_neighbors,
                radius: self.lbp_radius,
                topology: match self.lbp_topology {
                    TopologyArg::Circle => LbpTopology::Circle,
                    TopologyArg::Square3x3 => LbpTopology::Square3x3,
                },
            }),
            DescriptorKind::Ltp => Descriptor::Ltp(LtpParams {
                threshold: self.ltp_threshold,
                split_mode: match self.ltp_split {
                    LtpSplitArg::Concat => LtpSplit::ConcatUpperLower,
                    LtpSplitArg::Upper => LtpSplit::UpperOnly,
                },
            }),
            DescriptorKind::Ldp => Descriptor::Ldp(LdpParams {
                active_bits: self.ldp_bits,
            }),
            DescriptorKind::Lpq => Descriptor::Lpq(LpqParams {
                window: self.lpq_window,
            }),
            DescriptorKind::Bsif => {
                let path = self.filter_bank.as_ref().ok_or_else(|| {
                    Error::InvalidParams(
                        "--descriptor bsif requires --filter-bank <path>".to_string(),
                    )
                })?;
                Descriptor::Bsif(FilterBank::load(path)?)
            }
        };
        descriptor.validate()?;
        Ok(descriptor)
    }

    fn norm(&self) -> FeatureNorm {
        if self.zero_mean {
            FeatureNorm::ZeroMean
        } else {
            FeatureNorm::SumToOne
        }
    }
}

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Dataset manifest CSV.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
    /// Output feature CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Dataset manifest CSV.
    #[arg(long)]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub descriptor: DescriptorArgs,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Holdout)]
    pub protocol: ProtocolArg,
    /// Templates enrolled per subject (holdout).
    #[arg(long, default_value_t = 4)]
    pub templates: usize,
    /// Holdout repetitions (session split always runs twice).
    #[arg(long, default_value_t = 10)]
    pub repetitions: usize,
    #[arg(long, value_enum, default_value_t = FusionArg::None)]
    pub fusion: FusionArg,
    /// Partitioning seed; identical seeds replay identical experiments.
    #[arg(long)]
    pub seed: u64,
    /// Output directory for report.json, roc.csv, cmc.csv, run_meta.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct LearnArgs {
    /// Directory of training images (pgm, png, bmp).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Number of filters (1..=8).
    #[arg(long, default_value_t = 8)]
    pub count: usize,
    /// Kernel side in pixels (odd).
    #[arg(long, default_value_t = 17)]
    pub side: usize,
    /// Number of training patches.
    #[arg(long, default_value_t = 50_000)]
    pub patches: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output filter bank file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub subjects: usize,
    #[arg(long, default_value_t = 12)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub sessions: u32,
    #[arg(long, default_value_t = 128)]
    pub side: usize,
    #[arg(long, default_value_t = 6.0)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1.5)]
    pub jitter: f64,
    #[arg(long)]
    pub seed: u64,
}

/// Dispatches a parsed command, mapping validation failures to exit code 1
/// and runtime failures to exit code 2.
pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Extract(args) => cmd_extract(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::LearnFilters(args) => cmd_learn_filters(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e}");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

enum Failure {
    Validation(Error),
    Runtime(Error),
}

trait Phase<T> {
    fn validation(self) -> Result<T, Failure>;
    fn runtime(self) -> Result<T, Failure>;
}

impl<T> Phase<T> for Result<T, Error> {
    fn validation(self) -> Result<T, Failure> {
        self.map_err(Failure::Validation)
    }
    fn runtime(self) -> Result<T, Failure> {
        self.map_err(Failure::Runtime)
    }
}

fn cmd_extract(args: ExtractArgs) -> Result<(), Failure> {
    let manifest = Manifest::load(&args.manifest).validation()?;
    if manifest.is_empty() {
        return Err(Failure::Validation(Error::InvalidManifest {
            line: 1,
            detail: "manifest has no rows".to_string(),
        }));
    }
    let descriptor = args.descriptor.build().validation()?;
    let norm = args.descriptor.norm();

    let vectors = extract_manifest(&manifest, &descriptor, norm).runtime()?;
    let mut out = String::new();
    for (row, fv) in manifest.rows().iter().zip(&vectors) {
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.subject_id,
            row.session,
            row.sample_index,
            fv.to_csv_row()
        ));
    }
    write_file(&args.out, out.as_bytes()).runtime()?;
    eprintln!(
        "extracted {} feature vectors ({})",
        vectors.len(),
        descriptor.feature_tag()
    );
    Ok(())
}

/// Everything `evaluate` echoes into its report.
#[derive(Serialize)]
struct ConfigEcho {
    manifest: String,
    descriptor: String,
    fusion: String,
    protocol: String,
    templates_per_subject: usize,
    repetitions: usize,
    effective_runs: usize,
    zero_mean: bool,
    filter_bank: Option<String>,
    subjects: usize,
    samples: usize,
}

#[derive(Serialize)]
struct Report {
    config: ConfigEcho,
    seed: u64,
    indicators: IndicatorReport,
    per_run: Vec<RunIndicators>,
    warnings: Vec<String>,
}

fn validate_evaluate(
    args: &EvaluateArgs,
) -> Result<(Manifest, Descriptor, ProtocolConfig, Vec<String>), Error> {
    let manifest = Manifest::load(&args.manifest)?;
    if manifest.is_empty() {
        return Err(Error::InvalidManifest {
            line: 1,
            detail: "manifest has no rows".to_string(),
        });
    }
    let descriptor = args.descriptor.build()?;
    let cfg = ProtocolConfig {
        protocol: match args.protocol {
            ProtocolArg::Holdout => Protocol::Holdout,
            ProtocolArg::SessionSplit => Protocol::SessionSplit,
        },
        templates_per_subject: args.templates,
        repetitions: args.repetitions,
        fusion: args.fusion.rule(),
        rng_seed: args.seed,
    };
    let mut warnings = cfg.validate()?;

    // per-subject sample counts must satisfy the protocol before any
    // image is decoded
    for subject in manifest.subjects() {
        let rows: Vec<_> = manifest
            .rows()
            .iter()
            .filter(|r| r.subject_id == subject)
            .collect();
        match cfg.protocol {
            Protocol::Holdout => {
                let need = cfg.templates_per_subject + 1;
                if rows.len() < need {
                    return Err(Error::InsufficientSamples {
                        subject,
                        have: rows.len(),
                        need,
                    });
                }
                if cfg.fusion.is_some() {
                    let probes = rows.len() - cfg.templates_per_subject;
                    if cfg.templates_per_subject < 2 || probes < 2 {
                        return Err(Error::InvalidParams(format!(
                            "pairwise fusion needs >= 2 templates and >= 2 probes per subject; \
                             subject {subject} has {} templates / {probes} probes",
                            cfg.templates_per_subject
                        )));
                    }
                }
            }
            Protocol::SessionSplit => {
                for session in [1u32, 2] {
                    let count = rows.iter().filter(|r| r.session == session).count();
                    if count == 0 {
                        return Err(Error::MissingSession { subject, session });
                    }
                    if cfg.fusion.is_some() && count < 2 {
                        return Err(Error::InvalidParams(format!(
                            "pairwise fusion needs >= 2 samples per session; subject \
                             {subject} has {count} in session {session}"
                        )));
                    }
                }
            }
        }
    }
    if args.descriptor.zero_mean
        && !matches!(args.fusion, FusionArg::None | FusionArg::Mean)
    {
        return Err(Error::InvalidParams(
            "--zero-mean only combines with --fusion none or mean \
             (other rules need non-negative bins)"
                .to_string(),
        ));
    }
    if cfg.protocol == Protocol::SessionSplit && args.repetitions != 10 && args.repetitions != 2 {
        warnings.push(format!(
            "--repetitions {} has no effect under session-split",
            args.repetitions
        ));
    }
    Ok((manifest, descriptor, cfg, warnings))
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let (manifest, descriptor, cfg, warnings) = validate_evaluate(&args).validation()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }

    std::fs::create_dir_all(&args.out_dir)
        .map_err(Error::from)
        .runtime()?;
    let features = feature_set_from_manifest(&manifest, &descriptor, args.descriptor.norm())
        .runtime()?;
    let outcomes = evaluate_runs(&features, &cfg).runtime()?;
    let (per_run, indicators) = summarize(&outcomes).runtime()?;

    let report = Report {
        config: ConfigEcho {
            manifest: args.manifest.display().to_string(),
            descriptor: descriptor.feature_tag()
                + if args.descriptor.zero_mean { "-zm" } else { "" },
            fusion: match args.fusion.rule() {
                Some(rule) => rule.to_string(),
                None => "none".to_string(),
            },
            protocol: match cfg.protocol {
                Protocol::Holdout => "holdout".to_string(),
                Protocol::SessionSplit => "session_split".to_string(),
            },
            templates_per_subject: cfg.templates_per_subject,
            repetitions: cfg.repetitions,
            effective_runs: cfg.effective_runs(),
            zero_mean: args.descriptor.zero_mean,
            filter_bank: args
                .descriptor
                .filter_bank
                .as_ref()
                .map(|p| p.display().to_string()),
            subjects: manifest.subjects().len(),
            samples: manifest.len(),
        },
        seed: args.seed,
        indicators,
        per_run,
        warnings: warnings.clone(),
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write_file(&args.out_dir.join("report.json"), json.as_bytes()).runtime()?;
    write_file(
        &args.out_dir.join("roc.csv"),
        pooled_roc_csv(&outcomes.iter().map(|o| o.scores.clone()).collect::<Vec<_>>())
            .runtime()?
            .as_bytes(),
    )
    .runtime()?;
    write_file(
        &args.out_dir.join("cmc.csv"),
        cmc_csv(&mean_cmc(&outcomes)).as_bytes(),
    )
    .runtime()?;
    let meta = format!(
        "{{\n  \"timestamp_unix\": {},\n  \"tool_version\": \"{}\"\n}}\n",
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        env!("CARGO_PKG_VERSION"),
    );
    write_file(&args.out_dir.join("run_meta.json"), meta.as_bytes()).runtime()?;

    eprintln!(
        "evaluated {} runs: EER {:.2} +/- {:.2} %, Rank-1 {:.2} +/- {:.2} %",
        report.indicators.runs,
        report.indicators.eer.mean,
        report.indicators.eer.half_width,
        report.indicators.rank1.mean,
        report.indicators.rank1.half_width,
    );
    Ok(())
}

/// ROC of all runs' scores pooled into one set, as `threshold,far,frr` rows.
fn pooled_roc_csv(score_sets: &[ScoreSet]) -> Result<String, Error> {
    let pooled = ScoreSet {
        genuine: score_sets.iter().flat_map(|s| s.genuine.clone()).collect(),
        impostor: score_sets.iter().flat_map(|s| s.impostor.clone()).collect(),
        run_id: 0,
    };
    let points = roc(&pooled)?;
    let mut out = String::from("threshold,far,frr\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.far, p.frr));
    }
    Ok(out)
}

/// Mean identification rate per rank, as `rank,identification_rate` rows.
fn cmc_csv(cmc: &[f64]) -> String {
    let mut out = String::from("rank,identification_rate\n");
    for (i, rate) in cmc.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, rate));
    }
    out
}

fn cmd_learn_filters(args: LearnArgs) -> Result<(), Failure> {
    if args.count == 0 || args.count > 8 {
        return Err(Failure::Validation(Error::InvalidParams(format!(
            "--count must be 1..=8, got {}",
            args.count
        ))));
    }
    if args.side.is_multiple_of(2) || args.side == 0 {
        return Err(Failure::Validation(Error::InvalidParams(format!(
            "--side must be odd and positive, got {}",
            args.side
        ))));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.corpus)
        .map_err(Error::from)
        .validation()?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()),
                Some("pgm") | Some("png") | Some("bmp")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Failure::Validation(Error::EmptyCorpus));
    }

    let mut corpus = Vec::new();
    for p in &paths {
        match veintex::raster::load_image(p) {
            Ok(img) if img.width() >= args.side && img.height() >= args.side => corpus.push(img),
            Ok(_) => eprintln!("warning: {} is smaller than the kernel, skipped", p.display()),
            Err(e) => eprintln!("warning: skipping {}: {e}", p.display()),
        }
    }
    if corpus.is_empty() {
        return Err(Failure::Validation(Error::EmptyCorpus));
    }

    let outcome =
        veintex::bsif_learn::learn_bank(&corpus, args.count, args.side, args.patches, args.seed)
            .runtime()?;
    outcome.bank.save(&args.out).runtime()?;
    if outcome.ica.converged {
        eprintln!(
            "converged after {} iterations (delta {:.3e}); bank written to {}",
            outcome.ica.iterations,
            outcome.ica.delta,
            args.out.display()
        );
    } else {
        eprintln!(
            "warning: no convergence after {} iterations (delta {:.3e}); \
             best iterate written to {}",
            outcome.ica.iterations,
            outcome.ica.delta,
            args.out.display()
        );
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<(), Failure> {
    let cfg = veintex::synth::SynthConfig {
        subjects: args.subjects,
        samples_per_subject: args.samples,
        sessions: args.sessions,
        image_side: args.side,
        seed: args.seed,
        noise_sigma: args.noise_sigma,
        jitter: args.jitter,
    };
    cfg.validate().validation()?;
    let manifest = veintex::synth::generate(&cfg, &args.out).runtime()?;
    eprintln!(
        "wrote {} images + manifest.csv under {}",
        manifest.len(),
        args.out.display()
    );
    Ok(())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(())
}
