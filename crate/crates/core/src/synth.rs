//! Deterministic synthetic vein-texture dataset generator.
//!
//! Each subject owns a fixed set of smooth dark curves (Catmull-Rom splines
//! through seeded control points) rendered on a mid-gray background. Each
//! sample re-renders the subject's curves under a small seeded affine jitter,
//! adds an illumination gradient and Gaussian noise; session 2 applies one
//! extra fixed perturbation on top. Everything derives from the config seed,
//! so regenerating a dataset reproduces every file byte for byte.

use crate::error::{Error, Result};
use crate::manifest::{Manifest, ManifestRow};
use crate::raster::{save_pgm, GrayImage};
use crate::rng::SplitMix64;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub subjects: usize,
    pub samples_per_subject: usize,
    /// 1 or 2; with 2 the samples split evenly between the sessions.
    pub sessions: u32,
    pub image_side: usize,
    pub seed: u64,
    /// Standard deviation of the additive Gaussian pixel noise.
    pub noise_sigma: f64,
    /// Magnitude of the per-sample geometric perturbation, in pixels.
    pub jitter: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            subjects: 20,
            samples_per_subject: 12,
            sessions: 2,
            image_side: 128,
            seed: 1,
            noise_sigma: 6.0,
            jitter: 1.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subjects < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 subjects, got {}",
                self.subjects
            )));
        }
        if self.samples_per_subject < 3 {
            return Err(Error::InvalidParams(format!(
                "need at least 3 samples per subject, got {}",
                self.samples_per_subject
            )));
        }
        if self.image_side < 64 {
            return Err(Error::InvalidParams(format!(
                "image side must be >= 64, got {}",
                self.image_side
            )));
        }
        if !(1..=2).contains(&self.sessions) {
            return Err(Error::InvalidParams(format!(
                "sessions must be 1 or 2, got {}",
                self.sessions
            )));
        }
        if self.noise_sigma < 0.0 || self.jitter < 0.0 {
            return Err(Error::InvalidParams(
                "noise_sigma and jitter must be non-negative".to_string(),
            ));
        }
        Ok(())
    }
}

const BACKGROUND: f64 = 165.0;
/// Fixed session-2 perturbation: translation, rotation, brightness shift.
const SESSION2_SHIFT: (f64, f64) = (2.0, -1.5);
const SESSION2_ROTATION: f64 = 0.02;
const SESSION2_BRIGHTNESS: f64 = 5.0;

#[derive(Debug, Clone, Copy)]
struct CurveSpec {
    /// Control points in unit coordinates.
    points: [(f64, f64); 6],
    thickness: f64,
    depth: f64,
}

/// A subject's identity: its curve set, derived from (seed, subject).
fn subject_curves(seed: u64, subject: usize) -> Vec<CurveSpec> {
    let mut rng = SplitMix64::derive(seed, subject as u64, 0);
    let count = 3 + rng.below(4); // 3..=6 curves
    (0..count)
        .map(|_| {
            // a gentle left-to-right or top-to-bottom wander
            let vertical = rng.below(2) == 1;
            let mut points = [(0.0, 0.0); 6];
            let wander = rng.range_f64(0.15, 0.8);
            let drift = rng.range_f64(-0.25, 0.25);
            for (i, p) in points.iter_mut().enumerate() {
                let t = i as f64 / 5.0;
                let along = 0.05 + 0.9 * t;
                let across =
                    wander + drift * t + rng.range_f64(-0.08, 0.08);
                *p = if vertical {
                    (across, along)
                } else {
                    (along, across)
                };
            }
            CurveSpec {
                points,
                thickness: rng.range_f64(1.2, 2.6),
                depth: rng.range_f64(55.0, 110.0),
            }
        })
        .collect()
}

/// Catmull-Rom interpolation over the control polygon at parameter
/// `t in [0, 1]` spanning all segments.
fn catmull_rom(points: &[(f64, f64)], t: f64) -> (f64, f64) {
    let segments = points.len() - 1;
    let scaled = t * segments as f64;
    let seg = (scaled.floor() as usize).min(segments - 1);
    let local = scaled - seg as f64;
    let p = |i: i64| -> (f64, f64) {
        let idx = i.clamp(0, points.len() as i64 - 1) as usize;
        points[idx]
    };
    let (p0, p1, p2, p3) = (
        p(seg as i64 - 1),
        p(seg as i64),
        p(seg as i64 + 1),
        p(seg as i64 + 2),
    );
    let blend = |a: f64, b: f64, c: f64, d: f64| -> f64 {
        let t2 = local * local;
        let t3 = t2 * local;
        0.5 * ((2.0 * b)
            + (-a + c) * local
            + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2
            + (-a + 3.0 * b - 3.0 * c + d) * t3)
    };
    (
        blend(p0.0, p1.0, p2.0, p3.0),
        blend(p0.1, p1.1, p2.1, p3.1),
    )
}

/// Renders one sample of one subject into an 8-bit raster.
fn render_sample(
    cfg: &SynthConfig,
    curves: &[CurveSpec],
    subject: usize,
    sample: usize,
    session: u32,
) -> GrayImage {
    let side = cfg.image_side;
    let mut rng = SplitMix64::derive(cfg.seed, subject as u64, sample as u64 + 1);

    // per-sample affine jitter of the curve geometry
    let mut dx = rng.range_f64(-cfg.jitter, cfg.jitter);
    let mut dy = rng.range_f64(-cfg.jitter, cfg.jitter);
    let mut rot = rng.range_f64(-0.012, 0.012) * cfg.jitter.max(0.0);
    let scale = 1.0 + rng.range_f64(-0.004, 0.004) * cfg.jitter.max(0.0);
    let mut brightness = 0.0;
    if session == 2 {
        dx += SESSION2_SHIFT.0;
        dy += SESSION2_SHIFT.1;
        rot += SESSION2_ROTATION;
        brightness += SESSION2_BRIGHTNESS;
    }
    let (sin_r, cos_r) = rot.sin_cos();
    let center = side as f64 / 2.0;
    let transform = |x: f64, y: f64| -> (f64, f64) {
        let (ux, uy) = (x * side as f64 - center, y * side as f64 - center);
        let (rx, ry) = (ux * cos_r - uy * sin_r, ux * sin_r + uy * cos_r);
        (rx * scale + center + dx, ry * scale + center + dy)
    };

    // accumulate ink in a real-valued canvas
    let mut canvas = vec![0.0f64; side * side];
    for curve in curves {
        let steps = side * 3;
        let sigma = curve.thickness / 1.6;
        let reach = (3.0 * sigma).ceil() as i64;
        let inv = 1.0 / (2.0 * sigma * sigma);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let (ux, uy) = catmull_rom(&curve.points, t);
            let (px, py) = transform(ux, uy);
            let (cx, cy) = (px.round() as i64, py.round() as i64);
            for gy in (cy - reach)..=(cy + reach) {
                if gy < 0 || gy >= side as i64 {
                    continue;
                }
                for gx in (cx - reach)..=(cx + reach) {
                    if gx < 0 || gx >= side as i64 {
                        continue;
                    }
                    let ddx = gx as f64 - px;
                    let ddy = gy as f64 - py;
                    let ink = curve.depth * (-(ddx * ddx + ddy * ddy) * inv).exp();
                    let slot = &mut canvas[gy as usize * side + gx as usize];
                    *slot = slot.max(ink);
                }
            }
        }
    }

    // illumination gradient plane, scaled by the noise knob so the
    // zero-noise zero-jitter config reproduces samples exactly
    let ga = rng.range_f64(-1.3, 1.3) * cfg.noise_sigma;
    let gb = rng.range_f64(-1.3, 1.3) * cfg.noise_sigma;

    let mut data = Vec::with_capacity(side * side);
    for y in 0..side {
        for x in 0..side {
            let illum = ga * (x as f64 / side as f64 - 0.5) + gb * (y as f64 / side as f64 - 0.5);
            let noise = if cfg.noise_sigma > 0.0 {
                cfg.noise_sigma * rng.gauss()
            } else {
                0.0
            };
            let v = BACKGROUND + brightness + illum - canvas[y * side + x] + noise;
            data.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(side, side, data).expect("dimensions are fixed")
}

/// Generates the image files plus `manifest.csv` under `out_dir` and
/// returns the manifest. Existing files are overwritten.
pub fn generate(cfg: &SynthConfig, out_dir: &Path) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut rows = Vec::with_capacity(cfg.subjects * cfg.samples_per_subject);
    for subject in 0..cfg.subjects {
        let curves = subject_curves(cfg.seed, subject);
        let subject_id = format!("s{:03}", subject + 1);
        for sample in 0..cfg.samples_per_subject {
            let session = if cfg.sessions == 2 && sample >= cfg.samples_per_subject / 2 {
                2
            } else {
                1
            };
            let img = render_sample(cfg, &curves, subject, sample, session);
            let name = format!("{subject_id}_se{session}_i{sample:02}.pgm");
            let path = out_dir.join(&name);
            save_pgm(&img, &path)?;
            rows.push(ManifestRow {
                subject_id: subject_id.clone(),
                session,
                sample_index: sample as u32,
                path,
                band: None,
            });
        }
    }
    let manifest = Manifest::new(rows)?;
    manifest.save(&out_dir.join("manifest.csv"), out_dir)?;
    Ok(manifest)
}

/// Renders the full dataset in memory without touching the filesystem.
/// Used by tests and by the fitness checks.
pub fn generate_in_memory(cfg: &SynthConfig) -> Result<Vec<(String, u32, u32, GrayImage)>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.subjects * cfg.samples_per_subject);
    for subject in 0..cfg.subjects {
        let curves = subject_curves(cfg.seed, subject);
        let subject_id = format!("s{:03}", subject + 1);
        for sample in 0..cfg.samples_per_subject {
            let session = if cfg.sessions == 2 && sample >= cfg.samples_per_subject / 2 {
                2
            } else {
                1
            };
            let img = render_sample(cfg, &curves, subject, sample, session);
            out.push((subject_id.clone(), session, sample as u32, img));
        }
    }
    Ok(out)
}
