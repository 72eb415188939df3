//! Filter bank learning: patch sampling, principal-component whitening and
//! symmetric fixed-point independent component analysis with the tanh
//! contrast. The learned unmixing rows, mapped back through the whitening
//! projection and reshaped, become the BSIF kernels.

use crate::descriptors::FilterBank;
use crate::error::{Error, Result};
use crate::linalg::{sym_decorrelate, sym_eigen, Mat};
use crate::raster::{GrayImage, Kernel};
use crate::rng::SplitMix64;

/// Mean-centered image patches, one column per patch.
#[derive(Debug, Clone)]
pub struct PatchMatrix {
    /// side * side
    pub dim: usize,
    pub count: usize,
    /// Row-major `dim x count`: row = pixel position, column = patch.
    pub data: Mat,
}

/// Draws `count` uniformly random fully-interior square patches from the
/// corpus, flattens them row-major, removes each patch's own mean, then
/// removes the global scalar mean. Image choice and patch position both
/// come from the seeded stream, so the matrix replays exactly.
pub fn sample_patches(
    corpus: &[GrayImage],
    side: usize,
    count: usize,
    seed: u64,
) -> Result<PatchMatrix> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if count == 0 {
        return Err(Error::InvalidParams("patch count must be >= 1".to_string()));
    }
    for img in corpus {
        if img.width() < side || img.height() < side {
            return Err(Error::ImageTooSmall {
                width: img.width(),
                height: img.height(),
                margin: side,
            });
        }
    }
    let dim = side * side;
    let mut rng = SplitMix64::new(seed);
    let mut data = Mat::zeros(dim, count);
    let mut patch = vec![0.0f64; dim];
    for c in 0..count {
        let img = &corpus[rng.below(corpus.len())];
        let x0 = rng.below(img.width() - side + 1);
        let y0 = rng.below(img.height() - side + 1);
        let mut idx = 0;
        for dy in 0..side {
            for dx in 0..side {
                patch[idx] = img.getf(x0 + dx, y0 + dy);
                idx += 1;
            }
        }
        let mean = patch.iter().sum::<f64>() / dim as f64;
        for (r, v) in patch.iter().enumerate() {
            data[(r, c)] = v - mean;
        }
    }
    // global scalar mean; ~0 already after per-patch centering
    let total: f64 = data.data().iter().sum();
    let global = total / (dim * count) as f64;
    for r in 0..dim {
        for v in data.row_mut(r) {
            *v -= global;
        }
    }
    Ok(PatchMatrix { dim, count, data })
}

/// Principal-component whitening transform.
#[derive(Debug, Clone)]
pub struct Whitener {
    /// `k x dim` projection: `lambda^(-1/2) * E^T` rows.
    pub projection: Mat,
    /// The k retained covariance eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

/// Eigendecomposes the sample covariance (n-1 normalization), keeps the top
/// `k` components, and rescales so the projected data has identity
/// covariance. Fails when fewer than `k` eigenvalues exceed 1e-10.
pub fn whiten(patches: &PatchMatrix, k: usize) -> Result<(Whitener, Mat)> {
    if k == 0 || k > patches.dim {
        return Err(Error::InvalidParams(format!(
            "whitening needs 1 <= k <= dim, got k = {k}, dim = {}",
            patches.dim
        )));
    }
    if patches.count < 2 {
        return Err(Error::InvalidParams(
            "whitening needs at least two patches".to_string(),
        ));
    }
    let x = &patches.data;
    let mut cov = x.matmul(&x.transpose());
    cov.scale(1.0 / (patches.count as f64 - 1.0));
    let (vals, vecs) = sym_eigen(&cov);
    let usable = vals.iter().take_while(|&&v| v > 1e-10).count();
    if usable < k {
        return Err(Error::RankDeficient {
            requested: k,
            found: usable,
        });
    }
    let mut projection = Mat::zeros(k, patches.dim);
    for (i, &val) in vals.iter().enumerate().take(k) {
        let f = 1.0 / val.sqrt();
        for (dst, src) in projection.row_mut(i).iter_mut().zip(vecs.row(i)) {
            *dst = f * src;
        }
    }
    let whitened = projection.matmul(x);
    Ok((
        Whitener {
            projection,
            eigenvalues: vals[..k].to_vec(),
        },
        whitened,
    ))
}

/// Result of the fixed-point iteration.
#[derive(Debug, Clone)]
pub struct IcaResult {
    /// `k x k` unmixing matrix with orthonormal rows.
    pub unmixing: Mat,
    pub converged: bool,
    pub iterations: usize,
    /// Final maximum row-direction change.
    pub delta: f64,
}

/// Symmetric (parallel) FastICA with contrast `g(u) = tanh(u)` on whitened
/// data (`k x n`). The unmixing matrix starts as seeded Gaussian noise,
/// is re-orthonormalized by symmetric decorrelation every step, and
/// iteration stops when the largest row-direction change drops below `tol`.
/// Hitting `max_iter` returns the best iterate with `converged = false` —
/// a warning condition, not an error.
pub fn fast_ica(
    whitened: &Mat,
    k: usize,
    seed: u64,
    max_iter: usize,
    tol: f64,
) -> Result<IcaResult> {
    if whitened.rows != k {
        return Err(Error::DimensionMismatch(format!(
            "whitened data has {} rows, expected k = {k}",
            whitened.rows
        )));
    }
    let n = whitened.cols;
    if n == 0 {
        return Err(Error::InvalidParams("no samples to analyze".to_string()));
    }
    let mut rng = SplitMix64::new(seed);
    let mut w = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            w[(i, j)] = rng.gauss();
        }
    }
    let mut w = sym_decorrelate(&w);

    let mut converged = false;
    let mut iterations = 0;
    let mut delta = f64::INFINITY;
    for iter in 0..max_iter {
        iterations = iter + 1;
        // y = w * z, per component: w+ = E[z g(y)] - E[g'(y)] w
        let y = w.matmul(whitened);
        let mut w_new = Mat::zeros(k, k);
        for comp in 0..k {
            let mut gmean = 0.0;
            let mut acc = vec![0.0f64; k];
            let yrow = y.row(comp);
            for (s, &yv) in yrow.iter().enumerate() {
                let g = yv.tanh();
                gmean += 1.0 - g * g;
                for (a, slot) in acc.iter_mut().enumerate() {
                    *slot += whitened[(a, s)] * g;
                }
            }
            gmean /= n as f64;
            for a in 0..k {
                w_new[(comp, a)] = acc[a] / n as f64 - gmean * w[(comp, a)];
            }
        }
        let w_next = sym_decorrelate(&w_new);
        // direction change ignoring sign
        delta = 0.0;
        for i in 0..k {
            let dot: f64 = w_next
                .row(i)
                .iter()
                .zip(w.row(i))
                .map(|(a, b)| a * b)
                .sum();
            delta = delta.max((1.0 - dot.abs()).abs());
        }
        w = w_next;
        if delta < tol {
            converged = true;
            break;
        }
    }
    Ok(IcaResult {
        unmixing: w,
        converged,
        iterations,
        delta,
    })
}

/// Maps unmixing rows back through the whitening projection and reshapes
/// each row into a square kernel; kernel order follows row order, least
/// significant bit first.
pub fn build_bank(whitener: &Whitener, unmixing: &Mat, side: usize) -> Result<FilterBank> {
    let k = unmixing.rows;
    if unmixing.cols != k || whitener.projection.rows != k {
        return Err(Error::DimensionMismatch(format!(
            "unmixing is {}x{}, projection has {} rows; need k x k and k x dim",
            unmixing.rows, unmixing.cols, whitener.projection.rows
        )));
    }
    if whitener.projection.cols != side * side {
        return Err(Error::DimensionMismatch(format!(
            "projection dim {} does not match side {side}",
            whitener.projection.cols
        )));
    }
    let filters = unmixing.matmul(&whitener.projection);
    let kernels = (0..k)
        .map(|i| Kernel::new(side, filters.row(i).to_vec()))
        .collect::<Result<Vec<_>>>()?;
    FilterBank::new(kernels)
}

/// Full pipeline: sample patches, whiten, run FastICA, assemble the bank.
pub struct LearnOutcome {
    pub bank: FilterBank,
    pub ica: IcaResult,
}

pub fn learn_bank(
    corpus: &[GrayImage],
    k: usize,
    side: usize,
    patch_count: usize,
    seed: u64,
) -> Result<LearnOutcome> {
    if patch_count < 10 * k {
        return Err(Error::InvalidParams(format!(
            "learning {k} filters needs at least {} patches for over-determination, got {patch_count}",
            10 * k
        )));
    }
    let patches = sample_patches(corpus, side, patch_count, seed)?;
    let (whitener, whitened) = whiten(&patches, k)?;
    let ica = fast_ica(&whitened, k, seed ^ 0xA5A5_5A5A_DEAD_BEEF, 200, 1e-6)?;
    let bank = build_bank(&whitener, &ica.unmixing, side)?;
    Ok(LearnOutcome { bank, ica })
}
