//! Top-K DCT approximation and sparsity at JPEG-matched fidelity.
//!
//! Sparsity of an image is only meaningful at a stated approximation
//! quality. Here it is K/N where K is the smallest number of largest-magnitude
//! DCT coefficients whose reconstruction is at least as accurate (in RMSE) as
//! the block-quantization model at a given quality.
//!
//! The search never runs inverse transforms: coefficients are ranked once and
//! by Parseval the RMSE of the top-k reconstruction is `√(tail energy / N)`.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{rmse, Image};
use crate::transforms::{dct2, jpeg_model_roundtrip, Spectrum};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityReport {
    pub n_total: usize,
    pub k_required: usize,
    pub sparsity: f64,
    pub target_rmse: f64,
    pub achieved_rmse: f64,
    /// Quality whose block-model error set the target; `None` when the
    /// target was given explicitly.
    pub jpeg_quality_used: Option<u32>,
}

/// Coefficient indices by descending magnitude; ties go to the lower
/// row-major index.
pub fn rank_coefficients(spectrum: &Spectrum) -> Vec<usize> {
    let c = spectrum.coeffs();
    let mut order: Vec<usize> = (0..c.len()).collect();
    order.sort_by(|&a, &b| match c[b].abs().total_cmp(&c[a].abs()) {
        Ordering::Equal => a.cmp(&b),
        other => other,
    });
    order
}

/// Keeps the `k` largest-magnitude coefficients and zeroes the rest.
pub fn topk_approximation(spectrum: &Spectrum, k: usize) -> Result<Spectrum> {
    let n = spectrum.len();
    if k > n {
        return Err(Error::OutOfRange {
            name: "k",
            value: k as f64,
            expected: "0..=N",
        });
    }
    let mut out = Spectrum::zeros(spectrum.width(), spectrum.height())?;
    for &i in rank_coefficients(spectrum).iter().take(k) {
        out.coeffs_mut()[i] = spectrum.coeffs()[i];
    }
    Ok(out)
}

/// `tail[k]` = energy of all coefficients ranked at or after position `k`,
/// accumulated from the smallest upward.
fn tail_energies(spectrum: &Spectrum, order: &[usize]) -> Vec<f64> {
    let c = spectrum.coeffs();
    let mut tail = vec![0.0; order.len() + 1];
    for pos in (0..order.len()).rev() {
        let v = c[order[pos]];
        tail[pos] = tail[pos + 1] + v * v;
    }
    tail
}

/// RMSE of every top-k reconstruction, `k = 0..=N`, via Parseval.
pub fn topk_rmse_curve(spectrum: &Spectrum) -> Vec<f64> {
    let order = rank_coefficients(spectrum);
    let n = spectrum.len() as f64;
    tail_energies(spectrum, &order)
        .into_iter()
        .map(|e| (e / n).sqrt())
        .collect()
}

/// Smallest `k ≥ 1` whose top-k reconstruction reaches `target_rmse`.
pub fn sparsity_at_target(image: &Image, target_rmse: f64) -> Result<SparsityReport> {
    if target_rmse.is_nan() || target_rmse < 0.0 {
        return Err(Error::TargetUnreachable {
            target: target_rmse,
            floor: 0.0,
        });
    }
    let spectrum = dct2(image);
    let curve = topk_rmse_curve(&spectrum);
    let n = image.len();
    if curve[n] > target_rmse {
        return Err(Error::TargetUnreachable {
            target: target_rmse,
            floor: curve[n],
        });
    }
    // curve is non-increasing in k: find the first k in 1..=n with curve[k] <= target
    let (mut lo, mut hi) = (1usize, n);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if curve[mid] <= target_rmse {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(SparsityReport {
        n_total: n,
        k_required: lo,
        sparsity: lo as f64 / n as f64,
        target_rmse,
        achieved_rmse: curve[lo],
        jpeg_quality_used: None,
    })
}

/// RMSE of the block-quantization model at `quality`.
pub fn jpeg_target_rmse(image: &Image, quality: u32) -> Result<f64> {
    rmse(image, &jpeg_model_roundtrip(image, quality)?)
}

/// Sparsity at the fidelity of the block model at `quality`.
pub fn sparsity_at_jpeg_quality(image: &Image, quality: u32) -> Result<SparsityReport> {
    let target = jpeg_target_rmse(image, quality)?;
    let mut report = sparsity_at_target(image, target)?;
    report.jpeg_quality_used = Some(quality);
    Ok(report)
}
