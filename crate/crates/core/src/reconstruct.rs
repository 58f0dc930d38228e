//! Reconstruction of an image from sparse pixel samples.
//!
//! * [`gp_reconstruct`]: Gerchberg–Papoulis alternating projections between
//!   the band-limited subspace (DCT support = mask) and the affine set of
//!   images that agree with the samples.
//! * [`least_squares_oracle`]: the same band-limited model solved directly as
//!   a dense least-squares problem. Used to check GP on small grids.
//! * [`ista_l1`]: iterative shrinkage-thresholding over the full spectrum,
//!   the L1 (compressed sensing) baseline that does not know the support.
//!
//! ## GP stopping rule
//!
//! Iterate `k` computes the band-limited projection `y_k` of the previous
//! sample-consistent iterate `x_{k-1}`. The displacement recorded for
//! iteration `k` is
//!
//! ```text
//! d_k = √( Σ_{unsampled pixels} (y_k − x_{k−1})² / N )
//! ```
//!
//! taken before the samples are re-imposed. Sampled pixels do not move
//! between imposed iterates, so `d_k` equals the RMS of `x_k − x_{k−1}` over
//! all N pixels. Iteration stops once `d_k ≤ tol`. Both sets are convex, the
//! composed projection is nonexpansive, and `d_k` is non-increasing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::image::Image;
use crate::sampling::{SampleSet, SpectralMask};
use crate::transforms::{DctPlan, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpParams {
    pub max_iters: usize,
    /// RMS displacement threshold, gray levels.
    pub tol: f64,
    pub record_trace: bool,
}

impl Default for GpParams {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tol: 1e-3,
            record_trace: false,
        }
    }
}

impl GpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::OutOfRange {
                name: "max_iters",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if !(self.tol >= 0.0) {
            return Err(Error::OutOfRange {
                name: "tol",
                value: self.tol,
                expected: ">= 0",
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub displacement: f64,
    /// Share of the iterate's spectral energy inside the mask, before the
    /// band limitation.
    pub in_band_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub image: Image,
    pub iterations_run: usize,
    pub final_displacement: f64,
    pub converged: bool,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Per-iteration trace as CSV.
pub fn trace_to_csv(trace: &[TraceEntry]) -> String {
    let mut out = String::from("iteration,displacement,in_band_energy_fraction\n");
    for t in trace {
        out.push_str(&format!(
            "{},{},{}\n",
            t.iteration, t.displacement, t.in_band_fraction
        ));
    }
    out
}

fn check_grid(samples: &SampleSet, mask: &SpectralMask) -> Result<()> {
    if samples.width() == mask.width() && samples.height() == mask.height() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            left_w: samples.width(),
            left_h: samples.height(),
            right_w: mask.width(),
            right_h: mask.height(),
        })
    }
}

/// One Gerchberg–Papoulis operator bound to a sample set and a mask.
pub struct GerchbergPapoulis<'a> {
    plan: DctPlan,
    samples: &'a SampleSet,
    sample_idx: Vec<usize>,
    sampled: Vec<bool>,
    mask: &'a SpectralMask,
}

impl<'a> GerchbergPapoulis<'a> {
    pub fn new(samples: &'a SampleSet, mask: &'a SpectralMask) -> Result<Self> {
        check_grid(samples, mask)?;
        let sample_idx = samples.linear_indices();
        let mut sampled = vec![false; samples.width() * samples.height()];
        for &i in &sample_idx {
            sampled[i] = true;
        }
        Ok(Self {
            plan: DctPlan::new(samples.width(), samples.height()),
            samples,
            sample_idx,
            sampled,
            mask,
        })
    }

    /// Zero image with the known samples written in.
    pub fn initial(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.sampled.len()];
        self.impose(&mut x);
        x
    }

    fn impose(&self, x: &mut [f64]) {
        for (&i, &v) in self.sample_idx.iter().zip(self.samples.values()) {
            x[i] = v;
        }
    }

    /// Band-limits `x` through the mask, then re-imposes the samples, in
    /// place. Returns the displacement and the pre-projection in-band energy
    /// fraction.
    pub fn step(&self, x: &mut [f64]) -> (f64, f64) {
        let mut y = x.to_vec();
        self.plan.forward_in_place(&mut y);
        let mut total = 0.0;
        let mut in_band = 0.0;
        for (c, &keep) in y.iter_mut().zip(self.mask.included()) {
            let e = *c * *c;
            total += e;
            if keep {
                in_band += e;
            } else {
                *c = 0.0;
            }
        }
        self.plan.inverse_in_place(&mut y);

        let mut sq = 0.0;
        for ((xi, yi), &s) in x.iter_mut().zip(&y).zip(&self.sampled) {
            if !s {
                let d = yi - *xi;
                sq += d * d;
                *xi = *yi;
            }
        }
        let fraction = if total > 0.0 { in_band / total } else { 1.0 };
        ((sq / x.len() as f64).sqrt(), fraction)
    }
}

/// Gerchberg–Papoulis reconstruction from zero initialization, no relaxation.
pub fn gp_reconstruct(
    samples: &SampleSet,
    mask: &SpectralMask,
    params: &GpParams,
) -> Result<ReconstructionResult> {
    params.validate()?;
    let gp = GerchbergPapoulis::new(samples, mask)?;
    let mut x = gp.initial();
    let mut trace = params.record_trace.then(Vec::new);
    let mut displacement = f64::INFINITY;
    let mut iterations_run = 0;
    let mut converged = false;

    for iteration in 1..=params.max_iters {
        let (d, fraction) = gp.step(&mut x);
        displacement = d;
        iterations_run = iteration;
        if let Some(t) = trace.as_mut() {
            t.push(TraceEntry {
                iteration,
                displacement: d,
                in_band_fraction: fraction,
            });
        }
        if d <= params.tol {
            converged = true;
            break;
        }
    }

    Ok(ReconstructionResult {
        image: Image::new(samples.width(), samples.height(), x)?,
        iterations_run,
        final_displacement: displacement,
        converged,
        trace,
    })
}

/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

fn basis_table(len: usize) -> Vec<Vec<f64>> {
    // table[u][m] = a(u) cos(π (2m+1) u / 2L)
    (0..len)
        .map(|u| {
            let a = if u == 0 {
                (1.0 / len as f64).sqrt()
            } else {
                (2.0 / len as f64).sqrt()
            };
            (0..len)
                .map(|m| {
                    a * (std::f64::consts::PI * (2 * m + 1) as f64 * u as f64 / (2 * len) as f64)
                        .cos()
                })
                .collect()
        })
        .collect()
}

/// Dense least-squares fit of the in-mask coefficients to the samples,
/// solved by SVD. Fails when the mask has more coefficients than there are
/// samples, or when the sampled basis is numerically rank deficient.
pub fn least_squares_oracle(samples: &SampleSet, mask: &SpectralMask) -> Result<Image> {
    Ok(least_squares_spectrum(samples, mask)?.1)
}

/// [`least_squares_oracle`] returning the fitted spectrum as well.
pub fn least_squares_spectrum(
    samples: &SampleSet,
    mask: &SpectralMask,
) -> Result<(Spectrum, Image)> {
    check_grid(samples, mask)?;
    let (w, h) = (mask.width(), mask.height());
    let support = mask.indices();
    let k = support.len();
    let m = samples.len();
    if k > m {
        return Err(Error::Underdetermined {
            unknowns: k,
            equations: m,
        });
    }
    let bx = basis_table(w);
    let by = basis_table(h);
    let a = DMatrix::from_fn(m, k, |i, j| {
        let (x, y) = samples.positions()[i];
        let (u, v) = (support[j] % w, support[j] / w);
        bx[u][x] * by[v][y]
    });
    let b = DVector::from_column_slice(samples.values());

    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > smax * RANK_TOLERANCE)
        .count();
    if rank < k {
        return Err(Error::RankDeficient {
            rank,
            unknowns: k,
            condition: if smin > 0.0 {
                smax / smin
            } else {
                f64::INFINITY
            },
        });
    }
    let coef = svd
        .solve(&b, 0.0)
        .map_err(|reason| Error::InvalidParameter {
            name: "least squares",
            reason: reason.to_string(),
        })?;

    let mut spec = Spectrum::zeros(w, h)?;
    for (&idx, c) in support.iter().zip(coef.iter()) {
        spec.coeffs_mut()[idx] = *c;
    }
    let image = DctPlan::new(w, h).inverse(&spec)?;
    Ok((spec, image))
}

#[derive(Debug, Clone, PartialEq)]
pub struct IstaResult {
    pub image: Image,
    pub spectrum: Spectrum,
    /// `½‖b − D s‖² + λ‖s‖₁`, starting with the zero spectrum at index 0
    /// and one entry per iteration after it.
    pub objective: Vec<f64>,
}

pub fn soft_threshold(z: f64, lambda: f64) -> f64 {
    z.signum() * (z.abs() - lambda).max(0.0)
}

/// ISTA with unit step on the spectrum `s`:
/// `s ← soft(s + Dᵀ(b − D s), λ)`, where `D` samples the inverse DCT at the
/// sample positions. `D` is a row selection of an orthonormal matrix, so
/// ‖D‖ ≤ 1 and the unit step gives monotone descent.
pub fn ista_l1(samples: &SampleSet, lambda: f64, iters: usize) -> Result<IstaResult> {
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange {
            name: "lambda",
            value: lambda,
            expected: "> 0",
        });
    }
    if iters == 0 {
        return Err(Error::OutOfRange {
            name: "iters",
            value: 0.0,
            expected: ">= 1",
        });
    }
    let (w, h) = (samples.width(), samples.height());
    let plan = DctPlan::new(w, h);
    let idx = samples.linear_indices();
    let b = samples.values();
    let n = w * h;

    // residual b - D s and the objective at s
    let evaluate = |s: &[f64]| -> (Vec<f64>, f64) {
        let mut img = s.to_vec();
        plan.inverse_in_place(&mut img);
        let r: Vec<f64> = idx.iter().zip(b).map(|(&i, &bi)| bi - img[i]).collect();
        let fit = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
        let l1 = lambda * s.iter().map(|c| c.abs()).sum::<f64>();
        (r, fit + l1)
    };

    let mut s = vec![0.0; n];
    let (mut residual, obj0) = evaluate(&s);
    let mut objective = Vec::with_capacity(iters + 1);
    objective.push(obj0);

    for _ in 0..iters {
        let mut back = vec![0.0; n];
        for (&i, r) in idx.iter().zip(&residual) {
            back[i] = *r;
        }
        plan.forward_in_place(&mut back);
        for (si, gi) in s.iter_mut().zip(&back) {
            *si = soft_threshold(*si + gi, lambda);
        }
        let (r, obj) = evaluate(&s);
        residual = r;
        objective.push(obj);
    }

    let spectrum = Spectrum::new(w, h, s)?;
    let image = plan.inverse(&spectrum)?;
    Ok(IstaResult {
        image,
        spectrum,
        objective,
    })
}
