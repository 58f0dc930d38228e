//! Sub-band sampling of periodic multi-band signals.
//!
//! A real length-`n` signal whose DFT occupies a few disjoint bands (plus
//! their conjugate mirrors) is fully described by one complex number per
//! occupied bin. Each band is shifted to baseband by a complex exponential,
//! ideally low-passed to its width, and decimated to `hi − lo` complex
//! samples. The total budget is the band occupancy, however high the bands
//! sit.
//!
//! Everything runs on the discrete periodic model, so the ideal filters are
//! exact indicator multiplications in the DFT domain.

use std::f64::consts::TAU;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Out-of-band energy allowed before sampling is refused, relative to the
/// signal energy.
pub const ALIAS_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    values: Vec<f64>,
}

impl Signal1D {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("signal length must be even and >= 2, got {n}"),
            });
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Half-open DFT bin interval `[lo, hi)` on the non-negative frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Band {
    pub lo: usize,
    pub hi: usize,
}

impl Band {
    pub fn width(&self) -> usize {
        self.hi - self.lo
    }
}

/// Disjoint bands, sorted by `lo`. Valid bins are `0..=n/2`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BandSet {
    n: usize,
    bands: Vec<Band>,
}

impl BandSet {
    pub fn new(n: usize, bands: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let bad = |reason: String| Error::InvalidParameter {
            name: "bands",
            reason,
        };
        if n < 2 || !n.is_multiple_of(2) {
            return Err(bad(format!("signal length must be even and >= 2, got {n}")));
        }
        let mut bands: Vec<Band> = bands.into_iter().map(|(lo, hi)| Band { lo, hi }).collect();
        if bands.is_empty() {
            return Err(bad("no bands".into()));
        }
        bands.sort_by_key(|b| b.lo);
        for b in &bands {
            if b.lo >= b.hi {
                return Err(bad(format!("[{}, {}) is empty", b.lo, b.hi)));
            }
            if b.hi > n / 2 + 1 {
                return Err(bad(format!("[{}, {}) exceeds bin {}", b.lo, b.hi, n / 2)));
            }
        }
        for pair in bands.windows(2) {
            if pair[1].lo < pair[0].hi {
                return Err(bad(format!(
                    "[{}, {}) overlaps [{}, {})",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        Ok(Self { n, bands })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    /// Total occupancy Σ(hi − lo): the complex sample budget.
    pub fn total_width(&self) -> usize {
        self.bands.iter().map(Band::width).sum()
    }

    /// Highest occupied bin + 1.
    pub fn top(&self) -> usize {
        self.bands.last().map_or(0, |b| b.hi)
    }

    /// Occupancy indicator over all `n` bins, mirrors included.
    fn occupied(&self) -> Vec<bool> {
        let mut occ = vec![false; self.n];
        for b in &self.bands {
            for k in b.lo..b.hi {
                occ[k] = true;
                occ[(self.n - k) % self.n] = true;
            }
        }
        occ
    }
}

struct Ffts {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Ffts {
    fn new(planner: &mut FftPlanner<f64>, len: usize) -> Self {
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }
}

fn check_len(signal_len: usize, bands: &BandSet) -> Result<()> {
    if signal_len != bands.n() {
        return Err(Error::InvalidParameter {
            name: "bands",
            reason: format!("band set is for n = {}, signal has {signal_len}", bands.n()),
        });
    }
    Ok(())
}

fn is_self_conjugate(k: usize, n: usize) -> bool {
    k == 0 || 2 * k == n
}

/// Real signal whose spectrum lives on `bands` and their mirrors. In-band
/// amplitudes are complex normal draws (real on the DC and Nyquist bins).
pub fn make_multiband(bands: &BandSet, seed: u64) -> Result<Signal1D> {
    let n = bands.n();
    let mut rng = SplitMix64::new(seed);
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    for b in bands.bands() {
        for k in b.lo..b.hi {
            if is_self_conjugate(k, n) {
                spec[k] = Complex64::new(n as f64 * rng.normal(), 0.0);
            } else {
                let c = Complex64::new(rng.normal(), rng.normal()) * (n as f64 / 2.0);
                spec[k] = c;
                spec[n - k] = c.conj();
            }
        }
    }
    let fft = FftPlanner::new().plan_fft_inverse(n);
    fft.process(&mut spec);
    Signal1D::new(spec.iter().map(|c| c.re / n as f64).collect())
}

fn forward_spectrum(signal: &Signal1D) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = signal
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}

/// Energy outside the occupied bins (time-domain units, via Parseval).
pub fn out_of_band_energy(signal: &Signal1D, bands: &BandSet) -> Result<f64> {
    check_len(signal.len(), bands)?;
    let spec = forward_spectrum(signal);
    let occ = bands.occupied();
    let n = signal.len() as f64;
    Ok(spec
        .iter()
        .zip(&occ)
        .filter(|(_, &o)| !o)
        .map(|(c, _)| c.norm_sqr() / n)
        .sum())
}

/// Demodulates each band to baseband, low-passes it to its width and
/// decimates it to `hi − lo` complex samples. Samples are concatenated in
/// band order. Refuses signals with energy outside the bands.
pub fn subband_sample(signal: &Signal1D, bands: &BandSet) -> Result<Vec<Complex64>> {
    check_len(signal.len(), bands)?;
    let leaked = out_of_band_energy(signal, bands)?;
    let total = signal.energy();
    if leaked > ALIAS_TOLERANCE * total || (total == 0.0 && leaked > 0.0) {
        return Err(Error::Aliasing {
            leaked,
            fraction: if total > 0.0 { leaked / total } else { 1.0 },
        });
    }

    let n = signal.len();
    let mut planner = FftPlanner::new();
    let full = Ffts::new(&mut planner, n);
    let mut out = Vec::with_capacity(bands.total_width());

    for band in bands.bands() {
        let w = band.width();
        // shift bin `lo` to DC
        let mut z: Vec<Complex64> = signal
            .values()
            .iter()
            .enumerate()
            .map(|(t, &x)| {
                let phase = -TAU * ((band.lo * t) % n) as f64 / n as f64;
                x * Complex64::from_polar(1.0, phase)
            })
            .collect();
        full.forward.process(&mut z);
        // ideal low-pass to the band width
        let mut base: Vec<Complex64> = z[..w].to_vec();
        // decimate: sample the band-limited baseband signal at t_j = j n / w,
        // z(t_j) = (1/n) Σ_k Z[k] e^{2πi k j / w}
        let short = Ffts::new(&mut planner, w);
        short.inverse.process(&mut base);
        out.extend(base.into_iter().map(|c| c / n as f64));
    }
    Ok(out)
}

/// Re-modulates every band to its original position and synthesizes the
/// real signal; exact inverse of [`subband_sample`] on in-band signals.
pub fn subband_reconstruct(samples: &[Complex64], bands: &BandSet) -> Result<Signal1D> {
    if samples.len() != bands.total_width() {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: format!(
                "expected {} complex samples, got {}",
                bands.total_width(),
                samples.len()
            ),
        });
    }
    let n = bands.n();
    let mut planner = FftPlanner::new();
    let mut spec = vec![Complex64::new(0.0, 0.0); n];
    let mut offset = 0;
    for band in bands.bands() {
        let w = band.width();
        let mut chunk = samples[offset..offset + w].to_vec();
        offset += w;
        planner.plan_fft_forward(w).process(&mut chunk);
        for (k, c) in chunk.into_iter().enumerate() {
            let bin = band.lo + k;
            let value = c * (n as f64 / w as f64);
            if is_self_conjugate(bin, n) {
                spec[bin] = Complex64::new(value.re, 0.0);
            } else {
                spec[bin] = value;
                spec[n - bin] = value.conj();
            }
        }
    }
    planner.plan_fft_inverse(n).process(&mut spec);
    Signal1D::new(spec.iter().map(|c| c.re / n as f64).collect())
}

pub fn rmse(a: &Signal1D, b: &Signal1D) -> f64 {
    let sq: f64 = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    (sq / a.len() as f64).sqrt()
}

/// Sample accounting of one sub-band roundtrip.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubbandReport {
    pub n: usize,
    pub bands: Vec<Band>,
    pub complex_samples: usize,
    pub real_equivalent: usize,
    /// Real samples needed when the rate is set by the highest occupied
    /// bin: twice the baseband width `top`.
    pub highest_frequency_real_budget: usize,
    pub advantage: f64,
    pub roundtrip_rmse: f64,
}

/// Generates a signal on `bands`, samples it per band and reconstructs it.
pub fn subband_demo(bands: &BandSet, seed: u64) -> Result<SubbandReport> {
    let signal = make_multiband(bands, seed)?;
    let samples = subband_sample(&signal, bands)?;
    let back = subband_reconstruct(&samples, bands)?;
    let complex_samples = samples.len();
    let real_equivalent = 2 * complex_samples;
    let highest_frequency_real_budget = 2 * bands.top();
    Ok(SubbandReport {
        n: bands.n(),
        bands: bands.bands().to_vec(),
        complex_samples,
        real_equivalent,
        highest_frequency_real_budget,
        advantage: highest_frequency_real_budget as f64 / real_equivalent as f64,
        roundtrip_rmse: rmse(&signal, &back),
    })
}
