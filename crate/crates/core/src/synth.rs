//! Deterministic synthetic test images.

use crate::image::Image;
use crate::rng::SplitMix64;
use crate::sampling::SpectralMask;
use crate::transforms::{idct2, Spectrum};

/// Image with a power-law DCT spectrum around mid-gray, a stand-in for
/// natural photographs: coefficient (u, v) has standard deviation
/// `A / (1 + √(u² + v²))^1.5`.
pub fn natural_image(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = SplitMix64::new(seed);
    let n = (width * height) as f64;
    let mut spec = Spectrum::zeros(width, height).expect("nonzero grid");
    // amplitude chosen so pixel std is a few tens of gray levels
    let amp = 12.0 * n.sqrt();
    for v in 0..height {
        for u in 0..width {
            let r = ((u * u + v * v) as f64).sqrt();
            spec.set(u, v, amp * rng.normal() / (1.0 + r).powf(1.5));
        }
    }
    spec.set(0, 0, 128.0 * n.sqrt());
    idct2(&spec)
}

/// Image whose spectrum has exactly `k` nonzero coefficients at uniformly
/// drawn positions. Returns the image and its spectrum.
pub fn sparse_image(
    width: usize,
    height: usize,
    k: usize,
    amplitude: f64,
    seed: u64,
) -> (Image, Spectrum) {
    let mut rng = SplitMix64::new(seed);
    let n = width * height;
    let mut spec = Spectrum::zeros(width, height).expect("nonzero grid");
    for idx in rng.sample_indices(n, k.min(n)) {
        spec.coeffs_mut()[idx] = random_coefficient(&mut rng, amplitude);
    }
    (idct2(&spec), spec)
}

/// Image with `k` nonzero coefficients drawn inside `mask`.
pub fn masked_sparse_image(
    mask: &SpectralMask,
    k: usize,
    amplitude: f64,
    seed: u64,
) -> (Image, Spectrum) {
    let mut rng = SplitMix64::new(seed);
    let support = mask.indices();
    let mut spec = Spectrum::zeros(mask.width(), mask.height()).expect("nonzero grid");
    for pick in rng.sample_indices(support.len(), k.min(support.len())) {
        spec.coeffs_mut()[support[pick]] = random_coefficient(&mut rng, amplitude);
    }
    (idct2(&spec), spec)
}

// magnitude in [amplitude/2, amplitude), random sign
fn random_coefficient(rng: &mut SplitMix64, amplitude: f64) -> f64 {
    let mag = amplitude * (0.5 + 0.5 * rng.next_f64());
    if rng.below(2) == 0 {
        mag
    } else {
        -mag
    }
}
