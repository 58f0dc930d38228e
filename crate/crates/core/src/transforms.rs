//! Orthonormal 2D DCT-II and the 8×8 block quantization model.
//!
//! The 1D kernel is
//!
//! ```text
//! X(u) = a(u) · Σ_m x(m) · cos(π (2m + 1) u / (2L)),   a(0) = √(1/L), a(u>0) = √(2/L)
//! ```
//!
//! applied along rows, then columns. With this normalization Parseval holds
//! exactly and the 8×8 case coincides with the baseline JPEG FDCT, so the
//! standard quantization tables apply to the coefficients as they are (the
//! conventional rescaling factor is 1).
//!
//! [`dct2`] runs through an FFT-backed plan; [`dct2_direct`] is the literal
//! O(N²) double sum and exists to check it.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{Dct2, Dct3, DctPlanner};

use crate::error::{Error, Result};
use crate::image::Image;

/// Real 2D DCT coefficients on the grid of the image they came from.
/// Index `(u, v)` lives at `v * width + u`: `u` horizontal, `v` vertical,
/// DC at `(0, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    coeffs: Vec<f64>,
}

impl Spectrum {
    pub fn new(width: usize, height: usize, coeffs: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || coeffs.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "coefficient count must equal width x height >= 1",
            });
        }
        Ok(Self {
            width,
            height,
            coeffs,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::new(width, height, vec![0.0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.coeffs[v * self.width + u]
    }

    pub fn set(&mut self, u: usize, v: usize, value: f64) {
        self.coeffs[v * self.width + u] = value;
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }
}

fn dct_scale(u: usize, len: usize) -> f64 {
    if u == 0 {
        (1.0 / len as f64).sqrt()
    } else {
        (2.0 / len as f64).sqrt()
    }
}

struct Axis {
    len: usize,
    forward: Arc<dyn Dct2<f64>>,
    inverse: Arc<dyn Dct3<f64>>,
    scale: Vec<f64>,
}

impl Axis {
    fn new(planner: &mut DctPlanner<f64>, len: usize) -> Self {
        Self {
            len,
            forward: planner.plan_dct2(len),
            inverse: planner.plan_dct3(len),
            scale: (0..len).map(|u| dct_scale(u, len)).collect(),
        }
    }

    fn scratch_len(&self) -> usize {
        self.forward
            .get_scratch_len()
            .max(self.inverse.get_scratch_len())
    }

    fn forward_rows(&self, data: &mut [f64], scratch: &mut [f64]) {
        for row in data.chunks_exact_mut(self.len) {
            self.forward.process_dct2_with_scratch(row, scratch);
            for (c, s) in row.iter_mut().zip(&self.scale) {
                *c *= s;
            }
        }
    }

    fn inverse_rows(&self, data: &mut [f64], scratch: &mut [f64]) {
        for row in data.chunks_exact_mut(self.len) {
            for (c, s) in row.iter_mut().zip(&self.scale) {
                *c *= s;
            }
            // the unnormalized DCT-III halves the DC term
            row[0] *= 2.0;
            self.inverse.process_dct3_with_scratch(row, scratch);
        }
    }
}

fn transpose(src: &[f64], width: usize, height: usize, dst: &mut [f64]) {
    for y in 0..height {
        for x in 0..width {
            dst[x * height + y] = src[y * width + x];
        }
    }
}

/// Reusable fast transform for one grid size. Iterative solvers build one
/// plan and call it thousands of times.
pub struct DctPlan {
    width: usize,
    height: usize,
    rows: Axis,
    cols: Axis,
}

impl std::fmt::Debug for DctPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DctPlan")
            .field("width", &self.width)
            .field("height", &self.height)
            .finish()
    }
}

impl DctPlan {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = DctPlanner::new();
        let rows = Axis::new(&mut planner, width);
        let cols = Axis::new(&mut planner, height);
        Self {
            width,
            height,
            rows,
            cols,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn scratch(&self) -> Vec<f64> {
        vec![0.0; self.rows.scratch_len().max(self.cols.scratch_len())]
    }

    /// Forward transform of a row-major `width × height` buffer, in place.
    pub fn forward_in_place(&self, data: &mut [f64]) {
        assert_eq!(data.len(), self.width * self.height);
        let mut scratch = self.scratch();
        let mut t = vec![0.0; data.len()];
        self.rows.forward_rows(data, &mut scratch);
        transpose(data, self.width, self.height, &mut t);
        self.cols.forward_rows(&mut t, &mut scratch);
        transpose(&t, self.height, self.width, data);
    }

    /// Inverse transform, in place.
    pub fn inverse_in_place(&self, data: &mut [f64]) {
        assert_eq!(data.len(), self.width * self.height);
        let mut scratch = self.scratch();
        let mut t = vec![0.0; data.len()];
        transpose(data, self.width, self.height, &mut t);
        self.cols.inverse_rows(&mut t, &mut scratch);
        transpose(&t, self.height, self.width, data);
        self.rows.inverse_rows(data, &mut scratch);
    }

    pub fn forward(&self, image: &Image) -> Result<Spectrum> {
        self.check(image.width(), image.height())?;
        let mut data = image.pixels().to_vec();
        self.forward_in_place(&mut data);
        Spectrum::new(self.width, self.height, data)
    }

    pub fn inverse(&self, spectrum: &Spectrum) -> Result<Image> {
        self.check(spectrum.width(), spectrum.height())?;
        let mut data = spectrum.coeffs().to_vec();
        self.inverse_in_place(&mut data);
        Image::new(self.width, self.height, data)
    }

    fn check(&self, width: usize, height: usize) -> Result<()> {
        if width == self.width && height == self.height {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_w: self.width,
                left_h: self.height,
                right_w: width,
                right_h: height,
            })
        }
    }
}

pub fn dct2(image: &Image) -> Spectrum {
    DctPlan::new(image.width(), image.height())
        .forward(image)
        .expect("plan built for this shape")
}

pub fn idct2(spectrum: &Spectrum) -> Image {
    DctPlan::new(spectrum.width(), spectrum.height())
        .inverse(spectrum)
        .expect("plan built for this shape")
}

/// Literal double-sum DCT-II. O(N·(W+H)) per coefficient pass; meant for
/// small grids and for checking [`dct2`].
pub fn dct2_direct(image: &Image) -> Spectrum {
    let (w, h) = (image.width(), image.height());
    let mut coeffs = vec![0.0; w * h];
    for v in 0..h {
        for u in 0..w {
            let mut acc = 0.0;
            for y in 0..h {
                let cy = (PI * (2 * y + 1) as f64 * v as f64 / (2 * h) as f64).cos();
                for x in 0..w {
                    let cx = (PI * (2 * x + 1) as f64 * u as f64 / (2 * w) as f64).cos();
                    acc += image.get(x, y) * cx * cy;
                }
            }
            coeffs[v * w + u] = dct_scale(u, w) * dct_scale(v, h) * acc;
        }
    }
    Spectrum {
        width: w,
        height: h,
        coeffs,
    }
}

/// Baseline JPEG luminance quantization table (natural row-major order,
/// rows = vertical frequency).
pub const STD_LUMINANCE_QUANT: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

pub const DEFAULT_JPEG_QUALITY: u32 = 75;

fn check_quality(quality: u32) -> Result<()> {
    if (1..=100).contains(&quality) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name: "quality",
            value: f64::from(quality),
            expected: "1..=100",
        })
    }
}

/// Quality-scaled quantization table (IJG scaling).
pub fn quant_table(quality: u32) -> Result<[u16; 64]> {
    check_quality(quality)?;
    let scale = if quality < 50 {
        5000 / quality
    } else {
        200 - 2 * quality
    };
    let mut table = [0u16; 64];
    for (q, &base) in table.iter_mut().zip(&STD_LUMINANCE_QUANT) {
        *q = ((u32::from(base) * scale + 50) / 100).clamp(1, 255) as u16;
    }
    Ok(table)
}

struct Block8 {
    // basis[u][m] = a(u) cos(π (2m+1) u / 16)
    basis: [[f64; 8]; 8],
}

impl Block8 {
    fn new() -> Self {
        let mut basis = [[0.0; 8]; 8];
        for (u, row) in basis.iter_mut().enumerate() {
            for (m, b) in row.iter_mut().enumerate() {
                *b = dct_scale(u, 8) * (PI * (2 * m + 1) as f64 * u as f64 / 16.0).cos();
            }
        }
        Self { basis }
    }

    fn forward(&self, block: &[f64; 64]) -> [f64; 64] {
        let mut tmp = [0.0; 64];
        for y in 0..8 {
            for u in 0..8 {
                tmp[y * 8 + u] = (0..8).map(|x| self.basis[u][x] * block[y * 8 + x]).sum();
            }
        }
        let mut out = [0.0; 64];
        for v in 0..8 {
            for u in 0..8 {
                out[v * 8 + u] = (0..8).map(|y| self.basis[v][y] * tmp[y * 8 + u]).sum();
            }
        }
        out
    }

    fn inverse(&self, coeffs: &[f64; 64]) -> [f64; 64] {
        let mut tmp = [0.0; 64];
        for y in 0..8 {
            for u in 0..8 {
                tmp[y * 8 + u] = (0..8).map(|v| self.basis[v][y] * coeffs[v * 8 + u]).sum();
            }
        }
        let mut out = [0.0; 64];
        for y in 0..8 {
            for x in 0..8 {
                out[y * 8 + x] = (0..8).map(|u| self.basis[u][x] * tmp[y * 8 + u]).sum();
            }
        }
        out
    }
}

/// Lossy 8×8 block-DCT quantization roundtrip: level shift by −128, forward
/// block DCT, divide by the quality-scaled luminance table, round half away
/// from zero, multiply back, inverse, shift +128. Edges are padded by
/// replication up to a multiple of 8 and the result is cropped back. No
/// clamping is applied to the output.
pub fn jpeg_model_roundtrip(image: &Image, quality: u32) -> Result<Image> {
    let table = quant_table(quality)?;
    let (w, h) = (image.width(), image.height());
    let bw = w.div_ceil(8);
    let bh = h.div_ceil(8);
    let dct = Block8::new();
    let mut out = vec![0.0; w * h];

    for by in 0..bh {
        for bx in 0..bw {
            let mut block = [0.0; 64];
            for j in 0..8 {
                for i in 0..8 {
                    let x = (bx * 8 + i).min(w - 1);
                    let y = (by * 8 + j).min(h - 1);
                    block[j * 8 + i] = image.get(x, y) - 128.0;
                }
            }
            let mut coeffs = dct.forward(&block);
            for (c, &q) in coeffs.iter_mut().zip(&table) {
                let q = f64::from(q);
                *c = (*c / q).round() * q;
            }
            let rec = dct.inverse(&coeffs);
            for j in 0..8 {
                for i in 0..8 {
                    let x = bx * 8 + i;
                    let y = by * 8 + j;
                    if x < w && y < h {
                        out[y * w + x] = rec[j * 8 + i] + 128.0;
                    }
                }
            }
        }
    }
    Image::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::rmse;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = SplitMix64::new(seed);
        Image::from_fn(w, h, |_, _| 255.0 * rng.next_f64()).unwrap()
    }

    fn energy(img: &Image) -> f64 {
        img.pixels().iter().map(|p| p * p).sum()
    }

    #[test]
    fn constant_image_has_only_dc() {
        for (w, h) in [(1, 1), (4, 4), (8, 5), (7, 3)] {
            let img = Image::filled(w, h, 3.5).unwrap();
            for s in [dct2(&img), dct2_direct(&img)] {
                assert!((s.get(0, 0) - 3.5 * ((w * h) as f64).sqrt()).abs() < 1e-10);
                for (i, c) in s.coeffs().iter().enumerate().skip(1) {
                    assert!(c.abs() < 1e-10, "coeff {i} = {c}");
                }
            }
        }
    }

    #[test]
    fn one_by_one_is_identity() {
        let img = Image::new(1, 1, vec![42.0]).unwrap();
        assert_eq!(dct2_direct(&img).coeffs(), &[42.0]);
        assert!((dct2(&img).coeffs()[0] - 42.0).abs() < 1e-12);
        assert!((idct2(&dct2(&img)).pixels()[0] - 42.0).abs() < 1e-12);
    }

    #[test]
    fn dc_only_inverse_is_constant_one() {
        let (w, h) = (6, 4);
        let mut s = Spectrum::zeros(w, h).unwrap();
        s.set(0, 0, ((w * h) as f64).sqrt());
        for p in idct2(&s).pixels() {
            assert!((p - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_horizontal_basis_function() {
        let mut s = Spectrum::zeros(4, 4).unwrap();
        s.set(1, 0, 1.0);
        let img = idct2(&s);
        let a0 = 0.5; // a(0) along the vertical axis, L = 4
        let a1 = (2.0f64 / 4.0).sqrt();
        for y in 0..4 {
            for x in 0..4 {
                let expected = a0 * a1 * (PI * (2 * x + 1) as f64 / 8.0).cos();
                assert!((img.get(x, y) - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fast_matches_direct_on_random_images() {
        let mut rng = SplitMix64::new(2024);
        for trial in 0..50 {
            let w = 4 + rng.below(13) as usize;
            let h = 4 + rng.below(13) as usize;
            let img = random_image(w, h, trial);
            let fast = dct2(&img);
            let slow = dct2_direct(&img);
            for (a, b) in fast.coeffs().iter().zip(slow.coeffs()) {
                assert!((a - b).abs() < 1e-10, "{w}x{h}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn roundtrip_sixteen() {
        let img = random_image(16, 16, 7);
        let back = idct2(&dct2(&img));
        let max = img
            .pixels()
            .iter()
            .zip(back.pixels())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(max < 1e-9);
    }

    #[test]
    fn parseval_eight() {
        let img = random_image(8, 8, 99);
        let e = energy(&img);
        assert!((dct2(&img).energy() - e).abs() <= 1e-9 * e);
    }

    #[test]
    fn plan_rejects_other_shapes() {
        let plan = DctPlan::new(4, 4);
        assert!(plan.forward(&Image::filled(4, 5, 0.0).unwrap()).is_err());
    }

    #[test]
    fn quality_fifty_uses_table_verbatim() {
        assert_eq!(quant_table(50).unwrap(), STD_LUMINANCE_QUANT);
    }

    #[test]
    fn quality_scaling_extremes() {
        assert!(quant_table(100).unwrap().iter().all(|&q| q == 1));
        assert!(quant_table(1).unwrap().iter().all(|&q| q == 255));
        // quality 75: scale 50, 16 -> 8, 11 -> 6 (floor of 5.5 + 0.5)
        let t = quant_table(75).unwrap();
        assert_eq!(t[0], 8);
        assert_eq!(t[1], 6);
        assert!(quant_table(0).is_err());
        assert!(quant_table(101).is_err());
    }

    #[test]
    fn constant_128_is_exact() {
        let img = Image::filled(13, 9, 128.0).unwrap();
        for q in [1, 50, 75, 100] {
            let out = jpeg_model_roundtrip(&img, q).unwrap();
            assert_eq!(rmse(&img, &out).unwrap(), 0.0);
        }
    }

    #[test]
    fn odd_sizes_are_cropped_back() {
        let img = random_image(11, 5, 3);
        let out = jpeg_model_roundtrip(&img, 90).unwrap();
        assert_eq!((out.width(), out.height()), (11, 5));
        assert!(rmse(&img, &out).unwrap() < 5.0);
    }

    #[test]
    fn rmse_non_increasing_in_quality() {
        let img = crate::synth::natural_image(64, 64, 5);
        let errs: Vec<f64> = [10, 25, 50, 75, 95]
            .iter()
            .map(|&q| rmse(&img, &jpeg_model_roundtrip(&img, q).unwrap()).unwrap())
            .collect();
        for pair in errs.windows(2) {
            assert!(pair[1] <= pair[0], "{errs:?}");
        }
    }

    proptest! {
        #[test]
        fn linearity(seed_a: u64, seed_b: u64, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let x = random_image(8, 6, seed_a);
            let y = random_image(8, 6, seed_b);
            let combo = Image::new(8, 6, x.pixels().iter().zip(y.pixels())
                .map(|(p, q)| alpha * p + beta * q).collect()).unwrap();
            let lhs = dct2(&combo);
            let (sx, sy) = (dct2(&x), dct2(&y));
            for i in 0..lhs.len() {
                let rhs = alpha * sx.coeffs()[i] + beta * sy.coeffs()[i];
                prop_assert!((lhs.coeffs()[i] - rhs).abs() < 1e-9);
            }
        }

        #[test]
        fn orthonormality(w in 1usize..20, h in 1usize..20, seed: u64) {
            let img = random_image(w, h, seed);
            let e = energy(&img);
            prop_assert!((dct2(&img).energy() - e).abs() <= 1e-9 * e.max(1.0));
        }
    }
}
