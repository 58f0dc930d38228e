//! Sparse image sampling toolkit.
//!
//! The crate covers the whole random-sampling / band-limited-reconstruction
//! pipeline:
//!
//! * [`image`]: grayscale rasters, RMSE, PGM I/O
//! * [`transforms`]: orthonormal 2D DCT (fast path and direct oracle) and an
//!   8×8 block quantization model standing in for baseline JPEG
//! * [`sparsity`]: top-K approximation and sparsity measured at JPEG-matched
//!   fidelity
//! * [`sampling`]: seeded random pixel sampling and spectral support masks
//! * [`reconstruct`]: Gerchberg–Papoulis band-limited reconstruction, a dense
//!   least-squares oracle and an ISTA L1 baseline
//! * [`bounds`]: dimensionality-reduction bound curves and published fixtures
//! * [`subband`]: 1D sub-band sampling demonstration
//! * [`rng`]: the frozen SplitMix64 generator every seeded routine uses
//! * [`synth`]: deterministic synthetic test images

pub mod bounds;
pub mod error;
pub mod image;
pub mod reconstruct;
pub mod rng;
pub mod sampling;
pub mod sparsity;
pub mod subband;
pub mod synth;
pub mod transforms;

pub use error::{Error, Result};
pub use image::Image;
pub use transforms::Spectrum;
