//! Random pixel sampling and spectral support masks.
//!
//! Sample positions come from a partial Fisher–Yates shuffle of the row-major
//! pixel indices driven by [`SplitMix64`], so a `(seed, M)` pair identifies a
//! sample set exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    width: usize,
    height: usize,
    positions: Vec<(usize, usize)>,
    values: Vec<f64>,
    seed: u64,
}

impl SampleSet {
    pub fn new(
        width: usize,
        height: usize,
        positions: Vec<(usize, usize)>,
        values: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let n = width * height;
        if n == 0 {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "grid must be nonempty",
            });
        }
        if positions.len() != values.len() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("{} positions but {} values", positions.len(), values.len()),
            });
        }
        if positions.is_empty() || positions.len() > n {
            return Err(Error::OutOfRange {
                name: "M",
                value: positions.len() as f64,
                expected: "1..=N",
            });
        }
        let mut seen = vec![false; n];
        for &(x, y) in &positions {
            if x >= width || y >= height {
                return Err(Error::InvalidParameter {
                    name: "positions",
                    reason: format!("({x}, {y}) outside {width}x{height}"),
                });
            }
            if std::mem::replace(&mut seen[y * width + x], true) {
                return Err(Error::InvalidParameter {
                    name: "positions",
                    reason: format!("({x}, {y}) sampled twice"),
                });
            }
        }
        Ok(Self {
            width,
            height,
            positions,
            values,
            seed,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of samples, M.
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Row-major pixel indices of the samples, parallel to [`Self::values`].
    pub fn linear_indices(&self) -> Vec<usize> {
        self.positions
            .iter()
            .map(|&(x, y)| y * self.width + x)
            .collect()
    }

    /// Sampled values on a black canvas.
    pub fn render(&self) -> Image {
        let mut px = vec![0.0; self.width * self.height];
        for (i, v) in self.linear_indices().into_iter().zip(&self.values) {
            px[i] = *v;
        }
        Image::new(self.width, self.height, px).expect("nonempty grid")
    }

    /// Text sidecar: a version line, `width height M seed`, then one
    /// `x y value` triple per line. Values use the shortest representation
    /// that parses back to the same `f64`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(16 * self.len() + 64);
        out.push_str("# rsblr-samples v1\n");
        let _ = writeln!(
            out,
            "{} {} {} {}",
            self.width,
            self.height,
            self.len(),
            self.seed
        );
        for (&(x, y), v) in self.positions.iter().zip(&self.values) {
            let _ = writeln!(out, "{x} {y} {v}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, reason: &str| Error::SampleFile {
            line,
            reason: reason.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, "# rsblr-samples v1")) => {}
            Some((n, _)) => return Err(err(n, "expected `# rsblr-samples v1`")),
            None => return Err(err(1, "empty file")),
        }
        let (hline, header) = lines.next().ok_or_else(|| err(2, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(err(hline, "header must be `width height M seed`"));
        }
        let width: usize = parse_field(fields[0], hline)?;
        let height: usize = parse_field(fields[1], hline)?;
        let m: usize = parse_field(fields[2], hline)?;
        let seed: u64 = parse_field(fields[3], hline)?;
        let mut positions = Vec::with_capacity(m);
        let mut values = Vec::with_capacity(m);
        for (n, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(n, "expected `x y value`"));
            }
            positions.push((parse_field(f[0], n)?, parse_field(f[1], n)?));
            values.push(parse_field(f[2], n)?);
        }
        if positions.len() != m {
            return Err(err(hline, "sample count does not match header"));
        }
        Self::new(width, height, positions, values, seed)
    }
}

fn parse_field<T: FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::SampleFile {
        line,
        reason: format!("cannot parse `{s}`"),
    })
}

fn check_budget(m: usize, n: usize) -> Result<()> {
    if m == 0 || m > n {
        Err(Error::OutOfRange {
            name: "M",
            value: m as f64,
            expected: "1..=N",
        })
    } else {
        Ok(())
    }
}

/// `m` distinct pixels drawn uniformly without replacement.
pub fn random_sample_set(image: &Image, m: usize, seed: u64) -> Result<SampleSet> {
    check_budget(m, image.len())?;
    let w = image.width();
    let mut rng = SplitMix64::new(seed);
    let idx = rng.sample_indices(image.len(), m);
    let positions = idx.iter().map(|&i| (i % w, i / w)).collect();
    let values = idx.iter().map(|&i| image.pixels()[i]).collect();
    Ok(SampleSet {
        width: w,
        height: image.height(),
        positions,
        values,
        seed,
    })
}

/// Boolean support over DCT indices `(u, v)`, stored at `v * width + u`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralMask {
    width: usize,
    height: usize,
    included: Vec<bool>,
}

impl SpectralMask {
    pub fn new(width: usize, height: usize, included: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 || included.len() != width * height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "mask length must equal width x height >= 1",
            });
        }
        if !included.iter().any(|&b| b) {
            return Err(Error::InvalidParameter {
                name: "mask",
                reason: "no spectral index included".into(),
            });
        }
        Ok(Self {
            width,
            height,
            included,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn included(&self) -> &[bool] {
        &self.included
    }

    pub fn contains(&self, u: usize, v: usize) -> bool {
        self.included[v * self.width + u]
    }

    pub fn count(&self) -> usize {
        self.included.iter().filter(|&&b| b).count()
    }

    /// Row-major indices of the included coefficients, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.included
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    pub fn is_subset_of(&self, other: &SpectralMask) -> bool {
        self.included
            .iter()
            .zip(&other.included)
            .all(|(&a, &b)| !a || b)
    }

    /// 0/255 bitmap, `u` along x.
    pub fn to_image(&self) -> Image {
        let px = self
            .included
            .iter()
            .map(|&b| if b { 255.0 } else { 0.0 })
            .collect();
        Image::new(self.width, self.height, px).expect("validated grid")
    }
}

/// All indices with `u² + v² ≤ r²` for the largest `r²` whose whole shell
/// still fits in the budget `m`. Shells are never split, so the count can
/// fall short of `m`; DC is always included.
pub fn circular_lowpass_mask(width: usize, height: usize, m: usize) -> Result<SpectralMask> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "grid must be nonempty",
        });
    }
    check_budget(m, width * height)?;
    let mut radii: Vec<usize> = (0..height)
        .flat_map(|v| (0..width).map(move |u| u * u + v * v))
        .collect();
    radii.sort_unstable();
    // radii[m - 1] is the m-th smallest; if its shell continues past m, drop it
    let mut r2 = radii[m - 1];
    if m < radii.len() && radii[m] == r2 {
        let first = radii.partition_point(|&r| r < r2);
        r2 = radii[first - 1];
    }
    let included = (0..height)
        .flat_map(|v| (0..width).map(move |u| u * u + v * v <= r2))
        .collect();
    SpectralMask::new(width, height, included)
}

/// Spectral region, inclusive index ranges.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Rect {
        u0: usize,
        u1: usize,
        v0: usize,
        v1: usize,
    },
    Disc {
        cu: f64,
        cv: f64,
        radius: f64,
    },
}

impl Region {
    fn contains(&self, u: usize, v: usize) -> bool {
        match *self {
            Region::Rect { u0, u1, v0, v1 } => (u0..=u1).contains(&u) && (v0..=v1).contains(&v),
            Region::Disc { cu, cv, radius } => {
                let du = u as f64 - cu;
                let dv = v as f64 - cv;
                du * du + dv * dv <= radius * radius
            }
        }
    }
}

impl FromStr for Region {
    type Err = Error;

    /// `rect:u0-u1,v0-v1` or `disc:cu,cv,r`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter {
            name: "region",
            reason: format!("cannot parse `{s}` (expected rect:u0-u1,v0-v1 or disc:cu,cv,r)"),
        };
        let (kind, body) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind {
            "rect" => {
                let (us, vs) = body.split_once(',').ok_or_else(bad)?;
                let range = |r: &str| -> Option<(usize, usize)> {
                    let (a, b) = r.split_once('-')?;
                    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
                };
                let (u0, u1) = range(us).ok_or_else(bad)?;
                let (v0, v1) = range(vs).ok_or_else(bad)?;
                if u0 > u1 || v0 > v1 {
                    return Err(bad());
                }
                Ok(Region::Rect { u0, u1, v0, v1 })
            }
            "disc" => {
                let parts: Vec<f64> = body
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad())?;
                match parts[..] {
                    [cu, cv, radius] if radius >= 0.0 => Ok(Region::Disc { cu, cv, radius }),
                    _ => Err(bad()),
                }
            }
            _ => Err(bad()),
        }
    }
}

/// Parses `;`-separated regions.
pub fn parse_regions(spec: &str) -> Result<Vec<Region>> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}

/// Union of `regions`, clipped to the grid.
pub fn mask_from_regions(width: usize, height: usize, regions: &[Region]) -> Result<SpectralMask> {
    if regions.is_empty() {
        return Err(Error::InvalidParameter {
            name: "regions",
            reason: "no regions given".into(),
        });
    }
    let mut included = vec![false; width * height];
    for (i, region) in regions.iter().enumerate() {
        let mut hit = false;
        for v in 0..height {
            for u in 0..width {
                if region.contains(u, v) {
                    included[v * width + u] = true;
                    hit = true;
                }
            }
        }
        if !hit {
            return Err(Error::InvalidParameter {
                name: "regions",
                reason: format!("region {i} ({region:?}) misses the {width}x{height} grid"),
            });
        }
    }
    SpectralMask::new(width, height, included)
}
