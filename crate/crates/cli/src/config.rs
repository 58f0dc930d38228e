//! Experiment configuration: a flat `key = value` text file.
//!
//! ```text
//! version = 1
//! input = images/mamm.pgm
//! input = images/moon.pgm
//! jpeg_quality = 75
//! budget = from_fit        # or an integer M, or `multiple` with alpha
//! seed = 42
//! tol = 0.001
//! max_iters = 10000
//! mask = circular          # or regions:rect:0-15,0-15;disc:0,0,20
//! out = results
//! workers = 4
//! ```
//!
//! Relative paths are resolved against the config file's directory. The
//! config hash covers every key that affects results, so `out` and `workers`
//! are left out of it.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rsblr::bounds::{fit_drf, LogBase};
use rsblr::reconstruct::GpParams;
use rsblr::sampling::{
    circular_lowpass_mask, mask_from_regions, parse_regions, Region, SpectralMask,
};
use rsblr::transforms::DEFAULT_JPEG_QUALITY;
use rsblr::Error;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const CONFIG_VERSION: u32 = 1;
pub const DEFAULT_ALPHA: f64 = 1.875;
pub const DEFAULT_SEED: u64 = 0;

/// How many samples M to take for an image of N pixels and sparsity K/N.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BudgetRule {
    Explicit(usize),
    #[default]
    FromFit,
    SparsityMultiple(f64),
}

impl BudgetRule {
    pub fn resolve(&self, n: usize, k: usize) -> rsblr::Result<usize> {
        let m = match *self {
            BudgetRule::Explicit(m) => {
                if m == 0 || m > n {
                    return Err(Error::OutOfRange {
                        name: "M",
                        value: m as f64,
                        expected: "1..=N",
                    });
                }
                return Ok(m);
            }
            BudgetRule::FromFit => (n as f64 / fit_drf(k as f64 / n as f64)?).round(),
            BudgetRule::SparsityMultiple(alpha) => (alpha * k as f64).round(),
        };
        Ok((m as usize).clamp(1, n))
    }
}

impl fmt::Display for BudgetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetRule::Explicit(m) => write!(f, "{m}"),
            BudgetRule::FromFit => f.write_str("from_fit"),
            BudgetRule::SparsityMultiple(a) => write!(f, "multiple:{a}"),
        }
    }
}

impl FromStr for BudgetRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "from_fit" {
            return Ok(BudgetRule::FromFit);
        }
        if s == "multiple" {
            return Ok(BudgetRule::SparsityMultiple(DEFAULT_ALPHA));
        }
        if let Some(a) = s.strip_prefix("multiple:") {
            let alpha: f64 = a.parse().map_err(|_| format!("bad multiple `{a}`"))?;
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(format!("multiple must be positive, got {a}"));
            }
            return Ok(BudgetRule::SparsityMultiple(alpha));
        }
        s.parse::<usize>()
            .map(BudgetRule::Explicit)
            .map_err(|_| format!("bad budget `{s}` (expected M, from_fit or multiple:<alpha>)"))
    }
}

/// Spectral support used for band limitation.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum MaskRule {
    /// Whole-shell circular low-pass mask sized to the sample budget.
    #[default]
    Circular,
    /// Fixed union of regions; the text is kept for display and hashing.
    Regions(String, Vec<Region>),
}

impl MaskRule {
    pub fn build(&self, width: usize, height: usize, m: usize) -> rsblr::Result<SpectralMask> {
        match self {
            MaskRule::Circular => circular_lowpass_mask(width, height, m),
            MaskRule::Regions(_, regions) => mask_from_regions(width, height, regions),
        }
    }
}

impl fmt::Display for MaskRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskRule::Circular => f.write_str("circular"),
            MaskRule::Regions(spec, _) => write!(f, "regions:{spec}"),
        }
    }
}

impl FromStr for MaskRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "circular" {
            return Ok(MaskRule::Circular);
        }
        match s.strip_prefix("regions:") {
            Some(spec) => parse_regions(spec)
                .map(|r| MaskRule::Regions(spec.to_string(), r))
                .map_err(|e| e.to_string()),
            None => Err(format!(
                "bad mask `{s}` (expected circular or regions:<spec>)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Input paths as written in the file.
    pub inputs: Vec<String>,
    /// Inputs resolved against the config directory.
    pub input_paths: Vec<PathBuf>,
    pub jpeg_quality: u32,
    pub budget: BudgetRule,
    pub seed: u64,
    pub gp: GpParams,
    pub mask: MaskRule,
    pub log_base: LogBase,
    pub out: PathBuf,
    pub workers: usize,
}

fn bad(line: usize, msg: impl fmt::Display) -> CliError {
    CliError::Data(format!("config line {line}: {msg}"))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::parse(&text, base).map_err(|e| match e {
            CliError::Data(msg) => CliError::Data(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut version = None;
        let mut inputs = Vec::new();
        let mut quality = None;
        let mut budget: Option<BudgetRule> = None;
        let mut alpha = None;
        let mut seed = None;
        let mut tol = None;
        let mut max_iters = None;
        let mut mask = None;
        let mut log_base = None;
        let mut out = None;
        let mut workers = None;
        let mut seen = HashSet::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| bad(line_no, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            if key != "input" && !seen.insert(key.to_string()) {
                return Err(bad(line_no, format!("duplicate key `{key}`")));
            }
            fn num<T: FromStr>(line: usize, key: &str, v: &str) -> CliResult<T> {
                v.parse()
                    .map_err(|_| bad(line, format!("bad value `{v}` for {key}")))
            }
            match key {
                "version" => version = Some(num::<u32>(line_no, key, value)?),
                "input" => inputs.push(value.to_string()),
                "jpeg_quality" => quality = Some(num::<u32>(line_no, key, value)?),
                "budget" => budget = Some(value.parse().map_err(|e| bad(line_no, e))?),
                "alpha" => alpha = Some(num::<f64>(line_no, key, value)?),
                "seed" => seed = Some(num::<u64>(line_no, key, value)?),
                "tol" => tol = Some(num::<f64>(line_no, key, value)?),
                "max_iters" => max_iters = Some(num::<usize>(line_no, key, value)?),
                "mask" => mask = Some(value.parse().map_err(|e| bad(line_no, e))?),
                "log_base" => log_base = Some(value.parse().map_err(|e| bad(line_no, e))?),
                "out" => out = Some(value.to_string()),
                "workers" => workers = Some(num::<usize>(line_no, key, value)?),
                _ => return Err(bad(line_no, format!("unknown key `{key}`"))),
            }
        }

        match version {
            Some(CONFIG_VERSION) => {}
            Some(v) => return Err(CliError::Data(format!("unsupported config version {v}"))),
            None => return Err(CliError::Data("missing `version`".into())),
        }
        let budget = match (budget.unwrap_or_default(), alpha) {
            (BudgetRule::SparsityMultiple(a), None) => BudgetRule::SparsityMultiple(a),
            (BudgetRule::SparsityMultiple(_), Some(a)) => {
                if !(a > 0.0) || !a.is_finite() {
                    return Err(CliError::Data(format!("alpha must be positive, got {a}")));
                }
                BudgetRule::SparsityMultiple(a)
            }
            (rule, None) => rule,
            (rule, Some(_)) => {
                return Err(CliError::Data(format!(
                    "`alpha` only applies to budget = multiple, not {rule}"
                )))
            }
        };
        let gp = GpParams {
            tol: tol.unwrap_or(GpParams::default().tol),
            max_iters: max_iters.unwrap_or(GpParams::default().max_iters),
            record_trace: false,
        };
        gp.validate()
            .map_err(|e| CliError::Data(format!("config: {e}")))?;
        let workers = workers.unwrap_or(1);
        if workers == 0 {
            return Err(CliError::Data("workers must be >= 1".into()));
        }

        let input_paths: Vec<PathBuf> = inputs.iter().map(|p| base.join(p)).collect();
        let mut names = HashSet::new();
        for p in &input_paths {
            if !names.insert(row_name(p)) {
                return Err(CliError::Data(format!(
                    "two inputs share the name `{}`",
                    row_name(p)
                )));
            }
        }

        Ok(Self {
            inputs,
            input_paths,
            jpeg_quality: quality.unwrap_or(DEFAULT_JPEG_QUALITY),
            budget,
            seed: seed.unwrap_or(DEFAULT_SEED),
            gp,
            mask: mask.unwrap_or_default(),
            log_base: log_base.unwrap_or_default(),
            out: base.join(out.as_deref().unwrap_or("out")),
            workers,
        })
    }

    /// Normalized text of every result-affecting setting.
    pub fn canonical(&self) -> String {
        let mut s = format!("version = {CONFIG_VERSION}\n");
        for input in &self.inputs {
            s.push_str(&format!("input = {input}\n"));
        }
        s.push_str(&format!("jpeg_quality = {}\n", self.jpeg_quality));
        s.push_str(&format!("budget = {}\n", self.budget));
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("tol = {:e}\n", self.gp.tol));
        s.push_str(&format!("max_iters = {}\n", self.gp.max_iters));
        s.push_str(&format!("mask = {}\n", self.mask));
        s.push_str(&format!("log_base = {}\n", self.log_base));
        s
    }

    /// SHA-256 of [`canonical`](Self::canonical), hex.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

/// Report row name of an input: its file stem.
pub fn row_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
