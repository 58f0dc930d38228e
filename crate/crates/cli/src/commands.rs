//! Subcommand implementations. Each returns a value the binary prints, and
//! writes its files under the given output directory.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use rsblr::bounds::{
    curve, fit_drf, fixtures, log_grid, redundancy_ratio_base, theoretical_drf, BoundPoint,
    LogBase, PointSource, RedundancyMethod, DEFAULT_GRID_MIN, DEFAULT_GRID_POINTS,
};
use rsblr::image::load_pgm;
use rsblr::reconstruct::GpParams;
use rsblr::rng::SplitMix64;
use rsblr::sparsity::{jpeg_target_rmse, sparsity_at_target, SparsityReport};
use rsblr::subband::{subband_demo, BandSet, SubbandReport};
use rsblr::Image;
use serde::Serialize;

use crate::config::{row_name, ExperimentConfig};
use crate::error::{CliError, CliResult, Context};
use crate::pipeline::{
    rows_from_csv, rows_to_csv, run_image, write_artifacts, write_atomic, ReportRow, RunParams,
    StageTimings,
};

fn create_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut v =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Data(format!("json: {e}")))?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> CliResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Data(format!("csv: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Data(format!("csv: {e}")))
}

/// Fidelity at which sparsity is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SparsityTarget {
    /// Error of the block model at this quality.
    Quality(u32),
    /// Explicit RMSE in gray levels.
    Rmse(f64),
}

pub fn sparsity_of(img: &Image, target: SparsityTarget) -> rsblr::Result<SparsityReport> {
    match target {
        SparsityTarget::Quality(q) => {
            let mut report = sparsity_at_target(img, jpeg_target_rmse(img, q)?)?;
            report.jpeg_quality_used = Some(q);
            Ok(report)
        }
        SparsityTarget::Rmse(t) => sparsity_at_target(img, t),
    }
}

pub fn cmd_sparsity(
    image: &Path,
    target: SparsityTarget,
    out: Option<&Path>,
) -> CliResult<SparsityReport> {
    let img = load_pgm(image).context(|| "loading image".into())?;
    let report = sparsity_of(&img, target).context(|| image.display().to_string())?;
    if let Some(dir) = out {
        create_dir(dir)?;
        write_atomic(
            &dir.join(format!("{}_sparsity.json", row_name(image))),
            &to_json(&report)?,
        )?;
    }
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct ReconstructOutput {
    pub row: ReportRow,
    pub files: Vec<PathBuf>,
}

pub fn cmd_reconstruct(
    image: &Path,
    params: &RunParams,
    out: &Path,
) -> CliResult<ReconstructOutput> {
    let img = load_pgm(image).context(|| "loading image".into())?;
    let name = row_name(image);
    let (row, art) = run_image(&name, &img, params, &mut StageTimings::default())?;
    create_dir(out)?;
    let paths = write_artifacts(out, &name, &art)?;
    let report = out.join(format!("{name}_report.csv"));
    write_atomic(&report, &rows_to_csv(std::slice::from_ref(&row))?)?;
    let mut files = vec![
        paths.recon,
        paths.sample_map,
        paths.mask,
        paths.samples,
        report,
    ];
    if art.result.trace.is_some() {
        files.push(paths.trace);
    }
    Ok(ReconstructOutput { row, files })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRange {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for CurveRange {
    fn default() -> Self {
        Self {
            lo: DEFAULT_GRID_MIN,
            hi: 1.0,
            points: DEFAULT_GRID_POINTS,
        }
    }
}

#[derive(Debug, Serialize)]
struct RedundancyRow {
    sparsity: f64,
    cs_theoretical: f64,
    cs_experimental: f64,
    rsblr_fit: f64,
}

#[derive(Debug, Serialize)]
struct CurvesMeta<'a> {
    log_base: String,
    range: [f64; 2],
    grid_points: usize,
    files: &'a [String],
}

/// Log grid over the range plus every fixture sparsity inside it, so each
/// table row has an exact curve partner.
pub fn curve_grid(range: &CurveRange) -> rsblr::Result<Vec<f64>> {
    let mut grid = log_grid(range.lo, range.hi, range.points)?;
    grid.extend(
        fixtures()
            .into_iter()
            .map(|p| p.sparsity)
            .filter(|s| *s >= range.lo && *s <= range.hi),
    );
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

pub fn cmd_curves(range: &CurveRange, base: LogBase, out: &Path) -> CliResult<Vec<PathBuf>> {
    let grid = curve_grid(range).context(|| "curve range".into())?;
    create_dir(out)?;
    let mut files = Vec::new();
    let mut emit = |name: &str, bytes: Vec<u8>| -> CliResult<()> {
        let p = out.join(name);
        write_atomic(&p, &bytes)?;
        files.push(p);
        Ok(())
    };
    for source in [
        PointSource::Theoretical,
        PointSource::CsTheoretical,
        PointSource::CsExperimental,
        PointSource::Fit,
    ] {
        let pts = curve(&grid, source, base).context(|| source.as_str().into())?;
        emit(&format!("{}.csv", source.as_str()), csv_bytes(&pts)?)?;
    }
    let red = grid
        .iter()
        .map(|&s| {
            Ok(RedundancyRow {
                sparsity: s,
                cs_theoretical: redundancy_ratio_base(s, RedundancyMethod::CsTheoretical, base)?,
                cs_experimental: redundancy_ratio_base(s, RedundancyMethod::CsExperimental, base)?,
                rsblr_fit: redundancy_ratio_base(s, RedundancyMethod::RsblrFit, base)?,
            })
        })
        .collect::<rsblr::Result<Vec<_>>>()
        .context(|| "redundancy".into())?;
    emit("redundancy.csv", csv_bytes(&red)?)?;
    let fx = fixtures();
    for source in [PointSource::Table1, PointSource::Table2] {
        let pts: Vec<BoundPoint> = fx.iter().copied().filter(|p| p.source == source).collect();
        emit(&format!("{}.csv", source.as_str()), csv_bytes(&pts)?)?;
    }
    let names: Vec<String> = files
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let meta = CurvesMeta {
        log_base: base.to_string(),
        range: [range.lo, range.hi],
        grid_points: grid.len(),
        files: &names,
    };
    let meta_path = out.join("curves.json");
    write_atomic(&meta_path, &to_json(&meta)?)?;
    files.push(meta_path);
    Ok(files)
}

#[derive(Debug, Serialize)]
struct ScatterRow<'a> {
    name: &'a str,
    sparsity: f64,
    drf: f64,
    fit_drf: f64,
    theoretical_drf: f64,
}

#[derive(Debug, Serialize)]
struct BenchMeta {
    config_version: u32,
    config_hash: String,
    log_base: String,
    jpeg_quality: u32,
    budget: String,
    mask: String,
    seed: u64,
    tol: f64,
    max_iters: usize,
    rows: usize,
    failed: usize,
}

#[derive(Debug, Serialize)]
struct TimedRow {
    name: String,
    stages: StageTimings,
}

#[derive(Debug, Serialize)]
struct Timings {
    workers: usize,
    total: f64,
    rows: Vec<TimedRow>,
}

#[derive(Debug, Clone)]
pub struct BenchOutput {
    pub rows: Vec<ReportRow>,
    pub config_hash: String,
    pub out: PathBuf,
}

pub fn run_params(cfg: &ExperimentConfig) -> RunParams {
    RunParams {
        quality: cfg.jpeg_quality,
        budget: cfg.budget,
        seed: cfg.seed,
        gp: cfg.gp,
        mask: cfg.mask.clone(),
    }
}

fn bench_row(path: &Path, params: &RunParams, out: &Path) -> (ReportRow, StageTimings) {
    let name = row_name(path);
    let mut timings = StageTimings::default();
    let attempt = (|| {
        let t = Instant::now();
        let img = load_pgm(path).context(|| "loading image".into())?;
        timings.load = t.elapsed().as_secs_f64();
        let (row, art) = run_image(&name, &img, params, &mut timings)?;
        let t = Instant::now();
        write_artifacts(out, &name, &art)?;
        timings.write = t.elapsed().as_secs_f64();
        Ok(row)
    })();
    let row = attempt.unwrap_or_else(|e: CliError| ReportRow::failed(&name, params.seed, &e));
    (row, timings)
}

pub fn cmd_bench(cfg: &ExperimentConfig) -> CliResult<BenchOutput> {
    let start = Instant::now();
    create_dir(&cfg.out)?;
    let params = run_params(cfg);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Data(format!("thread pool: {e}")))?;
    let mut results: Vec<(ReportRow, StageTimings)> = pool.install(|| {
        cfg.input_paths
            .par_iter()
            .map(|p| bench_row(p, &params, &cfg.out))
            .collect()
    });
    results.sort_by(|a, b| a.0.name.cmp(&b.0.name));
    let (rows, stage_times): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    write_atomic(&cfg.out.join("bench.csv"), &rows_to_csv(&rows)?)?;
    let scatter: Vec<ScatterRow> = rows
        .iter()
        .filter_map(|r| {
            let (s, d) = (r.sparsity?, r.drf?);
            Some(ScatterRow {
                name: &r.name,
                sparsity: s,
                drf: d,
                fit_drf: fit_drf(s).ok()?,
                theoretical_drf: theoretical_drf(s).ok()?,
            })
        })
        .collect();
    let mut scatter_bytes = csv_bytes(&scatter)?;
    if scatter.is_empty() {
        scatter_bytes = b"name,sparsity,drf,fit_drf,theoretical_drf\n".to_vec();
    }
    write_atomic(&cfg.out.join("scatter.csv"), &scatter_bytes)?;

    let hash = cfg.hash();
    let meta = BenchMeta {
        config_version: crate::config::CONFIG_VERSION,
        config_hash: hash.clone(),
        log_base: cfg.log_base.to_string(),
        jpeg_quality: cfg.jpeg_quality,
        budget: cfg.budget.to_string(),
        mask: cfg.mask.to_string(),
        seed: cfg.seed,
        tol: cfg.gp.tol,
        max_iters: cfg.gp.max_iters,
        rows: rows.len(),
        failed: rows.iter().filter(|r| !r.is_ok()).count(),
    };
    write_atomic(&cfg.out.join("bench_meta.json"), &to_json(&meta)?)?;
    let timings = Timings {
        workers: cfg.workers,
        total: start.elapsed().as_secs_f64(),
        rows: rows
            .iter()
            .zip(stage_times)
            .map(|(r, stages)| TimedRow {
                name: r.name.clone(),
                stages,
            })
            .collect(),
    };
    write_atomic(&cfg.out.join("timings.json"), &to_json(&timings)?)?;
    Ok(BenchOutput {
        rows,
        config_hash: hash,
        out: cfg.out.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSelection {
    /// One row drawn with the config seed.
    Sampled,
    Index(usize),
    All,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyOutput {
    pub rerun: Vec<String>,
    pub mismatches: Vec<String>,
    pub bound_violations: Vec<String>,
}

impl VerifyOutput {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.bound_violations.is_empty()
    }
}

/// A converged row that met its JPEG target must not sample fewer points
/// than coefficients: drf ≤ 1/sparsity ⇔ M ≥ K.
pub fn bound_violation(row: &ReportRow) -> Option<String> {
    let (k, m, conv, rs, rj) = (
        row.k?,
        row.m?,
        row.converged?,
        row.rmse_rsblr?,
        row.rmse_jpeg?,
    );
    if conv && rs <= rj && m < k {
        Some(format!(
            "{}: drf {} exceeds 1/sparsity (M = {m} < K = {k})",
            row.name, row.drf?
        ))
    } else {
        None
    }
}

pub fn cmd_verify(cfg: &ExperimentConfig, selection: RowSelection) -> CliResult<VerifyOutput> {
    let csv_path = cfg.out.join("bench.csv");
    let recorded = rows_from_csv(&csv_path)?;
    let meta_path = cfg.out.join("bench_meta.json");
    let meta: serde_json::Value =
        serde_json::from_slice(&fs::read(&meta_path).map_err(|e| CliError::io(&meta_path, e))?)
            .map_err(|e| CliError::Data(format!("{}: {e}", meta_path.display())))?;
    let mut out = VerifyOutput::default();
    if meta["config_hash"].as_str() != Some(cfg.hash().as_str()) {
        out.mismatches
            .push("config hash differs from the one recorded with the report".into());
    }
    out.bound_violations = recorded.iter().filter_map(bound_violation).collect();

    let chosen: Vec<usize> = match selection {
        _ if recorded.is_empty() => Vec::new(),
        RowSelection::All => (0..recorded.len()).collect(),
        RowSelection::Index(i) if i < recorded.len() => vec![i],
        RowSelection::Index(i) => {
            return Err(CliError::Usage(format!(
                "row {i} out of range, report has {} rows",
                recorded.len()
            )))
        }
        RowSelection::Sampled => {
            vec![SplitMix64::new(cfg.seed).below(recorded.len() as u64) as usize]
        }
    };
    let params = run_params(cfg);
    let scratch = scratch_dir(&cfg.out)?;
    for i in chosen {
        let want = &recorded[i];
        let path = cfg
            .input_paths
            .iter()
            .find(|p| row_name(p) == want.name)
            .ok_or_else(|| {
                CliError::Data(format!("row `{}` has no input in the config", want.name))
            })?;
        let (got, _) = bench_row(path, &params, &scratch);
        // compare the serialized form, which is what bench.csv holds
        if rows_to_csv(std::slice::from_ref(&got))? != rows_to_csv(std::slice::from_ref(want))? {
            out.mismatches
                .push(format!("row {i} ({}) does not reproduce", want.name));
        }
        if got.is_ok() {
            let recon = format!("{}_recon.pgm", want.name);
            if fs::read(scratch.join(&recon)).ok() != fs::read(cfg.out.join(&recon)).ok() {
                out.mismatches
                    .push(format!("{recon} differs from the re-run"));
            }
        }
        out.rerun.push(want.name.clone());
    }
    let _ = fs::remove_dir_all(&scratch);
    Ok(out)
}

fn scratch_dir(base: &Path) -> CliResult<PathBuf> {
    let dir = base.join(".verify");
    create_dir(&dir)?;
    Ok(dir)
}

pub fn parse_bands(spec: &str) -> Result<Vec<(usize, usize)>, String> {
    spec.split(',')
        .map(|b| {
            let (lo, hi) = b
                .trim()
                .split_once('-')
                .ok_or_else(|| format!("bad band `{b}` (expected lo-hi)"))?;
            Ok((
                lo.trim()
                    .parse()
                    .map_err(|_| format!("bad band start `{lo}`"))?,
                hi.trim()
                    .parse()
                    .map_err(|_| format!("bad band end `{hi}`"))?,
            ))
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct SubbandCsvRow {
    n: usize,
    bands: String,
    complex_samples: usize,
    real_equivalent: usize,
    highest_frequency_real_budget: usize,
    advantage: f64,
    roundtrip_rmse: f64,
}

pub fn cmd_subband_demo(
    n: usize,
    bands: &[(usize, usize)],
    seed: u64,
    out: Option<&Path>,
) -> CliResult<SubbandReport> {
    let set = BandSet::new(n, bands.iter().copied()).context(|| "bands".into())?;
    let report = subband_demo(&set, seed).context(|| "sub-band demo".into())?;
    if let Some(dir) = out {
        create_dir(dir)?;
        let row = SubbandCsvRow {
            n: report.n,
            bands: report
                .bands
                .iter()
                .map(|b| format!("{}-{}", b.lo, b.hi))
                .collect::<Vec<_>>()
                .join(";"),
            complex_samples: report.complex_samples,
            real_equivalent: report.real_equivalent,
            highest_frequency_real_budget: report.highest_frequency_real_budget,
            advantage: report.advantage,
            roundtrip_rmse: report.roundtrip_rmse,
        };
        write_atomic(&dir.join("subband.csv"), &csv_bytes(&[row])?)?;
    }
    Ok(report)
}

/// Gerchberg–Papoulis settings from CLI flags.
pub fn gp_params(tol: Option<f64>, max_iters: Option<usize>, trace: bool) -> CliResult<GpParams> {
    let d = GpParams::default();
    let p = GpParams {
        tol: tol.unwrap_or(d.tol),
        max_iters: max_iters.unwrap_or(d.max_iters),
        record_trace: trace,
    };
    p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(p)
}
