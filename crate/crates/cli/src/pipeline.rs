//! One image through the full chain: sparsity at JPEG fidelity, sample
//! budget, random sampling, band-limited reconstruction.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rsblr::image::{encode_pgm, rmse};
use rsblr::reconstruct::{gp_reconstruct, trace_to_csv, GpParams, ReconstructionResult};
use rsblr::sampling::{random_sample_set, SampleSet, SpectralMask};
use rsblr::sparsity::{jpeg_target_rmse, sparsity_at_target, SparsityReport};
use rsblr::Image;
use serde::{Deserialize, Serialize};

use crate::config::{BudgetRule, MaskRule};
use crate::error::{CliError, CliResult, Context};

#[derive(Debug, Clone, PartialEq)]
pub struct RunParams {
    pub quality: u32,
    pub budget: BudgetRule,
    pub seed: u64,
    pub gp: GpParams,
    pub mask: MaskRule,
}

/// One report row. Numeric fields are empty on failed rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub sparsity: Option<f64>,
    pub m: Option<usize>,
    /// N/M
    pub drf: Option<f64>,
    pub mask_size: Option<usize>,
    pub rmse_rsblr: Option<f64>,
    pub rmse_jpeg: Option<f64>,
    pub gp_iterations: Option<usize>,
    pub converged: Option<bool>,
    pub seed: u64,
    pub status: String,
}

pub const ROW_HEADER: [&str; 13] = [
    "name",
    "n",
    "k",
    "sparsity",
    "m",
    "drf",
    "mask_size",
    "rmse_rsblr",
    "rmse_jpeg",
    "gp_iterations",
    "converged",
    "seed",
    "status",
];

impl ReportRow {
    pub fn failed(name: &str, seed: u64, err: &CliError) -> Self {
        Self {
            name: name.to_string(),
            n: None,
            k: None,
            sparsity: None,
            m: None,
            drf: None,
            mask_size: None,
            rmse_rsblr: None,
            rmse_jpeg: None,
            gp_iterations: None,
            converged: None,
            seed,
            status: format!("error: {err}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub load: f64,
    pub sparsity: f64,
    pub sampling: f64,
    pub reconstruct: f64,
    pub write: f64,
}

#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub sparsity: SparsityReport,
    pub samples: SampleSet,
    pub mask: SpectralMask,
    pub result: ReconstructionResult,
}

pub fn run_image(
    name: &str,
    image: &Image,
    params: &RunParams,
    timings: &mut StageTimings,
) -> CliResult<(ReportRow, RunArtifacts)> {
    let t = Instant::now();
    let target =
        jpeg_target_rmse(image, params.quality).context(|| format!("{name}: jpeg model"))?;
    let mut sparsity = sparsity_at_target(image, target).context(|| format!("{name}: sparsity"))?;
    sparsity.jpeg_quality_used = Some(params.quality);
    timings.sparsity = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let n = image.len();
    let m = params
        .budget
        .resolve(n, sparsity.k_required)
        .context(|| format!("{name}: budget"))?;
    let samples =
        random_sample_set(image, m, params.seed).context(|| format!("{name}: sampling"))?;
    let mask = params
        .mask
        .build(image.width(), image.height(), m)
        .context(|| format!("{name}: mask"))?;
    timings.sampling = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let result = gp_reconstruct(&samples, &mask, &params.gp)
        .context(|| format!("{name}: reconstruction"))?;
    timings.reconstruct = t.elapsed().as_secs_f64();

    let row = ReportRow {
        name: name.to_string(),
        n: Some(n),
        k: Some(sparsity.k_required),
        sparsity: Some(sparsity.sparsity),
        m: Some(m),
        drf: Some(n as f64 / m as f64),
        mask_size: Some(mask.count()),
        rmse_rsblr: Some(rmse(image, &result.image).context(|| name.to_string())?),
        rmse_jpeg: Some(target),
        gp_iterations: Some(result.iterations_run),
        converged: Some(result.converged),
        seed: params.seed,
        status: "ok".into(),
    };
    Ok((
        row,
        RunArtifacts {
            sparsity,
            samples,
            mask,
            result,
        },
    ))
}

/// Writes `bytes` to a sibling temp file, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(&tmp, e))?;
    f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))
}

/// Output file names of one run, all prefixed by the row name.
pub struct ArtifactPaths {
    pub recon: PathBuf,
    pub sample_map: PathBuf,
    pub mask: PathBuf,
    pub samples: PathBuf,
    pub trace: PathBuf,
}

impl ArtifactPaths {
    pub fn new(dir: &Path, name: &str) -> Self {
        Self {
            recon: dir.join(format!("{name}_recon.pgm")),
            sample_map: dir.join(format!("{name}_sample_map.pgm")),
            mask: dir.join(format!("{name}_mask.pgm")),
            samples: dir.join(format!("{name}_samples.txt")),
            trace: dir.join(format!("{name}_trace.csv")),
        }
    }
}

pub fn write_artifacts(dir: &Path, name: &str, art: &RunArtifacts) -> CliResult<ArtifactPaths> {
    let paths = ArtifactPaths::new(dir, name);
    write_atomic(&paths.recon, &encode_pgm(&art.result.image))?;
    write_atomic(&paths.sample_map, &encode_pgm(&art.samples.render()))?;
    write_atomic(&paths.mask, &encode_pgm(&art.mask.to_image()))?;
    write_atomic(&paths.samples, art.samples.to_text().as_bytes())?;
    if let Some(trace) = &art.result.trace {
        write_atomic(&paths.trace, trace_to_csv(trace).as_bytes())?;
    }
    Ok(paths)
}

pub fn rows_to_csv(rows: &[ReportRow]) -> CliResult<Vec<u8>> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Data(format!("csv: {e}"));
    w.write_record(ROW_HEADER).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Data(format!("csv: {e}")))
}

pub fn rows_from_csv(path: &Path) -> CliResult<Vec<ReportRow>> {
    let mut rd = csv::Reader::from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let header = rd
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .clone();
    if header.iter().ne(ROW_HEADER) {
        return Err(CliError::Data(format!(
            "{}: unexpected header",
            path.display()
        )));
    }
    rd.deserialize()
        .collect::<Result<Vec<ReportRow>, _>>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}
