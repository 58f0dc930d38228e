use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rsblr::bounds::LogBase;
use rsblr::transforms::DEFAULT_JPEG_QUALITY;
use rsblr_cli::commands::{
    cmd_bench, cmd_curves, cmd_reconstruct, cmd_sparsity, cmd_subband_demo, cmd_verify, gp_params,
    parse_bands, CurveRange, RowSelection, SparsityTarget,
};
use rsblr_cli::config::DEFAULT_SEED;
use rsblr_cli::{BudgetRule, CliError, CliResult, ExperimentConfig, MaskRule, RunParams};

#[derive(Parser)]
#[command(
    name = "rsblr",
    version,
    about = "Random sampling and band-limited reconstruction toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sparsity of an image at the fidelity of the JPEG block model
    Sparsity {
        image: PathBuf,
        #[arg(long, default_value_t = DEFAULT_JPEG_QUALITY, conflicts_with = "target")]
        quality: u32,
        /// Explicit target RMSE instead of the block-model error
        #[arg(long)]
        target: Option<f64>,
        /// Also write <name>_sparsity.json here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample an image at random and reconstruct it inside a spectral mask
    Reconstruct {
        image: PathBuf,
        /// M, from_fit or multiple:<alpha>
        #[arg(long, default_value = "from_fit")]
        budget: BudgetRule,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_JPEG_QUALITY)]
        quality: u32,
        /// circular or regions:<spec>
        #[arg(long, default_value = "circular")]
        mask: MaskRule,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Write a per-iteration CSV trace
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Emit bound curves, redundancy ratios and published fixtures as CSV
    Curves {
        #[arg(long, default_value_t = rsblr::bounds::DEFAULT_GRID_MIN)]
        min: f64,
        #[arg(long, default_value_t = 1.0)]
        max: f64,
        #[arg(long, default_value_t = rsblr::bounds::DEFAULT_GRID_POINTS)]
        points: usize,
        #[arg(long, default_value = "e", value_parser = parse_log_base)]
        log_base: LogBase,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run a configured corpus experiment
    Bench {
        config: PathBuf,
        /// Override the config's output directory
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run report rows of a finished bench and audit the bound
    Verify {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, conflicts_with = "all")]
        row: Option<usize>,
        #[arg(long)]
        all: bool,
    },
    /// Sample a multi-band signal per band and reconstruct it
    SubbandDemo {
        #[arg(long, default_value_t = 4096)]
        n: usize,
        /// Half-open DFT bin ranges, e.g. 512-528,1024-1040
        #[arg(long, default_value = "512-528,1024-1040")]
        bands: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_log_base(s: &str) -> Result<LogBase, String> {
    s.parse().map_err(|e: rsblr::Error| e.to_string())
}

fn load_config(path: &Path, out: Option<PathBuf>) -> CliResult<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(out) = out {
        cfg.out = out;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Sparsity {
            image,
            quality,
            target,
            out,
        } => {
            let target = match target {
                Some(t) => SparsityTarget::Rmse(t),
                None => SparsityTarget::Quality(quality),
            };
            let r = cmd_sparsity(&image, target, out.as_deref())?;
            println!("image\tN\tK\tsparsity\ttarget_rmse\tachieved_rmse");
            println!(
                "{}\t{}\t{}\t{:.6}\t{:.4}\t{:.4}",
                image.display(),
                r.n_total,
                r.k_required,
                r.sparsity,
                r.target_rmse,
                r.achieved_rmse
            );
            println!(
                "{}",
                serde_json::to_string(&r).map_err(|e| CliError::Data(e.to_string()))?
            );
        }
        Command::Reconstruct {
            image,
            budget,
            seed,
            quality,
            mask,
            tol,
            max_iters,
            trace,
            out,
        } => {
            let params = RunParams {
                quality,
                budget,
                seed,
                gp: gp_params(tol, max_iters, trace)?,
                mask,
            };
            let r = cmd_reconstruct(&image, &params, &out)?;
            let row = &r.row;
            println!(
                "{}: N={} K={} M={} drf={:.4} mask={} rmse={:.4} (jpeg {:.4}) iterations={} converged={}",
                row.name,
                row.n.unwrap_or(0),
                row.k.unwrap_or(0),
                row.m.unwrap_or(0),
                row.drf.unwrap_or(f64::NAN),
                row.mask_size.unwrap_or(0),
                row.rmse_rsblr.unwrap_or(f64::NAN),
                row.rmse_jpeg.unwrap_or(f64::NAN),
                row.gp_iterations.unwrap_or(0),
                row.converged.unwrap_or(false)
            );
            for f in r.files {
                println!("wrote {}", f.display());
            }
        }
        Command::Curves {
            min,
            max,
            points,
            log_base,
            out,
        } => {
            let range = CurveRange {
                lo: min,
                hi: max,
                points,
            };
            for f in cmd_curves(&range, log_base, &out)? {
                println!("wrote {}", f.display());
            }
        }
        Command::Bench { config, out } => {
            let cfg = load_config(&config, out)?;
            let b = cmd_bench(&cfg)?;
            let failed = b.rows.iter().filter(|r| !r.is_ok()).count();
            for r in &b.rows {
                println!("{}\t{}", r.name, r.status);
            }
            println!(
                "{} rows ({failed} failed), config {}, results in {}",
                b.rows.len(),
                &b.config_hash[..12],
                b.out.display()
            );
        }
        Command::Verify {
            config,
            out,
            row,
            all,
        } => {
            let cfg = load_config(&config, out)?;
            let sel = match (row, all) {
                (Some(i), _) => RowSelection::Index(i),
                (None, true) => RowSelection::All,
                (None, false) => RowSelection::Sampled,
            };
            let v = cmd_verify(&cfg, sel)?;
            for name in &v.rerun {
                println!("re-ran {name}");
            }
            for m in v.mismatches.iter().chain(&v.bound_violations) {
                eprintln!("{m}");
            }
            if !v.passed() {
                return Err(CliError::Mismatch(format!(
                    "{} mismatches, {} bound violations",
                    v.mismatches.len(),
                    v.bound_violations.len()
                )));
            }
            println!("ok");
        }
        Command::SubbandDemo {
            n,
            bands,
            seed,
            out,
        } => {
            let bands = parse_bands(&bands).map_err(CliError::Usage)?;
            let r = cmd_subband_demo(n, &bands, seed, out.as_deref())?;
            println!("n                      {}", r.n);
            for b in &r.bands {
                println!("band                   [{}, {})", b.lo, b.hi);
            }
            println!("complex samples        {}", r.complex_samples);
            println!("real equivalent        {}", r.real_equivalent);
            println!("highest-frequency rate {}", r.highest_frequency_real_budget);
            println!("advantage              {:.2}x", r.advantage);
            println!("roundtrip rmse         {:.3e}", r.roundtrip_rmse);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
