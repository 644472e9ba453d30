//! `fibsem-cs`: command-line harness for compressive slice-and-view runs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use fibsem_cs::bpfa::{infer, reconstruct_slice, BpfaConfig};
use fibsem_cs::io::{self, read_mask, read_slice, read_volume, write_mask, write_slice, write_volume};
use fibsem_cs::metrics::{psnr, volume_mean_ssim, SsimParams};
use fibsem_cs::pipeline::phantom::{generate_phantom, PhantomKind, PhantomSpec};
use fibsem_cs::pipeline::{self, budget, denoise_volume, ExperimentConfig, NoObserver};
use fibsem_cs::sampling::{ts_mask, uds_mask, TsConfig};
use fibsem_cs::{apply_mask, Error, Execution, MeasurementSlice, RngSeed, Slice, Strategy};

#[derive(Debug, Parser)]
#[command(
    name = "fibsem-cs",
    version,
    about = "Compressive slice-and-view simulation and BPFA inpainting"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON configuration file. Its schema depends on the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the parallel loops.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every loop on the calling thread (bit-exact reference mode).
    #[arg(long, global = true)]
    strict_sequential: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic phantom stack. `--config` takes a phantom spec.
    Phantom {
        #[arg(long, value_parser = parse_kind)]
        kind: Option<PhantomKind>,
        #[arg(long)]
        n1: Option<usize>,
        #[arg(long)]
        n2: Option<usize>,
        #[arg(long)]
        n3: Option<usize>,
        /// Feature drift per layer, in pixels.
        #[arg(long)]
        drift: Option<f64>,
    },
    /// Draw one mask and measure one slice with it.
    Subsample {
        /// Slice to measure (PGM).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "UDS", value_parser = parse_strategy)]
        strategy: Strategy,
        #[arg(long)]
        ratio: f64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
        /// Previous-layer reconstruction driving the targeted draw (PGM).
        #[arg(long)]
        prior: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0)]
        noise_sigma: f64,
    },
    /// Inpaint one measured slice. `--config` takes BPFA settings.
    Reconstruct {
        /// Measured values (PGM).
        #[arg(long)]
        measurement: PathBuf,
        /// Mask bitmap (PBM) with its JSON sidecar.
        #[arg(long)]
        mask: PathBuf,
        /// Also store the fitted model here.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Full-observation BPFA pass over a stack. `--config` takes BPFA settings.
    Denoise {
        #[arg(long)]
        input: PathBuf,
    },
    /// Full sweep. `--config` takes an experiment config.
    Pipeline,
    /// SSIM and PSNR between two stacks, one row per layer.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Aggregate a results CSV per strategy and ratio.
    Summarize { results: PathBuf },
}

fn parse_kind(s: &str) -> Result<PhantomKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Run(e) => e.exit_code() as u8,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(msg) => write!(f, "usage: {msg}"),
            Failure::Run(e) => e.fmt(f),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let g = cli.global;
    let exec = setup_threads(&g)?;
    match cli.command {
        Command::Phantom {
            kind,
            n1,
            n2,
            n3,
            drift,
        } => {
            let mut spec: PhantomSpec = read_config(&g)?.unwrap_or_default();
            spec.kind = kind.unwrap_or(spec.kind);
            spec.n1 = n1.unwrap_or(spec.n1);
            spec.n2 = n2.unwrap_or(spec.n2);
            spec.n3 = n3.unwrap_or(spec.n3);
            spec.drift_rate = drift.unwrap_or(spec.drift_rate);
            let out = require_out(&g)?;
            let volume = generate_phantom(&spec, RngSeed(g.seed.unwrap_or(0)))?;
            write_volume(&volume, out)?;
            info!("wrote {}x{}x{} phantom to {}", spec.n1, spec.n2, spec.n3, out.display());
        }
        Command::Subsample {
            input,
            strategy,
            ratio,
            rho,
            prior,
            noise_sigma,
        } => {
            let out = require_out(&g)?;
            if !(ratio > 0.0 && ratio <= 1.0) {
                return Err(Failure::Usage(format!("--ratio {ratio} outside (0, 1]")));
            }
            let truth = read_slice(&input)?;
            let m = budget(ratio, truth.n_bar());
            let seed = RngSeed(g.seed.unwrap_or(0));
            let mask = match (strategy, prior) {
                (Strategy::Uds, _) => uds_mask(truth.n_bar(), m, seed)?,
                (_, Some(prior)) => {
                    let prev = read_slice(&prior)?;
                    ts_mask(&TsConfig { rho, strategy, m }, truth.n_bar(), Some(&prev), seed)?
                }
                (_, None) => return Err(Failure::Usage(format!("{strategy} needs --prior"))),
            };
            let measurement = apply_mask(&truth, &mask, noise_sigma, seed)?;
            std::fs::create_dir_all(out).map_err(Error::from)?;
            write_mask(&mask, truth.shape(), &out.join("mask.pbm"))?;
            write_slice(&measurement.values, &out.join("measurement.pgm"))?;
            info!(
                "sampled {} of {} pixels into {}",
                mask.len(),
                truth.n_bar(),
                out.display()
            );
        }
        Command::Reconstruct {
            measurement,
            mask,
            checkpoint,
        } => {
            let out = require_out(&g)?;
            let bpfa: BpfaConfig = read_config(&g)?.unwrap_or_default();
            let values = read_slice(&measurement)?;
            let (mask, shape) = read_mask(&mask)?;
            if shape != values.shape() {
                return Err(Error::DimensionMismatch(format!(
                    "mask covers {}x{}, measurement is {}x{}",
                    shape.0,
                    shape.1,
                    values.rows(),
                    values.cols()
                ))
                .into());
            }
            let mut data = values.into_vec();
            for (q, v) in data.iter_mut().enumerate() {
                if !mask.contains(q) {
                    *v = 0.0;
                }
            }
            let measured = MeasurementSlice {
                values: Slice::new(shape.0, shape.1, data)?,
                mask,
                noise_sigma: 0.0,
            };
            let (state, patches) = infer(&measured, &bpfa, RngSeed(g.seed.unwrap_or(0)), exec)?;
            let recon = reconstruct_slice(&state, &patches)?;
            std::fs::create_dir_all(out).map_err(Error::from)?;
            write_slice(&recon, &out.join("reconstruction.pgm"))?;
            if let Some(path) = checkpoint {
                io::write_checkpoint(&state, &path)?;
            }
            if let Some(last) = state.history.last() {
                info!("masked RSS {:.6e} after {} epochs", last.masked_rss, last.epoch);
            }
        }
        Command::Denoise { input } => {
            let out = require_out(&g)?;
            let bpfa: BpfaConfig = read_config(&g)?.unwrap_or_default();
            let volume = read_volume(&input)?;
            let clean = denoise_volume(&volume, &bpfa, RngSeed(g.seed.unwrap_or(0)), exec)?;
            write_volume(&clean, out)?;
            info!("denoised {} layers into {}", clean.n3(), out.display());
        }
        Command::Pipeline => {
            let mut config: ExperimentConfig = read_config(&g)?.unwrap_or_default();
            if let Some(seed) = g.seed {
                config.seeds = vec![seed];
            }
            if let Some(out) = &g.out {
                config.output = out.clone();
            }
            let report = pipeline::run_experiment(&config, exec, &NoObserver)?;
            let summary = pipeline::summarize_records(&report.records)?;
            pipeline::write_summary(&summary, &config.output.join("summary.csv"))?;
            if report.failed_cells > 0 {
                warn!(
                    "{} cells failed; see marker rows in {}",
                    report.failed_cells,
                    report.results_path.display()
                );
            }
            info!(
                "wrote {} rows to {}",
                report.records.len(),
                report.results_path.display()
            );
        }
        Command::Metrics { reference, test } => {
            let params: SsimParams = read_config(&g)?.unwrap_or_default();
            let truth = read_volume(&reference)?;
            let recon = read_volume(&test)?;
            let ssim = volume_mean_ssim(&recon, &truth, &params)?;
            let mut text = String::from("layer,ssim,psnr\n");
            for (l, s) in ssim.per_layer.iter().enumerate() {
                let p = psnr(recon.slice(l), truth.slice(l), params.dynamic_range)?;
                text.push_str(&format!("{l},{s},{p}\n"));
            }
            emit(&g, "metrics.csv", &text)?;
            info!("mean SSIM {:.6}", ssim.mean);
        }
        Command::Summarize { results } => {
            let rows = pipeline::summarize(&results)?;
            let text = String::from_utf8(pipeline::encode_summary(&rows)?).expect("CSV output is UTF-8");
            emit(&g, "summary.csv", &text)?;
        }
    }
    Ok(())
}

fn setup_threads(g: &Global) -> CliResult<Execution> {
    if g.strict_sequential {
        if g.threads.is_some_and(|n| n != 1) {
            return Err(Failure::Usage(
                "--strict-sequential runs on one thread; drop --threads".into(),
            ));
        }
        return Ok(Execution::Sequential);
    }
    if let Some(n) = g.threads {
        if n == 0 {
            return Err(Failure::Usage("--threads must be at least 1".into()));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
        #[cfg(not(feature = "parallel"))]
        warn!("built without the parallel feature; ignoring --threads {n}");
    }
    Ok(Execution::Parallel)
}

fn require_out(g: &Global) -> CliResult<&Path> {
    g.out
        .as_deref()
        .ok_or_else(|| Failure::Usage("--out is required".into()))
}

fn read_config<T: serde::de::DeserializeOwned>(g: &Global) -> CliResult<Option<T>> {
    let Some(path) = &g.config else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(Error::from)?;
    serde_json::from_str(&text).map(Some).map_err(|e| Error::from(e).into())
}

/// Writes `text` to `<out>/<name>`, or to stdout without `--out`.
fn emit(g: &Global, name: &str, text: &str) -> CliResult {
    match &g.out {
        Some(out) => {
            std::fs::create_dir_all(out).map_err(Error::from)?;
            io::write_atomic(&out.join(name), text.as_bytes())?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
