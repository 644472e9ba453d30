//! Experiment harness: ground truth in, per-layer masks, reconstructions and
//! metrics out.
//!
//! A sweep is a grid of cells `(strategy, sampling ratio, seed)`. Inside a
//! cell the layers run in order: layer `l` is sampled with a mask drawn from
//! the reconstruction of layer `l - 1` (layer 0 always uses UDS), measured,
//! inpainted with BPFA and scored against the truth. Cells are independent and
//! run in parallel.
//!
//! Seeds: a cell uses `RngSeed(seed).derive(ratio bits)`, shared by all
//! strategies so that their layer-0 masks coincide, and layer `l` uses
//! `cell_seed.for_layer(l)` for its mask, noise and inference streams.

mod config;
pub mod phantom;
mod summary;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{ExperimentConfig, Source};
pub use summary::{encode_summary, summarize, summarize_records, write_summary, SummaryRow, SUMMARY_HEADER};

use crate::bpfa::{infer_with_dictionary, reconstruct_slice, BpfaConfig, Dictionary};
use crate::domain::{apply_mask, MeasurementSlice, RngSeed, SamplingMask, Slice, Strategy, Volume};
use crate::error::{Error, Result};
use crate::io::{self, ResultRecord};
use crate::metrics::{psnr, ssim, SsimParams};
use crate::par::Execution;
use crate::sampling::{ts_mask, uds_mask, TsConfig};

/// Measurement budget `floor(ratio * n_bar)`. A relative tolerance of 1e-9
/// absorbs decimal ratios such as 0.29 that are not exact in binary.
pub fn budget(ratio: f64, n_bar: usize) -> usize {
    let exact = ratio * n_bar as f64;
    ((exact * (1.0 + 1e-9)).floor() as usize).min(n_bar)
}

/// Where a layer's sampling distribution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorSource {
    /// Uniform draw; no previous layer consulted.
    Uniform,
    /// Targeted draw from the reconstruction of the given layer.
    Reconstruction { layer: usize },
}

/// Record of one mask draw, passed to a [`LayerObserver`].
#[derive(Debug)]
pub struct MaskEvent<'a> {
    pub strategy: Strategy,
    pub sampling_ratio: f64,
    pub seed: u64,
    pub layer: usize,
    pub source: PriorSource,
    /// The slice the targeted distribution was computed from, if any.
    pub prior: Option<&'a Slice>,
    pub mask: &'a SamplingMask,
}

/// Instrumentation hook called once per mask draw.
pub trait LayerObserver: Sync {
    fn mask_drawn(&self, event: &MaskEvent<'_>);
}

/// Observer that ignores everything.
pub struct NoObserver;

impl LayerObserver for NoObserver {
    fn mask_drawn(&self, _: &MaskEvent<'_>) {}
}

/// Per-cell settings shared by every layer.
#[derive(Debug, Clone)]
pub struct LayerSettings {
    pub strategy: Strategy,
    pub sampling_ratio: f64,
    pub rho: f64,
    pub noise_sigma: f64,
    pub bpfa: BpfaConfig,
    pub ssim: SsimParams,
    /// Realisation seed as configured; reported in results.
    pub seed: u64,
    pub warm_start: bool,
}

impl LayerSettings {
    pub fn cell_seed(&self) -> RngSeed {
        RngSeed(self.seed).derive(self.sampling_ratio.to_bits())
    }
}

#[derive(Debug, Clone)]
pub struct LayerOutcome {
    pub mask: SamplingMask,
    pub measurement: MeasurementSlice,
    pub reconstruction: Slice,
    pub dictionary: Dictionary,
    pub record: ResultRecord,
}

/// Samples, measures, reconstructs and scores one layer. `prev` is the
/// reconstruction of layer `layer - 1` and is required for targeted
/// strategies past layer 0.
pub fn run_layer(
    layer: usize,
    truth: &Slice,
    prev: Option<&Slice>,
    warm: Option<&Dictionary>,
    settings: &LayerSettings,
    exec: Execution,
    observer: &dyn LayerObserver,
) -> Result<LayerOutcome> {
    let start = Instant::now();
    let n_bar = truth.n_bar();
    let m = budget(settings.sampling_ratio, n_bar);
    if m == 0 {
        return Err(Error::InvalidParameter(format!(
            "sampling ratio {} leaves no samples on {n_bar} pixels",
            settings.sampling_ratio
        )));
    }
    let seed = settings.cell_seed().for_layer(layer);
    let (mask, source, prior) = if layer == 0 || settings.strategy == Strategy::Uds {
        (uds_mask(n_bar, m, seed)?, PriorSource::Uniform, None)
    } else {
        let prev = prev.ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{} at layer {layer} needs the previous reconstruction",
                settings.strategy
            ))
        })?;
        let ts = TsConfig {
            rho: settings.rho,
            strategy: settings.strategy,
            m,
        };
        (
            ts_mask(&ts, n_bar, Some(prev), seed)?,
            PriorSource::Reconstruction { layer: layer - 1 },
            Some(prev),
        )
    };
    observer.mask_drawn(&MaskEvent {
        strategy: settings.strategy,
        sampling_ratio: settings.sampling_ratio,
        seed: settings.seed,
        layer,
        source,
        prior,
        mask: &mask,
    });

    let measurement = apply_mask(truth, &mask, settings.noise_sigma, seed)?;
    let (state, patches) = infer_with_dictionary(&measurement, &settings.bpfa, seed, warm, exec)?;
    let reconstruction = reconstruct_slice(&state, &patches)?;
    let record = ResultRecord {
        strategy: settings.strategy,
        rho: settings.rho,
        sampling_ratio: settings.sampling_ratio,
        realisation_seed: settings.seed,
        layer,
        ssim: Some(ssim(&reconstruction, truth, &settings.ssim)?),
        psnr: Some(psnr(&reconstruction, truth, 1.0)?),
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    Ok(LayerOutcome {
        mask,
        measurement,
        reconstruction,
        dictionary: state.dictionary,
        record,
    })
}

/// Result of one `(strategy, ratio, seed)` cell.
#[derive(Debug)]
pub struct CellOutcome {
    pub settings: LayerSettings,
    pub records: Vec<ResultRecord>,
    /// Reconstructed stack, present when every layer succeeded.
    pub reconstruction: Option<Volume>,
    pub error: Option<Error>,
}

/// Runs all layers of one cell in order, feeding each reconstruction forward.
/// A failing layer ends the cell with an error marker row.
pub fn run_cell(
    truth: &Volume,
    settings: &LayerSettings,
    exec: Execution,
    observer: &dyn LayerObserver,
) -> CellOutcome {
    let mut records = Vec::with_capacity(truth.n3());
    let mut slices: Vec<Slice> = Vec::with_capacity(truth.n3());
    let mut dictionary: Option<Dictionary> = None;
    for (l, t) in truth.slices().iter().enumerate() {
        let start = Instant::now();
        let warm = if settings.warm_start { dictionary.as_ref() } else { None };
        match run_layer(l, t, slices.last(), warm, settings, exec, observer) {
            Ok(out) => {
                log::debug!(
                    "{} ratio {} seed {} layer {l}: ssim {:.4}",
                    settings.strategy,
                    settings.sampling_ratio,
                    settings.seed,
                    out.record.ssim.unwrap_or(f64::NAN)
                );
                records.push(out.record);
                slices.push(out.reconstruction);
                dictionary = Some(out.dictionary);
            }
            Err(e) => {
                log::warn!(
                    "{} ratio {} seed {} failed at layer {l}: {e}",
                    settings.strategy,
                    settings.sampling_ratio,
                    settings.seed
                );
                records.push(ResultRecord {
                    strategy: settings.strategy,
                    rho: settings.rho,
                    sampling_ratio: settings.sampling_ratio,
                    realisation_seed: settings.seed,
                    layer: l,
                    ssim: None,
                    psnr: None,
                    wall_time_seconds: start.elapsed().as_secs_f64(),
                });
                return CellOutcome {
                    settings: settings.clone(),
                    records,
                    reconstruction: None,
                    error: Some(e),
                };
            }
        }
    }
    CellOutcome {
        settings: settings.clone(),
        records,
        reconstruction: Some(Volume::new(slices).expect("reconstructions share the truth shape")),
        error: None,
    }
}

/// `output/<STRATEGY>/<ratio>/<seed>`.
pub fn cell_dir(output: &Path, strategy: Strategy, ratio: f64, seed: u64) -> PathBuf {
    output
        .join(strategy.as_str())
        .join(format!("{ratio}"))
        .join(seed.to_string())
}

pub const RESULTS_FILE: &str = "results.csv";

#[derive(Debug)]
pub struct ExperimentReport {
    pub records: Vec<ResultRecord>,
    pub failed_cells: usize,
    pub results_path: PathBuf,
}

/// Expands the configuration into cell settings, in output order: strategy,
/// then ratio, then seed, each as listed in the config.
pub fn cells(config: &ExperimentConfig) -> Vec<LayerSettings> {
    let mut out = Vec::new();
    for &strategy in &config.strategies {
        for &sampling_ratio in &config.sampling_ratios {
            for &seed in &config.seeds {
                out.push(LayerSettings {
                    strategy,
                    sampling_ratio,
                    rho: config.rho,
                    noise_sigma: config.noise_sigma,
                    bpfa: config.bpfa,
                    ssim: config.ssim,
                    seed,
                    warm_start: config.warm_start,
                });
            }
        }
    }
    out
}

/// Runs the full sweep over `truth`, writing reconstructed stacks under
/// [`cell_dir`] and all result rows to `output/results.csv`.
pub fn run_experiment_on(
    truth: &Volume,
    config: &ExperimentConfig,
    exec: Execution,
    observer: &dyn LayerObserver,
) -> Result<ExperimentReport> {
    config.validate()?;
    if config.bpfa.b > truth.n1().min(truth.n2()) {
        return Err(Error::InvalidParameter(format!(
            "patch size {} exceeds the {}x{} slices",
            config.bpfa.b,
            truth.n1(),
            truth.n2()
        )));
    }
    std::fs::create_dir_all(&config.output)?;
    let cells = cells(config);
    let outcomes = exec.map(cells.len(), |c| run_cell(truth, &cells[c], exec, observer));

    let mut records = Vec::new();
    let mut failed_cells = 0;
    for out in outcomes {
        if let Some(volume) = &out.reconstruction {
            let s = &out.settings;
            io::write_volume(volume, &cell_dir(&config.output, s.strategy, s.sampling_ratio, s.seed))?;
        }
        if out.error.is_some() {
            failed_cells += 1;
        }
        records.extend(out.records);
    }
    let results_path = config.output.join(RESULTS_FILE);
    io::write_results(&records, &results_path)?;
    Ok(ExperimentReport {
        records,
        failed_cells,
        results_path,
    })
}

/// Loads or generates the ground truth named by `config.source` and runs the
/// sweep.
pub fn run_experiment(
    config: &ExperimentConfig,
    exec: Execution,
    observer: &dyn LayerObserver,
) -> Result<ExperimentReport> {
    config.validate()?;
    let truth = config.source.load()?;
    run_experiment_on(&truth, config, exec, observer)
}

/// Full-observation BPFA pass over every layer, for cleaning noisy stacks.
pub fn denoise_volume(volume: &Volume, bpfa: &BpfaConfig, seed: RngSeed, exec: Execution) -> Result<Volume> {
    let mut out = Vec::with_capacity(volume.n3());
    for (l, slice) in volume.slices().iter().enumerate() {
        let layer_seed = seed.for_layer(l);
        let measurement = apply_mask(slice, &SamplingMask::full(slice.n_bar()), 0.0, layer_seed)?;
        let (state, patches) = infer_with_dictionary(&measurement, bpfa, layer_seed, None, exec)?;
        out.push(reconstruct_slice(&state, &patches)?);
    }
    Volume::new(out)
}
