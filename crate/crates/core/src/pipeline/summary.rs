use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::Strategy;
use crate::error::{Error, Result};
use crate::io::{read_results, write_atomic, ResultRecord};

pub const SUMMARY_HEADER: &str = "strategy,sampling_ratio,n,n_failed,mean_ssim,std_ssim,mean_psnr";

/// Aggregate over all layers and seeds of one `(strategy, ratio)` group.
/// `std_ssim` is the sample standard deviation (0 for a single row).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: Strategy,
    pub sampling_ratio: f64,
    pub n: usize,
    pub n_failed: usize,
    pub mean_ssim: f64,
    pub std_ssim: f64,
    pub mean_psnr: f64,
}

/// Groups rows by strategy (UDS, TS_INTENSITY, TS_GRADIENT) and then by
/// ascending ratio. Failure marker rows are only counted.
pub fn summarize_records(records: &[ResultRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("no result rows to summarize".into()));
    }
    let mut groups: BTreeMap<(Strategy, u64), Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        // Positive ratios order like their bit patterns.
        groups
            .entry((r.strategy, r.sampling_ratio.to_bits()))
            .or_default()
            .push(r);
    }
    Ok(groups
        .into_iter()
        .map(|((strategy, bits), rows)| {
            let ssim: Vec<f64> = rows.iter().filter_map(|r| r.ssim).collect();
            let psnr: Vec<f64> = rows.iter().filter_map(|r| r.psnr).collect();
            let n = ssim.len();
            let mean = |v: &[f64]| {
                if v.is_empty() {
                    f64::NAN
                } else {
                    v.iter().sum::<f64>() / v.len() as f64
                }
            };
            let mean_ssim = mean(&ssim);
            let std_ssim = if n > 1 {
                (ssim.iter().map(|s| (s - mean_ssim).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            SummaryRow {
                strategy,
                sampling_ratio: f64::from_bits(bits),
                n,
                n_failed: rows.len() - n,
                mean_ssim,
                std_ssim,
                mean_psnr: mean(&psnr),
            }
        })
        .collect())
}

/// Reads a results CSV and aggregates it.
pub fn summarize(csv_path: &Path) -> Result<Vec<SummaryRow>> {
    summarize_records(&read_results(csv_path)?)
}

/// Summary table as CSV text with a header.
pub fn encode_summary(rows: &[SummaryRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(SUMMARY_HEADER.split(','))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_summary(rows: &[SummaryRow], path: &Path) -> Result<()> {
    write_atomic(path, &encode_summary(rows)?)
}
