use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::domain::Strategy;
use crate::error::{Error, Result};

pub const RESULT_HEADER: &str = "strategy,rho,sampling_ratio,realisation_seed,layer,ssim,psnr,wall_time_seconds";

/// One reconstructed layer of one sweep cell. A row with empty `ssim` and
/// `psnr` marks a cell that failed at `layer`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub strategy: Strategy,
    pub rho: f64,
    pub sampling_ratio: f64,
    pub realisation_seed: u64,
    pub layer: usize,
    pub ssim: Option<f64>,
    pub psnr: Option<f64>,
    pub wall_time_seconds: f64,
}

impl ResultRecord {
    pub fn is_failure(&self) -> bool {
        self.ssim.is_none()
    }

    fn validate(&self) -> Result<()> {
        if !(self.sampling_ratio > 0.0 && self.sampling_ratio <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "sampling_ratio {} outside (0, 1]",
                self.sampling_ratio
            )));
        }
        if let Some(s) = self.ssim {
            if !(-1.0..=1.0).contains(&s) {
                return Err(Error::InvalidParameter(format!("ssim {s} outside [-1, 1]")));
            }
        }
        Ok(())
    }
}

fn encode_rows(records: &[ResultRecord], header: bool) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(Vec::new());
    for r in records {
        r.validate()?;
        w.serialize(r)?;
    }
    if header && records.is_empty() {
        w.write_record(RESULT_HEADER.split(','))?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn check_header(path: &Path, bytes: &[u8]) -> Result<()> {
    let first = bytes.split(|&b| b == b'\n').next().unwrap_or_default();
    let first = first.strip_suffix(b"\r").unwrap_or(first);
    if first != RESULT_HEADER.as_bytes() {
        return Err(Error::MalformedHeader {
            path: path.to_path_buf(),
            reason: format!("expected CSV header {RESULT_HEADER:?}"),
        });
    }
    Ok(())
}

/// Writes `records` with a header, replacing any existing file.
pub fn write_results(records: &[ResultRecord], path: &Path) -> Result<()> {
    write_atomic(path, &encode_rows(records, true)?)
}

/// Appends one row, writing the header first if the file is new or empty.
pub fn append_result(record: &ResultRecord, path: &Path) -> Result<()> {
    let existing = match std::fs::read(path) {
        Ok(b) => b,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(e.into()),
    };
    let out = if existing.is_empty() {
        encode_rows(std::slice::from_ref(record), true)?
    } else {
        check_header(path, &existing)?;
        let mut out = existing;
        if !out.ends_with(b"\n") {
            out.push(b'\n');
        }
        out.extend(encode_rows(std::slice::from_ref(record), false)?);
        out
    };
    write_atomic(path, &out)
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRecord>> {
    let bytes = std::fs::read(path)?;
    check_header(path, &bytes)?;
    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}
