//! On-disk formats for volumes, masks, results and fitted states.
//!
//! * Volumes are directories of `slice_%04d.pgm` files (binary P5, 8-bit on
//!   write, 8- or 16-bit on read) plus `meta.json` with `{n1, n2, n3,
//!   bit_depth}`. Intensities map to `v / maxval` on read and
//!   `round(v * 255)` on write.
//! * Masks are P4 bitmaps (set bit = sampled pixel) with a JSON sidecar of the
//!   same stem carrying `{m, m_targeted, m_random, rho, strategy, seed}`.
//! * Results are CSV rows of [`ResultRecord`].
//! * BPFA checkpoints are a JSON header followed by little-endian binary
//!   arrays, see [`checkpoint`].
//!
//! Every file is written to a temporary sibling first and renamed into place.

pub mod checkpoint;
pub mod mask;
pub mod pnm;
pub mod results;
pub mod volume;

use std::io::Write;
use std::path::Path;

use crate::error::Result;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use mask::{read_mask, write_mask};
pub use results::{append_result, read_results, write_results, ResultRecord, RESULT_HEADER};
pub use volume::{read_slice, read_volume, write_slice, write_volume, VolumeMeta};

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
