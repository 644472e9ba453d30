use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pnm::{decode_pbm, encode_pbm, Bitmap};
use super::write_atomic;
use crate::domain::{SamplingMask, Strategy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSidecar {
    pub m: usize,
    pub m_targeted: usize,
    pub m_random: usize,
    pub rho: f64,
    pub strategy: Strategy,
    pub seed: u64,
}

/// JSON sidecar next to a mask bitmap: same stem, `.json` extension.
pub fn sidecar_path(bitmap: &Path) -> PathBuf {
    bitmap.with_extension("json")
}

/// Writes `mask` over an `n1 x n2` grid as a P4 bitmap at `path` plus its
/// sidecar.
pub fn write_mask(mask: &SamplingMask, shape: (usize, usize), path: &Path) -> Result<()> {
    let (n1, n2) = shape;
    if n1 * n2 != mask.n_bar() {
        return Err(Error::DimensionMismatch(format!(
            "{n1}x{n2} grid for a mask over {} pixels",
            mask.n_bar()
        )));
    }
    let bitmap = Bitmap {
        width: n2,
        height: n1,
        bits: mask.to_bitmap(),
    };
    let sidecar = MaskSidecar {
        m: mask.len(),
        m_targeted: mask.m_targeted(),
        m_random: mask.m_random(),
        rho: mask.rho,
        strategy: mask.strategy,
        seed: mask.seed,
    };
    write_atomic(path, &encode_pbm(&bitmap))?;
    write_atomic(&sidecar_path(path), &serde_json::to_vec_pretty(&sidecar)?)
}

/// Reads a mask and its `(n1, n2)` grid shape. The targeted/random partition
/// comes back as counts only.
pub fn read_mask(path: &Path) -> Result<(SamplingMask, (usize, usize))> {
    let bitmap = decode_pbm(path, &std::fs::read(path)?)?;
    let side: MaskSidecar = serde_json::from_slice(&std::fs::read(sidecar_path(path))?)?;
    let indices: Vec<usize> = bitmap
        .bits
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    if side.m != indices.len() || side.m_targeted + side.m_random != side.m {
        return Err(Error::CardinalityMismatch {
            sidecar: side.m,
            bitmap: indices.len(),
        });
    }
    let mask = SamplingMask::from_indices(
        bitmap.width * bitmap.height,
        indices,
        side.m_targeted,
        side.strategy,
        side.rho,
        side.seed,
    )?;
    Ok((mask, (bitmap.height, bitmap.width)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::RngSeed;
    use crate::sampling::uds_mask;

    #[test]
    fn full_mask_is_all_ones() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mask.pbm");
        write_mask(&SamplingMask::full(12), (3, 4), &path).unwrap();
        let bitmap = decode_pbm(&path, &std::fs::read(&path).unwrap()).unwrap();
        assert!(bitmap.bits.iter().all(|&b| b));
        let (mask, shape) = read_mask(&path).unwrap();
        assert_eq!(shape, (3, 4));
        assert_eq!(mask.len(), 12);
    }

    #[test]
    fn random_mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pbm");
        let mask = uds_mask(11 * 13, 40, RngSeed(8)).unwrap();
        write_mask(&mask, (11, 13), &path).unwrap();
        let (back, _) = read_mask(&path).unwrap();
        assert_eq!(back.indices(), mask.indices());
        assert_eq!(
            (back.m_targeted(), back.m_random()),
            (mask.m_targeted(), mask.m_random())
        );
        assert_eq!(
            (back.strategy, back.rho, back.seed),
            (mask.strategy, mask.rho, mask.seed)
        );
    }

    #[test]
    fn popcount_disagreement_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pbm");
        write_mask(&uds_mask(16, 5, RngSeed(1)).unwrap(), (4, 4), &path).unwrap();
        let mut side: MaskSidecar = serde_json::from_slice(&std::fs::read(sidecar_path(&path)).unwrap()).unwrap();
        side.m = 6;
        side.m_random = 6;
        std::fs::write(sidecar_path(&path), serde_json::to_vec(&side).unwrap()).unwrap();
        assert!(matches!(
            read_mask(&path),
            Err(Error::CardinalityMismatch { sidecar: 6, bitmap: 5 })
        ));
    }

    #[test]
    fn shape_must_cover_mask() {
        let dir = tempfile::tempdir().unwrap();
        let r = write_mask(&SamplingMask::full(12), (3, 5), &dir.path().join("m.pbm"));
        assert!(r.is_err());
    }
}
