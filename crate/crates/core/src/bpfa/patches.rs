//! Dense stride-1 patch partition of a measured slice.

use crate::domain::{MeasurementSlice, Slice};
use crate::error::{Error, Result};

/// All `b x b` patches of an `n1 x n2` measurement, taken with stride 1.
///
/// Patches are numbered row-major by their top-left anchor, so there are
/// `(n1 - b + 1) * (n2 - b + 1)` of them. Patch pixels are numbered row-major
/// inside the patch (offset `u * b + v` for patch row `u`, column `v`). The
/// set keeps the measurement itself and materializes patches on demand.
#[derive(Debug, Clone)]
pub struct PatchSet {
    b: usize,
    n1: usize,
    n2: usize,
    values: Vec<f64>,
    observed: Vec<bool>,
}

/// Observed pixels of one patch: offsets into the `b * b` patch and values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservedPatch {
    pub offsets: Vec<usize>,
    pub values: Vec<f64>,
}

impl ObservedPatch {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Partitions a measurement into overlapping `b x b` patches.
pub fn extract_patches(measurement: &MeasurementSlice, b: usize) -> Result<PatchSet> {
    PatchSet::new(&measurement.values, measurement.mask.to_bitmap(), b)
}

impl PatchSet {
    pub fn new(values: &Slice, observed: Vec<bool>, b: usize) -> Result<Self> {
        let (n1, n2) = values.shape();
        if b == 0 || b > n1.min(n2) {
            return Err(Error::InvalidParameter(format!(
                "patch size {b} must lie in [1, {}] for a {n1}x{n2} slice",
                n1.min(n2)
            )));
        }
        if observed.len() != n1 * n2 {
            return Err(Error::DimensionMismatch(format!(
                "observation bitmap covers {} pixels, slice has {}",
                observed.len(),
                n1 * n2
            )));
        }
        Ok(Self {
            b,
            n1,
            n2,
            values: values.as_slice().to_vec(),
            observed,
        })
    }

    /// Patch set over a fully observed slice.
    pub fn fully_observed(slice: &Slice, b: usize) -> Result<Self> {
        Self::new(slice, vec![true; slice.n_bar()], b)
    }

    pub fn b(&self) -> usize {
        self.b
    }

    /// Pixels per patch, `b * b`.
    pub fn dim(&self) -> usize {
        self.b * self.b
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    fn anchors_per_row(&self) -> usize {
        self.n2 - self.b + 1
    }

    pub fn n_p(&self) -> usize {
        (self.n1 - self.b + 1) * self.anchors_per_row()
    }

    /// Top-left `(row, col)` of patch `i`.
    pub fn anchor(&self, i: usize) -> (usize, usize) {
        (i / self.anchors_per_row(), i % self.anchors_per_row())
    }

    pub fn anchors(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_p()).map(|i| self.anchor(i))
    }

    /// Linear slice index of pixel `offset` in patch `i`.
    #[inline]
    pub fn pixel_index(&self, i: usize, offset: usize) -> usize {
        let (r, c) = self.anchor(i);
        (r + offset / self.b) * self.n2 + c + offset % self.b
    }

    pub fn patch_values(&self, i: usize) -> Vec<f64> {
        (0..self.dim()).map(|o| self.values[self.pixel_index(i, o)]).collect()
    }

    pub fn patch_mask(&self, i: usize) -> Vec<bool> {
        (0..self.dim()).map(|o| self.observed[self.pixel_index(i, o)]).collect()
    }

    pub fn observed_patch(&self, i: usize) -> ObservedPatch {
        let (r0, c0) = self.anchor(i);
        let mut out = ObservedPatch::default();
        for u in 0..self.b {
            let row = (r0 + u) * self.n2 + c0;
            for v in 0..self.b {
                if self.observed[row + v] {
                    out.offsets.push(u * self.b + v);
                    out.values.push(self.values[row + v]);
                }
            }
        }
        out
    }

    /// Whether pixel `offset` of patch `i` was sampled.
    #[inline]
    pub fn is_observed(&self, i: usize, offset: usize) -> bool {
        self.observed[self.pixel_index(i, offset)]
    }

    #[inline]
    pub fn value(&self, i: usize, offset: usize) -> f64 {
        self.values[self.pixel_index(i, offset)]
    }
}
