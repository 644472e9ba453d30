//! Shared domain types: image slices, volumes, sampling masks, measurements,
//! and the seeded randomness contract.
//!
//! Pixels are addressed in row-major order everywhere: pixel `(row, col)` of an
//! `n1 x n2` slice lives at linear index `row * n2 + col` (see [`linear_index`]).
//! Intensities are doubles in `[0, 1]`.
//!
//! # Randomness
//!
//! Every random draw in the crate comes from a ChaCha8 stream
//! ([`rand_chacha::ChaCha8Rng`]) built by [`RngSeed::stream`]: the generator is
//! seeded with `ChaCha8Rng::seed_from_u64(seed)` and the 64-bit ChaCha stream id
//! is set to the [`Stream`] discriminant, so masks, noise, inference and phantom
//! generation never share a keystream. Per-layer seeds are `seed ^ layer`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major linear index of `(row, col)` in an `n1 x n2` grid.
pub fn linear_index(row: usize, col: usize, n1: usize, n2: usize) -> Result<usize> {
    if row >= n1 || col >= n2 {
        return Err(Error::OutOfBounds {
            row,
            col,
            rows: n1,
            cols: n2,
        });
    }
    Ok(row * n2 + col)
}

/// Inverse of [`linear_index`].
pub fn grid_position(index: usize, n1: usize, n2: usize) -> Result<(usize, usize)> {
    if n2 == 0 || index >= n1 * n2 {
        return Err(Error::OutOfBounds {
            row: index.checked_div(n2).unwrap_or(index),
            col: index.checked_rem(n2).unwrap_or(0),
            rows: n1,
            cols: n2,
        });
    }
    Ok((index / n2, index % n2))
}

/// A single `n1 x n2` grayscale image stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Slice {
    n1: usize,
    n2: usize,
    data: Vec<f64>,
}

impl Slice {
    pub fn new(n1: usize, n2: usize, data: Vec<f64>) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::DimensionMismatch(format!(
                "slice dimensions must be positive, got {n1}x{n2}"
            )));
        }
        if data.len() != n1 * n2 {
            return Err(Error::DimensionMismatch(format!(
                "{n1}x{n2} slice needs {} values, got {}",
                n1 * n2,
                data.len()
            )));
        }
        Ok(Self { n1, n2, data })
    }

    pub fn zeros(n1: usize, n2: usize) -> Self {
        Self::filled(n1, n2, 0.0)
    }

    pub fn filled(n1: usize, n2: usize, value: f64) -> Self {
        assert!(n1 > 0 && n2 > 0, "slice dimensions must be positive");
        Self {
            n1,
            n2,
            data: vec![value; n1 * n2],
        }
    }

    pub fn from_fn(n1: usize, n2: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n1 > 0 && n2 > 0, "slice dimensions must be positive");
        let mut data = Vec::with_capacity(n1 * n2);
        for r in 0..n1 {
            for c in 0..n2 {
                data.push(f(r, c));
            }
        }
        Self { n1, n2, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn n_bar(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.n1, self.n2)
    }

    /// Unchecked in release builds; callers index within `rows() x cols()`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        debug_assert!(row < self.n1 && col < self.n2);
        self.data[row * self.n2 + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.n1 && col < self.n2);
        self.data[row * self.n2 + col] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            n1: self.n1,
            n2: self.n2,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// True when every value lies in `[0, 1]`.
    pub fn is_normalized(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub(crate) fn check_same_shape(&self, other: &Slice) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.n1, self.n2, other.n1, other.n2
            )));
        }
        Ok(())
    }
}

/// Ordered stack of equally-sized slices with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    n1: usize,
    n2: usize,
    slices: Vec<Slice>,
}

impl Volume {
    pub fn new(slices: Vec<Slice>) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::DimensionMismatch("volume needs at least one slice".into()))?;
        let (n1, n2) = first.shape();
        for (l, s) in slices.iter().enumerate() {
            if s.shape() != (n1, n2) {
                return Err(Error::DimensionMismatch(format!(
                    "slice {l} is {}x{}, expected {n1}x{n2}",
                    s.rows(),
                    s.cols()
                )));
            }
            if !s.is_normalized() {
                return Err(Error::InvalidParameter(format!(
                    "slice {l} has intensities outside [0, 1]"
                )));
            }
        }
        Ok(Self { n1, n2, slices })
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n3(&self) -> usize {
        self.slices.len()
    }

    pub fn slice(&self, layer: usize) -> &Slice {
        &self.slices[layer]
    }

    pub fn slices(&self) -> &[Slice] {
        &self.slices
    }

    pub fn into_slices(self) -> Vec<Slice> {
        self.slices
    }
}

/// Which sampling strategy produced a mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "UDS")]
    Uds,
    #[serde(rename = "TS_INTENSITY")]
    TsIntensity,
    #[serde(rename = "TS_GRADIENT")]
    TsGradient,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::Uds, Strategy::TsIntensity, Strategy::TsGradient];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Uds => "UDS",
            Strategy::TsIntensity => "TS_INTENSITY",
            Strategy::TsGradient => "TS_GRADIENT",
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "UDS" => Ok(Strategy::Uds),
            "TS_INTENSITY" => Ok(Strategy::TsIntensity),
            "TS_GRADIENT" => Ok(Strategy::TsGradient),
            other => Err(Error::InvalidParameter(format!("unknown strategy {other:?}"))),
        }
    }
}

/// Set of sampled pixel indices for one layer.
///
/// `indices` is sorted ascending and duplicate free. When the mask was drawn in
/// this process the targeted subset is known; masks loaded from disk only carry
/// the targeted/random counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    n_bar: usize,
    indices: Vec<usize>,
    m_targeted: usize,
    m_random: usize,
    targeted: Option<Vec<usize>>,
    pub strategy: Strategy,
    pub rho: f64,
    pub seed: u64,
}

impl SamplingMask {
    /// Builds a mask from its targeted and random parts. Both parts must be
    /// in range and mutually disjoint.
    pub fn from_parts(
        n_bar: usize,
        mut targeted: Vec<usize>,
        mut random: Vec<usize>,
        strategy: Strategy,
        rho: f64,
        seed: u64,
    ) -> Result<Self> {
        targeted.sort_unstable();
        random.sort_unstable();
        let mut indices = Vec::with_capacity(targeted.len() + random.len());
        indices.extend_from_slice(&targeted);
        indices.extend_from_slice(&random);
        indices.sort_unstable();
        check_indices(n_bar, &indices)?;
        Ok(Self {
            n_bar,
            m_targeted: targeted.len(),
            m_random: random.len(),
            indices,
            targeted: Some(targeted),
            strategy,
            rho,
            seed,
        })
    }

    /// Builds a mask whose partition is only known by its counts.
    pub fn from_indices(
        n_bar: usize,
        mut indices: Vec<usize>,
        m_targeted: usize,
        strategy: Strategy,
        rho: f64,
        seed: u64,
    ) -> Result<Self> {
        indices.sort_unstable();
        check_indices(n_bar, &indices)?;
        if m_targeted > indices.len() {
            return Err(Error::InvalidParameter(format!(
                "m_targeted {m_targeted} exceeds mask size {}",
                indices.len()
            )));
        }
        Ok(Self {
            n_bar,
            m_random: indices.len() - m_targeted,
            m_targeted,
            indices,
            targeted: None,
            strategy,
            rho,
            seed,
        })
    }

    /// Mask sampling every pixel.
    pub fn full(n_bar: usize) -> Self {
        Self {
            n_bar,
            indices: (0..n_bar).collect(),
            m_targeted: 0,
            m_random: n_bar,
            targeted: Some(Vec::new()),
            strategy: Strategy::Uds,
            rho: 0.0,
            seed: 0,
        }
    }

    pub fn n_bar(&self) -> usize {
        self.n_bar
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn m_targeted(&self) -> usize {
        self.m_targeted
    }

    pub fn m_random(&self) -> usize {
        self.m_random
    }

    pub fn targeted_indices(&self) -> Option<&[usize]> {
        self.targeted.as_deref()
    }

    /// Random part, when the partition is known.
    pub fn random_indices(&self) -> Option<Vec<usize>> {
        let targeted = self.targeted.as_ref()?;
        Some(
            self.indices
                .iter()
                .copied()
                .filter(|i| targeted.binary_search(i).is_err())
                .collect(),
        )
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Dense indicator vector of length `n_bar`.
    pub fn to_bitmap(&self) -> Vec<bool> {
        let mut bits = vec![false; self.n_bar];
        for &i in &self.indices {
            bits[i] = true;
        }
        bits
    }

    pub fn sampling_ratio(&self) -> f64 {
        self.indices.len() as f64 / self.n_bar as f64
    }
}

fn check_indices(n_bar: usize, sorted: &[usize]) -> Result<()> {
    if sorted.len() > n_bar {
        return Err(Error::InvalidParameter(format!(
            "mask holds {} indices but n_bar is {n_bar}",
            sorted.len()
        )));
    }
    if let Some(&last) = sorted.last() {
        if last >= n_bar {
            return Err(Error::InvalidParameter(format!(
                "mask index {last} out of range for n_bar {n_bar}"
            )));
        }
    }
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("mask contains duplicate indices".into()));
    }
    Ok(())
}

/// Masked, possibly noisy observation of one layer. Unsampled pixels hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSlice {
    pub mask: SamplingMask,
    pub values: Slice,
    pub noise_sigma: f64,
}

impl MeasurementSlice {
    pub fn n1(&self) -> usize {
        self.values.rows()
    }

    pub fn n2(&self) -> usize {
        self.values.cols()
    }
}

/// Keystream selector for [`RngSeed::stream`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Mask = 1,
    Noise = 2,
    Inference = 3,
    Phantom = 4,
}

/// 64-bit seed from which all randomness in a run is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn stream(self, stream: Stream) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(stream as u64);
        rng
    }

    /// Sub-seed for one layer of a volume.
    pub fn for_layer(self, layer: usize) -> RngSeed {
        RngSeed(self.0 ^ layer as u64)
    }

    /// Well-mixed child seed (splitmix64 finaliser over `seed + salt`).
    pub fn derive(self, salt: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }
}

/// Observes `slice` on the mask: `values[j] = clamp(slice[j] + n_j, 0, 1)` for
/// sampled `j` with `n_j ~ N(0, noise_sigma^2)`, and 0 elsewhere.
///
/// Noise is drawn from the [`Stream::Noise`] keystream in ascending index order.
pub fn apply_mask(slice: &Slice, mask: &SamplingMask, noise_sigma: f64, seed: RngSeed) -> Result<MeasurementSlice> {
    if mask.n_bar() != slice.n_bar() {
        return Err(Error::DimensionMismatch(format!(
            "mask covers {} pixels but slice has {}",
            mask.n_bar(),
            slice.n_bar()
        )));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "noise_sigma must be finite and non-negative, got {noise_sigma}"
        )));
    }
    let mut values = Slice::zeros(slice.rows(), slice.cols());
    let src = slice.as_slice();
    let dst = values.as_mut_slice();
    if noise_sigma == 0.0 {
        for &j in mask.indices() {
            dst[j] = src[j].clamp(0.0, 1.0);
        }
    } else {
        let mut rng = seed.stream(Stream::Noise);
        let normal = Normal::new(0.0, noise_sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        for &j in mask.indices() {
            dst[j] = (src[j] + normal.sample(&mut rng)).clamp(0.0, 1.0);
        }
    }
    Ok(MeasurementSlice {
        mask: mask.clone(),
        values,
        noise_sigma,
    })
}

/// Uniform draw helper shared by tests and samplers.
pub(crate) fn uniform_open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // (0, 1]: avoids ln(0) in exponential keys.
    1.0 - rng.random::<f64>()
}
