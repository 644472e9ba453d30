//! Subsampling mask generation.
//!
//! Uniform density sampling (UDS) draws `m` probe positions uniformly without
//! replacement. Targeted sampling splits the budget: `floor(rho * m)` positions
//! are drawn without replacement from a distribution built from the previous
//! layer's reconstruction (its intensity or its gradient magnitude), then the
//! remaining positions are drawn uniformly from the pixels not yet chosen.
//!
//! Weighted draws use exponential keys (Efraimidis-Spirakis): each eligible
//! pixel `q` gets key `ln(u_q) / p_q` with `u_q ~ U(0, 1]`, and the `k` largest
//! keys win. This has exactly the law of `k` successive draws, each from the
//! distribution renormalized over the pixels not yet drawn.

use log::warn;
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{uniform_open01, RngSeed, SamplingMask, Slice, Strategy, Stream};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsConfig {
    pub rho: f64,
    pub strategy: Strategy,
    pub m: usize,
}

impl TsConfig {
    pub fn validate(&self, n_bar: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(format!(
                "rho must lie in [0, 1], got {}",
                self.rho
            )));
        }
        if self.m == 0 || self.m > n_bar {
            return Err(Error::InvalidParameter(format!(
                "sample count must lie in [1, {n_bar}], got {}",
                self.m
            )));
        }
        Ok(())
    }

    /// Size of the targeted part, `floor(rho * m)`; zero for UDS.
    pub fn m_targeted(&self) -> usize {
        match self.strategy {
            Strategy::Uds => 0,
            _ => (self.rho * self.m as f64).floor() as usize,
        }
    }
}

/// Probability distribution over the pixels of a slice.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelDistribution {
    probs: Vec<f64>,
    uniform_fallback: bool,
}

impl PixelDistribution {
    pub fn uniform(n_bar: usize) -> Self {
        Self {
            probs: vec![1.0 / n_bar as f64; n_bar],
            uniform_fallback: false,
        }
    }

    /// Normalizes non-negative weights. An all-zero weight vector yields the
    /// uniform distribution with [`Self::is_fallback`] set.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("empty weight vector".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "weights must be finite and non-negative, found {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            warn!("degenerate targeting distribution, falling back to uniform");
            let mut d = Self::uniform(weights.len());
            d.uniform_fallback = true;
            return Ok(d);
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
            uniform_fallback: false,
        })
    }

    pub fn n_bar(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn is_fallback(&self) -> bool {
        self.uniform_fallback
    }
}

/// Uniform density mask: `m` distinct indices, every m-subset equally likely.
pub fn uds_mask(n_bar: usize, m: usize, seed: RngSeed) -> Result<SamplingMask> {
    if m > n_bar {
        return Err(Error::InvalidParameter(format!(
            "cannot sample {m} of {n_bar} pixels without replacement"
        )));
    }
    let mut rng = seed.stream(Stream::Mask);
    let random = index::sample(&mut rng, n_bar, m).into_vec();
    SamplingMask::from_parts(n_bar, Vec::new(), random, Strategy::Uds, 0.0, seed.0)
}

/// TS-intensity distribution: `p(q) = x(q) / ||x||_1`.
pub fn intensity_distribution(prev_recon: &Slice) -> Result<PixelDistribution> {
    PixelDistribution::from_weights(prev_recon.as_slice())
}

/// Sum of absolute forward differences along rows and columns. The trailing
/// row and column use a zero difference.
pub fn gradient_magnitude(slice: &Slice) -> Result<Slice> {
    let (n1, n2) = slice.shape();
    if n1 < 2 || n2 < 2 {
        return Err(Error::DimensionMismatch(format!(
            "gradient needs at least a 2x2 slice, got {n1}x{n2}"
        )));
    }
    Ok(Slice::from_fn(n1, n2, |r, c| {
        let v = slice.get(r, c);
        let down = if r + 1 < n1 {
            (slice.get(r + 1, c) - v).abs()
        } else {
            0.0
        };
        let right = if c + 1 < n2 {
            (slice.get(r, c + 1) - v).abs()
        } else {
            0.0
        };
        down + right
    }))
}

/// TS-gradient distribution: `p(q) = G(q) / ||G||_1` with `G` from
/// [`gradient_magnitude`]; uniform fallback for flat slices.
pub fn gradient_distribution(prev_recon: &Slice) -> Result<PixelDistribution> {
    PixelDistribution::from_weights(gradient_magnitude(prev_recon)?.as_slice())
}

/// Draws `k` distinct indices outside `exclude` following successive draws
/// from the renormalized distribution.
///
/// When fewer than `k` eligible pixels carry positive probability, all of them
/// are taken and the deficit is filled uniformly from the remaining eligible
/// pixels.
pub fn weighted_sample_without_replacement<R: Rng + ?Sized>(
    dist: &PixelDistribution,
    k: usize,
    exclude: &[bool],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n_bar = dist.n_bar();
    if exclude.len() != n_bar {
        return Err(Error::DimensionMismatch(format!(
            "exclusion set covers {} pixels, distribution {n_bar}",
            exclude.len()
        )));
    }
    let eligible = exclude.iter().filter(|e| !**e).count();
    if k > eligible {
        return Err(Error::InvalidParameter(format!(
            "cannot draw {k} indices from {eligible} eligible pixels"
        )));
    }
    if k == 0 {
        return Ok(Vec::new());
    }

    let mut keyed: Vec<(f64, usize)> = dist
        .probs()
        .iter()
        .enumerate()
        .filter(|&(q, &p)| !exclude[q] && p > 0.0)
        .map(|(q, &p)| (uniform_open01(rng).ln() / p, q))
        .collect();

    if keyed.len() <= k {
        let mut chosen: Vec<usize> = keyed.into_iter().map(|(_, q)| q).collect();
        let deficit = k - chosen.len();
        if deficit > 0 {
            warn!(
                "targeting distribution supports only {} of {k} requested pixels; \
                 topping up {deficit} uniformly",
                chosen.len()
            );
            let mut taken = exclude.to_vec();
            for &q in &chosen {
                taken[q] = true;
            }
            chosen.extend(uniform_from_remaining(&taken, deficit, rng));
        }
        return Ok(chosen);
    }

    // Largest keys first; ties broken by index for determinism.
    let cmp = |a: &(f64, usize), b: &(f64, usize)| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1));
    keyed.select_nth_unstable_by(k - 1, cmp);
    keyed.truncate(k);
    keyed.sort_unstable_by(cmp);
    Ok(keyed.into_iter().map(|(_, q)| q).collect())
}

/// `count` indices drawn uniformly without replacement among `!taken`.
fn uniform_from_remaining<R: Rng + ?Sized>(taken: &[bool], count: usize, rng: &mut R) -> Vec<usize> {
    let pool: Vec<usize> = (0..taken.len()).filter(|&q| !taken[q]).collect();
    index::sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i])
        .collect()
}

/// Targeting distribution for `strategy` computed from `prev_recon`.
pub fn strategy_distribution(strategy: Strategy, prev_recon: &Slice) -> Result<PixelDistribution> {
    match strategy {
        Strategy::Uds => Ok(PixelDistribution::uniform(prev_recon.n_bar())),
        Strategy::TsIntensity => intensity_distribution(prev_recon),
        Strategy::TsGradient => gradient_distribution(prev_recon),
    }
}

/// Targeted-sampling mask over an `n_bar`-pixel slice.
///
/// The targeted part is drawn first from the strategy's distribution of
/// `prev_recon`; the random part is uniform over the remaining pixels. UDS
/// ignores `rho` and `prev_recon`.
pub fn ts_mask(config: &TsConfig, n_bar: usize, prev_recon: Option<&Slice>, seed: RngSeed) -> Result<SamplingMask> {
    config.validate(n_bar)?;
    if config.strategy == Strategy::Uds {
        return uds_mask(n_bar, config.m, seed);
    }
    let prev = prev_recon.ok_or_else(|| {
        Error::InvalidParameter(format!("{} needs the previous layer's reconstruction", config.strategy))
    })?;
    if prev.n_bar() != n_bar {
        return Err(Error::DimensionMismatch(format!(
            "previous reconstruction has {} pixels, expected {n_bar}",
            prev.n_bar()
        )));
    }
    let dist = strategy_distribution(config.strategy, prev)?;
    ts_mask_from_distribution(config, &dist, seed)
}

/// [`ts_mask`] with an explicit targeting distribution.
pub fn ts_mask_from_distribution(config: &TsConfig, dist: &PixelDistribution, seed: RngSeed) -> Result<SamplingMask> {
    let n_bar = dist.n_bar();
    config.validate(n_bar)?;
    let m_t = config.m_targeted();
    let mut rng = seed.stream(Stream::Mask);
    let mut taken = vec![false; n_bar];
    let targeted = weighted_sample_without_replacement(dist, m_t, &taken, &mut rng)?;
    for &q in &targeted {
        taken[q] = true;
    }
    let random = uniform_from_remaining(&taken, config.m - m_t, &mut rng);
    SamplingMask::from_parts(n_bar, targeted, random, config.strategy, config.rho, seed.0)
}
