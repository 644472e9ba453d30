//! Beta-process factor analysis over image patches, fitted by stochastic EM.
//!
//! Each patch is modelled as `y_i = P_i D (z_i ∘ w_i) + n_i` with atoms
//! `d_k ~ N(0, B^-2 I)`, weights `w_i ~ N(0, 1/gamma_w I)`, noise
//! `n_i ~ N(0, 1/gamma_n I)`, indicators `z_ik ~ Bernoulli(pi_k)` and
//! `pi_k ~ Beta(a/K, b(K-1)/K)`. `P_i` keeps the sampled pixels of patch `i`.
//!
//! Inference sweeps the patches in shuffled mini-batches. For each batch:
//!
//! * **E-step.** One coordinate pass over the atoms of every patch. With the
//!   residual `r` of the observed pixels excluding atom `k`, `e = ||P d_k||^2`
//!   and `c = (P d_k)^T r`, the conditional posterior of `w_ik` given
//!   `z_ik = 1` has precision `lambda = gamma_w + gamma_n e` and mean
//!   `mu = gamma_n c / lambda`. The indicator is switched on when the collapsed
//!   log-odds `logit(pi_k) + ln(gamma_w / lambda) / 2 + gamma_n c mu / 2` are
//!   positive, in which case `w_ik = mu`; otherwise `w_ik = 0`.
//! * **M-step.** Each dictionary row (one patch pixel across all atoms) solves
//!   the batch least-squares problem over the patches that observed that pixel.
//!   A damping term `DICT_DAMPING` times the mean diagonal of the row system,
//!   centred on the current row, keeps the solve well posed; the result is
//!   blended as `new = eta * solution + (1 - eta) * old`. Atoms no batch patch
//!   uses, and pixels no batch patch observed, are left untouched. `pi` takes the posterior mean of the
//!   batch usage counts under the Beta pseudo-counts and `gamma_n` the inverse
//!   mean squared residual of the observed pixels; both are blended with `eta`
//!   as well.
//!
//! `gamma_w` stays at its configured value. The Beta second parameter is
//! floored at [`EPS_BETA`] and `pi` is kept in `[EPS_PI, 1 - EPS_PI]` so the
//! log-odds stay finite when `b = 0`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::patches::{extract_patches, ObservedPatch, PatchSet};
use crate::domain::{MeasurementSlice, RngSeed, Slice, Stream};
use crate::error::{Error, Result};
use crate::par::Execution;

pub const EPS_BETA: f64 = 1e-6;
pub const EPS_PI: f64 = 1e-6;
pub const GAMMA_N_MIN: f64 = 1e-3;
pub const GAMMA_N_MAX: f64 = 1e9;
pub const RSS_FLOOR: f64 = 1e-12;
/// Relative damping of the dictionary row solves.
pub const DICT_DAMPING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BpfaConfig {
    /// Number of atoms `K`.
    pub k: usize,
    /// Patch side `B`.
    pub b: usize,
    pub n_epoch: usize,
    /// Learning rate in `(0, 1]`.
    pub eta: f64,
    pub n_batch: usize,
    pub a: f64,
    pub b_param: f64,
    pub gamma_n_init: f64,
    pub gamma_w_init: f64,
}

impl Default for BpfaConfig {
    fn default() -> Self {
        Self {
            k: 36,
            b: 14,
            n_epoch: 2,
            eta: 0.85,
            n_batch: 163_844,
            a: 1.0,
            b_param: 0.0,
            gamma_n_init: 1.0,
            gamma_w_init: 1e6,
        }
    }
}

impl BpfaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.k == 0 || self.b == 0 || self.n_epoch == 0 || self.n_batch == 0 {
            return bad("k, b, n_epoch and n_batch must be positive".into());
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if !(self.a > 0.0 && self.a.is_finite()) || !(self.b_param >= 0.0 && self.b_param.is_finite()) {
            return bad(format!(
                "beta parameters must satisfy a > 0, b >= 0, got ({}, {})",
                self.a, self.b_param
            ));
        }
        if !(self.gamma_n_init > 0.0 && self.gamma_n_init.is_finite())
            || !(self.gamma_w_init > 0.0 && self.gamma_w_init.is_finite())
        {
            return bad("precisions must be positive and finite".into());
        }
        Ok(())
    }

    /// Beta pseudo-counts `(a/K, max(b, eps)(K-1)/K)`.
    fn beta_prior(&self) -> (f64, f64) {
        let k = self.k as f64;
        let b = self.b_param.max(EPS_BETA);
        (self.a / k, b * (k - 1.0).max(1.0) / k)
    }
}

/// `K` atoms of `B^2` values, stored atom-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    k: usize,
    dim: usize,
    atoms: Vec<f64>,
}

impl Dictionary {
    pub fn new(k: usize, dim: usize, atoms: Vec<f64>) -> Result<Self> {
        if atoms.len() != k * dim {
            return Err(Error::DimensionMismatch(format!(
                "{k} atoms of {dim} values need {} entries, got {}",
                k * dim,
                atoms.len()
            )));
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("dictionary holds non-finite entries".into()));
        }
        Ok(Self { k, dim, atoms })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn atom(&self, k: usize) -> &[f64] {
        &self.atoms[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn get(&self, k: usize, offset: usize) -> f64 {
        self.atoms[k * self.dim + offset]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.atoms
    }
}

/// Summary recorded after every epoch of [`infer`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mini-batches processed in this epoch.
    pub batches: usize,
    /// Sum of squared residuals over every observed pixel of every patch.
    pub masked_rss: f64,
    pub gamma_n: f64,
    /// Mean number of active atoms per patch.
    pub mean_active: f64,
}

/// Dictionary, per-patch codes and global parameters for one slice.
#[derive(Debug, Clone, PartialEq)]
pub struct BpfaState {
    pub dictionary: Dictionary,
    n_p: usize,
    /// `n_p x K` indicators, row-major by patch.
    pub z: Vec<bool>,
    /// `n_p x K` weights, row-major by patch.
    pub w: Vec<f64>,
    pub pi: Vec<f64>,
    pub gamma_n: f64,
    pub gamma_w: f64,
    pub a: f64,
    pub b_param: f64,
    pub history: Vec<EpochStats>,
}

impl BpfaState {
    /// Assembles a state from its parts.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dictionary: Dictionary,
        z: Vec<bool>,
        w: Vec<f64>,
        pi: Vec<f64>,
        gamma_n: f64,
        gamma_w: f64,
        a: f64,
        b_param: f64,
    ) -> Result<Self> {
        let k = dictionary.k();
        if pi.len() != k || z.len() != w.len() || !z.len().is_multiple_of(k) {
            return Err(Error::DimensionMismatch(format!(
                "inconsistent state: K = {k}, |pi| = {}, |z| = {}, |w| = {}",
                pi.len(),
                z.len(),
                w.len()
            )));
        }
        if pi.iter().any(|p| !(0.0..=1.0).contains(p)) || !(gamma_n > 0.0) || !(gamma_w > 0.0) {
            return Err(Error::InvalidParameter(
                "pi must lie in [0, 1] and precisions be positive".into(),
            ));
        }
        Ok(Self {
            n_p: z.len() / k,
            dictionary,
            z,
            w,
            pi,
            gamma_n,
            gamma_w,
            a,
            b_param,
            history: Vec::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.dictionary.k()
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    /// Coefficients `alpha_ik = z_ik * w_ik`.
    #[inline]
    pub fn alpha(&self, i: usize, k: usize) -> f64 {
        let j = i * self.k() + k;
        if self.z[j] {
            self.w[j]
        } else {
            0.0
        }
    }

    pub fn alpha_row(&self, i: usize) -> Vec<f64> {
        (0..self.k()).map(|k| self.alpha(i, k)).collect()
    }

    /// Number of non-zero coefficients of patch `i`.
    pub fn active_count(&self, i: usize) -> usize {
        (0..self.k()).filter(|&k| self.alpha(i, k) != 0.0).count()
    }

    /// `D alpha_i` over the whole patch.
    pub fn patch_estimate(&self, i: usize) -> Vec<f64> {
        let dim = self.dictionary.dim();
        let mut out = vec![0.0; dim];
        for k in 0..self.k() {
            let a = self.alpha(i, k);
            if a != 0.0 {
                for (o, d) in out.iter_mut().zip(self.dictionary.atom(k)) {
                    *o += a * d;
                }
            }
        }
        out
    }

    fn logit_pi(&self) -> Vec<f64> {
        self.pi.iter().map(|&p| (p / (1.0 - p)).ln()).collect()
    }
}

/// Prior draw of a state for `n_p` patches.
pub fn init_state(config: &BpfaConfig, n_p: usize, seed: RngSeed) -> Result<BpfaState> {
    config.validate()?;
    let (k, dim) = (config.k, config.b * config.b);
    let mut rng = seed.stream(Stream::Inference);
    let atom_dist = Normal::new(0.0, 1.0 / config.b as f64).map_err(|e| Error::Numerical(e.to_string()))?;
    let atoms: Vec<f64> = (0..k * dim).map(|_| atom_dist.sample(&mut rng)).collect();

    // Prior mean of pi_k with the raw b, so b = 0 starts at the upper clamp.
    let kf = k as f64;
    let pa = config.a / kf;
    let pi0 = (pa / (pa + config.b_param * (kf - 1.0) / kf)).clamp(EPS_PI, 1.0 - EPS_PI);
    let w_dist = Normal::new(0.0, config.gamma_w_init.recip().sqrt()).map_err(|e| Error::Numerical(e.to_string()))?;
    let mut z = Vec::with_capacity(n_p * k);
    let mut w = Vec::with_capacity(n_p * k);
    for _ in 0..n_p * k {
        z.push(rng.random::<f64>() < pi0);
        w.push(w_dist.sample(&mut rng));
    }
    BpfaState::from_parts(
        Dictionary::new(k, dim, atoms)?,
        z,
        w,
        vec![pi0; k],
        config.gamma_n_init,
        config.gamma_w_init,
        config.a,
        config.b_param,
    )
}

fn check_compat(state: &BpfaState, patches: &PatchSet) -> Result<()> {
    if state.n_p() != patches.n_p() || state.dictionary.dim() != patches.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state covers {} patches of {} pixels, patch set {} of {}",
            state.n_p(),
            state.dictionary.dim(),
            patches.n_p(),
            patches.dim()
        )));
    }
    Ok(())
}

/// Coordinate update of one patch's indicators and weights. Returns the new
/// `(z, w)` rows.
fn update_patch(
    state: &BpfaState,
    logit_pi: &[f64],
    obs: &ObservedPatch,
    z_row: &[bool],
    w_row: &[f64],
) -> (Vec<bool>, Vec<f64>) {
    let k_atoms = state.k();
    let mut z = z_row.to_vec();
    let mut w = w_row.to_vec();
    if obs.is_empty() {
        z.iter_mut().for_each(|v| *v = false);
        w.iter_mut().for_each(|v| *v = 0.0);
        return (z, w);
    }
    let dict = &state.dictionary;
    let (gn, gw) = (state.gamma_n, state.gamma_w);

    let mut resid = obs.values.clone();
    for k in 0..k_atoms {
        if z[k] && w[k] != 0.0 {
            for (r, &o) in resid.iter_mut().zip(&obs.offsets) {
                *r -= w[k] * dict.get(k, o);
            }
        }
    }

    let mut dk = vec![0.0; obs.len()];
    for k in 0..k_atoms {
        for (d, &o) in dk.iter_mut().zip(&obs.offsets) {
            *d = dict.get(k, o);
        }
        let old = if z[k] { w[k] } else { 0.0 };
        if old != 0.0 {
            for (r, d) in resid.iter_mut().zip(&dk) {
                *r += old * d;
            }
        }
        let e: f64 = dk.iter().map(|d| d * d).sum();
        let c: f64 = dk.iter().zip(&resid).map(|(d, r)| d * r).sum();
        let lambda = gw + gn * e;
        let mu = gn * c / lambda;
        let log_odds = logit_pi[k] + 0.5 * (gw / lambda).ln() + 0.5 * gn * c * mu;
        if log_odds > 0.0 {
            z[k] = true;
            w[k] = mu;
            for (r, d) in resid.iter_mut().zip(&dk) {
                *r -= mu * d;
            }
        } else {
            z[k] = false;
            w[k] = 0.0;
        }
    }
    (z, w)
}

/// E-step over the patches in `batch`.
pub fn e_step(state: &mut BpfaState, batch: &[usize], patches: &PatchSet, exec: Execution) -> Result<()> {
    check_compat(state, patches)?;
    let k = state.k();
    if let Some(&bad) = batch.iter().find(|&&i| i >= state.n_p()) {
        return Err(Error::InvalidParameter(format!(
            "patch {bad} outside [0, {})",
            state.n_p()
        )));
    }
    let logit = state.logit_pi();
    let snapshot = &*state;
    let updates = exec.map(batch.len(), |t| {
        let i = batch[t];
        let obs = patches.observed_patch(i);
        update_patch(
            snapshot,
            &logit,
            &obs,
            &snapshot.z[i * k..(i + 1) * k],
            &snapshot.w[i * k..(i + 1) * k],
        )
    });
    for (&i, (z, w)) in batch.iter().zip(updates) {
        state.z[i * k..(i + 1) * k].copy_from_slice(&z);
        state.w[i * k..(i + 1) * k].copy_from_slice(&w);
    }
    Ok(())
}

/// Active `(atom, coefficient)` pairs of a patch.
fn active_coefficients(state: &BpfaState, i: usize) -> Vec<(usize, f64)> {
    (0..state.k())
        .filter_map(|k| {
            let a = state.alpha(i, k);
            (a != 0.0).then_some((k, a))
        })
        .collect()
}

/// M-step for the patches in `batch`: dictionary, `pi` and `gamma_n`.
pub fn m_step(
    state: &mut BpfaState,
    batch: &[usize],
    patches: &PatchSet,
    config: &BpfaConfig,
    exec: Execution,
) -> Result<()> {
    check_compat(state, patches)?;
    if batch.is_empty() {
        return Ok(());
    }
    let (k_atoms, dim) = (state.k(), state.dictionary.dim());
    let eta = config.eta;
    let gn = state.gamma_n;

    let active: Vec<Vec<(usize, f64)>> = batch.iter().map(|&i| active_coefficients(state, i)).collect();
    let mut usage = vec![0usize; k_atoms];
    for row in &active {
        for &(k, _) in row {
            usage[k] += 1;
        }
    }
    // Dense position of each used atom inside the row systems.
    let used: Vec<usize> = (0..k_atoms).filter(|&k| usage[k] > 0).collect();
    let mut slot = vec![usize::MAX; k_atoms];
    for (s, &k) in used.iter().enumerate() {
        slot[k] = s;
    }
    let n_used = used.len();

    if n_used > 0 {
        let dict = &state.dictionary;
        let rows = exec.map(dim, |j| -> Result<Option<Vec<f64>>> {
            let mut gram = DMatrix::<f64>::zeros(n_used, n_used);
            let mut rhs = DVector::<f64>::zeros(n_used);
            for (t, &i) in batch.iter().enumerate() {
                if !patches.is_observed(i, j) {
                    continue;
                }
                let y = patches.value(i, j);
                let coeffs = &active[t];
                for (p, &(ka, va)) in coeffs.iter().enumerate() {
                    let sa = slot[ka];
                    rhs[sa] += gn * va * y;
                    for &(kb, vb) in &coeffs[..=p] {
                        gram[(sa, slot[kb])] += gn * va * vb;
                    }
                }
            }
            let mean_diag = (0..n_used).map(|s| gram[(s, s)]).sum::<f64>() / n_used as f64;
            if !(mean_diag > 0.0) {
                return Ok(None);
            }
            let tau = DICT_DAMPING * mean_diag;
            for s in 0..n_used {
                for t in 0..s {
                    gram[(t, s)] = gram[(s, t)];
                }
                gram[(s, s)] += tau;
                rhs[s] += tau * dict.get(used[s], j);
            }
            let sol = gram
                .cholesky()
                .ok_or_else(|| Error::Numerical(format!("dictionary row {j} system is not positive definite")))?
                .solve(&rhs);
            Ok(Some(sol.iter().copied().collect()))
        });
        let mut atoms = state.dictionary.atoms.clone();
        for (j, row) in rows.into_iter().enumerate() {
            let Some(row) = row? else { continue };
            for (s, &k) in used.iter().enumerate() {
                let old = atoms[k * dim + j];
                atoms[k * dim + j] = eta * row[s] + (1.0 - eta) * old;
            }
        }
        if atoms.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("dictionary update produced non-finite atoms".into()));
        }
        state.dictionary.atoms = atoms;
    }

    let (pa, pb) = config.beta_prior();
    let n_b = batch.len() as f64;
    for (pi, &used) in state.pi.iter_mut().zip(&usage) {
        let target = (used as f64 + pa) / (n_b + pa + pb);
        *pi = (eta * target + (1.0 - eta) * *pi).clamp(EPS_PI, 1.0 - EPS_PI);
    }

    let (rss, n_obs) = batch_rss(state, batch, patches);
    if n_obs > 0 {
        let target = (n_obs as f64 / rss.max(RSS_FLOOR)).clamp(GAMMA_N_MIN, GAMMA_N_MAX);
        state.gamma_n = (eta * target + (1.0 - eta) * state.gamma_n).clamp(GAMMA_N_MIN, GAMMA_N_MAX);
    }
    Ok(())
}

/// Residual sum of squares over the observed pixels of `batch` and the number
/// of such pixels.
pub fn batch_rss(state: &BpfaState, batch: &[usize], patches: &PatchSet) -> (f64, usize) {
    let mut rss = 0.0;
    let mut n = 0;
    for &i in batch {
        let est = state.patch_estimate(i);
        let obs = patches.observed_patch(i);
        for (&o, &y) in obs.offsets.iter().zip(&obs.values) {
            let r = y - est[o];
            rss += r * r;
        }
        n += obs.len();
    }
    (rss, n)
}

/// Masked residual sum of squares over every patch.
pub fn masked_rss(state: &BpfaState, patches: &PatchSet, exec: Execution) -> f64 {
    let per_patch = exec.map(state.n_p(), |i| batch_rss(state, &[i], patches).0);
    per_patch.iter().sum()
}

fn mean_active(state: &BpfaState) -> f64 {
    (0..state.n_p()).map(|i| state.active_count(i)).sum::<usize>() as f64 / state.n_p().max(1) as f64
}

/// Fits the model to a measured slice.
pub fn infer(
    measurement: &MeasurementSlice,
    config: &BpfaConfig,
    seed: RngSeed,
    exec: Execution,
) -> Result<(BpfaState, PatchSet)> {
    infer_with_dictionary(measurement, config, seed, None, exec)
}

/// [`infer`], optionally starting from an existing dictionary (warm start).
pub fn infer_with_dictionary(
    measurement: &MeasurementSlice,
    config: &BpfaConfig,
    seed: RngSeed,
    warm: Option<&Dictionary>,
    exec: Execution,
) -> Result<(BpfaState, PatchSet)> {
    config.validate()?;
    let patches = extract_patches(measurement, config.b)?;
    let mut state = init_state(config, patches.n_p(), seed)?;
    if let Some(d) = warm {
        if d.k() != config.k || d.dim() != patches.dim() {
            return Err(Error::DimensionMismatch(
                "warm-start dictionary does not match config".into(),
            ));
        }
        state.dictionary = d.clone();
    }
    run_epochs(&mut state, &patches, config, seed, exec)?;
    Ok((state, patches))
}

/// Runs `config.n_epoch` shuffled mini-batch passes over `patches`.
pub fn run_epochs(
    state: &mut BpfaState,
    patches: &PatchSet,
    config: &BpfaConfig,
    seed: RngSeed,
    exec: Execution,
) -> Result<()> {
    check_compat(state, patches)?;
    // Separate keystream position from init_state: skip by deriving.
    let mut rng = seed.derive(0x5EED_BA7C).stream(Stream::Inference);
    let mut order: Vec<usize> = (0..patches.n_p()).collect();
    for epoch in 0..config.n_epoch {
        order.shuffle(&mut rng);
        let mut batches = 0;
        for batch in order.chunks(config.n_batch) {
            e_step(state, batch, patches, exec)?;
            m_step(state, batch, patches, config, exec)?;
            batches += 1;
        }
        state.history.push(EpochStats {
            epoch: epoch + 1,
            batches,
            masked_rss: masked_rss(state, patches, exec),
            gamma_n: state.gamma_n,
            mean_active: mean_active(state),
        });
    }
    Ok(())
}

/// Averages `D alpha_i` over every patch covering each pixel, clamped to `[0, 1]`.
pub fn reconstruct_slice(state: &BpfaState, patches: &PatchSet) -> Result<Slice> {
    check_compat(state, patches)?;
    let (n1, n2) = patches.shape();
    let b = patches.b();
    let mut sum = vec![0.0; n1 * n2];
    let mut count = vec![0u32; n1 * n2];
    for i in 0..patches.n_p() {
        let est = state.patch_estimate(i);
        let (r0, c0) = patches.anchor(i);
        for u in 0..b {
            let row = (r0 + u) * n2 + c0;
            for v in 0..b {
                sum[row + v] += est[u * b + v];
                count[row + v] += 1;
            }
        }
    }
    let data = sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| (s / c as f64).clamp(0.0, 1.0))
        .collect();
    Slice::new(n1, n2, data)
}

/// Average of explicitly given per-patch estimates; exposes the overlap
/// averaging rule independently of a fitted state.
pub fn overlap_average(patch_estimates: &[Vec<f64>], n1: usize, n2: usize, b: usize) -> Result<Slice> {
    let anchors_per_row = n2.checked_sub(b).map(|v| v + 1).unwrap_or(0);
    let n_p = n1.checked_sub(b).map(|v| v + 1).unwrap_or(0) * anchors_per_row;
    if n_p == 0 || patch_estimates.len() != n_p || patch_estimates.iter().any(|p| p.len() != b * b) {
        return Err(Error::DimensionMismatch(format!(
            "expected {n_p} patch estimates of {} values",
            b * b
        )));
    }
    let mut sum = vec![0.0; n1 * n2];
    let mut count = vec![0u32; n1 * n2];
    for (i, est) in patch_estimates.iter().enumerate() {
        let (r0, c0) = (i / anchors_per_row, i % anchors_per_row);
        for u in 0..b {
            for v in 0..b {
                sum[(r0 + u) * n2 + c0 + v] += est[u * b + v];
                count[(r0 + u) * n2 + c0 + v] += 1;
            }
        }
    }
    Slice::new(
        n1,
        n2,
        sum.into_iter()
            .zip(count)
            .map(|(s, c)| (s / c as f64).clamp(0.0, 1.0))
            .collect(),
    )
}
