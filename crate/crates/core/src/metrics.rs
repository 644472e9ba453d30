//! Image-quality metrics: Gaussian-window SSIM and PSNR.
//!
//! SSIM follows the usual Wang et al. formulation with a normalized
//! `window x window` Gaussian of standard deviation `sigma`,
//! `C1 = (k1 L)^2`, `C2 = (k2 L)^2`. Local statistics are only evaluated
//! where the whole window fits inside the image (the "valid" region), and the
//! reported index is the mean of that local map.

use serde::{Deserialize, Serialize};

use crate::domain::{Slice, Volume};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let centre = (window as f64 - 1.0) / 2.0;
    let raw: Vec<f64> = (0..window)
        .map(|i| {
            let d = i as f64 - centre;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Separable valid-region filtering of `data` (`n1 x n2`), giving an
/// `(n1 - w + 1) x (n2 - w + 1)` output.
fn filter_valid(data: &[f64], n1: usize, n2: usize, kernel: &[f64]) -> Vec<f64> {
    let w = kernel.len();
    let (o1, o2) = (n1 - w + 1, n2 - w + 1);
    let mut horiz = vec![0.0; n1 * o2];
    for r in 0..n1 {
        let row = &data[r * n2..(r + 1) * n2];
        for c in 0..o2 {
            horiz[r * o2 + c] = kernel.iter().zip(&row[c..c + w]).map(|(k, v)| k * v).sum();
        }
    }
    let mut out = vec![0.0; o1 * o2];
    for r in 0..o1 {
        for c in 0..o2 {
            out[r * o2 + c] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * horiz[(r + i) * o2 + c])
                .sum();
        }
    }
    out
}

/// Mean structural similarity between two equally-shaped slices.
pub fn ssim(a: &Slice, b: &Slice, params: &SsimParams) -> Result<f64> {
    a.check_same_shape(b)?;
    let (n1, n2) = a.shape();
    let w = params.window;
    if w == 0 || w > n1 || w > n2 {
        return Err(Error::DimensionMismatch(format!(
            "SSIM window {w} does not fit a {n1}x{n2} image"
        )));
    }
    if params.sigma <= 0.0 || params.dynamic_range <= 0.0 {
        return Err(Error::InvalidParameter(
            "SSIM sigma and dynamic range must be positive".into(),
        ));
    }
    let kernel = gaussian_kernel(w, params.sigma);
    let (x, y) = (a.as_slice(), b.as_slice());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(u, v)| u * v).collect();

    let mu_x = filter_valid(x, n1, n2, &kernel);
    let mu_y = filter_valid(y, n1, n2, &kernel);
    let e_xx = filter_valid(&xx, n1, n2, &kernel);
    let e_yy = filter_valid(&yy, n1, n2, &kernel);
    let e_xy = filter_valid(&xy, n1, n2, &kernel);

    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);
    let mut total = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let num = (2.0 * (mx * my) + c1) * (2.0 * cov + c2);
        let den = (mx * mx + my * my + c1) * (vx + vy + c2);
        total += num / den;
    }
    Ok(total / mu_x.len() as f64)
}

/// Peak signal-to-noise ratio in dB; `f64::INFINITY` for identical images.
pub fn psnr(a: &Slice, b: &Slice, peak: f64) -> Result<f64> {
    a.check_same_shape(b)?;
    let mse = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        / a.n_bar() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSsim {
    pub mean: f64,
    pub per_layer: Vec<f64>,
}

/// Layer-wise SSIM and its arithmetic mean.
pub fn volume_mean_ssim(recon: &Volume, truth: &Volume, params: &SsimParams) -> Result<VolumeSsim> {
    if recon.n3() != truth.n3() {
        return Err(Error::DimensionMismatch(format!(
            "volumes hold {} and {} layers",
            recon.n3(),
            truth.n3()
        )));
    }
    let per_layer = recon
        .slices()
        .iter()
        .zip(truth.slices())
        .map(|(r, t)| ssim(r, t, params))
        .collect::<Result<Vec<_>>>()?;
    let mean = per_layer.iter().sum::<f64>() / per_layer.len() as f64;
    Ok(VolumeSsim { mean, per_layer })
}
