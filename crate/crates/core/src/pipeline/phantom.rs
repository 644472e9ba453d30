//! Synthetic slice-and-view volumes.
//!
//! `blob_cell` is a bright, smooth elliptical cell with a few internal
//! organelles over a dim, gently textured support. Cell and support translate
//! by `drift_rate` pixels per layer along a seeded direction and the cell
//! outline breathes slowly (in proportion to the drift), so neighbouring layers stay similar. `stripes` and
//! `checker_drift` are simple periodic test patterns that translate along the
//! columns.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{RngSeed, Slice, Stream, Volume};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhantomKind {
    BlobCell,
    Stripes,
    CheckerDrift,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blob_cell" => Ok(PhantomKind::BlobCell),
            "stripes" => Ok(PhantomKind::Stripes),
            "checker_drift" => Ok(PhantomKind::CheckerDrift),
            other => Err(Error::InvalidParameter(format!("unknown phantom kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub kind: PhantomKind,
    #[serde(default = "default_drift")]
    pub drift_rate: f64,
}

fn default_drift() -> f64 {
    1.0
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            n1: 64,
            n2: 64,
            n3: 8,
            kind: PhantomKind::BlobCell,
            drift_rate: 1.0,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 || self.n3 == 0 {
            return Err(Error::InvalidParameter(format!(
                "phantom needs at least 2x2x1 voxels, got {}x{}x{}",
                self.n1, self.n2, self.n3
            )));
        }
        if !(self.drift_rate >= 0.0 && self.drift_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drift_rate must be finite and non-negative, got {}",
                self.drift_rate
            )));
        }
        Ok(())
    }
}

struct Wave {
    fy: f64,
    fx: f64,
    phase: f64,
    amp: f64,
}

struct Organelle {
    dy: f64,
    dx: f64,
    ry: f64,
    rx: f64,
    delta: f64,
}

struct BlobCell {
    dir: (f64, f64),
    waves: Vec<Wave>,
    organelles: Vec<Organelle>,
    tilt: f64,
}

const BACKGROUND: f64 = 0.18;
const CELL: f64 = 0.72;
const EDGE_WIDTH: f64 = 1.2;

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

impl BlobCell {
    fn new<R: Rng>(rng: &mut R) -> Self {
        let theta = rng.random_range(0.0..2.0 * PI);
        let waves = (0..6)
            .map(|_| {
                let wavelength = rng.random_range(10.0..24.0);
                let angle = rng.random_range(0.0..PI);
                Wave {
                    fy: angle.sin() / wavelength,
                    fx: angle.cos() / wavelength,
                    phase: rng.random_range(0.0..2.0 * PI),
                    amp: rng.random_range(0.01..0.025),
                }
            })
            .collect();
        let organelles = (0..5)
            .map(|j| {
                let r = rng.random_range(0.15..0.55);
                let a = rng.random_range(0.0..2.0 * PI);
                Organelle {
                    dy: r * a.sin(),
                    dx: r * a.cos(),
                    ry: rng.random_range(0.08..0.16),
                    rx: rng.random_range(0.08..0.16),
                    delta: if j % 2 == 0 { 0.2 } else { -0.3 },
                }
            })
            .collect();
        Self {
            dir: (theta.sin(), theta.cos()),
            waves,
            organelles,
            tilt: rng.random_range(-0.5..0.5),
        }
    }

    fn layer(&self, spec: &PhantomSpec, l: usize) -> Slice {
        let (n1, n2) = (spec.n1 as f64, spec.n2 as f64);
        let shift = spec.drift_rate * l as f64;
        let (sy, sx) = (shift * self.dir.0, shift * self.dir.1);
        let breathe = 1.0 + 0.04 * spec.drift_rate.min(1.0) * (2.0 * PI * l as f64 / 16.0).sin();
        let ay = 0.3 * n1 * breathe;
        let ax = 0.23 * n2 / breathe;
        let (cy, cx) = (n1 / 2.0 + sy, n2 / 2.0 + sx);
        let (ct, st) = (self.tilt.cos(), self.tilt.sin());
        Slice::from_fn(spec.n1, spec.n2, |r, c| {
            let (y, x) = (r as f64, c as f64);
            let bg = BACKGROUND
                + self
                    .waves
                    .iter()
                    .map(|w| w.amp * (2.0 * PI * (w.fy * (y - sy) + w.fx * (x - sx)) + w.phase).sin())
                    .sum::<f64>();
            let (dy, dx) = (y - cy, x - cx);
            let u = (ct * dy - st * dx) / ay;
            let v = (st * dy + ct * dx) / ax;
            let rho = (u * u + v * v).sqrt();
            let body = sigmoid((1.0 - rho) * ay.min(ax) / EDGE_WIDTH);
            let mut inside = CELL;
            for o in &self.organelles {
                let q = ((u - o.dy) / o.ry).powi(2) + ((v - o.dx) / o.rx).powi(2);
                inside += o.delta * sigmoid((1.0 - q.sqrt()) * o.ry.min(o.rx) * ay.min(ax) / EDGE_WIDTH);
            }
            (bg * (1.0 - body) + inside * body).clamp(0.0, 1.0)
        })
    }
}

/// Builds a deterministic phantom volume.
pub fn generate_phantom(spec: &PhantomSpec, seed: RngSeed) -> Result<Volume> {
    spec.validate()?;
    let slices = match spec.kind {
        PhantomKind::BlobCell => {
            let mut rng = seed.stream(Stream::Phantom);
            let cell = BlobCell::new(&mut rng);
            (0..spec.n3).map(|l| cell.layer(spec, l)).collect()
        }
        PhantomKind::Stripes => (0..spec.n3)
            .map(|l| {
                let shift = spec.drift_rate * l as f64;
                Slice::from_fn(spec.n1, spec.n2, |_, c| {
                    0.5 + 0.4 * (4.0 * (2.0 * PI * (c as f64 - shift) / 12.0).sin()).tanh()
                })
            })
            .collect(),
        PhantomKind::CheckerDrift => (0..spec.n3)
            .map(|l| {
                let shift = spec.drift_rate * l as f64;
                Slice::from_fn(spec.n1, spec.n2, |r, c| {
                    let cell = (r as f64 / 8.0).floor() + ((c as f64 - shift) / 8.0).floor();
                    if cell.rem_euclid(2.0) < 1.0 {
                        0.25
                    } else {
                        0.75
                    }
                })
            })
            .collect(),
    };
    Volume::new(slices)
}
