//! Seeded synthetic datasets.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)`; normal
//! variates come from `rand_distr::StandardNormal` (ziggurat). Both
//! algorithms are pinned through `Cargo.lock`, so a seed reproduces the same
//! dataset bit-for-bit on every platform.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{ClassLabels, Column, ColumnData, Dataset, Task};
use crate::error::{Error, Result};

/// Noise level used when none is given.
pub const DEFAULT_PARITY_SIGMA: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParityConfig {
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
}

impl ParityConfig {
    pub fn new(d: usize, n: usize, sigma: f64, seed: u64) -> Self {
        ParityConfig { d, n, sigma, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.n == 0 {
            return Err(Error::InvalidConfig(format!("parity needs d >= 1 and n >= 1 (d={}, n={})", self.d, self.n)));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        Ok(())
    }
}

fn feature_columns(x: Vec<Vec<f64>>) -> Vec<Column> {
    x.into_iter()
        .enumerate()
        .map(|(j, v)| Column { name: format!("x{}", j + 1), data: ColumnData::Numeric(v) })
        .collect()
}

/// Noisy parity: centers `C ~ Unif{-1,1}^d`, features `X = C + σ·N(0, I)`,
/// label `Y = Π C_j`.
///
/// Per row, the `d` center signs are drawn first, then the `d` noise
/// variates.
pub fn gen_noisy_parity(cfg: &ParityConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x = vec![Vec::with_capacity(cfg.n); cfg.d];
    let mut y = Vec::with_capacity(cfg.n);
    let mut center = vec![0.0; cfg.d];
    for _ in 0..cfg.n {
        for c in center.iter_mut() {
            *c = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        y.push(center.iter().product());
        for (j, &c) in center.iter().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            x[j].push(c + cfg.sigma * z);
        }
    }
    Ok(Dataset::new(feature_columns(x), y, "y", Task::Classification)?
        .with_labels(ClassLabels { negative: "-1".into(), positive: "1".into() }))
}

/// The Friedman #1 regression function on `x ~ Unif[0,1]^d`:
/// `10 sin(π x1 x2) + 20 (x3 - 0.5)² + 10 x4 + 5 x5 + N(0, noise_sd²)`.
pub fn friedman1_target(x: &[f64]) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin() + 20.0 * (x[2] - 0.5).powi(2) + 10.0 * x[3] + 5.0 * x[4]
}

pub fn gen_friedman1(n: usize, d: usize, noise_sd: f64, seed: u64) -> Result<Dataset> {
    if d < 5 {
        return Err(Error::InvalidConfig(format!("friedman1 needs d >= 5, got {d}")));
    }
    if n == 0 || !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::InvalidConfig("friedman1 needs n >= 1 and noise_sd >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![Vec::with_capacity(n); d];
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for _ in 0..n {
        for v in row.iter_mut() {
            *v = rng.gen::<f64>();
        }
        let z: f64 = rng.sample(StandardNormal);
        y.push(friedman1_target(&row) + noise_sd * z);
        for (j, &v) in row.iter().enumerate() {
            x[j].push(v);
        }
    }
    Dataset::new(feature_columns(x), y, "y", Task::Regression)
}
