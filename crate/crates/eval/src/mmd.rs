//! Squared maximum mean discrepancy with a Gaussian kernel.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Distance inside the kernel `exp(-d(x, y)^2 / (2 sigma^2))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    /// Half the L1 distance, for normalized histograms.
    TotalVariation,
    Euclidean,
}

impl Distance {
    pub fn eval(self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Distance::TotalVariation => 0.5 * x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>(),
            Distance::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MmdConfig {
    pub sigma: f64,
    pub unbiased: bool,
}

impl Default for MmdConfig {
    fn default() -> Self {
        MmdConfig { sigma: 1.0, unbiased: false }
    }
}

pub fn kernel(x: &[f64], y: &[f64], dist: Distance, sigma: f64) -> f64 {
    let d = dist.eval(x, y);
    (-d * d / (2.0 * sigma * sigma)).exp()
}

/// Mean kernel value over pairs; `skip_diagonal` drops `i == j` (same
/// sample). Values are sorted before summing so the result does not depend
/// on sample order, which makes `mmd(a, b) == mmd(b, a)` hold exactly.
fn mean_kernel(a: &[Vec<f64>], b: &[Vec<f64>], dist: Distance, sigma: f64, skip_diagonal: bool) -> f64 {
    let mut values: Vec<f64> = (0..a.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            b.iter()
                .enumerate()
                .filter(move |&(j, _)| !(skip_diagonal && i == j))
                .map(move |(_, y)| kernel(&a[i], y, dist, sigma))
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let count = values.len();
    if count == 0 {
        0.0
    } else {
        values.iter().sum::<f64>() / count as f64
    }
}

/// Squared MMD between two descriptor samples. The biased estimate is
/// clamped at zero; the unbiased one is returned as is.
pub fn mmd(a: &[Vec<f64>], b: &[Vec<f64>], dist: Distance, cfg: &MmdConfig) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(EvalError::Input("MMD needs two nonempty samples".into()));
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|x| x.len() != dim) {
        return Err(EvalError::Input("descriptor dimensions differ".into()));
    }
    if !(cfg.sigma > 0.0) {
        return Err(EvalError::Input("kernel bandwidth must be positive".into()));
    }
    if cfg.unbiased && (a.len() < 2 || b.len() < 2) {
        return Err(EvalError::Input("the unbiased estimator needs at least two items per sample".into()));
    }
    let kaa = mean_kernel(a, a, dist, cfg.sigma, cfg.unbiased);
    let kbb = mean_kernel(b, b, dist, cfg.sigma, cfg.unbiased);
    let kab = mean_kernel(a, b, dist, cfg.sigma, false);
    let estimate = kaa + kbb - 2.0 * kab;
    // A Gaussian of the total-variation distance is not a positive definite
    // kernel, so the biased estimate can dip slightly below zero.
    Ok(if cfg.unbiased { estimate } else { estimate.max(0.0) })
}
