//! Statistical machinery: distribution distances, quadrature for the
//! Fréchet limit identities, tail-shape classification, and the distance
//! regime fits.

mod ks;
mod quad;
mod regime;
mod tail;

pub use ks::{ks_one_sample, ks_two_sample};
pub use quad::{adaptive_quadrature, frechet_limit_part1, frechet_limit_part2};
pub use regime::{fit_distance_regime, PerScale, Regime, RegimeFit, ScanRow, ScanTable};
pub use tail::{classify_tail_shape, TailShape};

use crate::field::stream_uniform;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("empty sample")]
    EmptySample,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate curve: all values equal")]
    DegenerateCurve,
    #[error("tail index 2 is excluded from distance-regime fits")]
    DeltaTwoExcluded,
    #[error("censoring rate {0:.4} exceeds 5%")]
    ExcessCensoring(f64),
    #[error("duplicate scan row for (delta={delta}, n={n}, seed={seed})")]
    DuplicateRow { delta: f64, n: u64, seed: u64 },
    #[error("quadrature did not converge within the subdivision budget")]
    QuadratureNonConvergence,
    #[error("malformed scan csv: {0}")]
    MalformedCsv(String),
}

/// Linearly interpolated quantile (R type 7) of an ascending slice.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty() && (0.0..=1.0).contains(&p));
    let idx = p * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    let frac = idx - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

/// Ordinary least squares `y = intercept + slope * x`.
pub fn simple_linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[derive(Debug, Clone, Copy)]
pub struct MuEstimate {
    pub value: f64,
    pub std_error: f64,
}

const STREAM_MU: u64 = 0x1d8e_4e27_c47d_124f;

/// Monte Carlo estimate of `mu = exp(E[ln(2F)])` over unit Fréchet draws,
/// with the delta-method standard error. Cross-checks the compiled constant.
pub fn estimate_mu(sample_count: u64, seed: u64) -> MuEstimate {
    assert!(sample_count >= 10_000, "estimate_mu needs at least 1e4 samples");
    let ln2 = std::f64::consts::LN_2;
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for k in 0..sample_count {
        let u = stream_uniform(seed, STREAM_MU, k);
        // ln(2F) for F = (-ln u)^{-1}
        let g = ln2 - (-u.ln()).ln();
        sum += g;
        sumsq += g * g;
    }
    let n = sample_count as f64;
    let mean = sum / n;
    let var = (sumsq / n - mean * mean).max(0.0);
    let value = mean.exp();
    MuEstimate { value, std_error: value * (var / n).sqrt() }
}
