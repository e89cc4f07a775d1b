use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{same_grid, SamplePath};
use crate::stats::ols_slope;

const MIN_PATHS: usize = 100;

/// Empirical check of the two-sided increment-scaling condition and of
/// positive increment correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub h1_est: f64,
    pub h2_est: f64,
    pub cond_a_pass: bool,
    pub cond_b_pass: bool,
    pub min_increment_corr: f64,
}

fn mean_square_increment(paths: &[SamplePath], lag: usize) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for p in paths {
        for w in p.values.windows(lag + 1) {
            let d = w[lag] - w[0];
            total += d * d;
        }
        count += p.values.len() - lag;
    }
    total / count as f64
}

/// Pooled correlation of consecutive block increments of `block` steps, and
/// its standard error.
fn block_correlation(paths: &[SamplePath], block: usize) -> (f64, f64) {
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    let mut pairs = 0usize;
    for p in paths {
        let incs: Vec<f64> = p
            .values
            .iter()
            .step_by(block)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[1] - w[0])
            .collect();
        for w in incs.windows(2) {
            sxy += w[0] * w[1];
            sxx += w[0] * w[0];
            syy += w[1] * w[1];
            pairs += 1;
        }
    }
    let rho = if sxx > 0.0 && syy > 0.0 { sxy / (sxx * syy).sqrt() } else { 0.0 };
    let se = (1.0 - rho * rho) / (pairs.max(1) as f64).sqrt();
    (rho.clamp(-1.0, 1.0), se)
}

/// Scaling exponents from a log–log regression of mean squared increments on
/// dyadic lags (separately over the small-lag and large-lag halves), and the
/// sign test for correlations of consecutive dyadic blocks at three scales.
pub fn check_conditions(paths: &[SamplePath]) -> Result<ConditionReport> {
    if paths.len() < MIN_PATHS {
        return Err(Error::InsufficientPaths { required: MIN_PATHS, got: paths.len() });
    }
    let grid = &paths[0].times;
    if paths.iter().any(|p| !same_grid(&p.times, grid)) {
        return Err(Error::GridMismatch("condition checks need a common grid".into()));
    }
    let n = grid.len() - 1;
    if n < 16 {
        return Err(Error::param("condition checks need at least 16 steps"));
    }

    let mut log_lag = Vec::new();
    let mut log_msq = Vec::new();
    let mut lag = 1;
    while lag <= n / 2 {
        let msq = mean_square_increment(paths, lag);
        if msq > 0.0 {
            log_lag.push((lag as f64).ln());
            log_msq.push(msq.ln());
        }
        lag *= 2;
    }
    let (h1, h2) = if log_lag.len() >= 4 {
        let half = log_lag.len() / 2;
        let small = 0.5 * ols_slope(&log_lag[..=half], &log_msq[..=half]);
        let large = 0.5 * ols_slope(&log_lag[half..], &log_msq[half..]);
        (small.max(large), small.min(large))
    } else {
        let s = 0.5 * ols_slope(&log_lag, &log_msq);
        (s, s)
    };

    let mut min_corr = f64::INFINITY;
    let mut cond_b = true;
    for div in [4, 8, 16] {
        let block = (n / div).max(1);
        let (rho, se) = block_correlation(paths, block);
        min_corr = min_corr.min(rho);
        if rho < -3.0 * se {
            cond_b = false;
        }
    }

    Ok(ConditionReport {
        h1_est: h1,
        h2_est: h2,
        cond_a_pass: h2 > 0.0 && h1 <= 1.05,
        cond_b_pass: cond_b,
        min_increment_corr: min_corr,
    })
}
