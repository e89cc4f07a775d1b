//! Riemann–Liouville fractional derivatives on a finite interval, the weighted
//! norm `‖f‖_{α,[a,b]}`, the integrator seminorm `Λ_α`, the generalized
//! Lebesgue–Stieltjes integral, and the fBm ↔ Wiener Volterra transforms.
//!
//! Everything operates on uniform grids and treats grid data through its
//! piecewise-linear interpolant, for which the singular integrals are done in
//! closed form cell by cell.

mod derivative;
mod integral;
pub mod kernels;
mod norm;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::GridFunction;

pub use derivative::{lambda_alpha, rl_derivative_left, rl_derivative_right};
pub use integral::{gls_integral, gls_integral_on};
pub use kernels::{inverse_transform, k_h_transform, MolchanWeights};
pub use norm::{holder_norm, holder_norm_interval};

/// Order and interval of a fractional derivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracParams {
    pub alpha: f64,
    pub a: f64,
    pub b: f64,
}

impl FracParams {
    pub fn new(alpha: f64, a: f64, b: f64) -> Result<Self> {
        check_order(alpha)?;
        if !(a < b) {
            return Err(Error::DegenerateInterval { a, b });
        }
        Ok(FracParams { alpha, a, b })
    }

    /// Whole-grid interval of `f`.
    pub fn spanning(alpha: f64, f: &GridFunction) -> Result<Self> {
        Self::new(alpha, f.times[0], f.times[f.len() - 1])
    }
}

pub(crate) fn check_order(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::param(format!("fractional order {alpha} outside (0, 1)")));
    }
    Ok(())
}

/// A uniform-grid view `x_k = a + k h` restricted to some `[a, b]`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Segment<'a> {
    pub a: f64,
    pub h: f64,
    pub values: &'a [f64],
}

impl<'a> Segment<'a> {
    /// Number of cells.
    pub fn cells(&self) -> usize {
        self.values.len() - 1
    }
}

/// Restricts `f` to `[a, b]`; both ends must be grid nodes.
pub(crate) fn segment(f: &GridFunction, a: f64, b: f64) -> Result<Segment<'_>> {
    if !(a < b) {
        return Err(Error::DegenerateInterval { a, b });
    }
    let h = f.uniform_step()?;
    let ia = f
        .node_index(a)
        .ok_or_else(|| Error::GridMismatch(format!("interval end {a} is not a grid node")))?;
    let ib = f
        .node_index(b)
        .ok_or_else(|| Error::GridMismatch(format!("interval end {b} is not a grid node")))?;
    if ib <= ia {
        return Err(Error::DegenerateInterval { a, b });
    }
    Ok(Segment {
        a: f.times[ia],
        h,
        values: &f.values[ia..=ib],
    })
}

/// `(k h)^p` for `k = 0..=n` (entry 0 is `0^p`, i.e. 0 or +inf).
pub(crate) fn power_table(h: f64, p: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| (k as f64 * h).powf(p)).collect()
}

/// Default integration order against an integrator of Hölder order `theta`:
/// `α = (1-θ) + 0.1(θ-1/2)` clamped into `(1-θ+1e-3, 1/2-1e-3)`.
pub fn default_alpha(theta: f64) -> Result<f64> {
    let lo = 1.0 - theta + 1e-3;
    let hi = 0.5 - 1e-3;
    if !(theta > 0.5 && theta <= 1.0) || lo >= hi {
        return Err(Error::param(format!(
            "no admissible integration order for Hölder exponent {theta}"
        )));
    }
    let alpha = (1.0 - theta) + 0.1 * (theta - 0.5);
    Ok(alpha.clamp(lo, hi))
}

/// Hölder-exponent estimate of a single path from the log-log slope of mean
/// squared increments over dyadic lags.
pub fn estimate_holder_exponent(g: &GridFunction) -> f64 {
    let n = g.len() - 1;
    let mut log_lag = Vec::new();
    let mut log_msq = Vec::new();
    let mut lag = 1;
    while lag <= (n / 8).max(1) {
        let msq: f64 = g
            .values
            .windows(lag + 1)
            .map(|w| (w[lag] - w[0]).powi(2))
            .sum::<f64>()
            / (n + 1 - lag) as f64;
        if msq > 0.0 {
            log_lag.push((lag as f64).ln());
            log_msq.push(msq.ln());
        }
        lag *= 2;
    }
    if log_lag.len() < 2 {
        return 1.0;
    }
    0.5 * crate::stats::ols_slope(&log_lag, &log_msq)
}
