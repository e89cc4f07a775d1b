use rayon::prelude::*;

use super::{check_order, power_table, segment, Segment};
use crate::error::{Error, Result};
use crate::path::GridFunction;

/// `∫ |c + s w| w^{-1-α} dw` over `[lo, hi]`, `0 ≤ lo < hi`, with `c = 0` when
/// `lo = 0`. `pn`/`pp` hold `lo^{-α}, hi^{-α}` and `lo^{1-α}, hi^{1-α}`.
fn abs_cell(c: f64, s: f64, lo: f64, hi: f64, pn: (f64, f64), pp: (f64, f64), alpha: f64) -> f64 {
    let signed = |pn_lo: f64, pn_hi: f64, pp_lo: f64, pp_hi: f64, from_zero: bool| {
        let sing = if from_zero { 0.0 } else { c * (pn_lo - pn_hi) / alpha };
        sing + s * (pp_hi - pp_lo) / (1.0 - alpha)
    };
    if s != 0.0 {
        let root = -c / s;
        if root > lo && root < hi {
            let (rn, rp) = (root.powf(-alpha), root.powf(1.0 - alpha));
            return signed(pn.0, rn, pp.0, rp, lo == 0.0).abs() + signed(rn, pn.1, rp, pp.1, false).abs();
        }
    }
    signed(pn.0, pn.1, pp.0, pp.1, lo == 0.0).abs()
}

/// `∫_{u0}^{u1} ℓ(u) u^p du` where `ℓ` is linear from `y0` at `u0` to `y1` at `u1`.
fn linear_power_cell(y0: f64, y1: f64, u0: f64, u1: f64, p: f64) -> f64 {
    let slope = (y1 - y0) / (u1 - u0);
    let i0 = (u1.powf(p + 1.0) - u0.powf(p + 1.0)) / (p + 1.0);
    let i1 = (u1.powf(p + 2.0) - u0.powf(p + 2.0)) / (p + 2.0);
    (y0 - slope * u0) * i0 + slope * i1
}

/// Inner term `∫_a^{x_i} |f(x_i) - f(z)| (x_i - z)^{-1-α} dz` at every node.
fn inner_terms(seg: Segment<'_>, alpha: f64) -> Vec<f64> {
    let m = seg.cells();
    let v = seg.values;
    let h = seg.h;
    let pn = power_table(h, -alpha, m);
    let pp = power_table(h, 1.0 - alpha, m);
    let mut out = vec![0.0; m + 1];
    out[1..].par_iter_mut().enumerate().for_each(|(idx, slot)| {
        let i = idx + 1;
        let mut acc = 0.0;
        for d in 1..=i {
            let j = i - d;
            let dv = v[j + 1] - v[j];
            let c = if d == 1 { 0.0 } else { v[i] - v[j] - dv * d as f64 };
            acc += abs_cell(
                c,
                dv / h,
                (d - 1) as f64 * h,
                d as f64 * h,
                (pn[d - 1], pn[d]),
                (pp[d - 1], pp[d]),
                alpha,
            );
        }
        *slot = acc;
    });
    out
}

pub(crate) fn segment_norm(seg: Segment<'_>, alpha: f64) -> f64 {
    let m = seg.cells();
    let h = seg.h;
    let inner = inner_terms(seg, alpha);
    let mut total = 0.0;
    for k in 0..m {
        let (u0, u1) = (k as f64 * h, (k + 1) as f64 * h);
        total += linear_power_cell(seg.values[k].abs(), seg.values[k + 1].abs(), u0, u1, -alpha);
        total += 0.5 * h * (inner[k] + inner[k + 1]);
    }
    total
}

/// Stride-2 resample of a segment (drops the last node when the cell count is odd).
fn coarse_values(seg: Segment<'_>) -> Vec<f64> {
    let m = seg.cells();
    seg.values[..=(m - m % 2)].iter().step_by(2).copied().collect()
}

/// Norm on `seg` together with a refinement check: the fine value must not
/// exceed twice the stride-2 value.
pub(crate) fn checked_norm(seg: Segment<'_>, alpha: f64) -> Result<f64> {
    let fine = segment_norm(seg, alpha);
    if seg.cells() >= 4 {
        let coarse_vals = coarse_values(seg);
        let coarse = segment_norm(
            Segment {
                a: seg.a,
                h: 2.0 * seg.h,
                values: &coarse_vals,
            },
            alpha,
        );
        if !fine.is_finite() || !coarse.is_finite() || (fine > 0.0 && fine > 2.0 * coarse) {
            return Err(Error::NormDivergence { coarse, fine });
        }
    } else if !fine.is_finite() {
        return Err(Error::NormDivergence { coarse: fine, fine });
    }
    Ok(fine)
}

/// `‖f‖_{α,[t0,t]}` where `t0` is the first grid time of `f`.
pub fn holder_norm(f: &GridFunction, alpha: f64, t: f64) -> Result<f64> {
    holder_norm_interval(f, alpha, f.times[0], t)
}

/// `‖f‖_{α,[a,b]} = ∫_a^b |f(s)|(s-a)^{-α} + ∫_a^s |f(s)-f(z)|(s-z)^{-1-α} dz ds`.
///
/// The inner integral is exact for the interpolant; the outer one uses
/// product integration for the weighted `|f|` term and the trapezoid rule for
/// the rest. Returns 0 when `a == b`.
pub fn holder_norm_interval(f: &GridFunction, alpha: f64, a: f64, b: f64) -> Result<f64> {
    check_order(alpha)?;
    if alpha >= 0.5 {
        return Err(Error::param(format!("norm order {alpha} must be below 1/2")));
    }
    if f.node_index(a).is_some() && f.node_index(a) == f.node_index(b) {
        return Ok(0.0);
    }
    let seg = segment(f, a, b)?;
    Ok(segment_norm(seg, alpha))
}
