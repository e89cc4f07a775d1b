use rayon::prelude::*;

use super::{check_order, power_table, segment, FracParams, Segment};
use crate::error::Result;
use crate::path::GridFunction;
use crate::special::gamma;

/// Left-sided Weyl derivative `D^α_{a+}` of the interpolant at nodes `1..=m`
/// (entry 0 is NaN: the derivative is not defined at `a`).
///
/// On each cell the interpolant is `f(u) = f_j + s_j (u - x_j)`, so with
/// `w = x - u` the numerator is `c + s_j w` and both `∫ w^{-1-α}` and
/// `∫ w^{-α}` are exact.
pub(crate) fn left_nodes(seg: Segment<'_>, alpha: f64) -> Vec<f64> {
    let m = seg.cells();
    let v = seg.values;
    let pn = power_table(seg.h, -alpha, m);
    let pp = power_table(seg.h, 1.0 - alpha, m);
    let slope_factor = alpha / (1.0 - alpha) / seg.h;
    let norm = gamma(1.0 - alpha).recip();

    let mut out = vec![f64::NAN; m + 1];
    out[1..].par_iter_mut().enumerate().for_each(|(idx, slot)| {
        let i = idx + 1;
        let vi = v[i];
        let mut acc = vi * pn[i];
        for d in 1..=i {
            let j = i - d;
            let dv = v[j + 1] - v[j];
            if d >= 2 {
                let c = vi - v[j] - dv * d as f64;
                acc += c * (pn[d - 1] - pn[d]);
            }
            acc += slope_factor * dv * (pp[d] - pp[d - 1]);
        }
        *slot = norm * acc;
    });
    out
}

/// Right-sided Weyl derivative `D^α_{b-}` at nodes `0..m` (entry `m` is NaN).
pub(crate) fn right_nodes(seg: Segment<'_>, alpha: f64) -> Vec<f64> {
    let m = seg.cells();
    let v = seg.values;
    let pn = power_table(seg.h, -alpha, m);
    let pp = power_table(seg.h, 1.0 - alpha, m);
    let slope_factor = alpha / (1.0 - alpha) / seg.h;
    let norm = gamma(1.0 - alpha).recip();

    let mut out = vec![f64::NAN; m + 1];
    out[..m].par_iter_mut().enumerate().for_each(|(i, slot)| {
        let vi = v[i];
        let mut acc = vi * pn[m - i];
        for d in 1..=(m - i) {
            let j = i + d - 1;
            let dv = v[j + 1] - v[j];
            if d >= 2 {
                let c = vi - v[j] + dv * (d - 1) as f64;
                acc += c * (pn[d - 1] - pn[d]);
            }
            acc -= slope_factor * dv * (pp[d] - pp[d - 1]);
        }
        *slot = norm * acc;
    });
    out
}

/// `D^α_{a+}` of the interpolant at `x = a + k h + τ`, `k = 0..count`, `τ ∈ (0, h]`.
pub(crate) fn left_at_offset(seg: Segment<'_>, alpha: f64, tau: f64, count: usize) -> Vec<f64> {
    let m = seg.cells();
    let v = seg.values;
    let h = seg.h;
    let count = count.min(m);
    // (τ + d h)^p for d = 0..count
    let pn: Vec<f64> = (0..=count).map(|d| (tau + d as f64 * h).powf(-alpha)).collect();
    let pp: Vec<f64> = (0..=count).map(|d| (tau + d as f64 * h).powf(1.0 - alpha)).collect();
    let slope_factor = alpha / (1.0 - alpha) / h;
    let norm = gamma(1.0 - alpha).recip();
    (0..count)
        .into_par_iter()
        .map(|k| {
            let dk = v[k + 1] - v[k];
            let fx = v[k] + dk * tau / h;
            let mut acc = fx * pn[k] + slope_factor * dk * pp[0];
            for j in 0..k {
                let d = k - j;
                let dv = v[j + 1] - v[j];
                let c = fx - v[j] - dv * (tau / h + d as f64);
                // w runs over [τ + (d-1)h, τ + d h]
                acc += c * (pn[d - 1] - pn[d]) + slope_factor * dv * (pp[d] - pp[d - 1]);
            }
            norm * acc
        })
        .collect()
}

/// `D^β_{b-}` of the interpolant at `x = a + k h + τ`, `k ∈ cells`, `τ ∈ [0, h)`.
pub(crate) fn right_at_offset(seg: Segment<'_>, beta: f64, tau: f64, cells: std::ops::Range<usize>) -> Vec<f64> {
    let m = seg.cells();
    let first = cells.start;
    let v = seg.values;
    let h = seg.h;
    let sigma = h - tau;
    let span = m - first;
    let pn: Vec<f64> = (0..=span).map(|d| (sigma + d as f64 * h).powf(-beta)).collect();
    let pp: Vec<f64> = (0..=span).map(|d| (sigma + d as f64 * h).powf(1.0 - beta)).collect();
    let slope_factor = beta / (1.0 - beta) / h;
    let norm = gamma(1.0 - beta).recip();
    cells
        .into_par_iter()
        .map(|k| {
            let dk = v[k + 1] - v[k];
            let gx = v[k] + dk * tau / h;
            let mut acc = gx * pn[m - k - 1] - slope_factor * dk * pp[0];
            for j in (k + 1)..m {
                let d = j - k;
                let dv = v[j + 1] - v[j];
                let c = gx - v[j] + dv * (sigma / h + (d - 1) as f64);
                acc += c * (pn[d - 1] - pn[d]) - slope_factor * dv * (pp[d] - pp[d - 1]);
            }
            norm * acc
        })
        .collect()
}

fn interior(seg: Segment<'_>, values: Vec<f64>) -> GridFunction {
    let m = seg.cells();
    let times = (1..m).map(|k| seg.a + k as f64 * seg.h).collect();
    GridFunction {
        times,
        values: values[1..m].to_vec(),
    }
}

/// `(D^α_{a+} f)(x)` at the interior grid nodes of `[a, b]`.
pub fn rl_derivative_left(f: &GridFunction, p: &FracParams) -> Result<GridFunction> {
    check_order(p.alpha)?;
    let seg = segment(f, p.a, p.b)?;
    Ok(interior(seg, left_nodes(seg, p.alpha)))
}

/// `(D^α_{b-} g)(x)` at the interior grid nodes of `[a, b]`. The caller passes
/// `g_{b-} = g - g(b)` when that is the function wanted.
pub fn rl_derivative_right(g: &GridFunction, p: &FracParams) -> Result<GridFunction> {
    check_order(p.alpha)?;
    let seg = segment(g, p.a, p.b)?;
    Ok(interior(seg, right_nodes(seg, p.alpha)))
}

/// `Λ_α(g) = max_{s<t} |D^{1-α}_{t-} g_{t-}(s)|` over grid pairs.
///
/// For fixed `s` the cell contributions do not depend on `t`, so a single
/// forward sweep in `t` accumulates them: O(n²) overall.
pub fn lambda_alpha(g: &GridFunction, alpha: f64) -> Result<f64> {
    check_order(alpha)?;
    let seg = segment(g, g.times[0], g.times[g.len() - 1])?;
    let beta = 1.0 - alpha;
    let m = seg.cells();
    let v = seg.values;
    let qn = power_table(seg.h, -beta, m);
    let qp = power_table(seg.h, 1.0 - beta, m);
    let slope_factor = beta / (1.0 - beta) / seg.h;
    let norm = gamma(alpha).recip();

    let best = (0..m)
        .into_par_iter()
        .map(|i| {
            let vi = v[i];
            let mut cells = 0.0;
            let mut best = 0.0f64;
            for k in (i + 1)..=m {
                let d = k - i;
                let j = k - 1;
                let dv = v[j + 1] - v[j];
                if d >= 2 {
                    let c = vi - v[j] + dv * (d - 1) as f64;
                    cells += c * (qn[d - 1] - qn[d]);
                }
                cells -= slope_factor * dv * (qp[d] - qp[d - 1]);
                let value = norm * ((vi - v[k]) * qn[d] + cells);
                best = best.max(value.abs());
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(c: f64, n: usize) -> GridFunction {
        GridFunction::from_fn(1.0, n, |_| c)
    }

    #[test]
    fn left_derivative_of_constant_is_closed_form() {
        let f = constant(2.5, 64);
        let p = FracParams::new(0.5, 0.0, 1.0).unwrap();
        let d = rl_derivative_left(&f, &p).unwrap();
        assert_eq!(d.len(), 63);
        for (x, v) in d.times.iter().zip(&d.values) {
            let exact = 2.5 / (gamma(0.5) * x.sqrt());
            assert!((v - exact).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn unit_constant_at_one_is_inverse_sqrt_pi() {
        let f = constant(1.0, 64);
        let seg = segment(&f, 0.0, 1.0).unwrap();
        let d = left_nodes(seg, 0.5);
        assert!((d[64] - 0.564_189_583_547_756_3).abs() < 1e-12);
    }

    #[test]
    fn right_derivative_of_constant_is_closed_form() {
        let g = constant(-1.5, 50);
        let p = FracParams::new(0.3, 0.0, 1.0).unwrap();
        let d = rl_derivative_right(&g, &p).unwrap();
        for (x, v) in d.times.iter().zip(&d.values) {
            let exact = -1.5 / (gamma(0.7) * (1.0 - x).powf(0.3));
            assert!((v - exact).abs() < 1e-12 * exact.abs());
        }
    }

    #[test]
    fn derivative_of_line_is_exact() {
        // D^α_{a+} x = x^{1-α} / Γ(2-α) on [0, b]; exact for linear data.
        let f = GridFunction::from_fn(1.0, 40, |t| t);
        let p = FracParams::new(0.4, 0.0, 1.0).unwrap();
        let d = rl_derivative_left(&f, &p).unwrap();
        for (x, v) in d.times.iter().zip(&d.values) {
            let exact = x.powf(0.6) / gamma(1.6);
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn sub_interval_requires_nodes() {
        let f = constant(1.0, 10);
        assert!(rl_derivative_left(&f, &FracParams::new(0.5, 0.0, 0.55).unwrap()).is_err());
        let d = rl_derivative_left(&f, &FracParams::new(0.5, 0.2, 0.6).unwrap()).unwrap();
        assert_eq!(d.len(), 3);
        let exact = 1.0 / (gamma(0.5) * (d.times[0] - 0.2).sqrt());
        assert!((d.values[0] - exact).abs() < 1e-12);
    }

    #[test]
    fn offset_evaluation_agrees_with_nodes() {
        let g = GridFunction::from_fn(1.0, 30, |t| (4.0 * t).cos() - t);
        let seg = segment(&g, 0.0, 1.0).unwrap();
        let h = seg.h;
        let nodes = left_nodes(seg, 0.3);
        let off = left_at_offset(seg, 0.3, h, 30);
        for k in 0..30 {
            assert!((off[k] - nodes[k + 1]).abs() < 1e-10 * nodes[k + 1].abs().max(1.0));
        }
        let shifted: Vec<f64> = g.values.iter().map(|v| v - g.values[30]).collect();
        let sseg = Segment { a: 0.0, h, values: &shifted };
        let rn = right_nodes(sseg, 0.6);
        let ro = right_at_offset(sseg, 0.6, 0.0, 0..30);
        for k in 0..30 {
            assert!((ro[k] - rn[k]).abs() < 1e-10 * rn[k].abs().max(1.0));
        }
    }

    #[test]
    fn offset_evaluation_of_line() {
        let f = GridFunction::from_fn(1.0, 20, |t| t);
        let seg = segment(&f, 0.0, 1.0).unwrap();
        let tau = 0.3 * seg.h;
        let off = left_at_offset(seg, 0.4, tau, 20);
        for (k, val) in off.iter().enumerate() {
            let x = k as f64 * seg.h + tau;
            assert!((val - x.powf(0.6) / gamma(1.6)).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_of_constant_is_zero() {
        assert_eq!(lambda_alpha(&constant(3.0, 32), 0.4).unwrap(), 0.0);
    }

    #[test]
    fn lambda_matches_right_derivative_route() {
        let g = GridFunction::from_fn(1.0, 24, |t| (3.0 * t).sin() + t * t);
        let alpha = 0.35;
        let mut brute = 0.0f64;
        for k in 1..g.len() {
            let tk = g.times[k];
            let shifted = GridFunction {
                times: g.times.clone(),
                values: g.values.iter().map(|v| v - g.values[k]).collect(),
            };
            let seg = segment(&shifted, 0.0, tk).unwrap();
            let d = right_nodes(seg, 1.0 - alpha);
            for v in &d[..k] {
                brute = brute.max(v.abs());
            }
        }
        let fast = lambda_alpha(&g, alpha).unwrap();
        assert!((fast - brute).abs() < 1e-12 * brute);
    }
}
