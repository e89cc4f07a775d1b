//! Volterra kernels linking fBm (`H > 1/2`) and its driving Wiener process:
//!
//! `B^H(t) = ∫_0^t K(t,s) dW(s)`, `K(t,s) = C(H) s^{1/2-H} (I^{H-1/2}_{t-} u^{H-1/2})(s)`,
//! `W(t) = C(H)^{-1} ∫_0^t s^{1/2-H} K*(t,s) dB^H(s)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::path::GridFunction;
use crate::quad::legendre_panel;
use crate::special::{c_hurst, gamma};

fn check_hurst(hurst: f64) -> Result<()> {
    if !(0.5..1.0).contains(&hurst) {
        return Err(Error::param(format!("Hurst index {hurst} outside [1/2, 1)")));
    }
    Ok(())
}

/// `∫_s^t u^{H-3/2} (u-s)^{q-1} du` for `q ∈ (1/2, 3/2)`, via `u = s + (t-s) y^{1/q}`
/// and Legendre panels graded towards `y = 0`.
fn tail_integral(hurst: f64, q: f64, t: f64, s: f64) -> f64 {
    let span = t - s;
    if span <= 0.0 {
        return 0.0;
    }
    let p = hurst - 1.5;
    let integrand = |y: f64| (s + span * y.powf(1.0 / q)).powf(p);
    let knee = if s > 0.0 { (s / span).powf(q).min(1.0) } else { 0.0 };
    let mut total = 0.0;
    let mut lo = 0.0;
    let mut hi = if knee > 0.0 { knee / 16.0 } else { 1e-12 };
    if knee == 0.0 {
        // Pure power y^{p/q}: integrate the first panel in closed form.
        let e = p / q + 1.0;
        total += span.powf(p) * hi.powf(e) / e;
        lo = hi;
        hi *= 2.0;
    }
    while lo < 1.0 {
        let top = hi.min(1.0);
        total += legendre_panel(lo, top, integrand);
        lo = top;
        hi = 2.0 * top;
    }
    span.powf(q) / q * total
}

/// Forward kernel `K(t,s)` for `0 < s < t`.
pub fn molchan_kernel(hurst: f64, t: f64, s: f64) -> f64 {
    if hurst == 0.5 {
        return 1.0;
    }
    let pre = c_hurst(hurst) / gamma(hurst + 0.5);
    let e = hurst - 0.5;
    pre * s.powf(-e) * (t.powf(e) * (t - s).powf(e) - e * tail_integral(hurst, hurst + 0.5, t, s))
}

/// `K*(t,s)` for `0 < s < t`.
pub fn inverse_kernel_star(hurst: f64, t: f64, s: f64) -> f64 {
    if hurst == 0.5 {
        return 1.0;
    }
    let e = hurst - 0.5;
    (t.powf(e) * (t - s).powf(-e) - e * tail_integral(hurst, 1.5 - hurst, t, s)) / gamma(1.5 - hurst)
}

/// `∫_{s0}^{s1} x^p dx`.
fn power_integral(s0: f64, s1: f64, p: f64) -> f64 {
    (s1.powf(p + 1.0) - s0.powf(p + 1.0)) / (p + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Direction {
    Forward,
    Inverse,
}

/// `∫_{s0}^{s1} k(t,s) ds` on a sub-cell: the power singular at the nearer end is
/// integrated exactly and the remaining factor is taken at the midpoint.
fn subcell(dir: Direction, hurst: f64, t: f64, s0: f64, s1: f64) -> f64 {
    let e = hurst - 0.5;
    let mid = 0.5 * (s0 + s1);
    let near_zero = mid < t - mid;
    // k(t,s) = pre · s^{-e} [t^e (t-s)^{±e} - e J(t,s)]
    let (pre, tail_exp, q) = match dir {
        Direction::Forward => (c_hurst(hurst) / gamma(hurst + 0.5), e, hurst + 0.5),
        Direction::Inverse => (1.0 / (c_hurst(hurst) * gamma(1.5 - hurst)), -e, 1.5 - hurst),
    };
    let s_pow = power_integral(s0, s1, -e);
    let lead = if near_zero {
        s_pow * (t - mid).powf(tail_exp)
    } else {
        mid.powf(-e) * power_integral(t - s1, t - s0, tail_exp)
    };
    pre * (t.powf(e) * lead - e * tail_integral(hurst, q, t, mid) * s_pow)
}

fn cell_integral(dir: Direction, hurst: f64, t: f64, s0: f64, s1: f64, edge: bool) -> f64 {
    if !edge {
        return subcell(dir, hurst, t, s0, s1);
    }
    let parts = 8;
    let w = (s1 - s0) / parts as f64;
    (0..parts)
        .map(|k| subcell(dir, hurst, t, s0 + k as f64 * w, s0 + (k + 1) as f64 * w))
        .sum()
}

/// Cell-averaged kernel weights on a uniform grid `t_k = k h`:
/// row `i-1` holds `(1/h) ∫_{t_j}^{t_{j+1}} k(t_i, s) ds` for `j < i`, so that
/// `X(t_i) = Σ_j w_{ij} ΔY_j`.
#[derive(Debug, Clone)]
pub struct MolchanWeights {
    hurst: f64,
    step: f64,
    matrix: DMatrix<f64>,
}

impl MolchanWeights {
    /// Weights of `W ↦ B^H`.
    pub fn forward(hurst: f64, horizon: f64, n_steps: usize) -> Result<Self> {
        Self::build(Direction::Forward, hurst, horizon, n_steps)
    }

    /// Weights of `B^H ↦ W`.
    pub fn inverse(hurst: f64, horizon: f64, n_steps: usize) -> Result<Self> {
        Self::build(Direction::Inverse, hurst, horizon, n_steps)
    }

    fn build(dir: Direction, hurst: f64, horizon: f64, n: usize) -> Result<Self> {
        check_hurst(hurst)?;
        if !(horizon > 0.0) || n == 0 {
            return Err(Error::param("kernel grid needs a positive horizon and at least one step"));
        }
        let h = horizon / n as f64;
        let mut matrix = DMatrix::<f64>::zeros(n, n);
        if hurst == 0.5 {
            for i in 0..n {
                for j in 0..=i {
                    matrix[(i, j)] = 1.0;
                }
            }
            return Ok(MolchanWeights { hurst, step: h, matrix });
        }
        let rows: Vec<Vec<f64>> = (1..=n)
            .into_par_iter()
            .map(|i| {
                let t = i as f64 * h;
                (0..i)
                    .map(|j| {
                        let edge = j == 0 || j + 1 == i;
                        cell_integral(dir, hurst, t, j as f64 * h, (j + 1) as f64 * h, edge) / h
                    })
                    .collect()
            })
            .collect();
        for (i, row) in rows.into_iter().enumerate() {
            for (j, w) in row.into_iter().enumerate() {
                matrix[(i, j)] = w;
            }
        }
        Ok(MolchanWeights { hurst, step: h, matrix })
    }

    pub(crate) fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn hurst(&self) -> f64 {
        self.hurst
    }

    pub fn n_steps(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Weight of increment `j` in the value at node `i` (`1 ≤ i`, `j < i`).
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i - 1, j)]
    }

    /// Node values `X(t_0..=t_n)` from increments `ΔY_0..ΔY_{n-1}`; `X(0) = 0`.
    pub fn apply(&self, increments: &[f64]) -> Vec<f64> {
        assert_eq!(increments.len(), self.n_steps(), "increment count must match the grid");
        let mut out = Vec::with_capacity(increments.len() + 1);
        out.push(0.0);
        for i in 0..self.n_steps() {
            let row = self.matrix.row(i);
            out.push((0..=i).map(|j| row[j] * increments[j]).sum());
        }
        out
    }

    /// Batched form: column `p` of `increments` (`n × paths`) maps to column `p`
    /// of the result (`(n+1) × paths`, first row zero).
    pub fn apply_columns(&self, increments: &DMatrix<f64>) -> DMatrix<f64> {
        let body = &self.matrix * increments;
        body.insert_row(0, 0.0)
    }

    /// `h Σ_j w_{ij}²`: the variance the discrete forward map assigns to node `i`
    /// when driven by Wiener increments.
    pub fn node_variances(&self) -> Vec<f64> {
        let mut out = vec![0.0];
        for i in 0..self.n_steps() {
            out.push(self.step * self.matrix.row(i).iter().map(|w| w * w).sum::<f64>());
        }
        out
    }
}

type CacheKey = (Direction, u64, u64, usize);

const CACHE_CAPACITY: usize = 8;

/// Weight matrices are expensive (O(n²) kernel quadratures) and are reused
/// across paths, so recently built ones are kept.
fn cached(dir: Direction, hurst: f64, horizon: f64, n: usize) -> Result<Arc<MolchanWeights>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<MolchanWeights>>>> = OnceLock::new();
    let key = (dir, hurst.to_bits(), horizon.to_bits(), n);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(w) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&key) {
        return Ok(Arc::clone(w));
    }
    let built = Arc::new(MolchanWeights::build(dir, hurst, horizon, n)?);
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    if guard.len() >= CACHE_CAPACITY {
        guard.clear();
    }
    guard.insert(key, Arc::clone(&built));
    Ok(built)
}

pub(crate) fn cached_forward(hurst: f64, horizon: f64, n: usize) -> Result<Arc<MolchanWeights>> {
    cached(Direction::Forward, hurst, horizon, n)
}

fn transform(path: &GridFunction, hurst: f64, dir: Direction) -> Result<GridFunction> {
    check_hurst(hurst)?;
    let h = path.uniform_step()?;
    if path.times[0].abs() > 1e-12 * h {
        return Err(Error::GridMismatch("Volterra transforms need a grid starting at 0".into()));
    }
    let n = path.len() - 1;
    let weights = cached(dir, hurst, n as f64 * h, n)?;
    let increments: Vec<f64> = path.values.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(GridFunction {
        times: path.times.clone(),
        values: weights.apply(&increments),
    })
}

/// Discrete `B^H(t_i) = Σ_j w_{ij} ΔW_j` from a Wiener path on a grid starting at 0.
pub fn k_h_transform(wiener: &GridFunction, hurst: f64) -> Result<GridFunction> {
    transform(wiener, hurst, Direction::Forward)
}

/// Recovers the driving Wiener path from an fBm path on a grid starting at 0.
pub fn inverse_transform(fbm: &GridFunction, hurst: f64) -> Result<GridFunction> {
    transform(fbm, hurst, Direction::Inverse)
}
