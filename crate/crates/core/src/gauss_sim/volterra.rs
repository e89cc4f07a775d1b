use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_calc::kernels::cached_forward;
use crate::path::{uniform_grid, SamplePath};
use crate::rng::{path_stream, standard_normals};

/// Deterministic kernel of `G(t) = ∫_0^t K(t,s) dW(s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VolterraKernel {
    /// The fBm kernel, `H ∈ [1/2, 1)`.
    Molchan { hurst: f64 },
    /// `K(t,s) = (t-s)^{H-1/2} s^{-r}`, `r ∈ [0, 1/2)`.
    PowerLaw { hurst: f64, r: f64 },
}

impl VolterraKernel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            VolterraKernel::Molchan { hurst } if (0.5..1.0).contains(&hurst) => Ok(()),
            VolterraKernel::Molchan { hurst } => {
                Err(Error::param(format!("Molchan kernel needs H in [1/2, 1), got {hurst}")))
            }
            VolterraKernel::PowerLaw { hurst, r } => {
                if !(hurst > 0.0 && hurst < 1.0) || !(0.0..0.5).contains(&r) {
                    return Err(Error::param(format!(
                        "power-law kernel needs H in (0,1) and r in [0, 1/2), got H={hurst}, r={r}"
                    )));
                }
                Ok(())
            }
        }
    }

    fn weights(&self, horizon: f64, n: usize) -> Result<DMatrix<f64>> {
        match *self {
            VolterraKernel::Molchan { hurst } => Ok(cached_forward(hurst, horizon, n)?.matrix().clone()),
            VolterraKernel::PowerLaw { hurst, r } => Ok(power_law_weights(hurst - 0.5, r, horizon, n)),
        }
    }
}

fn power_integral(a: f64, b: f64, p: f64) -> f64 {
    (b.powf(p + 1.0) - a.powf(p + 1.0)) / (p + 1.0)
}

fn power_law_weights(e: f64, r: f64, horizon: f64, n: usize) -> DMatrix<f64> {
    let h = horizon / n as f64;
    let sub = |t: f64, s0: f64, s1: f64| {
        let mid = 0.5 * (s0 + s1);
        if mid < t - mid {
            power_integral(s0, s1, -r) * (t - mid).powf(e)
        } else {
            mid.powf(-r) * power_integral(t - s1, t - s0, e)
        }
    };
    let mut m = DMatrix::zeros(n, n);
    for i in 1..=n {
        let t = i as f64 * h;
        for j in 0..i {
            let (s0, s1) = (j as f64 * h, (j + 1) as f64 * h);
            let v = if j == 0 || j + 1 == i {
                let w = h / 8.0;
                (0..8).map(|k| sub(t, s0 + k as f64 * w, s0 + (k + 1) as f64 * w)).sum::<f64>()
            } else {
                sub(t, s0, s1)
            };
            m[(i - 1, j)] = v / h;
        }
    }
    m
}

const PATH_CHUNK: usize = 64;

/// Paths of `G(t_i) = Σ_j w_{ij} ΔW_j` together with their driving Wiener paths
/// (stream component 0, `seed_id` = path index).
pub fn simulate_volterra(
    kernel: &VolterraKernel,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<(Vec<SamplePath>, Vec<SamplePath>)> {
    kernel.validate()?;
    if n_steps == 0 || !(horizon > 0.0) {
        return Err(Error::param("Volterra simulation needs n_steps >= 1 and a positive horizon"));
    }
    let weights = kernel.weights(horizon, n_steps)?;
    let h = horizon / n_steps as f64;
    let sqrt_h = h.sqrt();
    let times = uniform_grid(horizon, n_steps);
    let ids: Vec<u64> = (0..n_paths as u64).collect();
    let pairs: Vec<(SamplePath, SamplePath)> = ids
        .par_chunks(PATH_CHUNK)
        .flat_map_iter(|chunk| {
            let mut inc = DMatrix::<f64>::zeros(n_steps, chunk.len());
            for (c, &p) in chunk.iter().enumerate() {
                let z = standard_normals(&mut path_stream(seed, 0, p), n_steps);
                for (k, zk) in z.into_iter().enumerate() {
                    inc[(k, c)] = sqrt_h * zk;
                }
            }
            let g = &weights * &inc;
            chunk
                .iter()
                .enumerate()
                .map(|(c, &p)| {
                    let mut gv = Vec::with_capacity(n_steps + 1);
                    gv.push(0.0);
                    gv.extend(g.column(c).iter());
                    let mut wv = Vec::with_capacity(n_steps + 1);
                    let mut acc = 0.0;
                    wv.push(0.0);
                    for d in inc.column(c).iter() {
                        acc += d;
                        wv.push(acc);
                    }
                    (
                        SamplePath { times: times.clone(), values: gv, seed_id: p },
                        SamplePath { times: times.clone(), values: wv, seed_id: p },
                    )
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(pairs.into_iter().unzip())
}

/// Batch form of [`simulate_fbm_volterra`]: paths `0..n_paths` of `(B^H, W)`.
pub fn simulate_fbm_volterra_batch(
    hurst: f64,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<(Vec<SamplePath>, Vec<SamplePath>)> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::param(format!("Volterra fBm needs H in (1/2, 1), got {hurst}")));
    }
    simulate_volterra(&VolterraKernel::Molchan { hurst }, horizon, n_steps, n_paths, seed)
}

/// One fBm path built by discretized Volterra integration of its own Wiener
/// increments, returned with that Wiener path.
pub fn simulate_fbm_volterra(hurst: f64, horizon: f64, n_steps: usize, seed: u64) -> Result<(SamplePath, SamplePath)> {
    let (mut b, mut w) = simulate_fbm_volterra_batch(hurst, horizon, n_steps, 1, seed)?;
    Ok((b.remove(0), w.remove(0)))
}
