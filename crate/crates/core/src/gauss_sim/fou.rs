use super::exact::fbm_component;
use crate::error::{Error, Result};
use crate::path::{uniform_grid, SamplePath};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct FouParams {
    pub a: f64,
    pub b: f64,
    pub sigma: f64,
    pub hurst: f64,
    pub y0: f64,
}

/// Euler scheme for `dY = (b - aY) dt + σ dB^H`, `Y(0) = Y₀`, driven by exact fBm paths.
#[allow(clippy::too_many_arguments)]
pub fn simulate_fou(
    a: f64,
    b: f64,
    sigma: f64,
    hurst: f64,
    y0: f64,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<SamplePath>> {
    simulate_fou_params(&FouParams { a, b, sigma, hurst, y0 }, horizon, n_steps, n_paths, seed)
}

pub(crate) fn simulate_fou_params(
    p: &FouParams,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<SamplePath>> {
    if !(p.hurst > 0.0 && p.hurst < 1.0) || !(p.sigma >= 0.0) || !(horizon > 0.0) || n_steps == 0 {
        return Err(Error::param("invalid fOU parameters"));
    }
    let h = horizon / n_steps as f64;
    let times = uniform_grid(horizon, n_steps);
    let drivers = fbm_component(p.hurst, horizon, n_steps, n_paths, seed, 0);
    Ok(drivers
        .into_iter()
        .enumerate()
        .map(|(id, bh)| {
            let mut y = Vec::with_capacity(n_steps + 1);
            let mut cur = p.y0;
            y.push(cur);
            for k in 0..n_steps {
                cur += (p.b - p.a * cur) * h + p.sigma * (bh[k + 1] - bh[k]);
                y.push(cur);
            }
            SamplePath { times: times.clone(), values: y, seed_id: id as u64 }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_sim::{simulate_exact, GaussianModel};

    #[test]
    fn drift_free_is_shifted_fbm() {
        let y = simulate_fou(0.0, 0.0, 1.0, 0.7, 2.0, 1.0, 64, 3, 4).unwrap();
        let b = simulate_exact(&GaussianModel::fbm(0.7, 1.0).unwrap(), 64, 3, 4).unwrap();
        for (p, q) in y.iter().zip(&b) {
            for (u, v) in p.values.iter().zip(&q.values) {
                assert!((u - v - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn deterministic_ode() {
        let n = 1000;
        let y = simulate_fou(1.0, 0.0, 0.0, 0.7, 1.0, 1.0, n, 1, 0).unwrap();
        let err = (y[0].values[n] - (-1.0f64).exp()).abs();
        assert!(err < 1.0 / n as f64, "{err}");
    }
}
