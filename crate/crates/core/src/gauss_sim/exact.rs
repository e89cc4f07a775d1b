use nalgebra::{Cholesky, DMatrix};
use rayon::prelude::*;

use super::{covariance, GaussianModel, ModelKind};
use crate::error::{Error, Result};
use crate::path::{uniform_grid, SamplePath};
use crate::rng::{path_stream, standard_normals};

const PATH_CHUNK: usize = 32;

/// Autocovariance of fractional Gaussian noise with step `h`, lags `0..n`.
fn fgn_autocovariance(hurst: f64, h: f64, n: usize) -> Vec<f64> {
    let p = 2.0 * hurst;
    let scale = 0.5 * h.powf(p);
    (0..n)
        .map(|k| {
            let k = k as f64;
            scale * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).abs().powf(p))
        })
        .collect()
}

/// Exact fGn increments for a batch of standard-normal vectors by the
/// Durbin–Levinson recursion. This is the Cholesky factor of the Toeplitz
/// covariance applied to each input, at O(n²) cost and O(n) memory.
pub fn fgn_levinson(hurst: f64, h: f64, normals: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = normals.first().map_or(0, Vec::len);
    let gamma = fgn_autocovariance(hurst, h, n);
    let mut out: Vec<Vec<f64>> = normals.iter().map(|_| Vec::with_capacity(n)).collect();
    if n == 0 {
        return out;
    }
    let mut phi: Vec<f64> = Vec::with_capacity(n);
    let mut prev: Vec<f64> = Vec::with_capacity(n);
    let mut v = gamma[0];
    for (x, z) in out.iter_mut().zip(normals) {
        x.push(v.sqrt() * z[0]);
    }
    for k in 1..n {
        let num = gamma[k] - (0..k - 1).map(|j| phi[j] * gamma[k - 1 - j]).sum::<f64>();
        let kk = num / v;
        prev.clear();
        prev.extend_from_slice(&phi);
        for j in 0..k - 1 {
            phi[j] = prev[j] - kk * prev[k - 2 - j];
        }
        phi.push(kk);
        v *= 1.0 - kk * kk;
        let sd = v.max(0.0).sqrt();
        for (x, z) in out.iter_mut().zip(normals) {
            // phi[j] multiplies X_{k-1-j}
            let mean: f64 = phi.iter().zip(x.iter().rev()).map(|(p, xv)| p * xv).sum();
            x.push(mean + sd * z[k]);
        }
    }
    out
}

fn cumulative(increments: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(increments.len() + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for d in increments {
        acc += d;
        out.push(acc);
    }
    out
}

/// Node values of an fBm component for paths `0..n_paths`, drawn from `component`.
pub(crate) fn fbm_component(
    hurst: f64,
    horizon: f64,
    n_steps: usize,
    n_paths: usize,
    seed: u64,
    component: u32,
) -> Vec<Vec<f64>> {
    let h = horizon / n_steps as f64;
    let ids: Vec<u64> = (0..n_paths as u64).collect();
    ids.par_chunks(PATH_CHUNK)
        .flat_map_iter(|chunk| {
            let normals: Vec<Vec<f64>> = chunk
                .iter()
                .map(|&p| standard_normals(&mut path_stream(seed, component, p), n_steps))
                .collect();
            fgn_levinson(hurst, h, &normals).into_iter().map(|inc| cumulative(&inc))
        })
        .collect()
}

/// Dense lower Cholesky factor with diagonal jitter escalation.
pub(crate) fn cholesky_with_jitter(mut cov: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(c) = Cholesky::new(cov.clone()) {
        return Ok(c.l());
    }
    let max_diag = cov.diagonal().iter().cloned().fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let mut jitter = 1e-12;
    let mut added = 0.0;
    while jitter <= 1e-8 * (1.0 + 1e-9) {
        let target = jitter * max_diag;
        for i in 0..cov.nrows() {
            cov[(i, i)] += target - added;
        }
        added = target;
        if let Some(c) = Cholesky::new(cov.clone()) {
            log::warn!("covariance factorized with diagonal jitter {jitter:e}");
            return Ok(c.l());
        }
        jitter *= 10.0;
    }
    Err(Error::Factorization { jitter: jitter / 10.0 })
}

fn dense_component(model: &GaussianModel, n_steps: usize, n_paths: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let times = uniform_grid(model.horizon, n_steps);
    let mut cov = DMatrix::<f64>::zeros(n_steps, n_steps);
    for i in 0..n_steps {
        for j in 0..=i {
            let c = covariance(model, times[i + 1], times[j + 1])?;
            cov[(i, j)] = c;
            cov[(j, i)] = c;
        }
    }
    let l = cholesky_with_jitter(cov)?;
    let ids: Vec<u64> = (0..n_paths as u64).collect();
    Ok(ids
        .par_chunks(PATH_CHUNK)
        .flat_map_iter(|chunk| {
            let z = DMatrix::from_fn(n_steps, chunk.len(), |_, _| 0.0);
            let mut z = z;
            for (c, &p) in chunk.iter().enumerate() {
                let draws = standard_normals(&mut path_stream(seed, 0, p), n_steps);
                z.set_column(c, &nalgebra::DVector::from_vec(draws));
            }
            let x = &l * z;
            (0..chunk.len())
                .map(|c| {
                    let mut v = Vec::with_capacity(n_steps + 1);
                    v.push(0.0);
                    v.extend(x.column(c).iter());
                    v
                })
                .collect::<Vec<_>>()
        })
        .collect())
}

/// Exact centered Gaussian paths with the model covariance on `t_k = kT/n_steps`.
///
/// Stationary-increment kinds use the Levinson recursion; subfractional and
/// bifractional factorize the dense covariance matrix. Component `i` of a
/// multi-component model draws from stream `i`, and path `p` has `seed_id = p`.
pub fn simulate_exact(model: &GaussianModel, n_steps: usize, n_paths: usize, seed: u64) -> Result<Vec<SamplePath>> {
    model.validate()?;
    if n_steps == 0 {
        return Err(Error::param("n_steps must be at least 1"));
    }
    let t_end = model.horizon;
    let values: Vec<Vec<f64>> = match &model.kind {
        ModelKind::Wiener => fbm_component(0.5, t_end, n_steps, n_paths, seed, 0),
        ModelKind::Fbm { hurst } => fbm_component(*hurst, t_end, n_steps, n_paths, seed, 0),
        ModelKind::Mixed { hurst } => {
            let w = fbm_component(0.5, t_end, n_steps, n_paths, seed, 0);
            let b = fbm_component(*hurst, t_end, n_steps, n_paths, seed, 1);
            w.into_iter()
                .zip(b)
                .map(|(w, b)| w.iter().zip(&b).map(|(x, y)| x + y).collect())
                .collect()
        }
        ModelKind::FbmCombo { weights, hursts } => {
            let mut acc = vec![vec![0.0; n_steps + 1]; n_paths];
            for (i, (a, h)) in weights.iter().zip(hursts).enumerate() {
                let comp = fbm_component(*h, t_end, n_steps, n_paths, seed, i as u32);
                for (dst, src) in acc.iter_mut().zip(comp) {
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += a * s;
                    }
                }
            }
            acc
        }
        ModelKind::Subfractional { .. } | ModelKind::Bifractional { .. } => {
            dense_component(model, n_steps, n_paths, seed)?
        }
        ModelKind::Fou { .. } | ModelKind::Volterra { .. } => {
            return Err(Error::UnsupportedKind(model.kind.name()))
        }
    };
    let times = uniform_grid(t_end, n_steps);
    Ok(values
        .into_iter()
        .enumerate()
        .map(|(p, v)| SamplePath {
            times: times.clone(),
            values: v,
            seed_id: p as u64,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levinson_equals_dense_cholesky() {
        let hurst = 0.7;
        let n = 40;
        let model = GaussianModel::fbm(hurst, 1.0).unwrap();
        let times = uniform_grid(1.0, n);
        let cov = DMatrix::from_fn(n, n, |i, j| covariance(&model, times[i + 1], times[j + 1]).unwrap());
        let l = Cholesky::new(cov).unwrap().l();
        let z = standard_normals(&mut path_stream(11, 0, 0), n);
        let dense = &l * nalgebra::DVector::from_vec(z.clone());
        let inc = &fgn_levinson(hurst, 1.0 / n as f64, &[z])[0];
        let fast = cumulative(inc);
        for i in 0..n {
            assert!((fast[i + 1] - dense[i]).abs() < 1e-10, "node {i}");
        }
    }

    #[test]
    fn deterministic_and_starting_at_zero() {
        let m = GaussianModel::new(ModelKind::Bifractional { hurst: 0.6, k: 0.9 }, 1.0).unwrap();
        let a = simulate_exact(&m, 16, 5, 3).unwrap();
        let b = simulate_exact(&m, 16, 5, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.values[0] == 0.0 && p.values.len() == 17));
        assert_eq!(a[4].seed_id, 4);
    }

    #[test]
    fn single_weight_combo_is_fbm() {
        let f = simulate_exact(&GaussianModel::fbm(0.65, 1.0).unwrap(), 32, 4, 9).unwrap();
        let c = GaussianModel::new(ModelKind::FbmCombo { weights: vec![1.0], hursts: vec![0.65] }, 1.0).unwrap();
        assert_eq!(simulate_exact(&c, 32, 4, 9).unwrap(), f);
    }

    #[test]
    fn half_hurst_is_wiener() {
        let f = simulate_exact(&GaussianModel::fbm(0.5, 1.0).unwrap(), 32, 3, 2).unwrap();
        let w = simulate_exact(&GaussianModel::wiener(1.0).unwrap(), 32, 3, 2).unwrap();
        for (a, b) in f.iter().zip(&w) {
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jitter_rescues_semidefinite_matrix() {
        let v = nalgebra::DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let cov = &v * v.transpose();
        let l = cholesky_with_jitter(cov).unwrap();
        assert!((l[(0, 0)] - 1.0).abs() < 1e-6);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(cholesky_with_jitter(bad), Err(Error::Factorization { .. })));
    }
}
