//! Pricing kernels `φ(T) = exp{∫θ dW - ½∫θ² ds}` built from deterministic
//! integrands, relative entropies, and the variance lower bound of the
//! prelimit fBm approximation.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{interpolate, same_grid, uniform_step, SamplePath, GRID_RTOL};
use crate::special::c1_c2_constants;
use crate::stats::{mean, median, Estimate};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ThetaKind {
    Constant { theta0: f64 },
    /// `θ(s) = coeff · s^exponent`, exponent in `(-1/2, 0]`.
    PowerLaw { coeff: f64, exponent: f64 },
    /// Minus the market price of risk of the hidden semimartingale in the
    /// geometric fBm market: `θ(s) = -(((μ-r) C₂(H)/σ) s^{1/2-H} + σ/2)`.
    Example42 { mu: f64, r: f64, sigma: f64, hurst: f64 },
    /// Tabulated values, interpolated linearly and sampled at the left end of each step.
    Custom { times: Vec<f64>, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSpec {
    #[serde(flatten)]
    pub kind: ThetaKind,
    pub horizon: f64,
}

/// Per-path kernel quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub path_id: u64,
    pub phi_t: f64,
    pub log_phi_t: f64,
    pub ito_integral: f64,
    pub quad_term: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyDirection {
    /// `H(P*|P) = E(φ log φ)`.
    PStarP,
    /// `H(P|P*) = E(-log φ)`.
    PPStar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub se: f64,
    /// Batch means fail to stabilize.
    pub diverging: bool,
}

impl EntropyEstimate {
    pub fn require_stable(self, what: &'static str) -> Result<Self> {
        if self.diverging {
            return Err(Error::EntropyDivergence { what });
        }
        Ok(self)
    }
}

/// `∫_{t0}^{t1} s^p ds / (t1 - t0)`.
fn power_average(t0: f64, t1: f64, p: f64) -> f64 {
    (t1.powf(p + 1.0) - t0.powf(p + 1.0)) / ((p + 1.0) * (t1 - t0))
}

impl ThetaSpec {
    pub fn new(kind: ThetaKind, horizon: f64) -> Result<Self> {
        let spec = ThetaSpec { kind, horizon };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(theta0: f64, horizon: f64) -> Result<Self> {
        Self::new(ThetaKind::Constant { theta0 }, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param(format!("horizon {} must be positive", self.horizon)));
        }
        match &self.kind {
            ThetaKind::Constant { theta0 } if theta0.is_finite() => Ok(()),
            ThetaKind::Constant { .. } => Err(Error::param("constant theta must be finite")),
            ThetaKind::PowerLaw { coeff, exponent } => {
                if !coeff.is_finite() {
                    return Err(Error::param("power-law coefficient must be finite"));
                }
                if !(*exponent > -0.5 && *exponent <= 0.0) {
                    return Err(Error::NonIntegrableTheta(format!(
                        "power-law exponent {exponent} outside (-1/2, 0]"
                    )));
                }
                if *exponent <= -0.25 {
                    log::warn!("power-law exponent {exponent} <= -1/4: Hölder guarantees for the kernel weaken");
                }
                Ok(())
            }
            ThetaKind::Example42 { mu, r, sigma, hurst } => {
                if !(*sigma > 0.0) || !mu.is_finite() || !r.is_finite() {
                    return Err(Error::param("example42 needs finite mu, r and sigma > 0"));
                }
                c1_c2_constants(*hurst)?;
                if *hurst >= 0.75 {
                    log::warn!("H = {hurst} >= 3/4: s^(1/2-H) loses the integrability behind the Hölder bound");
                }
                Ok(())
            }
            ThetaKind::Custom { times, values } => {
                if times.len() != values.len() || times.is_empty() {
                    return Err(Error::param("custom theta table needs matching, non-empty columns"));
                }
                if times.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::param("custom theta times must be strictly increasing"));
                }
                if values.iter().chain(times).any(|v| !v.is_finite()) {
                    return Err(Error::NonIntegrableTheta("custom theta table has non-finite entries".into()));
                }
                Ok(())
            }
        }
    }

    fn ex42_parts(mu: f64, r: f64, sigma: f64, hurst: f64) -> (f64, f64) {
        let (_, c2) = c1_c2_constants(hurst).expect("validated");
        ((mu - r) * c2 / sigma, 0.5 - hurst)
    }

    /// `θ(t)` (for `t > 0` when the integrand is singular at 0).
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            ThetaKind::Constant { theta0 } => *theta0,
            ThetaKind::PowerLaw { coeff, exponent } => coeff * t.powf(*exponent),
            ThetaKind::Example42 { mu, r, sigma, hurst } => {
                let (k, e) = Self::ex42_parts(*mu, *r, *sigma, *hurst);
                -(k * t.powf(e) + 0.5 * sigma)
            }
            ThetaKind::Custom { times, values } => {
                if times.len() == 1 {
                    values[0]
                } else {
                    interpolate(times, values, t)
                }
            }
        }
    }

    /// Integrand value used on step `[t0, t1]`: the exact cell average for the
    /// closed-form kinds, the left-point value for tables. Both are known at `t0`.
    pub fn step_value(&self, t0: f64, t1: f64) -> f64 {
        match &self.kind {
            ThetaKind::Constant { theta0 } => *theta0,
            ThetaKind::PowerLaw { coeff, exponent } => coeff * power_average(t0, t1, *exponent),
            ThetaKind::Example42 { mu, r, sigma, hurst } => {
                let (k, e) = Self::ex42_parts(*mu, *r, *sigma, *hurst);
                -(k * power_average(t0, t1, e) + 0.5 * sigma)
            }
            ThetaKind::Custom { .. } => self.value(t0),
        }
    }

    /// `∫_0^T θ²` in closed form where available.
    pub fn integral_of_square(&self) -> Option<f64> {
        let t = self.horizon;
        match &self.kind {
            ThetaKind::Constant { theta0 } => Some(theta0 * theta0 * t),
            ThetaKind::PowerLaw { coeff, exponent } => {
                let p = 2.0 * exponent + 1.0;
                Some(coeff * coeff * t.powf(p) / p)
            }
            ThetaKind::Example42 { mu, r, sigma, hurst } => {
                let (k, e) = Self::ex42_parts(*mu, *r, *sigma, *hurst);
                Some(
                    k * k * t.powf(2.0 * e + 1.0) / (2.0 * e + 1.0)
                        + k * sigma * t.powf(e + 1.0) / (e + 1.0)
                        + 0.25 * sigma * sigma * t,
                )
            }
            ThetaKind::Custom { .. } => None,
        }
    }
}

fn step_values(theta: &ThetaSpec, times: &[f64]) -> Vec<f64> {
    times.windows(2).map(|w| theta.step_value(w[0], w[1])).collect()
}

/// Doléans exponential per path: `∫θ dW` as a sum over steps with the
/// integrand fixed at the start of each step, and `½ Σ θ_k² h` so that the
/// discrete kernel has mean exactly one.
pub fn sample_kernel(theta: &ThetaSpec, wiener_paths: &[SamplePath]) -> Result<Vec<KernelSample>> {
    theta.validate()?;
    let Some(first) = wiener_paths.first() else {
        return Ok(Vec::new());
    };
    let h = uniform_step(&first.times)?;
    let end = first.times[first.times.len() - 1];
    if (end - theta.horizon).abs() > GRID_RTOL * theta.horizon.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "paths end at {end} but theta has horizon {}",
            theta.horizon
        )));
    }
    if wiener_paths.iter().any(|p| !same_grid(&p.times, &first.times)) {
        return Err(Error::GridMismatch("kernel sampling needs a common grid".into()));
    }
    let th = step_values(theta, &first.times);
    let quad = 0.5 * h * th.iter().map(|v| v * v).sum::<f64>();
    if !quad.is_finite() {
        return Err(Error::NonIntegrableTheta("discrete ∫θ² is not finite".into()));
    }
    Ok(wiener_paths
        .par_iter()
        .map(|p| {
            let ito: f64 = p.values.windows(2).zip(&th).map(|(w, t)| t * (w[1] - w[0])).sum();
            let log_phi = ito - quad;
            KernelSample {
                path_id: p.seed_id,
                phi_t: log_phi.exp(),
                log_phi_t: log_phi,
                ito_integral: ito,
                quad_term: quad,
            }
        })
        .collect())
}

const BATCHES: usize = 10;

/// Batch-mean stabilization test: the spread of the batch means must stay
/// within 20% of the pooled mean, unless it is explained by ordinary sampling
/// noise (largest deviation within 6 standard deviations of the other batches).
pub(crate) fn batches_diverge(xs: &[f64]) -> bool {
    if xs.len() < 2 * BATCHES {
        return false;
    }
    let size = xs.len() / BATCHES;
    let means: Vec<f64> = (0..BATCHES).map(|b| mean(&xs[b * size..(b + 1) * size])).collect();
    if means.iter().any(|m| !m.is_finite()) {
        return true;
    }
    let pooled = mean(xs);
    let lo = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.2 * pooled.abs() {
        return false;
    }
    let center = median(&means);
    let (worst, _) = means
        .iter()
        .enumerate()
        .max_by(|a, b| (a.1 - center).abs().total_cmp(&(b.1 - center).abs()))
        .expect("ten batches");
    let rest: Vec<f64> = means
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != worst)
        .map(|(_, m)| *m)
        .collect();
    let rest_mean = mean(&rest);
    let sd = crate::stats::variance(&rest).sqrt();
    (means[worst] - rest_mean).abs() > 6.0 * sd
}

/// Monte Carlo relative entropy with standard error and a divergence flag.
pub fn relative_entropy(samples: &[KernelSample], direction: EntropyDirection) -> Result<EntropyEstimate> {
    if samples.is_empty() {
        return Err(Error::param("relative entropy needs at least one kernel sample"));
    }
    let terms: Vec<f64> = samples
        .iter()
        .map(|s| match direction {
            EntropyDirection::PStarP => s.phi_t * s.log_phi_t,
            EntropyDirection::PPStar => -s.log_phi_t,
        })
        .collect();
    let est = Estimate::from_samples(&terms);
    let diverging = !est.mean.is_finite() || batches_diverge(&terms);
    Ok(EntropyEstimate {
        value: est.mean,
        se: est.se,
        diverging,
    })
}

/// `ε^{1-2H} t/(2-2H) (ε^{2H-2} - (t+ε)^{2H-2})`: a lower bound for the variance
/// of the drift density of the prelimit fBm approximation.
pub fn variance_blowup_bound(hurst: f64, t: f64, eps: f64) -> Result<f64> {
    if !(hurst > 0.5 && hurst < 1.0) {
        return Err(Error::param(format!("blow-up bound needs H in (1/2, 1), got {hurst}")));
    }
    if !(eps > 0.0) || !(t >= 0.0) {
        return Err(Error::param("blow-up bound needs eps > 0 and t >= 0"));
    }
    let p = 2.0 * hurst - 2.0;
    Ok(eps.powf(1.0 - 2.0 * hurst) * t / (2.0 - 2.0 * hurst) * (eps.powf(p) - (t + eps).powf(p)))
}

#[derive(Serialize)]
struct KernelRow {
    path_id: u64,
    #[serde(rename = "phi_T")]
    phi_t: f64,
    #[serde(rename = "log_phi_T")]
    log_phi_t: f64,
}

/// `path_id,phi_T,log_phi_T` rows.
pub fn write_kernel_csv<W: Write>(writer: W, samples: &[KernelSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in samples {
        w.serialize(KernelRow {
            path_id: s.path_id,
            phi_t: s.phi_t,
            log_phi_t: s.log_phi_t,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_sim::{simulate_exact, GaussianModel};

    fn paths(n: usize, count: usize) -> Vec<SamplePath> {
        simulate_exact(&GaussianModel::wiener(1.0).unwrap(), n, count, 17).unwrap()
    }

    #[test]
    fn zero_theta_gives_unit_kernel() {
        let s = sample_kernel(&ThetaSpec::constant(0.0, 1.0).unwrap(), &paths(16, 5)).unwrap();
        assert!(s.iter().all(|k| k.phi_t == 1.0));
        let h = relative_entropy(&s, EntropyDirection::PStarP).unwrap();
        assert_eq!(h.value, 0.0);
        assert!(!h.diverging);
    }

    #[test]
    fn example42_at_half_is_constant() {
        let ex = ThetaSpec::new(ThetaKind::Example42 { mu: 0.03, r: 0.03, sigma: 0.2, hurst: 0.5 }, 1.0).unwrap();
        let c = ThetaSpec::constant(-0.1, 1.0).unwrap();
        let p = paths(32, 4);
        let a = sample_kernel(&ex, &p).unwrap();
        let b = sample_kernel(&c, &p).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.log_phi_t - y.log_phi_t).abs() < 1e-14);
        }
    }

    #[test]
    fn power_law_exponent_validation() {
        let bad = ThetaSpec::new(ThetaKind::PowerLaw { coeff: 1.0, exponent: -0.5 }, 1.0);
        assert!(matches!(bad, Err(Error::NonIntegrableTheta(_))));
        assert!(ThetaSpec::new(ThetaKind::PowerLaw { coeff: 1.0, exponent: 0.1 }, 1.0).is_err());
        assert!(ThetaSpec::new(ThetaKind::PowerLaw { coeff: 1.0, exponent: -0.2 }, 1.0).is_ok());
    }

    #[test]
    fn discrete_square_integral_converges_to_closed_form() {
        let th = ThetaSpec::new(ThetaKind::PowerLaw { coeff: 1.5, exponent: -0.2 }, 1.0).unwrap();
        let s = sample_kernel(&th, &paths(4096, 1)).unwrap();
        let exact = th.integral_of_square().unwrap();
        assert!((2.0 * s[0].quad_term - exact).abs() < 1e-2 * exact);
    }

    #[test]
    fn blowup_bound_values() {
        assert_eq!(variance_blowup_bound(0.75, 0.0, 0.1).unwrap(), 0.0);
        let mut prev = 0.0;
        for eps in [0.1, 0.05, 0.025] {
            let v = variance_blowup_bound(0.75, 1.0, eps).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn heavy_outlier_batch_is_flagged() {
        let mut xs = vec![1.0; 1000];
        for (i, x) in xs.iter_mut().enumerate() {
            *x += 0.01 * ((i * 7919 % 101) as f64 / 101.0 - 0.5);
        }
        assert!(!batches_diverge(&xs));
        xs[950] = 5000.0;
        assert!(batches_diverge(&xs));
    }

    #[test]
    fn kernel_csv_header() {
        let s = sample_kernel(&ThetaSpec::constant(0.3, 1.0).unwrap(), &paths(8, 2)).unwrap();
        let mut buf = Vec::new();
        write_kernel_csv(&mut buf, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("path_id,phi_T,log_phi_T\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
