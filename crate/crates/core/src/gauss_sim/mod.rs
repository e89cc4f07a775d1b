//! Wiener-transformable Gaussian processes on uniform grids: closed-form
//! covariances, exact and Volterra-based sampling, and empirical checks of the
//! increment-scaling and positive-correlation conditions.

mod conditions;
mod exact;
mod fou;
mod volterra;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::SamplePath;

pub use conditions::{check_conditions, ConditionReport};
pub use exact::{fgn_levinson, simulate_exact};
pub use fou::simulate_fou;
pub use volterra::{simulate_fbm_volterra, simulate_fbm_volterra_batch, simulate_volterra, VolterraKernel};

/// Process family and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Wiener,
    Fbm { hurst: f64 },
    Fou { a: f64, b: f64, sigma: f64, hurst: f64, y0: f64 },
    Subfractional { hurst: f64 },
    Bifractional { hurst: f64, k: f64 },
    /// `W + B^H` with independent components.
    Mixed { hurst: f64 },
    /// `Σ a_i B^{H_i}` with independent components.
    FbmCombo { weights: Vec<f64>, hursts: Vec<f64> },
    Volterra { kernel: VolterraKernel },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Wiener => "wiener",
            ModelKind::Fbm { .. } => "fbm",
            ModelKind::Fou { .. } => "fou",
            ModelKind::Subfractional { .. } => "subfractional",
            ModelKind::Bifractional { .. } => "bifractional",
            ModelKind::Mixed { .. } => "mixed",
            ModelKind::FbmCombo { .. } => "fbm_combo",
            ModelKind::Volterra { .. } => "volterra",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    pub horizon: f64,
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::param(format!("{name} = {x} must lie in (0, 1)")));
    }
    Ok(())
}

impl GaussianModel {
    pub fn new(kind: ModelKind, horizon: f64) -> Result<Self> {
        let model = GaussianModel { kind, horizon };
        model.validate()?;
        Ok(model)
    }

    pub fn fbm(hurst: f64, horizon: f64) -> Result<Self> {
        Self::new(ModelKind::Fbm { hurst }, horizon)
    }

    pub fn wiener(horizon: f64) -> Result<Self> {
        Self::new(ModelKind::Wiener, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::param(format!("horizon {} must be positive", self.horizon)));
        }
        match &self.kind {
            ModelKind::Wiener => Ok(()),
            ModelKind::Fbm { hurst } | ModelKind::Subfractional { hurst } | ModelKind::Mixed { hurst } => {
                check_unit("hurst", *hurst)
            }
            ModelKind::Fou { a, b, sigma, hurst, y0 } => {
                check_unit("hurst", *hurst)?;
                if !(*sigma >= 0.0) || ![a, b, sigma, y0].iter().all(|v| v.is_finite()) {
                    return Err(Error::param("fOU parameters must be finite with sigma >= 0"));
                }
                Ok(())
            }
            ModelKind::Bifractional { hurst, k } => {
                check_unit("hurst", *hurst)?;
                check_unit("bifractional K", *k)
            }
            ModelKind::FbmCombo { weights, hursts } => {
                if weights.is_empty() || weights.len() != hursts.len() {
                    return Err(Error::param("combo needs matching, non-empty weights and hursts"));
                }
                if weights.iter().any(|w| !w.is_finite()) {
                    return Err(Error::param("combo weights must be finite"));
                }
                hursts.iter().try_for_each(|&h| check_unit("hurst", h))
            }
            ModelKind::Volterra { kernel } => kernel.validate(),
        }
    }
}

fn fbm_cov(h: f64, s: f64, t: f64) -> f64 {
    let p = 2.0 * h;
    0.5 * (s.powf(p) + t.powf(p) - (t - s).abs().powf(p))
}

/// Closed-form covariance `R(s,t)`.
pub fn covariance(model: &GaussianModel, s: f64, t: f64) -> Result<f64> {
    if !(s >= 0.0 && t >= 0.0) {
        return Err(Error::param("covariance arguments must be non-negative"));
    }
    Ok(match &model.kind {
        ModelKind::Wiener => s.min(t),
        ModelKind::Fbm { hurst } => fbm_cov(*hurst, s, t),
        ModelKind::Subfractional { hurst } => {
            let p = 2.0 * hurst;
            s.powf(p) + t.powf(p) - 0.5 * ((t + s).powf(p) + (t - s).abs().powf(p))
        }
        ModelKind::Bifractional { hurst, k } => {
            let p = 2.0 * hurst;
            ((t.powf(p) + s.powf(p)).powf(*k) - (t - s).abs().powf(p * k)) / 2f64.powf(*k)
        }
        ModelKind::Mixed { hurst } => s.min(t) + fbm_cov(*hurst, s, t),
        ModelKind::FbmCombo { weights, hursts } => weights
            .iter()
            .zip(hursts)
            .map(|(a, h)| a * a * fbm_cov(*h, s, t))
            .sum(),
        ModelKind::Fou { .. } | ModelKind::Volterra { .. } => {
            return Err(Error::UnsupportedKind(model.kind.name()))
        }
    })
}

/// Samples any model kind: exact factorization where a closed-form covariance
/// exists, Euler for fOU, discretized Volterra integration otherwise.
pub fn simulate(model: &GaussianModel, n_steps: usize, n_paths: usize, seed: u64) -> Result<Vec<SamplePath>> {
    match &model.kind {
        ModelKind::Fou { a, b, sigma, hurst, y0 } => {
            let params = fou::FouParams { a: *a, b: *b, sigma: *sigma, hurst: *hurst, y0: *y0 };
            fou::simulate_fou_params(&params, model.horizon, n_steps, n_paths, seed)
        }
        ModelKind::Volterra { kernel } => {
            Ok(simulate_volterra(kernel, model.horizon, n_steps, n_paths, seed)?.0)
        }
        _ => simulate_exact(model, n_steps, n_paths, seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(kind: ModelKind) -> GaussianModel {
        GaussianModel::new(kind, 2.0).unwrap()
    }

    #[test]
    fn documented_covariance_values() {
        let b = model(ModelKind::Fbm { hurst: 0.5 });
        assert_eq!(covariance(&b, 1.0, 2.0).unwrap(), 1.0);
        for &h in &[0.2, 0.5, 0.9] {
            assert!((covariance(&model(ModelKind::Fbm { hurst: h }), 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        }
        let sub = model(ModelKind::Subfractional { hurst: 0.7 });
        let t: f64 = 1.3;
        let exact = (2.0 - 2f64.powf(0.4)) * t.powf(1.4);
        assert!((covariance(&sub, t, t).unwrap() - exact).abs() < 1e-14);
        let bi = model(ModelKind::Bifractional { hurst: 0.6, k: 0.9 });
        assert!((covariance(&bi, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn covariances_are_symmetric() {
        let kinds = vec![
            ModelKind::Wiener,
            ModelKind::Fbm { hurst: 0.3 },
            ModelKind::Subfractional { hurst: 0.6 },
            ModelKind::Bifractional { hurst: 0.4, k: 0.5 },
            ModelKind::Mixed { hurst: 0.8 },
            ModelKind::FbmCombo { weights: vec![1.0, -0.5], hursts: vec![0.6, 0.8] },
        ];
        for kind in kinds {
            let m = model(kind);
            for &(s, t) in &[(0.1, 0.7), (0.3, 1.9), (1.0, 1.0)] {
                assert_eq!(covariance(&m, s, t).unwrap(), covariance(&m, t, s).unwrap());
            }
        }
    }

    #[test]
    fn unsupported_kinds() {
        let fou = model(ModelKind::Fou { a: 1.0, b: 0.0, sigma: 1.0, hurst: 0.7, y0: 0.0 });
        assert!(matches!(covariance(&fou, 0.5, 1.0), Err(Error::UnsupportedKind("fou"))));
        let vol = model(ModelKind::Volterra { kernel: VolterraKernel::Molchan { hurst: 0.7 } });
        assert!(matches!(covariance(&vol, 0.5, 1.0), Err(Error::UnsupportedKind("volterra"))));
    }

    #[test]
    fn validation() {
        assert!(GaussianModel::new(ModelKind::Fbm { hurst: 1.0 }, 1.0).is_err());
        assert!(GaussianModel::new(ModelKind::Bifractional { hurst: 0.5, k: 1.2 }, 1.0).is_err());
        assert!(GaussianModel::new(ModelKind::Wiener, 0.0).is_err());
        assert!(GaussianModel::new(ModelKind::FbmCombo { weights: vec![1.0], hursts: vec![] }, 1.0).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let m = model(ModelKind::Bifractional { hurst: 0.6, k: 0.9 });
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"kind\":\"bifractional\""));
        let back: GaussianModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
    }
}
