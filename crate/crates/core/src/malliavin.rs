//! Clark–Ocone integrands `ϑ(t) = E(D_t F | ℱ_t)` for terminal functionals
//! `F = f(W(T))` of a single Wiener path, and a pathwise check of the
//! martingale representation `F = E F + ∫ ϑ dW`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::path::{GridFunction, SamplePath, GRID_RTOL};
use crate::quad::hermite64;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `F = f(W(T))` with a caller-supplied `f` and derivative `f'`.
#[derive(Clone)]
pub struct SmoothFunctional {
    pub name: String,
    f: RealFn,
    df: RealFn,
}

impl SmoothFunctional {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SmoothFunctional {
            name: name.into(),
            f: Arc::new(f),
            df: Arc::new(df),
        }
    }
}

impl fmt::Debug for SmoothFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmoothFunctional").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum FunctionalKind {
    /// `F = W(T)`.
    Linear,
    /// `F = W(T)²`.
    Square,
    SmoothOfWt(SmoothFunctional),
}

#[derive(Debug, Clone)]
pub struct TerminalFunctional {
    pub kind: FunctionalKind,
    pub horizon: f64,
}

/// `ϑ` sampled on the grid of the driving path.
pub type IntegrandPath = GridFunction;

impl TerminalFunctional {
    pub fn new(kind: FunctionalKind, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::param(format!("horizon {horizon} must be positive")));
        }
        Ok(TerminalFunctional { kind, horizon })
    }

    pub fn linear(horizon: f64) -> Result<Self> {
        Self::new(FunctionalKind::Linear, horizon)
    }

    pub fn square(horizon: f64) -> Result<Self> {
        Self::new(FunctionalKind::Square, horizon)
    }

    /// `F = exp(W(T))`.
    pub fn exp(horizon: f64) -> Result<Self> {
        Self::new(
            FunctionalKind::SmoothOfWt(SmoothFunctional::new("exp", f64::exp, f64::exp)),
            horizon,
        )
    }

    pub fn smooth(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        horizon: f64,
    ) -> Result<Self> {
        Self::new(FunctionalKind::SmoothOfWt(SmoothFunctional::new(name, f, df)), horizon)
    }

    /// `F` evaluated at terminal value `w_t`.
    pub fn value(&self, w_t: f64) -> f64 {
        match &self.kind {
            FunctionalKind::Linear => w_t,
            FunctionalKind::Square => w_t * w_t,
            FunctionalKind::SmoothOfWt(s) => (s.f)(w_t),
        }
    }

    /// `E F`, by the same Gauss–Hermite rule used for the integrand.
    pub fn expectation(&self) -> Result<f64> {
        match &self.kind {
            FunctionalKind::Linear => Ok(0.0),
            FunctionalKind::Square => Ok(self.horizon),
            FunctionalKind::SmoothOfWt(s) => gaussian_mean(&*s.f, 0.0, self.horizon.sqrt(), 0.0),
        }
    }

    /// `E(f'(W(T)) | W(t) = w)`.
    pub fn conditional_derivative(&self, t: f64, w: f64) -> Result<f64> {
        match &self.kind {
            FunctionalKind::Linear => Ok(1.0),
            FunctionalKind::Square => Ok(2.0 * w),
            FunctionalKind::SmoothOfWt(s) => {
                let sd = (self.horizon - t).max(0.0).sqrt();
                gaussian_mean(&*s.df, w, sd, t)
            }
        }
    }
}

/// `E g(μ + σZ)` with the 64-node Gauss–Hermite rule.
fn gaussian_mean(g: &(dyn Fn(f64) -> f64 + Send + Sync), mu: f64, sd: f64, t: f64) -> Result<f64> {
    if sd == 0.0 {
        let v = g(mu);
        return if v.is_finite() { Ok(v) } else { Err(Error::QuadratureOverflow { t }) };
    }
    let scale = std::f64::consts::SQRT_2 * sd;
    let mut acc = 0.0;
    for &(x, w) in hermite64() {
        acc += w * g(mu + scale * x);
    }
    let v = acc / std::f64::consts::PI.sqrt();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::QuadratureOverflow { t })
    }
}

fn check_horizon(f: &TerminalFunctional, w: &SamplePath) -> Result<()> {
    let end = w.times[w.times.len() - 1];
    if (end - f.horizon).abs() > GRID_RTOL * f.horizon.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "path ends at {end} but the functional has horizon {}",
            f.horizon
        )));
    }
    Ok(())
}

/// `ϑ(t_k) = E(D_{t_k} F | ℱ_{t_k})` along `w`; each value uses only `w(t_k)`.
pub fn clark_ocone_integrand(f: &TerminalFunctional, w: &SamplePath) -> Result<IntegrandPath> {
    check_horizon(f, w)?;
    let values = w
        .times
        .iter()
        .zip(&w.values)
        .map(|(&t, &x)| f.conditional_derivative(t, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(GridFunction {
        times: w.times.clone(),
        values,
    })
}

/// `|F(w) - E F - Σ_k ϑ(t_k) ΔW_k|` with left-point sums.
pub fn verify_representation(f: &TerminalFunctional, w: &SamplePath, integrand: &IntegrandPath) -> Result<f64> {
    check_horizon(f, w)?;
    if !crate::path::same_grid(&w.times, &integrand.times) {
        return Err(Error::GridMismatch("integrand and path grids differ".into()));
    }
    let ito: f64 = w
        .values
        .windows(2)
        .zip(&integrand.values)
        .map(|(dw, th)| th * (dw[1] - dw[0]))
        .sum();
    let terminal = f.value(w.values[w.values.len() - 1]);
    Ok((terminal - f.expectation()? - ito).abs())
}
