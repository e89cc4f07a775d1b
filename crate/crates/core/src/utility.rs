//! Optimal terminal profiles `X* = I(cφ(T))` for exponential, power and log
//! utilities on a fixed kernel sample, the budget multiplier, and randomized
//! optimality probes.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricing::{batches_diverge, relative_entropy, EntropyDirection, EntropyEstimate, KernelSample};
use crate::rng::path_stream;
use crate::stats::{mean, variance, Estimate};

const PROBE_COMPONENT: u32 = 0x5052;
const DOMAIN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    /// `u(x) = 1 - e^{-βx}` on the whole line.
    Exponential { beta: f64 },
    /// `u(x) = x^γ/γ` on `(0, ∞)`, `γ ∈ (0, 1)`.
    Power { gamma: f64 },
    /// `u(x) = log x` on `(0, ∞)`.
    Log,
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            UtilitySpec::Exponential { beta } if beta > 0.0 && beta.is_finite() => Ok(()),
            UtilitySpec::Exponential { beta } => Err(Error::param(format!("beta {beta} must be positive"))),
            UtilitySpec::Power { gamma } if gamma > 0.0 && gamma < 1.0 => Ok(()),
            UtilitySpec::Power { gamma } => Err(Error::param(format!("gamma {gamma} must lie in (0, 1)"))),
            UtilitySpec::Log => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            UtilitySpec::Exponential { .. } => "exponential",
            UtilitySpec::Power { .. } => "power",
            UtilitySpec::Log => "log",
        }
    }

    /// Whether the domain is the positive half-line.
    pub fn positive_domain(&self) -> bool {
        !matches!(self, UtilitySpec::Exponential { .. })
    }

    pub fn u(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Exponential { beta } => 1.0 - (-beta * x).exp(),
            UtilitySpec::Power { gamma } if x > 0.0 => x.powf(gamma) / gamma,
            UtilitySpec::Power { .. } if x == 0.0 => 0.0,
            UtilitySpec::Log if x > 0.0 => x.ln(),
            UtilitySpec::Log if x == 0.0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        }
    }

    pub fn marginal(&self, x: f64) -> f64 {
        match *self {
            UtilitySpec::Exponential { beta } => beta * (-beta * x).exp(),
            UtilitySpec::Power { gamma } => x.powf(gamma - 1.0),
            UtilitySpec::Log => 1.0 / x,
        }
    }

    /// `(π₁, π₂)`: the range of `u'`.
    pub fn marginal_range(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    /// `I = (u')^{-1}`, extended by `+∞` below `π₁` and `0` above `π₂` on the half-line domains.
    pub fn inverse_marginal(&self, y: f64) -> f64 {
        let (pi1, pi2) = self.marginal_range();
        match *self {
            UtilitySpec::Exponential { beta } => {
                if y <= pi1 {
                    f64::INFINITY
                } else {
                    -(y / beta).ln() / beta
                }
            }
            UtilitySpec::Power { gamma } => {
                if y <= pi1 {
                    f64::INFINITY
                } else if y >= pi2 {
                    0.0
                } else {
                    y.powf(-1.0 / (1.0 - gamma))
                }
            }
            UtilitySpec::Log => {
                if y <= pi1 {
                    f64::INFINITY
                } else if y >= pi2 {
                    0.0
                } else {
                    1.0 / y
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalProfile {
    pub utility: UtilitySpec,
    pub w: f64,
    pub x_star: Vec<f64>,
    pub c_star: Option<f64>,
    pub expected_utility: Estimate,
    pub closed_form: f64,
    /// `|E(φX*) - w|` on the sample.
    pub budget_residual: f64,
    /// Standard error of the sample mean of `φX*`.
    pub budget_se: f64,
    /// `H(P*|P)` for exponential, `H(P|P*)` for log.
    pub entropy: Option<EntropyEstimate>,
    /// `d = E φ^{-γ/(1-γ)}` for power.
    pub d: Option<Estimate>,
}

/// JSON summary of an [`OptimalProfile`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub utility: String,
    pub params: UtilitySpec,
    pub w: f64,
    pub c_star: Option<f64>,
    pub expected_utility: f64,
    #[serde(rename = "SE")]
    pub se: f64,
    pub closed_form: f64,
    pub budget_residual: f64,
    pub entropy: Option<EntropyEstimate>,
    pub d: Option<Estimate>,
}

impl OptimalProfile {
    fn assemble(
        utility: UtilitySpec,
        w: f64,
        kernel: &[KernelSample],
        x_star: Vec<f64>,
        c_star: Option<f64>,
        closed_form: f64,
    ) -> Self {
        let utils: Vec<f64> = x_star.iter().map(|&x| utility.u(x)).collect();
        let spent: Vec<f64> = kernel.iter().zip(&x_star).map(|(k, x)| k.phi_t * x).collect();
        let budget = Estimate::from_samples(&spent);
        OptimalProfile {
            utility,
            w,
            x_star,
            c_star,
            expected_utility: Estimate::from_samples(&utils),
            closed_form,
            budget_residual: (budget.mean - w).abs(),
            budget_se: budget.se,
            entropy: None,
            d: None,
        }
    }

    pub fn report(&self) -> UtilityReport {
        UtilityReport {
            utility: self.utility.name().to_string(),
            params: self.utility,
            w: self.w,
            c_star: self.c_star,
            expected_utility: self.expected_utility.mean,
            se: self.expected_utility.se,
            closed_form: self.closed_form,
            budget_residual: self.budget_residual,
            entropy: self.entropy,
            d: self.d,
        }
    }
}

fn nonempty(kernel: &[KernelSample]) -> Result<()> {
    if kernel.is_empty() {
        return Err(Error::param("kernel sample is empty"));
    }
    Ok(())
}

/// `X* = -(1/β) log(cφ/β)`, maximal value `1 - exp{-βw - H(P*|P)}`.
///
/// `c` solves the budget on the sample, `log(c/β) = -(βw + mean(φ log φ)) / mean(φ)`,
/// which reduces to `c = β exp{-βw - H(P*|P)}` when `mean(φ) = 1`.
pub fn optimal_profile_exponential(beta: f64, w: f64, kernel: &[KernelSample]) -> Result<OptimalProfile> {
    let utility = UtilitySpec::Exponential { beta };
    utility.validate()?;
    nonempty(kernel)?;
    let h = relative_entropy(kernel, EntropyDirection::PStarP)?.require_stable("H(P*|P)")?;
    let phi_bar = mean(&kernel.iter().map(|k| k.phi_t).collect::<Vec<_>>());
    let log_c = (-(beta * w + h.value) / phi_bar) + beta.ln();
    let x_star = kernel.iter().map(|k| -(log_c - beta.ln() + k.log_phi_t) / beta).collect();
    let closed = 1.0 - (-beta * w - h.value).exp();
    let c = log_c.exp();
    let mut p = OptimalProfile::assemble(utility, w, kernel, x_star, Some(c), closed);
    p.entropy = Some(h);
    Ok(p)
}

/// `X* = (w/d) φ^{-1/(1-γ)}` with `d = E φ^{-γ/(1-γ)}`, maximal value `(1/γ) w^γ d^{1-γ}`.
pub fn optimal_profile_power(gamma: f64, w: f64, kernel: &[KernelSample]) -> Result<OptimalProfile> {
    let utility = UtilitySpec::Power { gamma };
    utility.validate()?;
    nonempty(kernel)?;
    if !(w > 0.0) {
        return Err(Error::param(format!("power utility needs w > 0, got {w}")));
    }
    let p = -gamma / (1.0 - gamma);
    let moments: Vec<f64> = kernel.iter().map(|k| (p * k.log_phi_t).exp()).collect();
    let d = Estimate::from_samples(&moments);
    if !d.mean.is_finite() || batches_diverge(&moments) {
        return Err(Error::EntropyDivergence { what: "d = E φ^(-γ/(1-γ))" });
    }
    let q = -1.0 / (1.0 - gamma);
    let x_star = kernel.iter().map(|k| w / d.mean * (q * k.log_phi_t).exp()).collect();
    let closed = w.powf(gamma) * d.mean.powf(1.0 - gamma) / gamma;
    let c = (w / d.mean).powf(gamma - 1.0);
    let mut prof = OptimalProfile::assemble(utility, w, kernel, x_star, Some(c), closed);
    prof.d = Some(d);
    Ok(prof)
}

/// `X* = w/φ`, maximal value `log w + H(P|P*)`.
pub fn optimal_profile_log(w: f64, kernel: &[KernelSample]) -> Result<OptimalProfile> {
    nonempty(kernel)?;
    if !(w > 0.0) {
        return Err(Error::param(format!("log utility needs w > 0, got {w}")));
    }
    let h = relative_entropy(kernel, EntropyDirection::PPStar)?.require_stable("H(P|P*)")?;
    let x_star = kernel.iter().map(|k| w * (-k.log_phi_t).exp()).collect();
    let mut p = OptimalProfile::assemble(UtilitySpec::Log, w, kernel, x_star, Some(1.0 / w), w.ln() + h.value);
    p.entropy = Some(h);
    Ok(p)
}

pub fn optimal_profile(u: UtilitySpec, w: f64, kernel: &[KernelSample]) -> Result<OptimalProfile> {
    match u {
        UtilitySpec::Exponential { beta } => optimal_profile_exponential(beta, w, kernel),
        UtilitySpec::Power { gamma } => optimal_profile_power(gamma, w, kernel),
        UtilitySpec::Log => optimal_profile_log(w, kernel),
    }
}

fn budget_gap(u: &UtilitySpec, w: f64, kernel: &[KernelSample], log_c: f64) -> f64 {
    let spent: Vec<f64> = kernel
        .iter()
        .map(|k| k.phi_t * u.inverse_marginal((log_c + k.log_phi_t).exp()))
        .collect();
    mean(&spent) - w
}

/// `c` with `E(φ I⁺(cφ)) = w` on the sample, by bisection in `log c`.
pub fn solve_budget_multiplier(u: UtilitySpec, w: f64, kernel: &[KernelSample]) -> Result<f64> {
    u.validate()?;
    nonempty(kernel)?;
    let tol = 1e-8 * w.abs().max(1.0);
    let gap = |lc: f64| budget_gap(&u, w, kernel, lc);
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut width = 1.0;
    loop {
        let (glo, ghi) = (gap(lo), gap(hi));
        if glo.is_finite() && ghi.is_finite() && glo >= 0.0 && ghi <= 0.0 {
            break;
        }
        width *= 2.0;
        if width > 1024.0 {
            return Err(Error::NoBracket { w });
        }
        lo = -width;
        hi = width;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let g = gap(mid);
        if g.abs() < tol {
            break;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Smallest `E u(X*) - E u(X)` over the accepted probes.
    pub worst_gap: f64,
    /// Paired standard error of the worst gap.
    pub worst_se: f64,
    pub accepted: usize,
    pub discarded: usize,
}

impl ProbeResult {
    /// `worst_gap ≥ -k·SE`.
    pub fn certifies(&self, k: f64) -> bool {
        let se = if self.worst_se.is_finite() { self.worst_se } else { 0.0 };
        self.worst_gap >= -k * se
    }
}

/// Budget-preserving random perturbations of `x_star`; concavity makes every gap nonnegative.
pub fn optimality_probe(
    u: UtilitySpec,
    kernel: &[KernelSample],
    x_star: &[f64],
    n_probes: usize,
    seed: u64,
) -> Result<ProbeResult> {
    u.validate()?;
    nonempty(kernel)?;
    if kernel.len() != x_star.len() {
        return Err(Error::param("x_star and kernel sample lengths differ"));
    }
    let n = kernel.len();
    let phi: Vec<f64> = kernel.iter().map(|k| k.phi_t).collect();
    let log_mean = mean(&kernel.iter().map(|k| k.log_phi_t).collect::<Vec<_>>());
    let log_sd = variance(&kernel.iter().map(|k| k.log_phi_t).collect::<Vec<_>>()).sqrt();
    let z: Vec<f64> = kernel
        .iter()
        .map(|k| if log_sd > 0.0 { (k.log_phi_t - log_mean) / log_sd } else { 0.0 })
        .collect();
    let phi_sq = mean(&phi.iter().map(|p| p * p).collect::<Vec<_>>());
    let spend = |x: &[f64]| mean(&phi.iter().zip(x).map(|(p, x)| p * x).collect::<Vec<_>>());
    let target = spend(x_star);
    let x_sd = if n > 1 { variance(x_star).sqrt() } else { 0.0 };
    let scale = 0.25 * x_sd.max(0.1 * mean(x_star).abs()).max(1e-3);
    let base: Vec<f64> = x_star.iter().map(|&x| u.u(x)).collect();

    let mut result = ProbeResult {
        worst_gap: f64::INFINITY,
        worst_se: 0.0,
        accepted: 0,
        discarded: 0,
    };
    for probe in 0..n_probes {
        let mut rng = path_stream(seed, PROBE_COMPONENT, probe as u64);
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let mut eta: Vec<f64> = z
            .iter()
            .map(|zi| {
                let e: f64 = rng.sample(StandardNormal);
                scale * (a * zi + b * e)
            })
            .collect();
        let shift = spend(&eta) / phi_sq;
        for (e, p) in eta.iter_mut().zip(&phi) {
            *e -= shift * p;
        }
        let mut x: Vec<f64> = x_star.iter().zip(&eta).map(|(x, e)| x + e).collect();
        if u.positive_domain() && x.iter().any(|&v| v < DOMAIN_FLOOR) {
            x.iter_mut().for_each(|v| *v = v.max(DOMAIN_FLOOR));
            let ratio = target / spend(&x);
            x.iter_mut().for_each(|v| *v *= ratio);
        }
        let diffs: Vec<f64> = base.iter().zip(&x).map(|(b, &xi)| b - u.u(xi)).collect();
        if x.iter().any(|v| !v.is_finite()) || diffs.iter().any(|d| !d.is_finite()) {
            result.discarded += 1;
            continue;
        }
        let gap = Estimate::from_samples(&diffs);
        result.accepted += 1;
        if gap.mean < result.worst_gap {
            result.worst_gap = gap.mean;
            result.worst_se = gap.se;
        }
    }
    if result.accepted == 0 {
        result.worst_gap = 0.0;
    }
    Ok(result)
}
