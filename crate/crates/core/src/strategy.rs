//! Inductive construction of an integrand `ψ` whose pathwise integral against
//! a Hölder path reproduces a target payoff, plus the Hölder-order bookkeeping
//! that decides when the construction is admissible.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_calc::holder_norm_interval;
use crate::path::{same_grid, uniform_step, GridFunction, SamplePath};

const SHORTFALL_TOL: f64 = 1e-9;

/// `g(x) = √(x² + ν²) - ν`.
pub fn g_nu(x: f64, nu: f64) -> f64 {
    x * x / ((x * x + nu * nu).sqrt() + nu)
}

/// `g'(x) = x / √(x² + ν²)`.
pub fn g_nu_prime(x: f64, nu: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x / (x * x + nu * nu).sqrt()
    }
}

/// Smallest `|x|` with `g(x) ≥ level`.
fn g_nu_inverse(level: f64, nu: f64) -> f64 {
    ((level + nu).powi(2) - nu * nu).max(0.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopRule {
    /// Exact threshold crossing on the linear interpolant between grid nodes.
    #[default]
    Interpolated,
    /// First grid node at or above the threshold; the overshoot is kept.
    GridNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySchedule {
    /// `t_1 < t_2 < … < t_{n_max+1}`.
    pub refine_times: Vec<f64>,
    /// `σ_n`, one per level.
    pub sigma: Vec<f64>,
    /// `ν_n`, one per level.
    pub nu: Vec<f64>,
    #[serde(default)]
    pub stop_rule: StopRule,
}

impl StrategySchedule {
    /// `t_n = 1 - 2^{-n}`, `σ_n = 2^{n/2}`, `ν_n = 4^{-n}`.
    pub fn default_levels(n_max: usize) -> Self {
        StrategySchedule {
            refine_times: (1..=n_max + 1).map(|n| 1.0 - 0.5f64.powi(n as i32)).collect(),
            sigma: (1..=n_max).map(|n| 2f64.powf(n as f64 / 2.0)).collect(),
            nu: (1..=n_max).map(|n| 0.25f64.powi(n as i32)).collect(),
            stop_rule: StopRule::Interpolated,
        }
    }

    pub fn n_max(&self) -> usize {
        self.sigma.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_max();
        if n == 0 || self.nu.len() != n || self.refine_times.len() != n + 1 {
            return Err(Error::param(
                "schedule needs n_max >= 1 levels with n_max sigmas, n_max nus and n_max + 1 refine times",
            ));
        }
        if self.refine_times.windows(2).any(|w| w[1] <= w[0])
            || self.refine_times.iter().any(|&t| !(t > 0.0 && t < 1.0))
        {
            return Err(Error::param("refine times must increase strictly inside (0, 1)"));
        }
        if self.sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) || self.sigma.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::param("sigma must be positive and nondecreasing"));
        }
        if self.nu.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::param("nu must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    /// Shortfall correction toward `ξ_n`.
    A,
    /// Tracking the jump `ξ_n - ξ_{n-1}`.
    B,
}

/// One interval `[t_n, t_{n+1}]` of the construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelState {
    pub level: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub start_index: usize,
    pub end_index: usize,
    pub case: Case,
    /// `ξ_n = Z_{t_n}`.
    pub xi: f64,
    /// `ξ_{n-1}`, with `ξ_0 = 0`.
    pub xi_prev: f64,
    /// `δ_n = |ξ_n - ξ_{n-1}|`.
    pub delta: f64,
    /// `Δ_n = t_{n+1} - t_n`.
    pub interval: f64,
    /// Amount the interval had to move `V` by.
    pub amount: f64,
    pub direction: f64,
    /// `V_{t_n}`.
    pub v_start: f64,
    /// `V_{t_{n+1}}`.
    pub v_end: f64,
    pub tau: f64,
    pub hit: bool,
    /// Threshold not reached by `t_{n+1}`; the shortfall carries into the next level.
    pub never_hit: bool,
    pub overshoot: f64,
    /// Sub-blocks used (1 for case B).
    pub blocks: usize,
    /// `|V_{t_{n+1}} - ξ_n|`.
    pub phi1_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationState {
    pub levels: Vec<LevelState>,
    /// `V` at `t_1, …, t_{n_max+1}`.
    pub v_at_refine: Vec<f64>,
}

impl ReplicationState {
    pub fn any_never_hit(&self) -> bool {
        self.levels.iter().any(|l| l.never_hit)
    }
}

struct Block {
    tau: f64,
    /// Last node with `t ≤ τ`.
    last_node: usize,
    achieved: f64,
    hit: bool,
}

/// `scale · g(X_t - X_s)` until it reaches `amount`, writing `ψ` on nodes `[s, min(τ-node, e-1)]`.
#[allow(clippy::too_many_arguments)]
fn run_block(
    x: &[f64],
    times: &[f64],
    s: usize,
    e: usize,
    scale: f64,
    nu: f64,
    amount: f64,
    direction: f64,
    rule: StopRule,
    psi: &mut [f64],
) -> Block {
    let level = amount / scale;
    let radius = g_nu_inverse(level, nu);
    let reference = x[s];
    let mut outcome = Block {
        tau: times[e],
        last_node: e,
        achieved: scale * g_nu(x[e] - reference, nu),
        hit: false,
    };
    if amount <= 0.0 {
        outcome = Block {
            tau: times[s],
            last_node: s,
            achieved: 0.0,
            hit: true,
        };
    } else {
        for k in s + 1..=e {
            let d1 = x[k] - reference;
            let value = scale * g_nu(d1, nu);
            if value >= amount {
                outcome = match rule {
                    StopRule::GridNode => Block {
                        tau: times[k],
                        last_node: k,
                        achieved: value,
                        hit: true,
                    },
                    StopRule::Interpolated => {
                        let d0 = x[k - 1] - reference;
                        let lam = ((d1.signum() * radius - d0) / (d1 - d0)).clamp(0.0, 1.0);
                        let tau = times[k - 1] + lam * (times[k] - times[k - 1]);
                        Block {
                            tau,
                            last_node: if lam >= 1.0 { k } else { k - 1 },
                            achieved: amount,
                            hit: true,
                        }
                    }
                };
                break;
            }
        }
    }
    let stop = outcome.last_node.min(e.saturating_sub(1));
    if outcome.tau > times[s] {
        for j in s..=stop {
            psi[j] = direction * scale * g_nu_prime(x[j] - reference, nu);
        }
    }
    outcome
}

fn grid_index(times: &[f64], t: f64) -> usize {
    let h = times[1] - times[0];
    (((t - times[0]) / h).round() as usize).min(times.len() - 1)
}

/// Build `ψ` level by level: ψ = 0 on `[0, t_1]`; on `[t_n, t_{n+1}]` either track
/// `ξ_n - ξ_{n-1}` with `σ_n g_n'(X_t - X_{t_n})` (case B) or, when `V_{t_n}`
/// misses `ξ_{n-1}`, correct straight to `ξ_n` with dyadic sub-blocks of doubling scale (case A).
pub fn construct_strategy(
    g: &SamplePath,
    target: &SamplePath,
    sched: &StrategySchedule,
) -> Result<(GridFunction, ReplicationState)> {
    sched.validate()?;
    if !same_grid(&g.times, &target.times) {
        return Err(Error::GridMismatch("driver and target must share a grid".into()));
    }
    uniform_step(&g.times)?;
    let times = &g.times;
    let x = &g.values;
    let idx: Vec<usize> = sched.refine_times.iter().map(|&t| grid_index(times, t)).collect();
    if idx.windows(2).any(|w| w[1] <= w[0]) || *idx.last().expect("nonempty") >= times.len() {
        return Err(Error::GridMismatch("grid too coarse to separate the refine times".into()));
    }
    let mut psi = vec![0.0; times.len()];
    let mut v = 0.0;
    let mut levels = Vec::with_capacity(sched.n_max());
    let mut v_at_refine = vec![0.0];
    for n in 0..sched.n_max() {
        let (s, e) = (idx[n], idx[n + 1]);
        let xi = target.values[s];
        let xi_prev = if n == 0 { 0.0 } else { target.values[idx[n - 1]] };
        let shortfall = v - xi_prev;
        let (case, amount, direction) = if shortfall.abs() > SHORTFALL_TOL {
            let v_n = v - xi;
            (Case::A, v_n.abs(), -v_n.signum())
        } else {
            (Case::B, (xi - xi_prev).abs(), (xi - xi_prev).signum())
        };
        let (sigma, nu) = (sched.sigma[n], sched.nu[n]);
        let mut remaining = amount;
        let mut achieved_total = 0.0;
        let mut blocks = 0;
        let mut last = Block {
            tau: times[s],
            last_node: s,
            achieved: 0.0,
            hit: amount <= 0.0,
        };
        match case {
            Case::B => {
                last = run_block(x, times, s, e, sigma, nu, amount, direction, sched.stop_rule, &mut psi);
                achieved_total = last.achieved;
                blocks = 1;
            }
            Case::A => {
                let mut start = s;
                let mut scale = sigma;
                while start < e && remaining > 0.0 {
                    let left = e - start;
                    let len = if left == 1 { 1 } else { left / 2 };
                    last = run_block(x, times, start, start + len, scale, nu, remaining, direction, sched.stop_rule, &mut psi);
                    blocks += 1;
                    achieved_total += last.achieved;
                    remaining -= last.achieved;
                    if last.hit {
                        break;
                    }
                    start += len;
                    scale *= 2.0;
                }
            }
        }
        v += direction * achieved_total;
        let hit = last.hit;
        levels.push(LevelState {
            level: n + 1,
            t_start: times[s],
            t_end: times[e],
            start_index: s,
            end_index: e,
            case,
            xi,
            xi_prev,
            delta: (xi - xi_prev).abs(),
            interval: times[e] - times[s],
            amount,
            direction,
            v_start: v - direction * achieved_total,
            v_end: v,
            tau: if hit { last.tau } else { times[e] },
            hit,
            never_hit: !hit,
            overshoot: (achieved_total - amount).max(0.0),
            blocks,
            phi1_residual: (v - xi).abs(),
        });
        v_at_refine.push(v);
    }
    let psi = GridFunction::new(times.clone(), psi)?;
    Ok((psi, ReplicationState { levels, v_at_refine }))
}

/// `(|V_{t_n} - Z_{t_{n-1}}|, |V_{t_n} - target_final|)` for `n ∈ 1..=n_max+1`.
pub fn replication_error(state: &ReplicationState, target_final: f64, n: usize) -> Result<(f64, f64)> {
    if n == 0 || n > state.levels.len() + 1 {
        return Err(Error::param(format!("level {n} outside 1..={}", state.levels.len() + 1)));
    }
    let v = state.v_at_refine[n - 1];
    let z_prev = if n == 1 { 0.0 } else { state.levels[n - 2].xi };
    Ok(((v - z_prev).abs(), (v - target_final).abs()))
}

/// `‖ψ‖_{α,[t_n, end]}` for each refine time `t_n`.
pub fn norm_decay_check(psi: &GridFunction, sched: &StrategySchedule, alpha: f64) -> Result<Vec<f64>> {
    sched.validate()?;
    let end = psi.times[psi.times.len() - 1];
    sched
        .refine_times
        .iter()
        .map(|&t| {
            let a = psi.times[grid_index(&psi.times, t)];
            holder_norm_interval(psi, alpha, a, end)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum LemmaCase {
    /// Bounded integrand: order ½.
    I,
    /// `sup E|ϑ|^{2+δ}` finite: order `δ/(4+2δ)`.
    Ii { delta: f64 },
    /// `E ∫|ϑ|^{2+δ}` finite: order `δ/(8+2δ)`.
    Iii { delta: f64 },
}

impl LemmaCase {
    pub fn theta_order(&self) -> f64 {
        match *self {
            LemmaCase::I => 0.5,
            LemmaCase::Ii { delta } => delta / (4.0 + 2.0 * delta),
            LemmaCase::Iii { delta } => delta / (8.0 + 2.0 * delta),
        }
    }
}

/// Hölder orders feeding the admissibility test `λ · order > H₃`.
///
/// `rho0 = (1+H₂)(H₁-H₂)/(H₂+1-2H₁)` and `h3 = (1+H₂)(H₁-H₂)/(H₁+1-2H₂)` differ
/// whenever `H₁ ≠ H₂`; both are reported.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderBudget {
    pub lambda: f64,
    pub lemma_case: LemmaCase,
    pub theta_order: f64,
    pub h3: f64,
    pub rho0: f64,
    pub admissible: bool,
}

pub fn holder_budget(lambda: f64, lemma_case: LemmaCase, h1: f64, h2: f64) -> Result<HolderBudget> {
    if !(0.0 < 2.0 * h1 - 1.0 && 2.0 * h1 - 1.0 < h2 && h2 <= h1) {
        return Err(Error::ConditionAViolation { h1, h2 });
    }
    if !(lambda > 0.0) {
        return Err(Error::param(format!("lambda {lambda} must be positive")));
    }
    if let LemmaCase::Ii { delta } | LemmaCase::Iii { delta } = lemma_case {
        if !(delta > 0.0) {
            return Err(Error::param(format!("delta {delta} must be positive")));
        }
    }
    let num = (1.0 + h2) * (h1 - h2);
    let h3 = num / (h1 + 1.0 - 2.0 * h2);
    let rho0 = num / (h2 + 1.0 - 2.0 * h1);
    let theta_order = lemma_case.theta_order();
    Ok(HolderBudget {
        lambda,
        lemma_case,
        theta_order,
        h3,
        rho0,
        admissible: lambda * theta_order > h3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss_sim::{simulate_exact, GaussianModel};
    use crate::path::uniform_grid;

    fn fbm(n: usize, seed: u64) -> SamplePath {
        simulate_exact(&GaussianModel::fbm(0.7, 1.0).unwrap(), n, 1, seed).unwrap().remove(0)
    }

    #[test]
    fn g_sandwich_and_derivative_bound() {
        for nu in [1e-3, 0.1, 1.0] {
            assert_eq!(g_nu(0.0, nu), 0.0);
            for k in -200..=200 {
                let x = k as f64 * 0.03;
                let v = g_nu(x, nu);
                assert!(v <= x.abs() + 1e-15 && v >= (x.abs() - nu).max(0.0) - 1e-15);
                assert!(g_nu_prime(x, nu).abs() < 1.0);
                assert!((g_nu(g_nu_inverse(v, nu), nu) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn holder_budget_examples() {
        let b = holder_budget(0.3, LemmaCase::Iii { delta: 0.5 }, 0.7, 0.7).unwrap();
        assert_eq!(b.h3, 0.0);
        assert_eq!(b.rho0, 0.0);
        assert!(b.admissible);
        let b = holder_budget(1.0, LemmaCase::I, 0.8, 0.7).unwrap();
        assert!((b.h3 - 0.425).abs() < 1e-12);
        assert!(b.admissible);
        assert!(!holder_budget(0.8, LemmaCase::I, 0.8, 0.7).unwrap().admissible);
        assert!((holder_budget(1.0, LemmaCase::Ii { delta: 2.0 }, 0.8, 0.8).unwrap().theta_order - 0.25).abs() < 1e-15);
        assert!(matches!(
            holder_budget(1.0, LemmaCase::I, 0.7, 0.3),
            Err(Error::ConditionAViolation { .. })
        ));
    }

    #[test]
    fn constant_target_settles() {
        let g = fbm(4096, 5);
        let z = SamplePath::new(g.times.clone(), vec![0.0; g.times.len()], 0).unwrap();
        let sched = StrategySchedule::default_levels(6);
        let (psi, state) = construct_strategy(&g, &z, &sched).unwrap();
        assert!(psi.values.iter().all(|&v| v == 0.0));
        for n in 1..=7 {
            assert_eq!(replication_error(&state, 0.0, n).unwrap(), (0.0, 0.0));
        }
        assert!(norm_decay_check(&psi, &sched, 0.4).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn psi_is_bounded_by_level_scale_in_case_b() {
        let g = fbm(4096, 11);
        let sched = StrategySchedule::default_levels(7);
        let (psi, state) = construct_strategy(&g, &g, &sched).unwrap();
        for l in state.levels.iter().filter(|l| l.case == Case::B) {
            for j in l.start_index..l.end_index {
                assert!(psi.values[j].abs() < sched.sigma[l.level - 1]);
            }
        }
    }

    #[test]
    fn interpolated_hits_are_exact() {
        let g = fbm(4096, 2);
        let (_, state) = construct_strategy(&g, &g, &StrategySchedule::default_levels(7)).unwrap();
        for l in &state.levels {
            if l.hit {
                assert!(l.phi1_residual < 1e-12, "{l:?}");
            } else {
                assert!(l.never_hit);
            }
            assert!(l.tau >= l.t_start && l.tau <= l.t_end);
        }
    }

    #[test]
    fn grid_node_rule_records_overshoot() {
        let g = fbm(4096, 2);
        let mut sched = StrategySchedule::default_levels(6);
        sched.stop_rule = StopRule::GridNode;
        let (_, state) = construct_strategy(&g, &g, &sched).unwrap();
        assert!(state.levels.iter().any(|l| l.hit && l.amount > 0.0 && l.overshoot > 0.0));
    }

    #[test]
    fn triangle_bound_on_final_error() {
        let g = fbm(4096, 8);
        let (_, state) = construct_strategy(&g, &g, &StrategySchedule::default_levels(7)).unwrap();
        let z1 = g.values[g.values.len() - 1];
        for n in 2..=8 {
            let (phi1, fin) = replication_error(&state, z1, n).unwrap();
            let z_prev = state.levels[n - 2].xi;
            assert!(fin <= (z_prev - z1).abs() + phi1 + 1e-12);
        }
    }

    #[test]
    fn adapted_under_path_surgery() {
        let g = fbm(4096, 21);
        let sched = StrategySchedule::default_levels(7);
        let (psi, _) = construct_strategy(&g, &g, &sched).unwrap();
        let cut = 3500;
        let mut g2 = g.clone();
        for (j, v) in g2.values.iter_mut().enumerate().skip(cut + 1) {
            *v += 0.3 * ((j as f64) * 0.01).sin();
        }
        let (psi2, _) = construct_strategy(&g2, &g2, &sched).unwrap();
        assert_eq!(&psi.values[..=cut], &psi2.values[..=cut]);
    }

    #[test]
    fn schedule_validation() {
        let mut s = StrategySchedule::default_levels(3);
        assert!(s.validate().is_ok());
        s.refine_times[1] = s.refine_times[0];
        assert!(s.validate().is_err());
        let coarse = SamplePath::new(uniform_grid(1.0, 4), vec![0.0; 5], 0).unwrap();
        assert!(construct_strategy(&coarse, &coarse, &StrategySchedule::default_levels(5)).is_err());
    }
}
