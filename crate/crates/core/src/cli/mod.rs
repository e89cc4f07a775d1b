//! `wienerlab` command-line front end.

mod config;
mod report;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frac_calc::{gls_integral, holder_norm, lambda_alpha, rl_derivative_left, rl_derivative_right, FracParams};
use crate::gauss_sim::{simulate, simulate_exact, GaussianModel};
use crate::malliavin::{clark_ocone_integrand, verify_representation, TerminalFunctional};
use crate::path::{read_paths_csv, write_paths_csv, GridFunction, SamplePath};
use crate::pricing::{relative_entropy, sample_kernel, write_kernel_csv, EntropyDirection, EntropyEstimate, KernelSample, ThetaSpec};
use crate::stats::median;
use crate::strategy::{construct_strategy, norm_decay_check, replication_error, LevelState, StrategySchedule};
use crate::utility::{optimal_profile, optimality_probe, ProbeResult, UtilityReport};

pub use config::{parse_theta, ExperimentConfig, SCHEMA_VERSION};

const PROBES: usize = 100;
const DEFAULT_LEVELS: usize = 8;

#[derive(Debug, Parser)]
#[command(name = "wienerlab", version, about = "Gaussian path simulation, fractional calculus and utility maximization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    Wiener,
    Fbm,
    Fou,
    Subfractional,
    Bifractional,
    Mixed,
    FbmCombo,
    Volterra,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UtilityName {
    Exponential,
    Power,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalName {
    Linear,
    Square,
    Exp,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    #[arg(long, global = true, value_enum)]
    pub model: Option<ModelName>,
    #[arg(long, global = true)]
    pub hurst: Option<f64>,
    /// Second Hurst index of `fbm-combo`.
    #[arg(long, global = true)]
    pub hurst2: Option<f64>,
    #[arg(long = "bifrac-k", global = true)]
    pub bifrac_k: Option<f64>,
    /// fOU mean-reversion speed.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// fOU mean level.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[arg(long, global = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub y0: Option<f64>,
    #[arg(long, global = true)]
    pub steps: Option<usize>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    /// Falls back to WIENERLAB_SEED, then 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// const:<v> | power:<c>,<e> | ex42:<mu>,<r>,<sigma>,<H> | file:<path>
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    #[arg(long, global = true, value_enum)]
    pub utility: Option<UtilityName>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub gamma: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub w: Option<f64>,
    #[arg(long, global = true)]
    pub levels: Option<usize>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// JSON experiment config; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample paths of a Gaussian model.
    Simulate,
    /// Fractional derivatives and pathwise integrals of a path.
    Frac {
        #[command(subcommand)]
        op: FracOp,
    },
    /// Clark–Ocone integrands for a terminal functional of W(T).
    ClarkOcone {
        #[arg(long, value_enum, default_value = "exp")]
        functional: FunctionalName,
    },
    /// Pricing kernel samples and relative entropies.
    Kernel {
        #[command(subcommand)]
        op: KernelOp,
    },
    /// Optimal terminal profile for a utility under the pricing kernel.
    Optimize,
    /// Inductive replication strategy for a target payoff.
    Replicate {
        /// `self` or `const:<z>`.
        #[arg(long, default_value = "self")]
        target: String,
    },
    /// Aggregate run artifacts into plot-ready tables.
    Report {
        /// Directory holding run artifacts (defaults to --out).
        input: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum FracOp {
    /// Left and right Riemann–Liouville derivatives on the interior nodes.
    Deriv {
        /// `path_id,t,value` CSV; the first path is used. Simulated when absent.
        input: Option<PathBuf>,
    },
    /// `∫ g dg` as a generalized Lebesgue–Stieltjes integral, with its bound.
    Integrate { input: Option<PathBuf> },
}

#[derive(Debug, Subcommand)]
pub enum KernelOp {
    Sample,
    Entropy,
}

/// Completed runs either succeed cleanly or carry a numerical warning flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Clean,
    Flagged,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EntropyArtifact {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub theta: ThetaSpec,
    pub h_pstar_p: EntropyEstimate,
    pub h_p_pstar: EntropyEstimate,
    pub mean_phi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizeArtifact {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub theta: ThetaSpec,
    pub report: UtilityReport,
    pub probe: ProbeResult,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualRow {
    pub level: usize,
    pub phi1_residual: f64,
    pub final_error: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicateArtifact {
    pub seed: u64,
    pub n_steps: usize,
    pub model: GaussianModel,
    pub target: String,
    pub schedule: StrategySchedule,
    pub alpha: Option<f64>,
    pub levels: Vec<LevelState>,
    pub residuals: Vec<ResidualRow>,
    pub norms: Option<Vec<f64>>,
    pub never_hit: bool,
}

/// Runs the CLI and returns the process exit code: 0 on success, 1 on
/// validation or I/O errors, 2 on numerical-divergence flags.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(Outcome::Clean) => 0,
        Ok(Outcome::Flagged) => 2,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome> {
    if let Command::Report { input } = &cli.command {
        let input = input
            .clone()
            .or_else(|| cli.common.out.clone())
            .unwrap_or_else(|| PathBuf::from("."));
        let out = cli.common.out.clone().unwrap_or_else(|| input.clone());
        report::run(&input, &out)?;
        return Ok(Outcome::Clean);
    }
    let cfg = ExperimentConfig::resolve(&cli.common)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.common.workers {
        if n == 0 {
            return Err(Error::InvalidConfig("--workers must be positive".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &cfg))
}

fn dispatch(command: &Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)?;
    match command {
        Command::Simulate => cmd_simulate(cfg, &dir),
        Command::Frac { op: FracOp::Deriv { input } } => cmd_frac_deriv(cfg, &dir, input.as_deref()),
        Command::Frac { op: FracOp::Integrate { input } } => cmd_frac_integrate(cfg, &dir, input.as_deref()),
        Command::ClarkOcone { functional } => cmd_clark_ocone(cfg, &dir, *functional),
        Command::Kernel { op: KernelOp::Sample } => cmd_kernel_sample(cfg, &dir),
        Command::Kernel { op: KernelOp::Entropy } => cmd_kernel_entropy(cfg, &dir),
        Command::Optimize => cmd_optimize(cfg, &dir),
        Command::Replicate { target } => cmd_replicate(cfg, &dir, target),
        Command::Report { .. } => unreachable!("handled before config resolution"),
    }
}

/// Temp file in the destination directory, then rename.
pub(crate) fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(dir, name, &bytes)
}

fn write_manifest(dir: &Path, command: &str, cfg: &ExperimentConfig, outputs: &[&str]) -> Result<()> {
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    write_json(dir, "manifest.json", &manifest)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn cmd_simulate(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let paths = simulate(&cfg.model, cfg.n_steps, cfg.n_paths, cfg.seed)?;
    let grids: Vec<GridFunction> = paths.iter().map(SamplePath::to_grid).collect();
    write_atomic(dir, "paths.csv", &csv_bytes(|b| write_paths_csv(b, &grids))?)?;
    write_manifest(dir, "simulate", cfg, &["paths.csv"])?;
    Ok(Outcome::Clean)
}

fn input_path(cfg: &ExperimentConfig, input: Option<&Path>) -> Result<GridFunction> {
    match input {
        Some(p) => {
            let file = fs::File::open(p)?;
            read_paths_csv(file)?
                .into_iter()
                .next()
                .map(|(_, g)| g)
                .ok_or_else(|| Error::InvalidConfig(format!("{} holds no paths", p.display())))
        }
        None => Ok(simulate(&cfg.model, cfg.n_steps, 1, cfg.seed)?.remove(0).to_grid()),
    }
}

/// Order inside `(1 - H, 1/2)` for the model's Hurst index, else 0.4.
fn default_alpha(cfg: &ExperimentConfig) -> f64 {
    cfg.alpha.unwrap_or(match cfg.model.kind {
        crate::gauss_sim::ModelKind::Fbm { hurst } if hurst > 0.5 => 0.5 * (1.5 - hurst),
        _ => 0.4,
    })
}

#[derive(Serialize)]
struct DerivRow {
    t: f64,
    left: f64,
    right: f64,
}

fn cmd_frac_deriv(cfg: &ExperimentConfig, dir: &Path, input: Option<&Path>) -> Result<Outcome> {
    let f = input_path(cfg, input)?;
    let alpha = default_alpha(cfg);
    let p = FracParams::spanning(alpha, &f)?;
    let left = rl_derivative_left(&f, &p)?;
    let end = f.values[f.len() - 1];
    let shifted = GridFunction::new(f.times.clone(), f.values.iter().map(|v| v - end).collect())?;
    let right = rl_derivative_right(&shifted, &p)?;
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        for ((&t, &l), &r) in left.times.iter().zip(&left.values).zip(&right.values) {
            w.serialize(DerivRow { t, left: l, right: r })?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(dir, "frac_deriv.csv", &bytes)?;
    write_manifest(dir, "frac deriv", cfg, &["frac_deriv.csv"])?;
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct IntegrateArtifact {
    alpha: f64,
    integral: f64,
    chain_rule: f64,
    lambda_alpha: f64,
    holder_norm: f64,
    bound: f64,
}

fn cmd_frac_integrate(cfg: &ExperimentConfig, dir: &Path, input: Option<&Path>) -> Result<Outcome> {
    let g = input_path(cfg, input)?;
    let alpha = default_alpha(cfg);
    let integral = gls_integral(&g, &g, alpha)?;
    let lam = lambda_alpha(&g, alpha)?;
    let norm = holder_norm(&g, alpha, g.times[g.len() - 1])?;
    let art = IntegrateArtifact {
        alpha,
        integral,
        chain_rule: 0.5 * (g.values[g.len() - 1].powi(2) - g.values[0].powi(2)),
        lambda_alpha: lam,
        holder_norm: norm,
        bound: lam * norm,
    };
    write_json(dir, "frac_integrate.json", &art)?;
    write_manifest(dir, "frac integrate", cfg, &["frac_integrate.json"])?;
    Ok(Outcome::Clean)
}

fn wiener_paths(cfg: &ExperimentConfig, horizon: f64) -> Result<Vec<SamplePath>> {
    simulate_exact(&GaussianModel::wiener(horizon)?, cfg.n_steps, cfg.n_paths, cfg.seed)
}

#[derive(Serialize)]
struct ResidualCsvRow {
    path_id: u64,
    residual: f64,
}

#[derive(Serialize)]
struct ClarkOconeArtifact {
    functional: FunctionalName,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    median_residual: f64,
    max_residual: f64,
}

fn cmd_clark_ocone(cfg: &ExperimentConfig, dir: &Path, functional: FunctionalName) -> Result<Outcome> {
    let horizon = cfg.model.horizon;
    let f = match functional {
        FunctionalName::Linear => TerminalFunctional::linear(horizon)?,
        FunctionalName::Square => TerminalFunctional::square(horizon)?,
        FunctionalName::Exp => TerminalFunctional::exp(horizon)?,
    };
    let paths = wiener_paths(cfg, horizon)?;
    let residuals = paths
        .iter()
        .map(|w| verify_representation(&f, w, &clark_ocone_integrand(&f, w)?))
        .collect::<Result<Vec<f64>>>()?;
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        for (p, &r) in paths.iter().zip(&residuals) {
            w.serialize(ResidualCsvRow {
                path_id: p.seed_id,
                residual: r,
            })?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(dir, "clark_ocone.csv", &bytes)?;
    let art = ClarkOconeArtifact {
        functional,
        n_paths: cfg.n_paths,
        n_steps: cfg.n_steps,
        seed: cfg.seed,
        median_residual: median(&residuals),
        max_residual: residuals.iter().cloned().fold(0.0, f64::max),
    };
    write_json(dir, "clark_ocone.json", &art)?;
    write_manifest(dir, "clark-ocone", cfg, &["clark_ocone.csv", "clark_ocone.json"])?;
    Ok(Outcome::Clean)
}

fn kernel(cfg: &ExperimentConfig) -> Result<Vec<KernelSample>> {
    sample_kernel(&cfg.theta, &wiener_paths(cfg, cfg.theta.horizon)?)
}

fn cmd_kernel_sample(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let samples = kernel(cfg)?;
    write_atomic(dir, "kernel.csv", &csv_bytes(|b| write_kernel_csv(b, &samples))?)?;
    write_manifest(dir, "kernel sample", cfg, &["kernel.csv"])?;
    Ok(Outcome::Clean)
}

fn cmd_kernel_entropy(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let samples = kernel(cfg)?;
    let phis: Vec<f64> = samples.iter().map(|s| s.phi_t).collect();
    let art = EntropyArtifact {
        seed: cfg.seed,
        n_paths: cfg.n_paths,
        n_steps: cfg.n_steps,
        theta: cfg.theta.clone(),
        h_pstar_p: relative_entropy(&samples, EntropyDirection::PStarP)?,
        h_p_pstar: relative_entropy(&samples, EntropyDirection::PPStar)?,
        mean_phi: crate::stats::mean(&phis),
    };
    write_json(dir, "entropy.json", &art)?;
    write_manifest(dir, "kernel entropy", cfg, &["entropy.json"])?;
    if art.h_pstar_p.diverging || art.h_p_pstar.diverging {
        log::warn!("relative entropy estimate did not stabilize across batches");
        return Ok(Outcome::Flagged);
    }
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct ProfileRow {
    path_id: u64,
    #[serde(rename = "phi_T")]
    phi_t: f64,
    x_star: f64,
}

fn cmd_optimize(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let samples = kernel(cfg)?;
    let profile = optimal_profile(cfg.utility, cfg.w, &samples)?;
    let probe = optimality_probe(cfg.utility, &samples, &profile.x_star, PROBES, cfg.seed)?;
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        for (s, &x) in samples.iter().zip(&profile.x_star) {
            w.serialize(ProfileRow {
                path_id: s.path_id,
                phi_t: s.phi_t,
                x_star: x,
            })?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(dir, "profile.csv", &bytes)?;
    let art = OptimizeArtifact {
        seed: cfg.seed,
        n_paths: cfg.n_paths,
        n_steps: cfg.n_steps,
        theta: cfg.theta.clone(),
        report: profile.report(),
        probe,
    };
    write_json(dir, "optimize.json", &art)?;
    write_manifest(dir, "optimize", cfg, &["profile.csv", "optimize.json"])?;
    Ok(Outcome::Clean)
}

fn target_path(spec: &str, g: &SamplePath) -> Result<SamplePath> {
    if spec == "self" {
        return Ok(g.clone());
    }
    let z = spec
        .strip_prefix("const:")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| Error::InvalidConfig(format!("--target `{spec}` is neither `self` nor `const:<z>`")))?;
    SamplePath::new(g.times.clone(), vec![z; g.len()], g.seed_id)
}

#[derive(Serialize)]
struct PsiRow {
    t: f64,
    psi: f64,
}

fn cmd_replicate(cfg: &ExperimentConfig, dir: &Path, target: &str) -> Result<Outcome> {
    let schedule = cfg
        .schedule
        .clone()
        .unwrap_or_else(|| StrategySchedule::default_levels(DEFAULT_LEVELS));
    let g = simulate(&cfg.model, cfg.n_steps, 1, cfg.seed)?.remove(0);
    let z = target_path(target, &g)?;
    let (psi, state) = construct_strategy(&g, &z, &schedule)?;
    let z_final = z.values[z.len() - 1];
    let residuals = (1..=schedule.n_max() + 1)
        .map(|n| {
            replication_error(&state, z_final, n).map(|(phi1, fin)| ResidualRow {
                level: n,
                phi1_residual: phi1,
                final_error: fin,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let alpha = default_alpha(cfg);
    let norms = norm_decay_check(&psi, &schedule, alpha).ok();
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        for (&t, &v) in psi.times.iter().zip(&psi.values) {
            w.serialize(PsiRow { t, psi: v })?;
        }
        w.flush()?;
        Ok(())
    })?;
    write_atomic(dir, "psi.csv", &bytes)?;
    let never_hit = state.any_never_hit();
    let art = ReplicateArtifact {
        seed: cfg.seed,
        n_steps: cfg.n_steps,
        model: cfg.model.clone(),
        target: target.to_string(),
        schedule,
        alpha: norms.as_ref().map(|_| alpha),
        levels: state.levels,
        residuals,
        norms,
        never_hit,
    };
    write_json(dir, "replicate.json", &art)?;
    write_manifest(dir, "replicate", cfg, &["psi.csv", "replicate.json"])?;
    if never_hit {
        log::warn!("some levels never reached their threshold; the shortfall was carried forward");
        return Ok(Outcome::Flagged);
    }
    Ok(Outcome::Clean)
}
