use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss_sim::{GaussianModel, ModelKind, VolterraKernel};
use crate::pricing::{ThetaKind, ThetaSpec};
use crate::strategy::StrategySchedule;
use crate::utility::UtilitySpec;

use super::{CommonArgs, ModelName, UtilityName};

pub const SCHEMA_VERSION: u32 = 1;
const SEED_ENV: &str = "WIENERLAB_SEED";

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub model: GaussianModel,
    pub theta: ThetaSpec,
    pub utility: UtilitySpec,
    pub w: f64,
    pub n_steps: usize,
    pub n_paths: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<StrategySchedule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            model: GaussianModel {
                kind: ModelKind::Fbm { hurst: 0.7 },
                horizon: 1.0,
            },
            theta: ThetaSpec {
                kind: ThetaKind::Constant { theta0: 0.3 },
                horizon: 1.0,
            },
            utility: UtilitySpec::Exponential { beta: 1.0 },
            w: 1.0,
            n_steps: 1024,
            n_paths: 100,
            seed: 0,
            schedule: None,
            alpha: None,
            output_dir: "out".into(),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config document, or the `config` member of a run manifest.
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path)?;
        let invalid = |e: serde_json::Error| Error::InvalidConfig(format!("{}: {e}", path.display()));
        let mut doc: serde_json::Value = serde_json::from_reader(file).map_err(invalid)?;
        if doc.get("command").is_some() {
            if let Some(inner) = doc.get_mut("config") {
                doc = inner.take();
            }
        }
        let cfg: ExperimentConfig = serde_json::from_value(doc).map_err(invalid)?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidConfig(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        Ok(cfg)
    }

    /// File values (or defaults), then `WIENERLAB_SEED` when no file is given, then flags.
    pub fn resolve(args: &CommonArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => Self::load(p)?,
            None => {
                let mut c = ExperimentConfig::default();
                if let Ok(s) = std::env::var(SEED_ENV) {
                    c.seed = s
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}={s} is not an unsigned integer")))?;
                }
                c
            }
        };
        cfg.model = model_from_flags(&cfg.model, args)?;
        if let Some(t) = &args.theta {
            cfg.theta = parse_theta(t, cfg.model.horizon)?;
        }
        if let Some(u) = args.utility {
            cfg.utility = match u {
                UtilityName::Exponential => UtilitySpec::Exponential { beta: args.beta.unwrap_or(1.0) },
                UtilityName::Power => UtilitySpec::Power { gamma: args.gamma.unwrap_or(0.5) },
                UtilityName::Log => UtilitySpec::Log,
            };
        } else {
            match (&mut cfg.utility, args.beta, args.gamma) {
                (UtilitySpec::Exponential { beta }, Some(b), _) => *beta = b,
                (UtilitySpec::Power { gamma }, _, Some(g)) => *gamma = g,
                _ => {}
            }
        }
        if let Some(w) = args.w {
            cfg.w = w;
        }
        if let Some(n) = args.steps {
            cfg.n_steps = n;
        }
        if let Some(n) = args.paths {
            cfg.n_paths = n;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if let Some(l) = args.levels {
            cfg.schedule = Some(StrategySchedule::default_levels(l));
        }
        if let Some(a) = args.alpha {
            cfg.alpha = Some(a);
        }
        if let Some(o) = &args.out {
            cfg.output_dir = o.to_string_lossy().into_owned();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.theta.validate()?;
        self.utility.validate()?;
        if let Some(s) = &self.schedule {
            s.validate()?;
        }
        if self.n_steps == 0 || self.n_paths == 0 {
            return Err(Error::InvalidConfig("steps and paths must be positive".into()));
        }
        if !self.w.is_finite() {
            return Err(Error::InvalidConfig("w must be finite".into()));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::InvalidConfig(format!("alpha {a} outside (0, 1)")));
            }
        }
        Ok(())
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(&self.output_dir)
    }
}

fn current_hurst(kind: &ModelKind) -> Option<f64> {
    match kind {
        ModelKind::Fbm { hurst }
        | ModelKind::Fou { hurst, .. }
        | ModelKind::Subfractional { hurst }
        | ModelKind::Bifractional { hurst, .. }
        | ModelKind::Mixed { hurst } => Some(*hurst),
        ModelKind::Volterra {
            kernel: VolterraKernel::Molchan { hurst } | VolterraKernel::PowerLaw { hurst, .. },
        } => Some(*hurst),
        ModelKind::FbmCombo { hursts, .. } => hursts.first().copied(),
        ModelKind::Wiener => None,
    }
}

fn model_from_flags(base: &GaussianModel, a: &CommonArgs) -> Result<GaussianModel> {
    let horizon = base.horizon;
    let Some(name) = a.model else {
        let mut m = base.clone();
        if let Some(h) = a.hurst {
            match &mut m.kind {
                ModelKind::Fbm { hurst }
                | ModelKind::Fou { hurst, .. }
                | ModelKind::Subfractional { hurst }
                | ModelKind::Bifractional { hurst, .. }
                | ModelKind::Mixed { hurst } => *hurst = h,
                ModelKind::Volterra {
                    kernel: VolterraKernel::Molchan { hurst } | VolterraKernel::PowerLaw { hurst, .. },
                } => *hurst = h,
                ModelKind::FbmCombo { hursts, .. } => hursts[0] = h,
                ModelKind::Wiener => {}
            }
        }
        return Ok(m);
    };
    let hurst = a.hurst.or(current_hurst(&base.kind)).unwrap_or(0.7);
    let kind = match name {
        ModelName::Wiener => ModelKind::Wiener,
        ModelName::Fbm => ModelKind::Fbm { hurst },
        ModelName::Fou => ModelKind::Fou {
            a: a.a.unwrap_or(1.0),
            b: a.b.unwrap_or(0.0),
            sigma: a.sigma.unwrap_or(1.0),
            hurst,
            y0: a.y0.unwrap_or(0.0),
        },
        ModelName::Subfractional => ModelKind::Subfractional { hurst },
        ModelName::Bifractional => ModelKind::Bifractional {
            hurst,
            k: a.bifrac_k.unwrap_or(0.5),
        },
        ModelName::Mixed => ModelKind::Mixed { hurst },
        ModelName::FbmCombo => ModelKind::FbmCombo {
            weights: vec![1.0, 1.0],
            hursts: vec![hurst, a.hurst2.unwrap_or(0.6)],
        },
        ModelName::Volterra => ModelKind::Volterra {
            kernel: VolterraKernel::Molchan { hurst },
        },
    };
    GaussianModel::new(kind, horizon)
}

fn numbers(body: &str, count: usize, what: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = body.split(',').collect();
    if parts.len() != count {
        return Err(Error::InvalidConfig(format!("--theta {what} expects {count} comma-separated numbers")));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("--theta {what}: `{p}` is not a number")))
        })
        .collect()
}

#[derive(Deserialize)]
struct ThetaRow {
    t: f64,
    theta: f64,
}

/// `const:<v> | power:<c>,<e> | ex42:<mu>,<r>,<sigma>,<H> | file:<path>`; files hold `t,theta` rows.
pub fn parse_theta(spec: &str, horizon: f64) -> Result<ThetaSpec> {
    let (tag, body) = spec
        .split_once(':')
        .ok_or_else(|| Error::InvalidConfig(format!("--theta `{spec}` lacks a `kind:` prefix")))?;
    let kind = match tag {
        "const" => ThetaKind::Constant {
            theta0: numbers(body, 1, "const")?[0],
        },
        "power" => {
            let v = numbers(body, 2, "power")?;
            ThetaKind::PowerLaw {
                coeff: v[0],
                exponent: v[1],
            }
        }
        "ex42" => {
            let v = numbers(body, 4, "ex42")?;
            ThetaKind::Example42 {
                mu: v[0],
                r: v[1],
                sigma: v[2],
                hurst: v[3],
            }
        }
        "file" => {
            let mut reader = csv::Reader::from_path(body)?;
            let (mut times, mut values) = (Vec::new(), Vec::new());
            for row in reader.deserialize::<ThetaRow>() {
                let row = row?;
                times.push(row.t);
                values.push(row.theta);
            }
            ThetaKind::Custom { times, values }
        }
        other => return Err(Error::InvalidConfig(format!("unknown --theta kind `{other}`"))),
    };
    ThetaSpec::new(kind, horizon)
}
