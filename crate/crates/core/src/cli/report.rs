//! Aggregation of run artifacts into one CSV table per figure.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pricing::ThetaKind;

use super::{write_atomic, EntropyArtifact, OptimizeArtifact, ReplicateArtifact};

#[derive(Serialize)]
struct ResidualTableRow<'a> {
    run: &'a str,
    seed: u64,
    target: &'a str,
    level: usize,
    phi1_residual: f64,
    final_error: f64,
    norm: Option<f64>,
}

#[derive(Serialize)]
struct EntropyTableRow<'a> {
    run: &'a str,
    seed: u64,
    theta: &'static str,
    n_paths: usize,
    n_steps: usize,
    h_pstar_p: f64,
    h_pstar_p_se: f64,
    h_p_pstar: f64,
    h_p_pstar_se: f64,
    diverging: bool,
}

#[derive(Serialize)]
struct UtilityTableRow<'a> {
    run: &'a str,
    seed: u64,
    utility: &'a str,
    w: f64,
    n_paths: usize,
    c_star: Option<f64>,
    expected_utility: f64,
    se: f64,
    closed_form: f64,
    budget_residual: f64,
    worst_probe_gap: f64,
}

fn theta_name(kind: &ThetaKind) -> &'static str {
    match kind {
        ThetaKind::Constant { .. } => "constant",
        ThetaKind::PowerLaw { .. } => "power_law",
        ThetaKind::Example42 { .. } => "example42",
        ThetaKind::Custom { .. } => "custom",
    }
}

/// The input directory itself plus its immediate subdirectories, sorted.
fn run_dirs(input: &Path) -> Result<Vec<PathBuf>> {
    if !input.is_dir() {
        return Err(Error::MissingArtifact(input.to_path_buf()));
    }
    let mut dirs = vec![input.to_path_buf()];
    let mut subs: Vec<PathBuf> = fs::read_dir(input)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subs.sort();
    dirs.extend(subs);
    Ok(dirs)
}

fn load<T: DeserializeOwned>(path: &Path) -> Result<Option<T>> {
    if !path.is_file() {
        return Ok(None);
    }
    let text = fs::read(path)?;
    serde_json::from_slice(&text)
        .map(Some)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
}

fn table<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn run(input: &Path, out: &Path) -> Result<()> {
    let dirs = run_dirs(input)?;
    let names: Vec<String> = dirs
        .iter()
        .map(|d| {
            d.strip_prefix(input)
                .ok()
                .filter(|p| !p.as_os_str().is_empty())
                .map(|p| p.to_string_lossy().into_owned())
                .unwrap_or_else(|| ".".into())
        })
        .collect();
    let mut replicate = Vec::new();
    let mut entropy = Vec::new();
    let mut utility = Vec::new();
    for (dir, name) in dirs.iter().zip(&names) {
        if let Some(a) = load::<ReplicateArtifact>(&dir.join("replicate.json"))? {
            replicate.push((name.as_str(), a));
        }
        if let Some(a) = load::<EntropyArtifact>(&dir.join("entropy.json"))? {
            entropy.push((name.as_str(), a));
        }
        if let Some(a) = load::<OptimizeArtifact>(&dir.join("optimize.json"))? {
            utility.push((name.as_str(), a));
        }
    }
    if replicate.is_empty() && entropy.is_empty() && utility.is_empty() {
        return Err(Error::MissingArtifact(input.to_path_buf()));
    }
    fs::create_dir_all(out)?;
    if !replicate.is_empty() {
        let rows: Vec<ResidualTableRow> = replicate
            .iter()
            .flat_map(|(run, a)| {
                a.residuals.iter().map(move |r| ResidualTableRow {
                    run,
                    seed: a.seed,
                    target: &a.target,
                    level: r.level,
                    phi1_residual: r.phi1_residual,
                    final_error: r.final_error,
                    norm: a.norms.as_ref().and_then(|n| n.get(r.level - 1).copied()),
                })
            })
            .collect();
        write_atomic(out, "residuals_by_level.csv", &table(&rows)?)?;
    }
    if !entropy.is_empty() {
        let rows: Vec<EntropyTableRow> = entropy
            .iter()
            .map(|(run, a)| EntropyTableRow {
                run,
                seed: a.seed,
                theta: theta_name(&a.theta.kind),
                n_paths: a.n_paths,
                n_steps: a.n_steps,
                h_pstar_p: a.h_pstar_p.value,
                h_pstar_p_se: a.h_pstar_p.se,
                h_p_pstar: a.h_p_pstar.value,
                h_p_pstar_se: a.h_p_pstar.se,
                diverging: a.h_pstar_p.diverging || a.h_p_pstar.diverging,
            })
            .collect();
        write_atomic(out, "entropy.csv", &table(&rows)?)?;
    }
    if !utility.is_empty() {
        let rows: Vec<UtilityTableRow> = utility
            .iter()
            .map(|(run, a)| UtilityTableRow {
                run,
                seed: a.seed,
                utility: &a.report.utility,
                w: a.report.w,
                n_paths: a.n_paths,
                c_star: a.report.c_star,
                expected_utility: a.report.expected_utility,
                se: a.report.se,
                closed_form: a.report.closed_form,
                budget_residual: a.report.budget_residual,
                worst_probe_gap: a.probe.worst_gap,
            })
            .collect();
        write_atomic(out, "utility.csv", &table(&rows)?)?;
    }
    Ok(())
}
