//! Sampled trajectories and grid functions, plus their CSV form
//! (`path_id,t,value`).

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing grid spacings and node positions.
pub(crate) const GRID_RTOL: f64 = 1e-9;

/// A trajectory on a time grid starting at 0, tagged with the stream it came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplePath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub seed_id: u64,
}

/// A function tabulated on an ordered grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// `t_k = k T / n_steps`, `k = 0..=n_steps`.
pub fn uniform_grid(horizon: f64, n_steps: usize) -> Vec<f64> {
    (0..=n_steps)
        .map(|k| horizon * k as f64 / n_steps as f64)
        .collect()
}

fn validate_grid(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::param(format!(
            "grid has {} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if times.len() < 2 {
        return Err(Error::param("grid needs at least two points"));
    }
    if times.windows(2).any(|w| w[1] <= w[0] || !w[1].is_finite()) {
        return Err(Error::param("grid times must be finite and strictly increasing"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("grid values must be finite"));
    }
    Ok(())
}

impl SamplePath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, seed_id: u64) -> Result<Self> {
        validate_grid(&times, &values)?;
        Ok(SamplePath { times, values, seed_id })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("non-empty path")
    }

    pub fn increments(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn to_grid(&self) -> GridFunction {
        GridFunction {
            times: self.times.clone(),
            values: self.values.clone(),
        }
    }
}

impl From<SamplePath> for GridFunction {
    fn from(p: SamplePath) -> Self {
        GridFunction {
            times: p.times,
            values: p.values,
        }
    }
}

impl From<&SamplePath> for GridFunction {
    fn from(p: &SamplePath) -> Self {
        p.to_grid()
    }
}

impl GridFunction {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_grid(&times, &values)?;
        Ok(GridFunction { times, values })
    }

    /// Tabulates `f` on a uniform grid over `[0, horizon]`.
    pub fn from_fn(horizon: f64, n_steps: usize, f: impl Fn(f64) -> f64) -> Self {
        let times = uniform_grid(horizon, n_steps);
        let values = times.iter().map(|&t| f(t)).collect();
        GridFunction { times, values }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Common spacing of a uniform grid, or an error if spacing varies.
    pub fn uniform_step(&self) -> Result<f64> {
        uniform_step(&self.times)
    }

    /// Index of the grid node at time `t`, if `t` sits on the grid.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        node_index(&self.times, t)
    }

    /// Piecewise-linear interpolation (flat extrapolation outside the grid).
    pub fn interpolate(&self, t: f64) -> f64 {
        interpolate(&self.times, &self.values, t)
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            times: self.times.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

pub(crate) fn uniform_step(times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::param("grid needs at least two points"));
    }
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let uniform = times
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= GRID_RTOL * h.max(1.0) + 1e-12 * h);
    if !uniform || h <= 0.0 {
        return Err(Error::GridMismatch("grid is not uniform".into()));
    }
    Ok(h)
}

pub(crate) fn node_index(times: &[f64], t: f64) -> Option<usize> {
    let h = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    let k = ((t - times[0]) / h).round();
    if k < 0.0 || k as usize >= times.len() {
        return None;
    }
    let k = k as usize;
    ((times[k] - t).abs() <= GRID_RTOL * h.max(1.0)).then_some(k)
}

pub(crate) fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    if t <= times[0] {
        return values[0];
    }
    let last = times.len() - 1;
    if t >= times[last] {
        return values[last];
    }
    let k = times.partition_point(|&s| s <= t) - 1;
    let lam = (t - times[k]) / (times[k + 1] - times[k]);
    values[k] + lam * (values[k + 1] - values[k])
}

pub(crate) fn same_grid(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x - y).abs() <= GRID_RTOL * x.abs().max(1.0))
}

#[derive(Debug, Serialize, Deserialize)]
struct PathRow {
    path_id: u64,
    t: f64,
    value: f64,
}

/// Writes path sets as `path_id,t,value` rows; the row's `path_id` is the index
/// in `paths`.
pub fn write_paths_csv<W: Write>(writer: W, paths: &[GridFunction]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (id, p) in paths.iter().enumerate() {
        for (&t, &value) in p.times.iter().zip(&p.values) {
            w.serialize(PathRow {
                path_id: id as u64,
                t,
                value,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `path_id,t,value` CSV, grouping rows by `path_id` in ascending order.
pub fn read_paths_csv<R: Read>(reader: R) -> Result<Vec<(u64, GridFunction)>> {
    let mut r = csv::Reader::from_reader(reader);
    let mut groups: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in r.deserialize::<PathRow>() {
        let row = row?;
        let entry = groups.entry(row.path_id).or_default();
        entry.0.push(row.t);
        entry.1.push(row.value);
    }
    groups
        .into_iter()
        .map(|(id, (times, values))| Ok((id, GridFunction::new(times, values)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_increasing_times() {
        assert!(GridFunction::new(vec![0.0, 0.0, 1.0], vec![0.0; 3]).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(SamplePath::new(vec![0.0, 1.0], vec![0.0, f64::NAN], 0).is_err());
    }

    #[test]
    fn node_lookup_and_interpolation() {
        let g = GridFunction::from_fn(1.0, 8, |t| 2.0 * t);
        assert_eq!(g.node_index(0.25), Some(2));
        assert_eq!(g.node_index(0.3), None);
        assert!((g.interpolate(0.3) - 0.6).abs() < 1e-15);
        assert!((g.uniform_step().unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn csv_round_trip() {
        let a = GridFunction::from_fn(1.0, 4, |t| t * t);
        let b = GridFunction::from_fn(1.0, 4, |t| -t);
        let mut buf = Vec::new();
        write_paths_csv(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("path_id,t,value\n"));
        let back = read_paths_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[0].1, a);
        assert_eq!(back[1].1, b);
    }
}
