//! CSV tables and run manifests.
//!
//! Numbers are written with 17 significant digits so that reading a file back
//! reproduces the values bit for bit. Manifests are flat `key = value` lines in
//! sorted key order, valid TOML.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::control::{FixedPointTrace, NonlinearControlResult};
use crate::error::{Error, Result};
use crate::experiments::{ConvergenceRow, DecayRow};
use crate::grid::{Grid1D, ScalarField, Trajectory};
use crate::hum::{fit_cost, CostRow, CostTable};
use crate::num::Real;

/// Shortest exact decimal form used in every output file.
pub fn format_number<T: Real>(v: T) -> String {
    let v = v.as_f64();
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn parse_number<T: Real>(s: &str) -> Result<T> {
    s.trim()
        .parse::<f64>()
        .map(T::c)
        .map_err(|_| Error::InvalidField(format!("not a number: {s:?}")))
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?)
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new().has_headers(true).from_path(path)?)
}

/// A table row with a fixed numeric schema.
pub trait CsvRow<T>: Sized {
    const HEADER: &'static [&'static str];
    fn values(&self) -> Vec<T>;
    fn from_values(v: &[T]) -> Self;
}

impl<T: Real> CsvRow<T> for ConvergenceRow<T> {
    const HEADER: &'static [&'static str] = &["alpha", "err_y", "err_z", "control_sup", "control_L2", "terminal_L2"];

    fn values(&self) -> Vec<T> {
        vec![self.alpha, self.err_y, self.err_z, self.control_sup, self.control_l2, self.terminal_l2]
    }

    fn from_values(v: &[T]) -> Self {
        Self { alpha: v[0], err_y: v[1], err_z: v[2], control_sup: v[3], control_l2: v[4], terminal_l2: v[5] }
    }
}

impl<T: Real> CsvRow<T> for DecayRow<T> {
    const HEADER: &'static [&'static str] = &["y0_sup", "r_theory", "r_fitted", "C_fitted"];

    fn values(&self) -> Vec<T> {
        vec![self.y0_sup, self.r_theory, self.r_fitted, self.c_fitted]
    }

    fn from_values(v: &[T]) -> Self {
        Self { y0_sup: v[0], r_theory: v[1], r_fitted: v[2], c_fitted: v[3] }
    }
}

pub fn write_rows<T: Real, R: CsvRow<T>>(path: &Path, rows: &[R]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(R::HEADER)?;
    for r in rows {
        w.write_record(r.values().into_iter().map(format_number))?;
    }
    w.flush()?;
    Ok(())
}

fn read_numeric<T: Real>(path: &Path, header: &[&str]) -> Result<Vec<Vec<T>>> {
    let mut r = reader(path)?;
    let found: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(Error::InvalidField(format!("{}: expected header {header:?}, found {found:?}", path.display())));
    }
    r.records()
        .map(|rec| rec?.iter().map(parse_number).collect::<Result<Vec<T>>>())
        .collect()
}

pub fn read_rows<T: Real, R: CsvRow<T>>(path: &Path) -> Result<Vec<R>> {
    Ok(read_numeric(path, R::HEADER)?.iter().map(|v| R::from_values(v)).collect())
}

const COST_HEADER: &[&str] = &["normA_inf", "T", "cost", "fitted_C1"];

/// Cost table with the fitted constant repeated on every row.
pub fn write_cost_table<T: Real>(path: &Path, table: &CostTable<T>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(COST_HEADER)?;
    for r in &table.rows {
        w.write_record([r.norm_a_inf, r.horizon, r.cost, table.fitted_c1].map(format_number))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cost_table<T: Real>(path: &Path) -> Result<CostTable<T>> {
    let rows: Vec<CostRow<T>> = read_numeric::<T>(path, COST_HEADER)?
        .iter()
        .map(|v| CostRow { norm_a_inf: v[0], horizon: v[1], cost: v[2] })
        .collect();
    let (fitted_c1, fit_residual) = fit_cost(&rows);
    Ok(CostTable { rows, fitted_c1, fit_residual })
}

const TRAJECTORY_HEADER: &[&str] = &["t", "x", "value"];

/// `t,x,value` rows, time-major, including both boundary nodes.
pub fn write_trajectory<T: Real>(path: &Path, y: &Trajectory<T>) -> Result<()> {
    let grid = y.grid();
    let mut w = writer(path)?;
    w.write_record(TRAJECTORY_HEADER)?;
    for (n, s) in y.snapshots().iter().enumerate() {
        let t = format_number(grid.t(n));
        for j in 0..=grid.nx() + 1 {
            let x = if j == grid.nx() + 1 { grid.length() } else { grid.dx() * T::from_count(j) };
            w.write_record([t.as_str(), &format_number(x), &format_number(s.padded(j))])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_trajectory`]; the grid is recovered from the node layout.
pub fn read_trajectory<T: Real>(path: &Path) -> Result<Trajectory<T>> {
    let rows = read_numeric::<T>(path, TRAJECTORY_HEADER)?;
    let bad = |m: &str| Error::InvalidField(format!("{}: {m}", path.display()));
    let first_t = rows.first().ok_or_else(|| bad("no data"))?[0];
    let per_level = rows.iter().take_while(|r| r[0] == first_t).count();
    if per_level < 5 || rows.len() % per_level != 0 {
        return Err(bad("ragged time levels"));
    }
    let nx = per_level - 2;
    let levels = rows.len() / per_level;
    if levels < 2 {
        return Err(bad("need at least two time levels"));
    }
    let length = rows[per_level - 1][1];
    let horizon = rows[rows.len() - 1][0];
    let grid = Grid1D::new(length, horizon, nx, levels - 1)?;
    let snaps = rows
        .chunks(per_level)
        .map(|c| {
            let values = c[1..=nx].iter().map(|r| r[2]).collect();
            ScalarField::with_trace(grid, values, c[nx + 1][2])
        })
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(grid, snaps)
}

pub fn write_trace<T: Real>(path: &Path, trace: &FixedPointTrace<T>) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["iteration", "residual_sup", "control_sup", "control_L2", "terminal_L2"])?;
    for (k, r) in trace.iterations.iter().enumerate() {
        let mut rec = vec![(k + 1).to_string()];
        rec.extend([r.residual_sup, r.control_sup, r.control_l2, r.terminal_l2].map(format_number));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Sorted key-value record of a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest(BTreeMap<String, String>);

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: &str) -> &mut Self {
        let escaped = value.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', "\\n");
        self.0.insert(key.into(), format!("\"{escaped}\""));
        self
    }

    pub fn number<T: Real>(&mut self, key: &str, value: T) -> &mut Self {
        self.0.insert(key.into(), format_number(value));
        self
    }

    pub fn integer(&mut self, key: &str, value: u64) -> &mut Self {
        self.0.insert(key.into(), value.to_string());
        self
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Self {
        self.0.insert(key.into(), value.to_string());
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut f = BufWriter::new(File::create(path)?);
    f.write_all(manifest.render().as_bytes())?;
    f.flush()?;
    Ok(())
}

/// `control.csv`, `state.csv`, `trace.csv` and `manifest.toml` under `dir`.
/// Result norms are added to `manifest`.
pub fn write_control_bundle<T: Real>(
    dir: &Path,
    result: &NonlinearControlResult<T>,
    manifest: &Manifest,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let paths: Vec<PathBuf> = ["control.csv", "state.csv", "trace.csv", "manifest.toml"]
        .iter()
        .map(|n| dir.join(n))
        .collect();
    write_trajectory(&paths[0], &result.control)?;
    write_trajectory(&paths[1], &result.state)?;
    write_trace(&paths[2], &result.trace)?;
    let mut m = manifest.clone();
    m.flag("result_converged", result.converged())
        .integer("result_iterations", result.trace.iter_count() as u64)
        .text("result_outcome", &format!("{:?}", result.trace.outcome))
        .number("result_control_sup", result.control_sup())
        .number("result_control_L2", result.control_l2())
        .number("result_terminal_L2", result.terminal_l2())
        .number("result_terminal_ratio", result.terminal_ratio())
        .number("result_replay_gap", result.replay_gap)
        .number("result_alpha", result.alpha.value());
    write_manifest(&paths[3], &m)?;
    Ok(paths)
}
