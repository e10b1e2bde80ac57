//! CSV and JSON output.
//!
//! Floats are written with 17 significant digits so that values round-trip
//! exactly. Complex matrices in JSON are row-major arrays of `[re, im]`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::coupled::{track_spectrum, TwoQubitSystem, TRACK_STEP};
use crate::evolution::TrajectoryPoint;
use crate::optimizer::ScanResult;
use crate::{FluxError, Result, C64};

/// Shortest exact decimal rendering with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn io_err(path: &Path, source: std::io::Error) -> FluxError {
    FluxError::Io { path: path.display().to_string(), source }
}

fn csv_err(path: &Path, e: csv::Error) -> FluxError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        other => FluxError::Serialization(format!("{}: {other:?}", path.display())),
    }
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Energies of labelled levels along a flux sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumSweep {
    pub labels: Vec<(usize, usize)>,
    pub phis: Vec<f64>,
    /// `energies[i][j]`: level `labels[j]` at `phis[i]` (GHz, ground of the
    /// sweet-spot spectrum subtracted).
    pub energies: Vec<Vec<f64>>,
}

/// Tracks `labels` along `phis` starting from the sweet spot.
pub fn spectrum_sweep(sys: &TwoQubitSystem, phis: &[f64], labels: &[(usize, usize)]) -> Result<SpectrumSweep> {
    for &(k, l) in labels {
        if k >= sys.qubit_a.n_levels || l >= sys.qubit_b.n_levels {
            return Err(FluxError::invalid(format!("label ({k}, {l}) outside the truncated space")));
        }
    }
    let e0 = sys.sweet.energy(0, 0);
    let spectra = track_spectrum(sys, phis, TRACK_STEP)?;
    let energies = spectra.iter().map(|s| labels.iter().map(|&(k, l)| s.energy(k, l) - e0).collect()).collect();
    Ok(SpectrumSweep { labels: labels.to_vec(), phis: phis.to_vec(), energies })
}

pub fn write_spectrum_csv(path: &Path, sweep: &SpectrumSweep) -> Result<()> {
    let mut header = vec!["phi_over_pi".to_string()];
    header.extend(sweep.labels.iter().map(|(k, l)| format!("e{k}{l}_ghz")));
    let rows = sweep.phis.iter().zip(&sweep.energies).map(|(phi, es)| {
        let mut row = vec![fmt_f64(phi / PI)];
        row.extend(es.iter().map(|&e| fmt_f64(e)));
        row
    });
    write_csv(path, &header, rows)
}

pub fn write_trajectory_csv(path: &Path, points: &[TrajectoryPoint]) -> Result<()> {
    let header: Vec<String> =
        ["t_ns", "pop01", "pop10", "bloch_x", "bloch_y", "bloch_z", "residual"].iter().map(|s| s.to_string()).collect();
    let rows = points.iter().map(|p| {
        [p.t, p.pop_01, p.pop_10, p.bloch_x, p.bloch_y, p.bloch_z, p.residual].iter().map(|&x| fmt_f64(x)).collect()
    });
    write_csv(path, &header, rows)
}

pub const SCAN_HEADER: [&str; 9] =
    ["delta_phi_over_pi", "t_r_ns", "t_p_ns", "a_env", "error", "duration_ns", "zeta_rad", "leakage", "converged"];

pub fn scan_row(p: &crate::optimizer::ScanPoint) -> Vec<String> {
    let mut row: Vec<String> = [p.pulse.delta_phi / PI, p.pulse.t_r, p.pulse.t_p, p.pulse.a_env, p.error, p.duration_ns, p.zeta_rad, p.leakage]
        .iter()
        .map(|&x| fmt_f64(x))
        .collect();
    row.push(p.converged.to_string());
    row
}

pub fn write_scan_csv(path: &Path, scan: &ScanResult) -> Result<()> {
    let header: Vec<String> = SCAN_HEADER.iter().map(|s| s.to_string()).collect();
    write_csv(path, &header, scan.points.iter().map(scan_row))
}

/// Row-major `[[re, im], ...]` rows.
pub fn complex_matrix_json(m: &DMatrix<C64>) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect();
    serde_json::json!(rows)
}

pub fn complex_matrix_from_json(v: &serde_json::Value) -> Result<DMatrix<C64>> {
    let rows: Vec<Vec<[f64; 2]>> =
        serde_json::from_value(v.clone()).map_err(|e| FluxError::Serialization(e.to_string()))?;
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(FluxError::Serialization("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(n, m, |r, c| C64::new(rows[r][c][0], rows[r][c][1])))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| FluxError::Serialization(e.to_string()))?;
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).and_then(|_| f.write_all(b"\n")).map_err(|e| io_err(path, e))
}

/// Run metadata written next to scan output.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<S: Serialize> {
    pub command: String,
    pub spec: S,
    pub seed: u64,
    pub code_version: String,
    pub wall_time_s: f64,
    pub points: usize,
    pub all_converged: bool,
}

impl<S: Serialize> Manifest<S> {
    pub fn new(command: &str, spec: S, seed: u64, wall_time_s: f64, points: usize, all_converged: bool) -> Self {
        Manifest {
            command: command.into(),
            spec,
            seed,
            code_version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s,
            points,
            all_converged,
        }
    }
}
