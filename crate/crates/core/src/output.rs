//! Machine-readable result files.
//!
//! Floats are written with 17 significant digits so a parse gives back the
//! exact `f64`.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;
use crate::error::{DqdError, Result};
use crate::sweep::SweepResult;
use crate::trajectory::{ControlBranch, Trajectory};

/// Column order is part of the file contract.
pub const TRAJECTORY_COLUMNS: [&str; 14] = [
    "t_ps",
    "rho_rr",
    "rho_ll",
    "rho_rl_re",
    "rho_rl_im",
    "f1_uev",
    "f2_uev",
    "v",
    "p_l",
    "fidelity",
    "bloch_x",
    "bloch_y",
    "bloch_z",
    "branch",
];

pub const SWEEP_COLUMNS: [&str; 7] = [
    "axis1_index",
    "axis2_index",
    "axis1_value",
    "axis2_value",
    "value",
    "masked",
    "below_floor",
];

pub const ANALYTIC_COLUMNS: [&str; 5] = ["t_p_ps", "p_analytic", "p_clamped", "p_lz", "phase_i"];

pub const BLOCH_COLUMNS: [&str; 5] = ["t_ps", "bloch_x", "bloch_y", "bloch_z", "bloch_norm"];

/// One trajectory record, flattened.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t_ps: f64,
    pub rho_rr: f64,
    pub rho_ll: f64,
    pub rho_rl_re: f64,
    pub rho_rl_im: f64,
    pub f1_uev: f64,
    pub f2_uev: f64,
    pub v: f64,
    pub p_l: f64,
    pub fidelity: f64,
    pub bloch_x: f64,
    pub bloch_y: f64,
    pub bloch_z: f64,
    pub branch: ControlBranch,
}

impl TrajectoryRow {
    fn fields(&self) -> [f64; 13] {
        [
            self.t_ps,
            self.rho_rr,
            self.rho_ll,
            self.rho_rl_re,
            self.rho_rl_im,
            self.f1_uev,
            self.f2_uev,
            self.v,
            self.p_l,
            self.fidelity,
            self.bloch_x,
            self.bloch_y,
            self.bloch_z,
        ]
    }
}

pub fn trajectory_rows(traj: &Trajectory) -> Vec<TrajectoryRow> {
    (0..traj.len())
        .map(|i| {
            let m = traj.states[i].mat();
            let rl = m.get(0, 1);
            let [bx, by, bz] = traj.bloch[i];
            TrajectoryRow {
                t_ps: traj.times[i],
                rho_rr: m.get(0, 0).re,
                rho_ll: m.get(1, 1).re,
                rho_rl_re: rl.re,
                rho_rl_im: rl.im,
                f1_uev: traj.controls[i].f1,
                f2_uev: traj.controls[i].f2,
                v: traj.v_values[i],
                p_l: traj.p_l[i],
                fidelity: traj.fidelity[i],
                bloch_x: bx,
                bloch_y: by,
                bloch_z: bz,
                branch: traj.branches[i],
            }
        })
        .collect()
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> DqdError {
    DqdError::Serialization(e.to_string())
}

fn json_err(e: serde_json::Error) -> DqdError {
    DqdError::Serialization(e.to_string())
}

pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    if traj.is_empty() {
        return Err(DqdError::EmptyTrajectory);
    }
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(TRAJECTORY_COLUMNS).map_err(csv_err)?;
    for row in trajectory_rows(traj) {
        let mut rec: Vec<String> = row.fields().iter().map(|&x| fmt_f64(x)).collect();
        rec.push(row.branch.as_str().to_string());
        wr.write_record(&rec).map_err(csv_err)?;
    }
    wr.flush()
        .map_err(|e| DqdError::Serialization(e.to_string()))
}

pub fn write_trajectory_json<W: Write>(traj: &Trajectory, w: W) -> Result<()> {
    if traj.is_empty() {
        return Err(DqdError::EmptyTrajectory);
    }
    serde_json::to_writer_pretty(w, &trajectory_rows(traj)).map_err(json_err)
}

pub fn emit_trajectory(traj: &Trajectory, format: OutputFormat) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        OutputFormat::Csv => write_trajectory_csv(traj, &mut buf)?,
        OutputFormat::Json => write_trajectory_json(traj, &mut buf)?,
    }
    Ok(buf)
}

/// Fail with the name of the first expected column absent from `headers`.
pub fn check_columns(headers: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    for col in expected {
        if !headers.iter().any(|h| h == *col) {
            return Err(DqdError::Serialization(format!("missing column {col:?}")));
        }
    }
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rd = csv::Reader::from_reader(r);
    check_columns(rd.headers().map_err(csv_err)?, &TRAJECTORY_COLUMNS)?;
    rd.deserialize().map(|row| row.map_err(csv_err)).collect()
}

pub fn read_trajectory_json<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    serde_json::from_reader(r).map_err(json_err)
}

pub fn write_sweep_csv<W: Write>(result: &SweepResult, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SWEEP_COLUMNS).map_err(csv_err)?;
    for (i, x1) in result.axis1.values.iter().enumerate() {
        for (j, x2) in result.axis2.values.iter().enumerate() {
            let below = result.below_floor.as_ref().is_some_and(|b| b[i][j]);
            wr.write_record([
                i.to_string(),
                j.to_string(),
                fmt_f64(*x1),
                fmt_f64(*x2),
                fmt_f64(result.grid[i][j]),
                result.mask[i][j].to_string(),
                below.to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    wr.flush()
        .map_err(|e| DqdError::Serialization(e.to_string()))
}

pub fn write_sweep_json<W: Write>(result: &SweepResult, w: W) -> Result<()> {
    // NaN cells serialize as null
    serde_json::to_writer_pretty(w, result).map_err(json_err)
}

/// Row of an analytic transfer-probability curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticRow {
    pub t_p_ps: f64,
    pub p_analytic: f64,
    pub p_clamped: f64,
    pub p_lz: f64,
    pub phase_i: f64,
}

pub fn write_analytic_csv<W: Write>(rows: &[AnalyticRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(ANALYTIC_COLUMNS).map_err(csv_err)?;
    for r in rows {
        wr.write_record([r.t_p_ps, r.p_analytic, r.p_clamped, r.p_lz, r.phase_i].map(fmt_f64))
            .map_err(csv_err)?;
    }
    wr.flush()
        .map_err(|e| DqdError::Serialization(e.to_string()))
}

pub fn write_analytic_json<W: Write>(rows: &[AnalyticRow], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, rows).map_err(json_err)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochRow {
    pub t_ps: f64,
    pub bloch_x: f64,
    pub bloch_y: f64,
    pub bloch_z: f64,
    pub bloch_norm: f64,
}

pub fn bloch_rows(traj: &Trajectory) -> Vec<BlochRow> {
    traj.times
        .iter()
        .zip(&traj.bloch)
        .map(|(&t, &[x, y, z])| BlochRow {
            t_ps: t,
            bloch_x: x,
            bloch_y: y,
            bloch_z: z,
            bloch_norm: (x * x + y * y + z * z).sqrt(),
        })
        .collect()
}

pub fn write_bloch_csv<W: Write>(rows: &[BlochRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(BLOCH_COLUMNS).map_err(csv_err)?;
    for r in rows {
        wr.write_record([r.t_ps, r.bloch_x, r.bloch_y, r.bloch_z, r.bloch_norm].map(fmt_f64))
            .map_err(csv_err)?;
    }
    wr.flush()
        .map_err(|e| DqdError::Serialization(e.to_string()))
}

pub fn write_bloch_json<W: Write>(rows: &[BlochRow], w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, rows).map_err(json_err)
}

/// Write `bytes` to `path`, reporting the path on failure.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| DqdError::io(path, e))
}

/// `<out>.meta.json`
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}
