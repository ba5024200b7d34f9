//! Two-dimensional parameter sweeps over independent simulations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::summarize;
use crate::error::{DqdError, Result};
use crate::lindblad::SystemParams;
use crate::lyapunov::{simulate_lyapunov, ControlConfig};
use crate::lzs::{simulate_lzs_with_substeps, LzsPulseParams};
use crate::quantum::DensityMatrix;
use crate::trajectory::Trajectory;

/// Parameter substituted along a sweep axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// g₁ = g₂ = G.
    Gain,
    G1,
    G2,
    Eps0,
    Delta,
    /// T₁ in ps.
    T1,
    /// T₂ in ps.
    T2,
    /// Run length t_p in ps; for LZS runs this is the pulse duration 2·t_r.
    TEnd,
    AmplitudeA,
    #[serde(alias = "t_r")]
    RiseTime,
    HoldDt,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Gain => "gain",
            Self::G1 => "g1",
            Self::G2 => "g2",
            Self::Eps0 => "eps0",
            Self::Delta => "delta",
            Self::T1 => "t1",
            Self::T2 => "t2",
            Self::TEnd => "t_end",
            Self::AmplitudeA => "amplitude_a",
            Self::RiseTime => "t_r",
            Self::HoldDt => "hold_dt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepAxis {
    pub fn new(param: SweepParam, min: f64, max: f64, steps: usize) -> Self {
        Self {
            param,
            min,
            max,
            steps,
        }
    }

    fn validate(&self, which: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(DqdError::invalid(format!("{which}.steps"), "must be >= 2"));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.min < self.max) {
            return Err(DqdError::invalid(
                format!("{which}.min/max"),
                "need finite min < max",
            ));
        }
        Ok(())
    }

    /// Grid coordinate `i`. Refining from `n` to `2n − 1` steps reproduces
    /// the coarse coordinates bit-for-bit.
    pub fn value(&self, i: usize) -> f64 {
        let frac = i as f64 / (self.steps - 1) as f64;
        self.min + (self.max - self.min) * frac
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.steps).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SweepMetric {
    MaxPL,
    /// P_L at time `t` (ps); masked if `t` is past the end of the run.
    PLAtT {
        t: f64,
    },
    MaxFidelity,
    FinalPL,
    FinalFidelity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Lyapunov,
    Lzs,
}

/// Configuration shared by every cell before axis substitution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepBase {
    pub mode: SweepMode,
    pub params: SystemParams,
    pub control: ControlConfig,
    /// Used in LZS mode; its duration sets the run length.
    pub pulse: LzsPulseParams,
    /// Run length for Lyapunov mode (ps).
    pub t_end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis1: SweepAxis,
    pub axis2: SweepAxis,
    pub metric: SweepMetric,
    pub base: SweepBase,
    /// Cells below this value are flagged in `below_floor` (display only).
    #[serde(default)]
    pub p_l_floor: Option<f64>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis1.validate("axis1")?;
        self.axis2.validate("axis2")?;
        if self.axis1.param == self.axis2.param {
            return Err(DqdError::invalid(
                "axis2.param",
                "must differ from axis1.param",
            ));
        }
        if let SweepMetric::PLAtT { t } = self.metric {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(DqdError::invalid("metric.t", "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisCoords {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis1: AxisCoords,
    pub axis2: AxisCoords,
    pub metric: SweepMetric,
    /// `grid[i][j]` for axis1 index `i`, axis2 index `j`; NaN where masked.
    pub grid: Vec<Vec<f64>>,
    /// True where the cell's simulation or metric failed.
    pub mask: Vec<Vec<bool>>,
    /// Present when `p_l_floor` was set.
    pub below_floor: Option<Vec<Vec<bool>>>,
}

impl SweepResult {
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        (!self.mask[i][j]).then(|| self.grid[i][j])
    }

    pub fn unmasked(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.grid.iter().enumerate().flat_map(move |(i, row)| {
            row.iter()
                .enumerate()
                .filter(move |(j, _)| !self.mask[i][*j])
                .map(move |(j, &v)| (i, j, v))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

fn apply(base: &mut SweepBase, param: SweepParam, x: f64) -> Result<()> {
    match param {
        SweepParam::Gain => {
            base.control.g1 = x;
            base.control.g2 = x;
        }
        SweepParam::G1 => base.control.g1 = x,
        SweepParam::G2 => base.control.g2 = x,
        SweepParam::Eps0 => base.params.eps0 = x,
        SweepParam::Delta => base.params.delta = x,
        SweepParam::T1 => {
            if !(x > 0.0) {
                return Err(DqdError::invalid("T1", "must be > 0"));
            }
            base.params.gamma1 = 1.0 / x;
        }
        SweepParam::T2 => {
            if !(x > 0.0) {
                return Err(DqdError::invalid("T2", "must be > 0"));
            }
            base.params.gamma2 = 1.0 / x;
        }
        SweepParam::TEnd => {
            base.t_end = x;
            base.pulse.t_r = 0.5 * x / base.pulse.cycles.max(1) as f64;
        }
        SweepParam::AmplitudeA => base.pulse.amplitude_a = x,
        SweepParam::RiseTime => base.pulse.t_r = x,
        SweepParam::HoldDt => base.control.hold_dt = x,
    }
    Ok(())
}

/// Run the simulation a cell describes.
pub fn simulate_base(base: &SweepBase) -> Result<Trajectory> {
    base.params.validate()?;
    match base.mode {
        SweepMode::Lyapunov => simulate_lyapunov(
            &DensityMatrix::ground(),
            &DensityMatrix::excited(),
            &base.params,
            &base.control,
            base.t_end,
        ),
        SweepMode::Lzs => simulate_lzs_with_substeps(
            &DensityMatrix::ground(),
            &base.params,
            &base.pulse,
            base.control.hold_dt,
            base.control.substeps,
        ),
    }
}

pub fn evaluate_metric(traj: &Trajectory, metric: SweepMetric) -> Result<f64> {
    let last = |xs: &[f64]| xs.last().copied().ok_or(DqdError::EmptyTrajectory);
    match metric {
        SweepMetric::MaxPL => Ok(summarize(traj)?.max_p_l),
        SweepMetric::MaxFidelity => Ok(summarize(traj)?.max_fidelity),
        SweepMetric::FinalPL => last(&traj.p_l),
        SweepMetric::FinalFidelity => last(&traj.fidelity),
        SweepMetric::PLAtT { t } => {
            let end = traj
                .times
                .last()
                .copied()
                .ok_or(DqdError::EmptyTrajectory)?;
            if t > end + 1e-9 {
                return Err(DqdError::OutsideSupport { t, end });
            }
            let idx = traj
                .index_at(t)
                .ok_or(DqdError::OutsideSupport { t, end })?;
            Ok(traj.p_l[idx])
        }
    }
}

fn run_cell(spec: &SweepSpec, x1: f64, x2: f64) -> Result<f64> {
    let mut base = spec.base;
    apply(&mut base, spec.axis1.param, x1)?;
    apply(&mut base, spec.axis2.param, x2)?;
    let traj = simulate_base(&base)?;
    let v = evaluate_metric(&traj, spec.metric)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DqdError::Domain("metric is not finite".into()))
    }
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, Execution::Parallel)
}

pub fn run_sweep_with(spec: &SweepSpec, exec: Execution) -> Result<SweepResult> {
    spec.validate()?;
    let (n1, n2) = (spec.axis1.steps, spec.axis2.steps);
    let xs1 = spec.axis1.values();
    let xs2 = spec.axis2.values();
    let cell = |k: usize| run_cell(spec, xs1[k / n2], xs2[k % n2]).ok();
    let cells: Vec<Option<f64>> = match exec {
        Execution::Parallel => (0..n1 * n2).into_par_iter().map(cell).collect(),
        Execution::Serial => (0..n1 * n2).map(cell).collect(),
    };

    let mut grid = vec![vec![f64::NAN; n2]; n1];
    let mut mask = vec![vec![true; n2]; n1];
    for (k, v) in cells.into_iter().enumerate() {
        if let Some(v) = v {
            grid[k / n2][k % n2] = v;
            mask[k / n2][k % n2] = false;
        }
    }
    let below_floor = spec.p_l_floor.map(|floor| {
        grid.iter()
            .zip(&mask)
            .map(|(row, mrow)| {
                row.iter()
                    .zip(mrow)
                    .map(|(&v, &m)| !m && v < floor)
                    .collect()
            })
            .collect()
    });
    Ok(SweepResult {
        axis1: AxisCoords {
            name: spec.axis1.param.name().to_string(),
            values: xs1,
        },
        axis2: AxisCoords {
            name: spec.axis2.param.name().to_string(),
            values: xs2,
        },
        metric: spec.metric,
        grid,
        mask,
        below_floor,
    })
}

/// Coordinates and value of the largest unmasked cell. Ties go to the
/// smallest axis1 index, then the smallest axis2 index.
pub fn best_point(result: &SweepResult) -> Result<(f64, f64, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for (i, j, v) in result.unmasked() {
        if best.is_none_or(|(_, _, b)| v > b) {
            best = Some((i, j, v));
        }
    }
    let (i, j, v) = best.ok_or(DqdError::FullyMasked)?;
    Ok((result.axis1.values[i], result.axis2.values[j], v))
}
