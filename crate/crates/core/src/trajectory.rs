use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::{bures_fidelity, transfer_probability};
use crate::error::DqdError;
use crate::lindblad::{ControlOutput, ControlSample};
use crate::lyapunov::{lyapunov_v, LyapunovDiagnostics};
use crate::quantum::{bloch_coords, DensityMatrix};

/// Which part of the control law produced a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlBranch {
    /// Not a feedback controller (pulse, replay, or constant).
    OpenLoop,
    D1Cancels,
    D2Cancels,
    Deadpoint,
}

impl ControlBranch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::OpenLoop => "open_loop",
            Self::D1Cancels => "d1_cancels",
            Self::D2Cancels => "d2_cancels",
            Self::Deadpoint => "deadpoint",
        }
    }
}

impl fmt::Display for ControlBranch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ControlBranch {
    type Err = DqdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "open_loop" => Ok(Self::OpenLoop),
            "d1_cancels" => Ok(Self::D1Cancels),
            "d2_cancels" => Ok(Self::D2Cancels),
            "deadpoint" => Ok(Self::Deadpoint),
            other => Err(DqdError::Serialization(format!("unknown branch {other:?}"))),
        }
    }
}

/// Time-indexed record of a run, one entry per hold boundary.
///
/// `v_values` and `fidelity` are measured against `target`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub hold_dt: f64,
    pub target: DensityMatrix,
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub controls: Vec<ControlSample>,
    pub v_values: Vec<f64>,
    pub p_l: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub bloch: Vec<[f64; 3]>,
    pub branches: Vec<ControlBranch>,
    pub clamped: Vec<bool>,
    pub diagnostics: Vec<Option<LyapunovDiagnostics>>,
}

impl Trajectory {
    pub fn with_capacity(n: usize, hold_dt: f64, target: DensityMatrix) -> Self {
        Self {
            hold_dt,
            target,
            times: Vec::with_capacity(n),
            states: Vec::with_capacity(n),
            controls: Vec::with_capacity(n),
            v_values: Vec::with_capacity(n),
            p_l: Vec::with_capacity(n),
            fidelity: Vec::with_capacity(n),
            bloch: Vec::with_capacity(n),
            branches: Vec::with_capacity(n),
            clamped: Vec::with_capacity(n),
            diagnostics: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: f64, rho: DensityMatrix, out: ControlOutput) {
        self.times.push(t);
        self.v_values.push(lyapunov_v(&rho, &self.target));
        self.p_l.push(transfer_probability(&rho));
        // both operands are validated density matrices
        self.fidelity
            .push(bures_fidelity(&rho, &self.target).unwrap_or(f64::NAN));
        self.bloch.push(bloch_coords(&rho));
        self.states.push(rho);
        self.controls.push(out.sample);
        self.branches.push(out.branch);
        self.clamped.push(out.clamped);
        self.diagnostics.push(out.diagnostics);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    /// Index of the record at time `t` (within half a hold interval).
    pub fn index_at(&self, t: f64) -> Option<usize> {
        if self.is_empty() || t < -0.5 * self.hold_dt {
            return None;
        }
        let idx = (t / self.hold_dt).round() as usize;
        (idx < self.len()).then_some(idx)
    }
}
