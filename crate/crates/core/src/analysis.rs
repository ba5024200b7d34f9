//! State and trajectory metrics.

use serde::{Deserialize, Serialize};

use crate::error::{DqdError, Result};
use crate::quantum::{matrix_sqrt_psd, DensityMatrix};
use crate::trajectory::Trajectory;

/// Bures fidelity `F = Tr √(√ρ_f ρ_s √ρ_f)`, clamped into [0, 1].
pub fn bures_fidelity(rho_s: &DensityMatrix, rho_f: &DensityMatrix) -> Result<f64> {
    let sf = matrix_sqrt_psd(rho_f.mat())?;
    let inner = (sf * *rho_s.mat() * sf).hermitian_part();
    let f = matrix_sqrt_psd(&inner)?.trace().re;
    Ok(f.clamp(0.0, 1.0))
}

/// Population of |L⟩.
pub fn transfer_probability(rho: &DensityMatrix) -> f64 {
    rho.mat().get(1, 1).re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub max_p_l: f64,
    /// ps; earliest time on ties.
    pub t_at_max: f64,
    pub max_fidelity: f64,
    /// Fidelity at `t_at_max`, which can differ from `max_fidelity`.
    pub fidelity_at_max: f64,
    pub final_v: f64,
    /// Fraction of applied hold intervals with saturation active.
    pub clamped_fraction: f64,
}

fn first_argmax(xs: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some(b) if x <= xs[b] => {}
            _ if x.is_nan() => {}
            _ => best = Some(i),
        }
    }
    best
}

pub fn summarize(traj: &Trajectory) -> Result<RunSummary> {
    if traj.is_empty() {
        return Err(DqdError::EmptyTrajectory);
    }
    let i = first_argmax(&traj.p_l).ok_or(DqdError::EmptyTrajectory)?;
    let max_fidelity = traj
        .fidelity
        .iter()
        .copied()
        .filter(|f| !f.is_nan())
        .fold(0.0, f64::max);
    // the last record's control is never applied
    let applied = &traj.clamped[..traj.len() - 1];
    let clamped_fraction = if applied.is_empty() {
        0.0
    } else {
        applied.iter().filter(|&&c| c).count() as f64 / applied.len() as f64
    };
    Ok(RunSummary {
        max_p_l: traj.p_l[i],
        t_at_max: traj.times[i],
        max_fidelity,
        fidelity_at_max: traj.fidelity[i],
        final_v: *traj.v_values.last().expect("non-empty"),
        clamped_fraction,
    })
}
