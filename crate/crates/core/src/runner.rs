//! Dispatch from a resolved [`RunConfig`] to the simulation it describes.

use crate::config::{RunConfig, RunMode};
use crate::error::{DqdError, Result};
use crate::lindblad::{evolve, EvolveSettings, HamiltonianMode, ReplayController, SystemParams};
use crate::lyapunov::simulate_lyapunov;
use crate::lzs::{
    landau_zener_prob, simulate_lzs_with_substeps, stuckelberg_phase, transfer_prob_analytic,
    transfer_prob_analytic_clamped,
};
use crate::output::AnalyticRow;
use crate::quantum::DensityMatrix;
use crate::sweep::{run_sweep, SweepResult};
use crate::trajectory::Trajectory;

/// Time-domain run from |R⟩ towards |L⟩ in `lyapunov` or `lzs` mode.
pub fn run_trajectory(cfg: &RunConfig) -> Result<Trajectory> {
    let params = cfg.system_params()?;
    let rho0 = DensityMatrix::ground();
    match cfg.mode {
        RunMode::Lyapunov => simulate_lyapunov(
            &rho0,
            &DensityMatrix::excited(),
            &params,
            &cfg.control_config(),
            cfg.t_end,
        ),
        RunMode::Lzs => {
            simulate_lzs_with_substeps(&rho0, &params, &cfg.pulse()?, cfg.hold_dt, cfg.substeps)
        }
        other => Err(DqdError::invalid(
            "mode",
            format!("{other:?} does not produce a trajectory"),
        )),
    }
}

/// Re-run the control waveform recorded in `traj` open-loop with all
/// dissipation switched off. A pure start then stays on the Bloch sphere.
pub fn replay_closed(traj: &Trajectory, cfg: &RunConfig) -> Result<Trajectory> {
    let end = traj
        .times
        .last()
        .copied()
        .ok_or(DqdError::EmptyTrajectory)?;
    let hmode = match cfg.mode {
        RunMode::Lzs => HamiltonianMode::Lzs,
        _ => HamiltonianMode::Lyapunov,
    };
    let params = SystemParams::closed(cfg.eps0, cfg.delta).with_hbar(cfg.hbar)?;
    let settings = EvolveSettings::new(end, traj.hold_dt, hmode)
        .with_substeps(cfg.substeps)
        .with_target(traj.target);
    let mut ctl = ReplayController::from_trajectory(traj);
    evolve(&traj.states[0], &mut ctl, &settings, &params)
}

/// Analytic transfer-probability curve over the configured `t_p` grid.
pub fn run_analytic(cfg: &RunConfig) -> Result<Vec<AnalyticRow>> {
    let a = cfg
        .amplitude_a
        .ok_or_else(|| DqdError::invalid("amplitude_a", "required key is missing"))?;
    let n = cfg.t_p_steps;
    Ok((0..n)
        .map(|i| {
            let t_p = cfg.t_p_min + (cfg.t_p_max - cfg.t_p_min) * (i as f64 / (n - 1) as f64);
            // single cycle: v = 2A / t_p
            let v = 2.0 * a / t_p;
            AnalyticRow {
                t_p_ps: t_p,
                p_analytic: transfer_prob_analytic(a, cfg.eps0, cfg.delta, t_p, cfg.hbar),
                p_clamped: transfer_prob_analytic_clamped(a, cfg.eps0, cfg.delta, t_p, cfg.hbar),
                p_lz: landau_zener_prob(cfg.delta, v, cfg.hbar),
                phase_i: stuckelberg_phase(a, cfg.eps0, v, cfg.hbar),
            }
        })
        .collect())
}

pub fn run_sweep_config(cfg: &RunConfig) -> Result<SweepResult> {
    run_sweep(&cfg.sweep_spec()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    #[test]
    fn closed_replay_of_lyapunov_run_stays_pure() {
        let cfg = RawConfig::from_json(r#"{"delta": 5, "t_end": 40, "t2": 300}"#)
            .unwrap()
            .resolve()
            .unwrap();
        let traj = run_trajectory(&cfg).unwrap();
        let ideal = replay_closed(&traj, &cfg).unwrap();
        assert_eq!(ideal.len(), traj.len());
        assert_eq!(ideal.controls, traj.controls);
        for rho in &ideal.states {
            assert!((rho.purity() - 1.0).abs() < 1e-9);
        }
        assert!(traj.states.last().unwrap().purity() < 0.999);
    }

    #[test]
    fn analytic_grid_endpoints() {
        let cfg = RawConfig::from_json(
            r#"{"delta": 5, "mode": "analytic-lzs", "amplitude_a": 200, "t_p_min": 10, "t_p_max": 20, "t_p_steps": 3}"#,
        )
        .unwrap()
        .resolve()
        .unwrap();
        let rows = run_analytic(&cfg).unwrap();
        let ts: Vec<f64> = rows.iter().map(|r| r.t_p_ps).collect();
        assert_eq!(ts, vec![10.0, 15.0, 20.0]);
        assert!(rows.iter().all(|r| r.p_analytic <= 0.5 + 1e-12));
    }
}
