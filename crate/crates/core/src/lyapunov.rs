//! Lyapunov feedback control for state transfer.
//!
//! The distance function is `V = ½ tr((ρ − ρ_f)²)`. Along the controlled
//! dynamics with `H = H₀ + f₁σ_x + f₂σ_y` its derivative splits as
//!
//!   V̇ = f₁·D₁ + f₂·D₂ + C
//!   D_m = tr(−(i/ħ)[H_m, ρ](ρ − ρ_f))
//!   C   = tr((−(i/ħ)[H₀, ρ] + L(ρ))(ρ − ρ_f))
//!
//! The control law uses one field to cancel `C` and the other to descend:
//!
//! * `|D₁| > θ`: `f₁ = −C/D₁`, `f₂ = −g₂·D₂`, so `V̇ = −g₂·D₂²`
//! * `|D₁| ≤ θ < |D₂|`: `f₁ = −g₁·D₁`, `f₂ = −C/D₂`, so `V̇ = −g₁·D₁²`
//! * both `≤ θ` (dead point): zero if `V ≤ v_tolerance`, otherwise a small
//!   σ_y kick to create coherence, since diagonal states make both `D_m`
//!   vanish identically.
//!
//! Outputs are clamped to `±f_max` after the law is evaluated.
//!
//! Gains are dimensionless multiples of `gain_unit` (μeV²·ps). The default
//! unit is ħ²/(1 ps), so that `f₂ = −g₂·ħ·(ħD₂)` with `ħD₂` the dimensionless
//! trace. With this unit `g = 0.22` and a 1 ps hold reach ~98.7 % transfer at
//! ~72 ps from ε₀ = 90 μeV.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DqdError, Result};
use crate::lindblad::{
    dissipator, drift_hamiltonian, evolve, ControlOutput, ControlSample, Controller,
    EvolveSettings, HamiltonianMode, SystemParams,
};
use crate::quantum::{commutator, pauli, ComplexMat2, DensityMatrix, PauliAxis};
use crate::trajectory::{ControlBranch, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub g1: f64,
    pub g2: f64,
    /// Switching threshold on |D_m|, in the units of D (μeV⁻¹·ps⁻¹).
    pub theta: f64,
    /// Saturation cap on each field (μeV).
    pub f_max: f64,
    /// Control update resolution (ps).
    pub hold_dt: f64,
    /// RK4 steps per hold interval.
    pub substeps: usize,
    /// σ_y amplitude emitted at dead points (μeV).
    pub deadpoint_kick: f64,
    /// V at or below which a dead point counts as converged.
    pub v_tolerance: f64,
    /// μeV²·ps per unit gain; `None` means ħ²/(1 ps).
    pub gain_unit: Option<f64>,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            g1: 0.22,
            g2: 0.22,
            theta: 5e-6,
            f_max: 800.0,
            hold_dt: 1.0,
            substeps: 10,
            deadpoint_kick: 1.0,
            v_tolerance: 1e-4,
            gain_unit: None,
        }
    }
}

impl ControlConfig {
    pub fn with_gain(mut self, g: f64) -> Self {
        self.g1 = g;
        self.g2 = g;
        self
    }

    pub fn with_hold(mut self, hold_dt: f64) -> Self {
        self.hold_dt = hold_dt;
        self
    }

    pub fn effective_gain_unit(&self, hbar: f64) -> f64 {
        self.gain_unit.unwrap_or(hbar * hbar)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(DqdError::invalid(name, "must be finite and > 0"))
            }
        };
        positive("g1", self.g1)?;
        positive("g2", self.g2)?;
        positive("theta", self.theta)?;
        positive("f_max", self.f_max)?;
        positive("hold_dt", self.hold_dt)?;
        if let Some(u) = self.gain_unit {
            positive("gain_unit", u)?;
        }
        if self.substeps == 0 {
            return Err(DqdError::invalid("substeps", "must be >= 1"));
        }
        if !self.deadpoint_kick.is_finite() {
            return Err(DqdError::invalid("deadpoint_kick", "must be finite"));
        }
        if !(self.v_tolerance >= 0.0 && self.v_tolerance.is_finite()) {
            return Err(DqdError::invalid("v_tolerance", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Terms of the V̇ decomposition at one instant, plus the branch taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovDiagnostics {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
    pub c: f64,
    pub branch: ControlBranch,
    /// Law output before saturation.
    pub unclamped: ControlSample,
    pub clamped: bool,
}

impl LyapunovDiagnostics {
    /// `f₁D₁ + f₂D₂ + C` for the given sample.
    pub fn vdot(&self, sample: ControlSample) -> f64 {
        sample.f1 * self.d1 + sample.f2 * self.d2 + self.c
    }
}

/// Real part of a trace that should be real for Hermitian inputs.
fn real_trace(m: &ComplexMat2) -> f64 {
    let t = m.trace();
    debug_assert!(
        t.im.abs() <= 1e-12 * (1.0 + t.re.abs()) || t.im.abs() <= 1e-9,
        "trace has imaginary residue {}",
        t.im
    );
    t.re
}

pub fn lyapunov_v(rho: &DensityMatrix, rho_f: &DensityMatrix) -> f64 {
    let d = *rho.mat() - *rho_f.mat();
    (0.5 * real_trace(&(d * d))).max(0.0)
}

fn minus_i_over_hbar(hbar: f64) -> Complex64 {
    Complex64::new(0.0, -1.0 / hbar)
}

pub fn control_direction_d(
    rho: &DensityMatrix,
    rho_f: &DensityMatrix,
    h_m: &ComplexMat2,
    hbar: f64,
) -> f64 {
    let gen = commutator(h_m, rho.mat()).scale(minus_i_over_hbar(hbar));
    real_trace(&(gen * (*rho.mat() - *rho_f.mat())))
}

pub fn drift_term_c(
    rho: &DensityMatrix,
    rho_f: &DensityMatrix,
    h0: &ComplexMat2,
    params: &SystemParams,
) -> f64 {
    let gen = commutator(h0, rho.mat()).scale(minus_i_over_hbar(params.hbar()))
        + dissipator(rho.mat(), params);
    real_trace(&(gen * (*rho.mat() - *rho_f.mat())))
}

/// Evaluate the switched control law at state `rho`.
pub fn control_law(
    rho: &DensityMatrix,
    rho_f: &DensityMatrix,
    params: &SystemParams,
    cfg: &ControlConfig,
) -> (ControlSample, LyapunovDiagnostics) {
    let hbar = params.hbar();
    let v = lyapunov_v(rho, rho_f);
    let d1 = control_direction_d(rho, rho_f, &pauli(PauliAxis::X), hbar);
    let d2 = control_direction_d(rho, rho_f, &pauli(PauliAxis::Y), hbar);
    let c = drift_term_c(rho, rho_f, &drift_hamiltonian(params), params);
    let unit = cfg.effective_gain_unit(hbar);

    let (branch, raw) = if d1.abs() > cfg.theta {
        (
            ControlBranch::D1Cancels,
            ControlSample::new(-c / d1, -cfg.g2 * unit * d2),
        )
    } else if d2.abs() > cfg.theta {
        (
            ControlBranch::D2Cancels,
            ControlSample::new(-cfg.g1 * unit * d1, -c / d2),
        )
    } else if v <= cfg.v_tolerance {
        (ControlBranch::Deadpoint, ControlSample::ZERO)
    } else {
        (
            ControlBranch::Deadpoint,
            ControlSample::new(0.0, cfg.deadpoint_kick),
        )
    };

    let sample = ControlSample::new(
        raw.f1.clamp(-cfg.f_max, cfg.f_max),
        raw.f2.clamp(-cfg.f_max, cfg.f_max),
    );
    let clamped = sample != raw;
    (
        sample,
        LyapunovDiagnostics {
            v,
            d1,
            d2,
            c,
            branch,
            unclamped: raw,
            clamped,
        },
    )
}

/// Closed-loop controller: recomputes the law from the simulated state at
/// every hold boundary.
#[derive(Debug, Clone)]
pub struct LyapunovController {
    pub target: DensityMatrix,
    pub params: SystemParams,
    pub cfg: ControlConfig,
}

impl LyapunovController {
    pub fn new(target: DensityMatrix, params: SystemParams, cfg: ControlConfig) -> Self {
        Self {
            target,
            params,
            cfg,
        }
    }
}

impl Controller for LyapunovController {
    fn control(&mut self, _t: f64, rho: &DensityMatrix) -> Result<ControlOutput> {
        let (sample, diag) = control_law(rho, &self.target, &self.params, &self.cfg);
        Ok(ControlOutput {
            sample,
            branch: diag.branch,
            clamped: diag.clamped,
            diagnostics: Some(diag),
        })
    }
}

pub fn simulate_lyapunov(
    rho0: &DensityMatrix,
    rho_f: &DensityMatrix,
    params: &SystemParams,
    cfg: &ControlConfig,
    t_end: f64,
) -> Result<Trajectory> {
    cfg.validate()?;
    let mut ctl = LyapunovController::new(*rho_f, *params, *cfg);
    let settings = EvolveSettings::new(t_end, cfg.hold_dt, HamiltonianMode::Lyapunov)
        .with_substeps(cfg.substeps)
        .with_target(*rho_f);
    evolve(rho0, &mut ctl, &settings, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::HBAR_UEV_PS;

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn v_examples() {
        let l = DensityMatrix::excited();
        assert_eq!(lyapunov_v(&l, &l), 0.0);
        assert!((lyapunov_v(&DensityMatrix::ground(), &l) - 1.0).abs() < 1e-15);
        assert!((lyapunov_v(&DensityMatrix::maximally_mixed(), &l) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn d_examples() {
        let l = DensityMatrix::excited();
        let h = HBAR_UEV_PS;
        for rho in [
            DensityMatrix::ground(),
            DensityMatrix::maximally_mixed(),
            DensityMatrix::new(ComplexMat2::diag(0.3, 0.7)).unwrap(),
        ] {
            for axis in [PauliAxis::X, PauliAxis::Y] {
                assert_eq!(control_direction_d(&rho, &l, &pauli(axis), h), 0.0);
            }
        }
        assert!(control_direction_d(&plus(), &l, &pauli(PauliAxis::X), h).abs() < 1e-18);
        let d2 = control_direction_d(&plus(), &l, &pauli(PauliAxis::Y), h);
        assert!((d2 + 1.0 / h).abs() < 1e-15);
    }

    #[test]
    fn d_matches_bloch_form() {
        // for target |L⟩: D₁ = y/ħ, D₂ = −x/ħ
        let rho = DensityMatrix::from_bloch(0.3, -0.2, 0.4).unwrap();
        let l = DensityMatrix::excited();
        let h = 2.5;
        let d1 = control_direction_d(&rho, &l, &pauli(PauliAxis::X), h);
        let d2 = control_direction_d(&rho, &l, &pauli(PauliAxis::Y), h);
        assert!((d1 - (-0.2 / h)).abs() < 1e-15);
        assert!((d2 - (-0.3 / h)).abs() < 1e-15);
    }

    #[test]
    fn c_examples() {
        let l = DensityMatrix::excited();
        let r = DensityMatrix::ground();
        let p = SystemParams::closed(90.0, 0.0);
        let h0 = drift_hamiltonian(&p);
        let diag = DensityMatrix::new(ComplexMat2::diag(0.2, 0.8)).unwrap();
        assert_eq!(drift_term_c(&diag, &l, &h0, &p), 0.0);

        let p = SystemParams::new(90.0, 0.0, 3e-3, 1e-3).unwrap();
        assert_eq!(drift_term_c(&l, &l, &h0, &p), 0.0);

        let g1 = 3e-3;
        let p = SystemParams::new(90.0, 0.0, g1, 0.0).unwrap();
        assert!((drift_term_c(&l, &r, &h0, &p) + 2.0 * g1).abs() < 1e-15);
    }

    #[test]
    fn law_converged_state_emits_zero() {
        let l = DensityMatrix::excited();
        let p = SystemParams::new(90.0, 0.0, 2e-4, 2e-4).unwrap();
        let (s, d) = control_law(&l, &l, &p, &ControlConfig::default());
        assert_eq!(s, ControlSample::ZERO);
        assert_eq!(d.branch, ControlBranch::Deadpoint);
        assert_eq!(d.v, 0.0);
    }

    #[test]
    fn law_plus_state_takes_d2_branch() {
        let p = SystemParams::closed(0.0, 0.0);
        let (s, d) = control_law(
            &plus(),
            &DensityMatrix::excited(),
            &p,
            &ControlConfig::default(),
        );
        assert_eq!(d.branch, ControlBranch::D2Cancels);
        assert!(d.d1.abs() < 1e-18);
        assert!((d.d2 + 1.0 / HBAR_UEV_PS).abs() < 1e-15);
        assert_eq!(d.c, 0.0);
        assert!(s.f1.abs() < 1e-9 && s.f2.abs() < 1e-12);
    }

    #[test]
    fn law_dead_point_kicks() {
        let p = SystemParams::closed(90.0, 0.0);
        let cfg = ControlConfig {
            deadpoint_kick: 2.5,
            ..ControlConfig::default()
        };
        let (s, d) = control_law(
            &DensityMatrix::ground(),
            &DensityMatrix::excited(),
            &p,
            &cfg,
        );
        assert_eq!(d.branch, ControlBranch::Deadpoint);
        assert_eq!(s, ControlSample::new(0.0, 2.5));
        assert_eq!(d.v, 1.0);
    }

    #[test]
    fn law_clamps_and_records_it() {
        let p = SystemParams::closed(90.0, 0.0);
        let cfg = ControlConfig {
            f_max: 1e-3,
            ..ControlConfig::default()
        };
        let rho = DensityMatrix::from_bloch(0.5, 0.5, 0.0).unwrap();
        let (s, d) = control_law(&rho, &DensityMatrix::excited(), &p, &cfg);
        assert!(d.clamped);
        assert!(s.f1.abs() <= 1e-3 && s.f2.abs() <= 1e-3);
        assert!(d.unclamped.f2.abs() > 1e-3);
    }

    #[test]
    fn d1_branch_vdot_is_minus_g2_d2_squared() {
        let p = SystemParams::new(90.0, 0.0, 2e-4, 2e-4).unwrap();
        let cfg = ControlConfig::default();
        let rho = DensityMatrix::from_bloch(0.2, 0.3, 0.5).unwrap();
        let (s, d) = control_law(&rho, &DensityMatrix::excited(), &p, &cfg);
        assert_eq!(d.branch, ControlBranch::D1Cancels);
        assert!(!d.clamped);
        let g2 = cfg.g2 * cfg.effective_gain_unit(p.hbar());
        assert!((d.vdot(s) + g2 * d.d2 * d.d2).abs() < 1e-10);
    }

    #[test]
    fn config_validation() {
        assert!(ControlConfig::default().validate().is_ok());
        let bad = ControlConfig {
            theta: 0.0,
            ..ControlConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ControlConfig::default().with_gain(-1.0);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn converged_start_stays_put_then_reengages() {
        let l = DensityMatrix::excited();
        let p = SystemParams::new(90.0, 0.0, 2e-4, 2e-4).unwrap();
        let cfg = ControlConfig::default();
        let traj = simulate_lyapunov(&l, &l, &p, &cfg, 200.0).unwrap();
        assert_eq!(traj.branches[0], ControlBranch::Deadpoint);
        assert_eq!(traj.controls[0], ControlSample::ZERO);
        // relaxation pulls P_L down until V crosses the tolerance
        let first_on = traj
            .controls
            .iter()
            .position(|s| *s != ControlSample::ZERO)
            .expect("controller never re-engaged");
        assert!(traj.v_values[first_on] > cfg.v_tolerance);
        assert!(traj.v_values[first_on - 1] <= cfg.v_tolerance);
        assert!(traj.p_l.iter().all(|&p| p > 0.95));
    }

    #[test]
    fn closed_system_transfer_under_100ps() {
        let p = SystemParams::closed(400.0, 0.0);
        let cfg = ControlConfig::default().with_gain(1.0).with_hold(0.1);
        let traj = simulate_lyapunov(
            &DensityMatrix::ground(),
            &DensityMatrix::excited(),
            &p,
            &cfg,
            100.0,
        )
        .unwrap();
        let max = traj.p_l.iter().copied().fold(0.0, f64::max);
        assert!(max > 0.99, "max P_L {max}");
    }
}
