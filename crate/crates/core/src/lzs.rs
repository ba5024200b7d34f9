//! Landau–Zener–Stückelberg transfer with a triangular detuning pulse.
//!
//! One cycle sweeps the detuning from ε₀ down to ε₀ − A over `t_r` and back
//! over the next `t_r`, crossing the anti-crossing twice when A > ε₀.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DqdError, Result};
use crate::lindblad::{
    evolve, ControlOutput, ControlSample, Controller, EvolveSettings, HamiltonianMode, SystemParams,
};
use crate::quantum::DensityMatrix;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LzsPulseParams {
    /// Pulse amplitude A (μeV).
    pub amplitude_a: f64,
    /// Rise time t_r (ps); one cycle lasts 2·t_r.
    pub t_r: f64,
    pub cycles: u32,
}

impl LzsPulseParams {
    pub fn new(amplitude_a: f64, t_r: f64) -> Result<Self> {
        let p = Self {
            amplitude_a,
            t_r,
            cycles: 1,
        };
        p.validate()?;
        Ok(p)
    }

    /// Single cycle with total duration `t_p = 2·t_r`.
    pub fn from_duration(amplitude_a: f64, t_p: f64) -> Result<Self> {
        Self::new(amplitude_a, 0.5 * t_p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude_a > 0.0 && self.amplitude_a.is_finite()) {
            return Err(DqdError::invalid("amplitude_a", "must be finite and > 0"));
        }
        if !(self.t_r > 0.0 && self.t_r.is_finite()) {
            return Err(DqdError::invalid("t_r", "must be finite and > 0"));
        }
        if self.cycles == 0 {
            return Err(DqdError::invalid("cycles", "must be >= 1"));
        }
        Ok(())
    }

    /// Sweep velocity v = A/t_r (μeV/ps).
    pub fn velocity(&self) -> f64 {
        self.amplitude_a / self.t_r
    }

    pub fn period(&self) -> f64 {
        2.0 * self.t_r
    }

    pub fn duration(&self) -> f64 {
        self.cycles as f64 * self.period()
    }
}

/// ε(t) on `[0, cycles·2t_r]`; continuous, with ε(0) = ε(2t_r) = ε₀.
pub fn detuning_profile(t: f64, eps0: f64, pulse: &LzsPulseParams) -> Result<f64> {
    let end = pulse.duration();
    let slack = 1e-12 * end;
    if !(t >= -slack && t <= end + slack) {
        return Err(DqdError::OutsideSupport { t, end });
    }
    let t = t.clamp(0.0, end);
    let period = pulse.period();
    let k = (t / period).floor().min(pulse.cycles as f64 - 1.0);
    let tau = t - k * period;
    let v = pulse.velocity();
    Ok(if tau <= pulse.t_r {
        eps0 - v * tau
    } else {
        eps0 - pulse.amplitude_a + v * (tau - pulse.t_r)
    })
}

/// P_LZ = exp(−2πΔ²/(vħ)). Returns NaN for non-positive `v`.
pub fn landau_zener_prob(delta: f64, v: f64, hbar: f64) -> f64 {
    if !(v > 0.0) {
        return f64::NAN;
    }
    (-2.0 * PI * delta * delta / (v * hbar)).exp()
}

/// φ_i = 2(A − ε₀)²/(vħ). Returns NaN for non-positive `v`.
pub fn stuckelberg_phase(amplitude_a: f64, eps0: f64, v: f64, hbar: f64) -> f64 {
    if !(v > 0.0) {
        return f64::NAN;
    }
    let x = amplitude_a - eps0;
    2.0 * x * x / (v * hbar)
}

/// Closed-form single-cycle transfer probability as a function of pulse
/// duration `t_p = 2t_r`:
///
///   P = 2x(1 − x)·cos((A − ε₀)²t_p/(Aħ)),  x = exp(−πΔ²t_p/(Aħ))
///
/// The expression is bounded by ½ and can be negative; see
/// [`transfer_prob_analytic_clamped`].
pub fn transfer_prob_analytic(amplitude_a: f64, eps0: f64, delta: f64, t_p: f64, hbar: f64) -> f64 {
    let x = (-PI * delta * delta * t_p / (amplitude_a * hbar)).exp();
    let d = amplitude_a - eps0;
    2.0 * x * (1.0 - x) * (d * d * t_p / (amplitude_a * hbar)).cos()
}

pub fn transfer_prob_analytic_clamped(
    amplitude_a: f64,
    eps0: f64,
    delta: f64,
    t_p: f64,
    hbar: f64,
) -> f64 {
    transfer_prob_analytic(amplitude_a, eps0, delta, t_p, hbar).clamp(0.0, 1.0)
}

/// Pulse duration at which φ_i = 2Nπ for a single cycle of amplitude A.
pub fn constructive_duration(amplitude_a: f64, eps0: f64, n: u32, hbar: f64) -> f64 {
    let d = amplitude_a - eps0;
    2.0 * PI * n as f64 * amplitude_a * hbar / (d * d)
}

/// Open-loop controller emitting f(t) = ε(t) − ε₀ on the pulse support and
/// zero afterwards.
#[derive(Debug, Clone, Copy)]
pub struct LzsController {
    pub eps0: f64,
    pub pulse: LzsPulseParams,
}

impl Controller for LzsController {
    fn control(&mut self, t: f64, _rho: &DensityMatrix) -> Result<ControlOutput> {
        let f = match detuning_profile(t, self.eps0, &self.pulse) {
            Ok(eps) => eps - self.eps0,
            Err(DqdError::OutsideSupport { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        Ok(ControlOutput::open_loop(ControlSample::new(0.0, f)))
    }
}

pub fn simulate_lzs(
    rho0: &DensityMatrix,
    params: &SystemParams,
    pulse: &LzsPulseParams,
    hold_dt: f64,
) -> Result<Trajectory> {
    simulate_lzs_with_substeps(rho0, params, pulse, hold_dt, 10)
}

pub fn simulate_lzs_with_substeps(
    rho0: &DensityMatrix,
    params: &SystemParams,
    pulse: &LzsPulseParams,
    hold_dt: f64,
    substeps: usize,
) -> Result<Trajectory> {
    pulse.validate()?;
    let mut ctl = LzsController {
        eps0: params.eps0,
        pulse: *pulse,
    };
    let settings = EvolveSettings::new(pulse.duration(), hold_dt, HamiltonianMode::Lzs)
        .with_substeps(substeps);
    evolve(rho0, &mut ctl, &settings, params)
}
