//! Controlled Lindblad master equation and a fixed-step RK4 integrator with
//! sample-and-hold controls.
//!
//!   dρ/dt = −(i/ħ)[H, ρ] + Γ₁(σ₋ρσ₊ − ½{σ₊σ₋, ρ}) + Γ₂(σ_zρσ_z − ρ)

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DqdError, Result};
use crate::lyapunov::LyapunovDiagnostics;
use crate::quantum::{
    anticommutator, commutator, pauli, ComplexMat2, DensityMatrix, PauliAxis, PhysConstants,
};
use crate::trajectory::{ControlBranch, Trajectory};

/// Eigenvalues below this after a step are treated as integrator blow-up.
pub const BLOWUP_EIGEN_TOL: f64 = 1e-6;

/// Physical configuration of the double-dot qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Initial detuning ε₀ (μeV).
    pub eps0: f64,
    /// Anti-crossing gap Δ (μeV).
    pub delta: f64,
    /// Relaxation rate Γ₁ = 1/T₁ (ps⁻¹).
    pub gamma1: f64,
    /// Dephasing rate Γ₂ = 1/T₂ (ps⁻¹).
    pub gamma2: f64,
    pub constants: PhysConstants,
}

impl SystemParams {
    pub fn new(eps0: f64, delta: f64, gamma1: f64, gamma2: f64) -> Result<Self> {
        let p = Self {
            eps0,
            delta,
            gamma1,
            gamma2,
            constants: PhysConstants::default(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Rates from coherence times in ps. `f64::INFINITY` switches a channel off.
    pub fn from_coherence_times(eps0: f64, delta: f64, t1: f64, t2: f64) -> Result<Self> {
        if !(t1 > 0.0) {
            return Err(DqdError::invalid("T1", "must be > 0"));
        }
        if !(t2 > 0.0) {
            return Err(DqdError::invalid("T2", "must be > 0"));
        }
        Self::new(eps0, delta, 1.0 / t1, 1.0 / t2)
    }

    /// No dissipation.
    pub fn closed(eps0: f64, delta: f64) -> Self {
        Self {
            eps0,
            delta,
            gamma1: 0.0,
            gamma2: 0.0,
            constants: PhysConstants::default(),
        }
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.constants = PhysConstants::new(hbar)?;
        Ok(self)
    }

    pub fn hbar(&self) -> f64 {
        self.constants.hbar
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(DqdError::invalid(name, "must be finite"))
            }
        };
        finite("eps0", self.eps0)?;
        finite("delta", self.delta)?;
        finite("gamma1", self.gamma1)?;
        finite("gamma2", self.gamma2)?;
        if self.delta < 0.0 {
            return Err(DqdError::invalid("delta", "must be >= 0"));
        }
        if self.gamma1 < 0.0 {
            return Err(DqdError::invalid("gamma1", "must be >= 0"));
        }
        if self.gamma2 < 0.0 {
            return Err(DqdError::invalid("gamma2", "must be >= 0"));
        }
        if !(self.constants.hbar > 0.0) {
            return Err(DqdError::invalid("hbar", "must be > 0"));
        }
        Ok(())
    }
}

/// Control values (μeV) held constant over one hold interval.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ControlSample {
    pub f1: f64,
    pub f2: f64,
}

impl ControlSample {
    pub const ZERO: Self = Self { f1: 0.0, f2: 0.0 };

    pub fn new(f1: f64, f2: f64) -> Self {
        Self { f1, f2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianMode {
    /// `½ε₀σ_z + Δσ_x + ½f₂σ_z`, with f₂ the detuning pulse.
    Lzs,
    /// `½ε₀σ_z + f₁σ_x + f₂σ_y`.
    Lyapunov,
}

pub fn drift_hamiltonian(params: &SystemParams) -> ComplexMat2 {
    pauli(PauliAxis::Z).scale_re(0.5 * params.eps0)
}

pub fn hamiltonian(
    params: &SystemParams,
    mode: HamiltonianMode,
    sample: ControlSample,
) -> ComplexMat2 {
    let h0 = drift_hamiltonian(params);
    match mode {
        HamiltonianMode::Lzs => {
            h0 + pauli(PauliAxis::X).scale_re(params.delta)
                + pauli(PauliAxis::Z).scale_re(0.5 * sample.f2)
        }
        HamiltonianMode::Lyapunov => {
            h0 + pauli(PauliAxis::X).scale_re(sample.f1) + pauli(PauliAxis::Y).scale_re(sample.f2)
        }
    }
}

/// Dissipator L(ρ) with L₁ = √Γ₁σ₋ and L₂ = √Γ₂σ_z.
pub fn dissipator(rho: &ComplexMat2, params: &SystemParams) -> ComplexMat2 {
    let sm = pauli(PauliAxis::Minus);
    let sp = sm.dagger();
    let sz = pauli(PauliAxis::Z);
    let relax = sm * *rho * sp - anticommutator(&(sp * sm), rho).scale_re(0.5);
    let dephase = sz * *rho * sz - *rho;
    relax.scale_re(params.gamma1) + dephase.scale_re(params.gamma2)
}

/// Right-hand side dρ/dt (ps⁻¹). Accepts any matrix so it can be evaluated on
/// intermediate Runge–Kutta stages.
pub fn lindblad_rhs(rho: &ComplexMat2, h: &ComplexMat2, params: &SystemParams) -> ComplexMat2 {
    let coherent = commutator(h, rho).scale(Complex64::new(0.0, -1.0 / params.hbar()));
    coherent + dissipator(rho, params)
}

/// One classical RK4 step without any post-processing.
pub fn rk4_step_raw<F>(
    rho: &ComplexMat2,
    h_of_t: F,
    t: f64,
    dt: f64,
    params: &SystemParams,
) -> ComplexMat2
where
    F: Fn(f64) -> ComplexMat2,
{
    let h0 = h_of_t(t);
    let hm = h_of_t(t + 0.5 * dt);
    let h1 = h_of_t(t + dt);
    let k1 = lindblad_rhs(rho, &h0, params);
    let k2 = lindblad_rhs(&(*rho + k1 * (0.5 * dt)), &hm, params);
    let k3 = lindblad_rhs(&(*rho + k2 * (0.5 * dt)), &hm, params);
    let k4 = lindblad_rhs(&(*rho + k3 * dt), &h1, params);
    *rho + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0)
}

/// Re-Hermitize, renormalise the trace, and check positivity of a raw step.
///
/// Small negative eigenvalues (above the blow-up threshold) are lifted to
/// zero by mixing with the identity.
pub fn clean_state(raw: &ComplexMat2, t: f64) -> Result<DensityMatrix> {
    if !raw.is_finite() {
        return Err(DqdError::IntegratorBlowUp {
            t,
            eigenvalue: f64::NAN,
        });
    }
    let h = raw.hermitian_part();
    let tr = h.trace().re;
    if !(tr > 0.0) {
        return Err(DqdError::IntegratorBlowUp { t, eigenvalue: tr });
    }
    let mut m = h.scale_re(1.0 / tr);
    let [lo, _] = m.hermitian_eigenvalues();
    if lo < -BLOWUP_EIGEN_TOL {
        return Err(DqdError::IntegratorBlowUp { t, eigenvalue: lo });
    }
    if lo < 0.0 {
        m = (m + ComplexMat2::identity().scale_re(-lo)).scale_re(1.0 / (1.0 - 2.0 * lo));
    }
    Ok(DensityMatrix::from_mat_unchecked(m))
}

pub fn rk4_step<F>(
    rho: &DensityMatrix,
    h_of_t: F,
    t: f64,
    dt: f64,
    params: &SystemParams,
) -> Result<DensityMatrix>
where
    F: Fn(f64) -> ComplexMat2,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(DqdError::invalid("dt", "must be finite and > 0"));
    }
    let raw = rk4_step_raw(rho.mat(), h_of_t, t, dt, params);
    clean_state(&raw, t + dt)
}

/// What a controller hands back at each hold boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput {
    pub sample: ControlSample,
    pub branch: ControlBranch,
    /// Saturation was applied to at least one field.
    pub clamped: bool,
    pub diagnostics: Option<LyapunovDiagnostics>,
}

impl ControlOutput {
    pub fn open_loop(sample: ControlSample) -> Self {
        Self {
            sample,
            branch: ControlBranch::OpenLoop,
            clamped: false,
            diagnostics: None,
        }
    }
}

/// Source of control samples, queried once per hold boundary.
pub trait Controller {
    fn control(&mut self, t: f64, rho: &DensityMatrix) -> Result<ControlOutput>;
}

/// Always emits (0, 0).
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroController;

impl Controller for ZeroController {
    fn control(&mut self, _t: f64, _rho: &DensityMatrix) -> Result<ControlOutput> {
        Ok(ControlOutput::open_loop(ControlSample::ZERO))
    }
}

/// Open-loop controller from a function of time.
pub struct FnController<F>(pub F);

impl<F> Controller for FnController<F>
where
    F: FnMut(f64) -> ControlSample,
{
    fn control(&mut self, t: f64, _rho: &DensityMatrix) -> Result<ControlOutput> {
        Ok(ControlOutput::open_loop((self.0)(t)))
    }
}

/// Replays a recorded control waveform open-loop, one sample per hold
/// interval. Past the end of the recording it emits zeros.
#[derive(Debug, Clone)]
pub struct ReplayController {
    samples: Vec<ControlSample>,
    hold_dt: f64,
}

impl ReplayController {
    pub fn new(samples: Vec<ControlSample>, hold_dt: f64) -> Self {
        Self { samples, hold_dt }
    }

    pub fn from_trajectory(traj: &Trajectory) -> Self {
        Self::new(traj.controls.clone(), traj.hold_dt)
    }
}

impl Controller for ReplayController {
    fn control(&mut self, t: f64, _rho: &DensityMatrix) -> Result<ControlOutput> {
        let idx = (t / self.hold_dt).round() as usize;
        let sample = self
            .samples
            .get(idx)
            .copied()
            .unwrap_or(ControlSample::ZERO);
        Ok(ControlOutput::open_loop(sample))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveSettings {
    pub t_end: f64,
    pub hold_dt: f64,
    /// RK4 steps per hold interval.
    pub substeps: usize,
    pub mode: HamiltonianMode,
    /// Reference state for the V and fidelity columns of the trajectory.
    pub target: DensityMatrix,
}

impl EvolveSettings {
    pub fn new(t_end: f64, hold_dt: f64, mode: HamiltonianMode) -> Self {
        Self {
            t_end,
            hold_dt,
            substeps: 10,
            mode,
            target: DensityMatrix::excited(),
        }
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps = substeps;
        self
    }

    pub fn with_target(mut self, target: DensityMatrix) -> Self {
        self.target = target;
        self
    }

    /// Number of hold intervals needed to cover `t_end`.
    pub fn hold_count(&self) -> usize {
        (self.t_end / self.hold_dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(DqdError::invalid("t_end", "must be finite and > 0"));
        }
        if !(self.hold_dt > 0.0 && self.hold_dt.is_finite()) {
            return Err(DqdError::invalid("hold_dt", "must be finite and > 0"));
        }
        if self.substeps == 0 {
            return Err(DqdError::invalid("substeps", "must be >= 1"));
        }
        Ok(())
    }
}

/// Integrate from `rho0` with sample-and-hold control.
///
/// Records are taken at every hold boundary `k·hold_dt`, `k = 0..=n`. The
/// control stored with record `k` is the sample applied on
/// `[k·hold_dt, (k+1)·hold_dt)`; the last record's sample is queried but not
/// applied.
pub fn evolve<C>(
    rho0: &DensityMatrix,
    controller: &mut C,
    settings: &EvolveSettings,
    params: &SystemParams,
) -> Result<Trajectory>
where
    C: Controller + ?Sized,
{
    settings.validate()?;
    params.validate()?;
    let n = settings.hold_count();
    let dt = settings.hold_dt / settings.substeps as f64;
    let mut traj = Trajectory::with_capacity(n + 1, settings.hold_dt, settings.target);
    let mut rho = *rho0;
    for k in 0..=n {
        let t = k as f64 * settings.hold_dt;
        let out = controller.control(t, &rho)?;
        traj.push(t, rho, out);
        if k == n {
            break;
        }
        let h = hamiltonian(params, settings.mode, out.sample);
        for s in 0..settings.substeps {
            let ts = t + s as f64 * dt;
            rho = rk4_step(&rho, |_| h, ts, dt, params)?;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::transfer_probability;
    use crate::quantum::HBAR_UEV_PS;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(c(1.0, 0.0), c(1.0, 0.0)).unwrap()
    }

    #[test]
    fn hamiltonian_examples() {
        let s0 = ControlSample::ZERO;
        let p = SystemParams::closed(0.0, 0.0);
        assert_eq!(
            hamiltonian(&p, HamiltonianMode::Lyapunov, s0),
            ComplexMat2::zero()
        );

        let p = SystemParams::closed(400.0, 0.0);
        let h = hamiltonian(&p, HamiltonianMode::Lyapunov, s0);
        assert!(h.max_abs_diff(&ComplexMat2::diag(200.0, -200.0)) == 0.0);

        let p = SystemParams::closed(90.0, 5.0);
        let h = hamiltonian(&p, HamiltonianMode::Lzs, ControlSample::new(123.0, -90.0));
        assert!(h.max_abs_diff(&pauli(PauliAxis::X).scale_re(5.0)) < 1e-14);

        let h = hamiltonian(&p, HamiltonianMode::Lyapunov, ControlSample::new(3.0, -7.0));
        assert_eq!(h.hermiticity_error(), 0.0);
    }

    #[test]
    fn rhs_examples() {
        let mut p = SystemParams::closed(0.0, 0.0);
        p.gamma2 = 0.3;
        let d = lindblad_rhs(
            DensityMatrix::maximally_mixed().mat(),
            &ComplexMat2::zero(),
            &p,
        );
        assert_eq!(d, ComplexMat2::zero());

        let g1 = 0.7;
        let p = SystemParams::new(0.0, 0.0, g1, 0.0).unwrap();
        let d = lindblad_rhs(DensityMatrix::excited().mat(), &ComplexMat2::zero(), &p);
        assert!(d.max_abs_diff(&ComplexMat2::diag(g1, -g1)) < 1e-15);

        let g2 = 0.4;
        let p = SystemParams::new(0.0, 0.0, 0.0, g2).unwrap();
        let rho = plus();
        let d = lindblad_rhs(rho.mat(), &ComplexMat2::zero(), &p);
        assert!(d.get(0, 0).norm() < 1e-15 && d.get(1, 1).norm() < 1e-15);
        assert!((d.get(0, 1) - rho.mat().get(0, 1) * (-2.0 * g2)).norm() < 1e-15);
    }

    #[test]
    fn rhs_is_hermitian_and_traceless() {
        let p = SystemParams::new(37.0, 4.0, 0.01, 0.02).unwrap();
        let rho = DensityMatrix::from_bloch(0.3, -0.5, 0.1).unwrap();
        let h = hamiltonian(
            &p,
            HamiltonianMode::Lyapunov,
            ControlSample::new(12.0, -30.0),
        );
        let d = lindblad_rhs(rho.mat(), &h, &p);
        assert!(d.hermiticity_error() < 1e-12);
        assert!(d.trace().norm() < 1e-12);
    }

    #[test]
    fn zero_generator_leaves_state_unchanged() {
        let p = SystemParams::closed(0.0, 0.0);
        let rho = DensityMatrix::from_bloch(0.2, 0.1, -0.6).unwrap();
        let next = rk4_step(&rho, |_| ComplexMat2::zero(), 0.0, 0.5, &p).unwrap();
        assert!(next.mat().max_abs_diff(rho.mat()) <= 1e-15);
    }

    #[test]
    fn rabi_oracle_single_run() {
        let delta = 10.0;
        let p = SystemParams::closed(0.0, delta);
        let h = pauli(PauliAxis::X).scale_re(delta);
        let dt = 0.01;
        let mut rho = DensityMatrix::ground();
        let mut worst: f64 = 0.0;
        for k in 1..=5000 {
            rho = rk4_step(&rho, |_| h, (k - 1) as f64 * dt, dt, &p).unwrap();
            let t = k as f64 * dt;
            let exact = (delta * t / HBAR_UEV_PS).sin().powi(2);
            worst = worst.max((transfer_probability(&rho) - exact).abs());
        }
        assert!(worst < 1e-8, "worst deviation {worst:e}");
    }

    #[test]
    fn dephasing_oracle() {
        let g2 = 2e-4;
        let p = SystemParams::new(0.0, 0.0, 0.0, g2).unwrap();
        let mut rho = plus();
        let dt = 1.0;
        for k in 1..=2000 {
            rho = rk4_step(&rho, |_| ComplexMat2::zero(), 0.0, dt, &p).unwrap();
            let exact = 0.5 * (-2.0 * g2 * k as f64 * dt).exp();
            assert!((rho.mat().get(0, 1).re - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn blow_up_is_reported() {
        let p = SystemParams::closed(0.0, 800.0);
        let h = pauli(PauliAxis::X).scale_re(5000.0);
        let err = rk4_step(&DensityMatrix::ground(), |_| h, 0.0, 100.0, &p).unwrap_err();
        assert!(matches!(err, DqdError::IntegratorBlowUp { .. }));
        assert!(rk4_step(&DensityMatrix::ground(), |_| h, 0.0, 0.0, &p).is_err());
    }

    #[test]
    fn evolve_zero_dynamics_is_constant() {
        let p = SystemParams::closed(0.0, 0.0);
        let s = EvolveSettings::new(10.0, 1.0, HamiltonianMode::Lyapunov);
        let traj = evolve(&DensityMatrix::ground(), &mut ZeroController, &s, &p).unwrap();
        assert_eq!(traj.len(), 11);
        for (k, st) in traj.states.iter().enumerate() {
            assert_eq!(st, &DensityMatrix::ground());
            assert_eq!(traj.times[k], k as f64);
        }
    }

    #[test]
    fn evolve_relaxation_oracle() {
        let p = SystemParams::new(0.0, 0.0, 1.0 / 5000.0, 0.0).unwrap();
        let s = EvolveSettings::new(5000.0, 10.0, HamiltonianMode::Lyapunov).with_substeps(1);
        let traj = evolve(&DensityMatrix::excited(), &mut ZeroController, &s, &p).unwrap();
        let last = *traj.p_l.last().unwrap();
        assert!((last - (-1.0f64).exp()).abs() < 1e-4);
        assert!((traj.times.last().unwrap() - 5000.0).abs() < 1e-9);
    }

    #[test]
    fn evolve_lists_have_equal_length() {
        let p = SystemParams::new(50.0, 3.0, 1e-3, 1e-3).unwrap();
        let s = EvolveSettings::new(7.25, 0.5, HamiltonianMode::Lzs).with_substeps(3);
        let mut ctl = FnController(|t: f64| ControlSample::new(0.0, -t));
        let traj = evolve(&DensityMatrix::ground(), &mut ctl, &s, &p).unwrap();
        let n = traj.len();
        assert_eq!(n, 16);
        for len in [
            traj.states.len(),
            traj.controls.len(),
            traj.v_values.len(),
            traj.p_l.len(),
            traj.fidelity.len(),
            traj.bloch.len(),
            traj.branches.len(),
            traj.clamped.len(),
        ] {
            assert_eq!(len, n);
        }
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        for (k, t) in traj.times.iter().enumerate() {
            assert_eq!(*t, k as f64 * 0.5);
        }
    }

    #[test]
    fn evolve_rejects_bad_settings() {
        let p = SystemParams::closed(0.0, 0.0);
        let mut s = EvolveSettings::new(1.0, 0.1, HamiltonianMode::Lzs);
        s.substeps = 0;
        assert!(evolve(&DensityMatrix::ground(), &mut ZeroController, &s, &p).is_err());
        let s = EvolveSettings::new(-1.0, 0.1, HamiltonianMode::Lzs);
        assert!(evolve(&DensityMatrix::ground(), &mut ZeroController, &s, &p).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(SystemParams::new(0.0, -1.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(0.0, 1.0, -1.0, 0.0).is_err());
        let e = SystemParams::from_coherence_times(0.0, 1.0, -5.0, 5.0).unwrap_err();
        assert!(e.to_string().contains("T1"));
        let p = SystemParams::from_coherence_times(90.0, 1.0, 5000.0, 5000.0).unwrap();
        assert!((p.gamma1 - 2e-4).abs() < 1e-18 && (p.gamma2 - 2e-4).abs() < 1e-18);
    }
}
