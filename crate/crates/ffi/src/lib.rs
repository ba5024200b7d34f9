//! C ABI over `dqd-core`.
//!
//! Every fallible call returns a [`DqdStatus`]; on failure a one-line message
//! is available from [`dqd_last_error_message`] on the same thread. Results
//! too large for a struct live behind opaque handles that the caller frees.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dqd_core::analysis::{bures_fidelity, summarize};
use dqd_core::config::{RawConfig, RunMode};
use dqd_core::lyapunov::{simulate_lyapunov, ControlConfig};
use dqd_core::lzs::{
    constructive_duration, landau_zener_prob, simulate_lzs_with_substeps, stuckelberg_phase,
    transfer_prob_analytic, LzsPulseParams,
};
use dqd_core::quantum::{ComplexMat2, DensityMatrix, PhysConstants};
use dqd_core::runner::run_sweep_config;
use dqd_core::sweep::SweepResult;
use dqd_core::{ControlBranch, DqdError, SystemParams, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Domain = 3,
    IntegratorBlowUp = 4,
    OutOfRange = 5,
    FullyMasked = 6,
    Config = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DqdBranch {
    OpenLoop = 0,
    D1Cancels = 1,
    D2Cancels = 2,
    Deadpoint = 3,
}

impl From<ControlBranch> for DqdBranch {
    fn from(b: ControlBranch) -> Self {
        match b {
            ControlBranch::OpenLoop => Self::OpenLoop,
            ControlBranch::D1Cancels => Self::D1Cancels,
            ControlBranch::D2Cancels => Self::D2Cancels,
            ControlBranch::Deadpoint => Self::Deadpoint,
        }
    }
}

/// Energies in μeV, rates in 1/ps, ħ in μeV·ps.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqdSystemParams {
    pub eps0: f64,
    pub delta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub hbar: f64,
}

/// `gain_unit <= 0` selects the default ħ²/(1 ps).
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqdControlConfig {
    pub g1: f64,
    pub g2: f64,
    pub theta: f64,
    pub f_max: f64,
    pub hold_dt: f64,
    pub substeps: u32,
    pub deadpoint_kick: f64,
    pub v_tolerance: f64,
    pub gain_unit: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqdPulseParams {
    pub amplitude_a: f64,
    pub t_r: f64,
    pub cycles: u32,
}

/// 2×2 density matrix in the (|R⟩, |L⟩) basis; ρ_LR is the conjugate of ρ_RL.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqdDensity {
    pub rho_rr: f64,
    pub rho_ll: f64,
    pub rho_rl_re: f64,
    pub rho_rl_im: f64,
}

/// One trajectory row; same fields as the CSV export.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqdRecord {
    pub t_ps: f64,
    pub rho: DqdDensity,
    pub f1_uev: f64,
    pub f2_uev: f64,
    pub v: f64,
    pub p_l: f64,
    pub fidelity: f64,
    pub bloch_x: f64,
    pub bloch_y: f64,
    pub bloch_z: f64,
    pub branch: DqdBranch,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DqdSummary {
    pub max_p_l: f64,
    pub t_at_max: f64,
    pub max_fidelity: f64,
    pub fidelity_at_max: f64,
    pub final_v: f64,
    pub clamped_fraction: f64,
}

/// Opaque simulation result.
pub struct DqdTrajectory(Trajectory);

/// Opaque sweep result.
pub struct DqdSweep(SweepResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &DqdError) -> DqdStatus {
    match e {
        DqdError::Domain(_) => DqdStatus::Domain,
        DqdError::InvalidParameter { .. } => DqdStatus::InvalidParameter,
        DqdError::IntegratorBlowUp { .. } => DqdStatus::IntegratorBlowUp,
        DqdError::OutsideSupport { .. } => DqdStatus::OutOfRange,
        DqdError::FullyMasked => DqdStatus::FullyMasked,
        DqdError::Config(_) => DqdStatus::Config,
        _ => DqdStatus::Other,
    }
}

/// Run `f`, translating errors and panics into a status code.
fn guard<F>(f: F) -> DqdStatus
where
    F: FnOnce() -> Result<(), (DqdStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DqdStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DqdStatus::Panic
        }
    }
}

fn core_err(e: DqdError) -> (DqdStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_err(what: &str) -> (DqdStatus, String) {
    (DqdStatus::NullPointer, format!("{what} is null"))
}

fn system_params(p: &DqdSystemParams) -> Result<SystemParams, DqdError> {
    let params = SystemParams {
        eps0: p.eps0,
        delta: p.delta,
        gamma1: p.gamma1,
        gamma2: p.gamma2,
        constants: PhysConstants::new(p.hbar)?,
    };
    params.validate()?;
    Ok(params)
}

fn control_config(c: &DqdControlConfig) -> ControlConfig {
    ControlConfig {
        g1: c.g1,
        g2: c.g2,
        theta: c.theta,
        f_max: c.f_max,
        hold_dt: c.hold_dt,
        substeps: c.substeps as usize,
        deadpoint_kick: c.deadpoint_kick,
        v_tolerance: c.v_tolerance,
        gain_unit: (c.gain_unit > 0.0).then_some(c.gain_unit),
    }
}

fn density(d: &DqdDensity) -> Result<DensityMatrix, DqdError> {
    let m = ComplexMat2::from_parts(d.rho_rr, d.rho_ll, d.rho_rl_re, d.rho_rl_im);
    DensityMatrix::new(m)
}

fn density_out(rho: &DensityMatrix) -> DqdDensity {
    let m = rho.mat();
    DqdDensity {
        rho_rr: m.get(0, 0).re,
        rho_ll: m.get(1, 1).re,
        rho_rl_re: m.get(0, 1).re,
        rho_rl_im: m.get(0, 1).im,
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dqd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn dqd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Default controller settings (g = 0.22, θ = 5e-6, f_max = 800 μeV, 1 ps hold).
#[no_mangle]
pub extern "C" fn dqd_control_config_default() -> DqdControlConfig {
    let c = ControlConfig::default();
    DqdControlConfig {
        g1: c.g1,
        g2: c.g2,
        theta: c.theta,
        f_max: c.f_max,
        hold_dt: c.hold_dt,
        substeps: c.substeps as u32,
        deadpoint_kick: c.deadpoint_kick,
        v_tolerance: c.v_tolerance,
        gain_unit: 0.0,
    }
}

/// Build system parameters from coherence times in ps. Pass `INFINITY` to
/// switch a channel off.
///
/// # Safety
/// `out` must be NULL or point to writable memory for one `DqdSystemParams`.
#[no_mangle]
pub unsafe extern "C" fn dqd_system_params_from_times(
    eps0: f64,
    delta: f64,
    t1: f64,
    t2: f64,
    out: *mut DqdSystemParams,
) -> DqdStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let p = SystemParams::from_coherence_times(eps0, delta, t1, t2).map_err(core_err)?;
        *out = DqdSystemParams {
            eps0: p.eps0,
            delta: p.delta,
            gamma1: p.gamma1,
            gamma2: p.gamma2,
            hbar: p.hbar(),
        };
        Ok(())
    })
}

/// Closed-loop run from |R⟩ towards |L⟩ for `t_end` ps.
///
/// # Safety
/// `params` and `cfg` must be NULL or valid; `out` must be NULL or writable.
/// On success `*out` owns a handle to release with [`dqd_trajectory_free`].
#[no_mangle]
pub unsafe extern "C" fn dqd_simulate_lyapunov(
    params: *const DqdSystemParams,
    cfg: *const DqdControlConfig,
    t_end: f64,
    out: *mut *mut DqdTrajectory,
) -> DqdStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null_err("params"))?;
        let cfg = cfg.as_ref().ok_or_else(|| null_err("cfg"))?;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let traj = simulate_lyapunov(
            &DensityMatrix::ground(),
            &DensityMatrix::excited(),
            &system_params(params).map_err(core_err)?,
            &control_config(cfg),
            t_end,
        )
        .map_err(core_err)?;
        *out = Box::into_raw(Box::new(DqdTrajectory(traj)));
        Ok(())
    })
}

/// Open-loop triangular-pulse run from |R⟩ over the pulse duration.
///
/// # Safety
/// As for [`dqd_simulate_lyapunov`].
#[no_mangle]
pub unsafe extern "C" fn dqd_simulate_lzs(
    params: *const DqdSystemParams,
    pulse: *const DqdPulseParams,
    hold_dt: f64,
    substeps: u32,
    out: *mut *mut DqdTrajectory,
) -> DqdStatus {
    guard(|| {
        let params = params.as_ref().ok_or_else(|| null_err("params"))?;
        let pulse = pulse.as_ref().ok_or_else(|| null_err("pulse"))?;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let pulse = LzsPulseParams {
            amplitude_a: pulse.amplitude_a,
            t_r: pulse.t_r,
            cycles: pulse.cycles,
        };
        let traj = simulate_lzs_with_substeps(
            &DensityMatrix::ground(),
            &system_params(params).map_err(core_err)?,
            &pulse,
            hold_dt,
            substeps as usize,
        )
        .map_err(core_err)?;
        *out = Box::into_raw(Box::new(DqdTrajectory(traj)));
        Ok(())
    })
}

/// Number of records; 0 for NULL.
///
/// # Safety
/// `traj` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn dqd_trajectory_len(traj: *const DqdTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

/// # Safety
/// `traj` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn dqd_trajectory_record(
    traj: *const DqdTrajectory,
    index: usize,
    out: *mut DqdRecord,
) -> DqdStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null_err("traj"))?.0;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        if index >= t.len() {
            return Err((
                DqdStatus::OutOfRange,
                format!("index {index} out of range for {} records", t.len()),
            ));
        }
        let [bx, by, bz] = t.bloch[index];
        *out = DqdRecord {
            t_ps: t.times[index],
            rho: density_out(&t.states[index]),
            f1_uev: t.controls[index].f1,
            f2_uev: t.controls[index].f2,
            v: t.v_values[index],
            p_l: t.p_l[index],
            fidelity: t.fidelity[index],
            bloch_x: bx,
            bloch_y: by,
            bloch_z: bz,
            branch: t.branches[index].into(),
        };
        Ok(())
    })
}

/// # Safety
/// `traj` must be NULL or a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn dqd_trajectory_summary(
    traj: *const DqdTrajectory,
    out: *mut DqdSummary,
) -> DqdStatus {
    guard(|| {
        let t = &traj.as_ref().ok_or_else(|| null_err("traj"))?.0;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let s = summarize(t).map_err(core_err)?;
        *out = DqdSummary {
            max_p_l: s.max_p_l,
            t_at_max: s.t_at_max,
            max_fidelity: s.max_fidelity,
            fidelity_at_max: s.fidelity_at_max,
            final_v: s.final_v,
            clamped_fraction: s.clamped_fraction,
        };
        Ok(())
    })
}

/// # Safety
/// `traj` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dqd_trajectory_free(traj: *mut DqdTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Bures fidelity between two density matrices.
///
/// # Safety
/// Pointers must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn dqd_bures_fidelity(
    rho_s: *const DqdDensity,
    rho_f: *const DqdDensity,
    out: *mut f64,
) -> DqdStatus {
    guard(|| {
        let s = rho_s.as_ref().ok_or_else(|| null_err("rho_s"))?;
        let f = rho_f.as_ref().ok_or_else(|| null_err("rho_f"))?;
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let s = density(s).map_err(core_err)?;
        let f = density(f).map_err(core_err)?;
        *out = bures_fidelity(&s, &f).map_err(core_err)?;
        Ok(())
    })
}

/// exp(−2πΔ²/(vħ)); NaN for v ≤ 0.
#[no_mangle]
pub extern "C" fn dqd_landau_zener_prob(delta: f64, v: f64, hbar: f64) -> f64 {
    landau_zener_prob(delta, v, hbar)
}

/// 2(A − ε₀)²/(vħ); NaN for v ≤ 0.
#[no_mangle]
pub extern "C" fn dqd_stuckelberg_phase(amplitude_a: f64, eps0: f64, v: f64, hbar: f64) -> f64 {
    stuckelberg_phase(amplitude_a, eps0, v, hbar)
}

/// Closed-form single-cycle transfer probability at pulse duration `t_p`.
#[no_mangle]
pub extern "C" fn dqd_transfer_prob_analytic(
    amplitude_a: f64,
    eps0: f64,
    delta: f64,
    t_p: f64,
    hbar: f64,
) -> f64 {
    transfer_prob_analytic(amplitude_a, eps0, delta, t_p, hbar)
}

#[no_mangle]
pub extern "C" fn dqd_constructive_duration(amplitude_a: f64, eps0: f64, n: u32, hbar: f64) -> f64 {
    constructive_duration(amplitude_a, eps0, n, hbar)
}

/// Run a sweep described by a JSON config document (the CLI format; `mode`
/// is forced to `sweep`).
///
/// # Safety
/// `config_json` must be NULL or a NUL-terminated string; `out` NULL or
/// writable. Release the handle with [`dqd_sweep_free`].
#[no_mangle]
pub unsafe extern "C" fn dqd_sweep_run(
    config_json: *const c_char,
    out: *mut *mut DqdSweep,
) -> DqdStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null_err("config_json"));
        }
        let out = out.as_mut().ok_or_else(|| null_err("out"))?;
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|e| (DqdStatus::Config, format!("config is not UTF-8: {e}")))?;
        let mut raw = RawConfig::from_json(text).map_err(core_err)?;
        raw.mode = Some(RunMode::Sweep);
        let cfg = raw.resolve().map_err(core_err)?;
        let result = run_sweep_config(&cfg).map_err(core_err)?;
        *out = Box::into_raw(Box::new(DqdSweep(result)));
        Ok(())
    })
}

/// # Safety
/// `sweep` must be NULL or a live handle; `n1`/`n2` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn dqd_sweep_shape(
    sweep: *const DqdSweep,
    n1: *mut usize,
    n2: *mut usize,
) -> DqdStatus {
    guard(|| {
        let s = &sweep.as_ref().ok_or_else(|| null_err("sweep"))?.0;
        *n1.as_mut().ok_or_else(|| null_err("n1"))? = s.axis1.values.len();
        *n2.as_mut().ok_or_else(|| null_err("n2"))? = s.axis2.values.len();
        Ok(())
    })
}

/// Cell `(i, j)`: axis coordinates, value (NaN when masked) and mask flag.
///
/// # Safety
/// `sweep` must be NULL or a live handle; output pointers NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn dqd_sweep_cell(
    sweep: *const DqdSweep,
    i: usize,
    j: usize,
    x1: *mut f64,
    x2: *mut f64,
    value: *mut f64,
    masked: *mut bool,
) -> DqdStatus {
    guard(|| {
        let s = &sweep.as_ref().ok_or_else(|| null_err("sweep"))?.0;
        let (n1, n2) = (s.axis1.values.len(), s.axis2.values.len());
        if i >= n1 || j >= n2 {
            return Err((
                DqdStatus::OutOfRange,
                format!("cell ({i}, {j}) outside {n1}x{n2} grid"),
            ));
        }
        *x1.as_mut().ok_or_else(|| null_err("x1"))? = s.axis1.values[i];
        *x2.as_mut().ok_or_else(|| null_err("x2"))? = s.axis2.values[j];
        *value.as_mut().ok_or_else(|| null_err("value"))? = s.grid[i][j];
        *masked.as_mut().ok_or_else(|| null_err("masked"))? = s.mask[i][j];
        Ok(())
    })
}

/// # Safety
/// `sweep` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dqd_sweep_free(sweep: *mut DqdSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}
