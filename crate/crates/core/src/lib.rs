//! Simulation of state transfer in a dissipative double-quantum-dot charge
//! qubit, driven either by closed-loop Lyapunov feedback or by a triangular
//! Landau–Zener–Stückelberg pulse.
//!
//! Units throughout: energies in μeV, times in ps. Basis order is (|R⟩, |L⟩),
//! so `P_L = ρ[1][1]`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod error;
pub mod lindblad;
pub mod lyapunov;
pub mod lzs;
pub mod output;
pub mod quantum;
pub mod runner;
pub mod sweep;
pub mod trajectory;

pub use analysis::{bures_fidelity, summarize, transfer_probability, RunSummary};
pub use config::{OutputFormat, RawConfig, RunConfig, RunMode};
pub use error::{DqdError, Result};
pub use lindblad::{
    evolve, ControlOutput, ControlSample, Controller, EvolveSettings, HamiltonianMode, SystemParams,
};
pub use lyapunov::{simulate_lyapunov, ControlConfig, LyapunovController};
pub use lzs::{simulate_lzs, LzsPulseParams};
pub use quantum::{bloch_coords, ComplexMat2, DensityMatrix, PhysConstants, HBAR_UEV_PS};
pub use sweep::{best_point, run_sweep, SweepResult, SweepSpec};
pub use trajectory::{ControlBranch, Trajectory};
