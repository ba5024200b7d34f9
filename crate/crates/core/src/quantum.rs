//! 2×2 complex linear algebra for a single qubit.
//!
//! The basis ordering is fixed as (|R⟩, |L⟩): index 0 is the right-dot state
//! (Bloch north pole, |0⟩) and index 1 is the left-dot state (south pole, |1⟩).
//! Energies are in μeV and times in ps throughout the crate.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DqdError, Result};

/// Reduced Planck constant in μeV·ps (CODATA ħ = 6.582119569e-16 eV·s).
pub const HBAR_UEV_PS: f64 = 658.211_956_9;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const EIGEN_TOL: f64 = 1e-9;

#[inline]
fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A 2×2 complex matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexMat2(pub [[Complex64; 2]; 2]);

impl ComplexMat2 {
    pub const fn new(m: [[Complex64; 2]; 2]) -> Self {
        Self(m)
    }

    pub fn zero() -> Self {
        Self([[Complex64::new(0.0, 0.0); 2]; 2])
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self([[c(a, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(b, 0.0)]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Self([
            [c(m[0][0], 0.0), c(m[0][1], 0.0)],
            [c(m[1][0], 0.0), c(m[1][1], 0.0)],
        ])
    }

    /// Hermitian matrix from its diagonal and upper off-diagonal element.
    pub fn from_parts(rr: f64, ll: f64, rl_re: f64, rl_im: f64) -> Self {
        Self([
            [c(rr, 0.0), c(rl_re, rl_im)],
            [c(rl_re, -rl_im), c(ll, 0.0)],
        ])
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> Complex64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Self([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(c(s, 0.0))
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let d = *self - *other;
        d.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest elementwise modulus of `self - self†`.
    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    /// (M + M†)/2
    pub fn hermitian_part(&self) -> Self {
        (*self + self.dagger()).scale_re(0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let h = self.hermitian_part();
        let a = h.0[0][0].re;
        let d = h.0[1][1].re;
        let b = h.0[0][1];
        let mean = 0.5 * (a + d);
        let half_gap = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - half_gap, mean + half_gap]
    }
}

impl Add for ComplexMat2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl AddAssign for ComplexMat2 {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for ComplexMat2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Neg for ComplexMat2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-1.0)
    }
}

impl Mul for ComplexMat2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<f64> for ComplexMat2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scale_re(rhs)
    }
}

impl fmt::Display for ComplexMat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PauliAxis {
    X,
    Y,
    Z,
    /// Lowering operator σ₋ = |R⟩⟨L|; relaxes |L⟩ into |R⟩.
    Minus,
}

pub fn pauli(axis: PauliAxis) -> ComplexMat2 {
    let o = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match axis {
        PauliAxis::X => ComplexMat2([[o, one], [one, o]]),
        PauliAxis::Y => ComplexMat2([[o, c(0.0, -1.0)], [c(0.0, 1.0), o]]),
        PauliAxis::Z => ComplexMat2([[one, o], [o, -one]]),
        PauliAxis::Minus => ComplexMat2([[o, one], [o, o]]),
    }
}

/// `ab - ba`
pub fn commutator(a: &ComplexMat2, b: &ComplexMat2) -> ComplexMat2 {
    *a * *b - *b * *a
}

/// `ab + ba`
pub fn anticommutator(a: &ComplexMat2, b: &ComplexMat2) -> ComplexMat2 {
    *a * *b + *b * *a
}

/// Principal square root of a Hermitian positive-semidefinite 2×2 matrix.
///
/// Uses the Cayley–Hamilton identity `√M = (M + √(λ₊λ₋)·I) / (√λ₊ + √λ₋)`,
/// which is exact for PSD `M` and stays well-conditioned at degenerate
/// spectra. Eigenvalues in `[-1e-9, 0)` are clamped to zero.
pub fn matrix_sqrt_psd(m: &ComplexMat2) -> Result<ComplexMat2> {
    if !m.is_finite() {
        return Err(DqdError::Domain("matrix has non-finite entries".into()));
    }
    let herm_err = m.hermiticity_error();
    if herm_err > 1e-9 {
        return Err(DqdError::Domain(format!(
            "matrix is not Hermitian (max |M - M†| = {herm_err:.3e})"
        )));
    }
    let [lo, hi] = m.hermitian_eigenvalues();
    if lo < -EIGEN_TOL {
        return Err(DqdError::Domain(format!(
            "matrix is not positive semidefinite (eigenvalue {lo:.3e})"
        )));
    }
    let s_lo = lo.max(0.0).sqrt();
    let s_hi = hi.max(0.0).sqrt();
    let denom = s_lo + s_hi;
    if denom == 0.0 {
        return Ok(ComplexMat2::zero());
    }
    let h = m.hermitian_part();
    Ok((h + ComplexMat2::identity().scale_re(s_lo * s_hi)).scale_re(1.0 / denom))
}

/// `exp(-i·angle·σ/2)` for σ ∈ {σ_y, σ_z}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RotationAxis {
    Y,
    Z,
}

pub fn rotation(axis: RotationAxis, angle: f64) -> ComplexMat2 {
    let (s, co) = (0.5 * angle).sin_cos();
    let o = c(0.0, 0.0);
    match axis {
        // cos(θ/2)·I − i·sin(θ/2)·σ_y
        RotationAxis::Y => ComplexMat2([[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]),
        RotationAxis::Z => ComplexMat2([[c(co, -s), o], [o, c(co, s)]]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysConstants {
    /// μeV·ps
    pub hbar: f64,
}

impl Default for PhysConstants {
    fn default() -> Self {
        Self { hbar: HBAR_UEV_PS }
    }
}

impl PhysConstants {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(DqdError::invalid("hbar", "must be finite and > 0"));
        }
        Ok(Self { hbar })
    }
}

/// Qubit density matrix ρ in the (|R⟩, |L⟩) basis.
///
/// Construction through [`DensityMatrix::new`] checks Hermiticity, unit trace
/// and positivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMat2,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMat2) -> Result<Self> {
        Self::validate(&mat)?;
        Ok(Self { mat })
    }

    /// Skips validation. Callers must guarantee the invariants.
    pub(crate) fn from_mat_unchecked(mat: ComplexMat2) -> Self {
        Self { mat }
    }

    pub fn validate(mat: &ComplexMat2) -> Result<()> {
        if !mat.is_finite() {
            return Err(DqdError::Domain(
                "density matrix has non-finite entries".into(),
            ));
        }
        let herm = mat.hermiticity_error();
        if herm > HERMITIAN_TOL {
            return Err(DqdError::Domain(format!(
                "density matrix is not Hermitian (max |ρ - ρ†| = {herm:.3e})"
            )));
        }
        let tr = mat.trace();
        if (tr - c(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(DqdError::Domain(format!(
                "density matrix trace is {tr}, expected 1"
            )));
        }
        let [lo, _] = mat.hermitian_eigenvalues();
        if lo < -EIGEN_TOL {
            return Err(DqdError::Domain(format!(
                "density matrix has negative eigenvalue {lo:.3e}"
            )));
        }
        Ok(())
    }

    /// |R⟩⟨R|, the Bloch north pole.
    pub fn ground() -> Self {
        Self::from_mat_unchecked(ComplexMat2::diag(1.0, 0.0))
    }

    /// |L⟩⟨L|, the transfer target.
    pub fn excited() -> Self {
        Self::from_mat_unchecked(ComplexMat2::diag(0.0, 1.0))
    }

    pub fn maximally_mixed() -> Self {
        Self::from_mat_unchecked(ComplexMat2::diag(0.5, 0.5))
    }

    /// |ψ⟩⟨ψ| for `ψ = (a, b)`, normalised internally.
    pub fn pure(a: Complex64, b: Complex64) -> Result<Self> {
        let n = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(DqdError::Domain(
                "state vector has zero or non-finite norm".into(),
            ));
        }
        let (a, b) = (a / n, b / n);
        let mat = ComplexMat2([[a * a.conj(), a * b.conj()], [b * a.conj(), b * b.conj()]]);
        Ok(Self::from_mat_unchecked(mat.hermitian_part()))
    }

    /// State with the given Bloch vector; requires |r| ≤ 1.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self> {
        let r2 = x * x + y * y + z * z;
        if !(r2 <= 1.0 + EIGEN_TOL) {
            return Err(DqdError::Domain(format!(
                "Bloch vector norm² {r2} exceeds 1"
            )));
        }
        let mat = ComplexMat2([
            [c(0.5 * (1.0 + z), 0.0), c(0.5 * x, -0.5 * y)],
            [c(0.5 * x, 0.5 * y), c(0.5 * (1.0 - z), 0.0)],
        ]);
        Ok(Self::from_mat_unchecked(mat))
    }

    pub fn mat(&self) -> &ComplexMat2 {
        &self.mat
    }

    pub fn purity(&self) -> f64 {
        (self.mat * self.mat).trace().re
    }

    /// `U ρ U†`
    pub fn conjugate_by(&self, u: &ComplexMat2) -> Self {
        Self::from_mat_unchecked((*u * self.mat * u.dagger()).hermitian_part())
    }
}

/// Bloch vector `(tr ρσ_x, tr ρσ_y, tr ρσ_z)`.
pub fn bloch_coords(rho: &DensityMatrix) -> [f64; 3] {
    let m = rho.mat();
    [
        2.0 * m.get(0, 1).re,
        -2.0 * m.get(0, 1).im,
        (m.get(0, 0) - m.get(1, 1)).re,
    ]
}
