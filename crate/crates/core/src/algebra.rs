//! Exact 2×2 complex operator algebra: Pauli matrices, density matrices,
//! commutators, matrix functions and distances.
//!
//! Eigendecompositions of Hermitian matrices are done in closed form through
//! the Bloch decomposition `M = c0·I + c⃗·σ⃗`, never iteratively.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{internal_tol, real, Real};

/// Absolute tolerance for Hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Absolute tolerance for the unit-trace check of a density matrix.
pub const TRACE_TOL: f64 = 1e-12;
/// Eigenvalues of a density matrix may dip this far below zero.
pub const POSITIVITY_TOL: f64 = 1e-12;
/// Eigenvalues at or below this floor count as rank deficiency for logarithms.
pub const EIGENVALUE_FLOOR: f64 = 1e-14;

/// A dense 2×2 complex matrix, the substrate of the detector algebra.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMatrix2<T: Real> {
    entries: [[Complex<T>; 2]; 2],
}

impl<T: Real> ComplexMatrix2<T> {
    pub fn new(entries: [[Complex<T>; 2]; 2]) -> Self {
        Self { entries }
    }

    /// Matrix with real entries.
    pub fn from_real(entries: [[T; 2]; 2]) -> Self {
        let c = |x: T| Complex::new(x, T::zero());
        Self::new([
            [c(entries[0][0]), c(entries[0][1])],
            [c(entries[1][0]), c(entries[1][1])],
        ])
    }

    pub fn zero() -> Self {
        Self::new([[Complex::zero(); 2]; 2])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        m.entries[0][0] = Complex::one();
        m.entries[1][1] = Complex::one();
        m
    }

    pub fn sigma_x() -> Self {
        Self::from_real([[T::zero(), T::one()], [T::one(), T::zero()]])
    }

    pub fn sigma_y() -> Self {
        let i = Complex::new(T::zero(), T::one());
        let mut m = Self::zero();
        m.entries[0][1] = -i;
        m.entries[1][0] = i;
        m
    }

    pub fn sigma_z() -> Self {
        Self::from_real([[T::one(), T::zero()], [T::zero(), -T::one()]])
    }

    /// `c0·I + n⃗·σ⃗` for real coefficients.
    pub fn from_bloch(c0: T, n: [T; 3]) -> Self {
        let mut m = Self::identity().scale(c0);
        m = m + Self::sigma_x().scale(n[0]);
        m = m + Self::sigma_y().scale(n[1]);
        m = m + Self::sigma_z().scale(n[2]);
        m
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.entries[row][col]
    }

    pub fn entries(&self) -> &[[Complex<T>; 2]; 2] {
        &self.entries
    }

    pub fn trace(&self) -> Complex<T> {
        self.entries[0][0] + self.entries[1][1]
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new([
            [self.entries[0][0].conj(), self.entries[1][0].conj()],
            [self.entries[0][1].conj(), self.entries[1][1].conj()],
        ])
    }

    pub fn scale(&self, s: T) -> Self {
        self.scale_complex(Complex::new(s, T::zero()))
    }

    pub fn scale_complex(&self, s: Complex<T>) -> Self {
        let mut out = *self;
        for row in &mut out.entries {
            for e in row {
                *e *= s;
            }
        }
        out
    }

    /// Largest entrywise deviation from Hermiticity, `max |M - M†|`.
    pub fn hermiticity_deviation(&self) -> T {
        let adj = self.adjoint();
        let mut worst = T::zero();
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.entries[i][j] - adj.entries[i][j]).norm());
            }
        }
        worst
    }

    /// Largest entrywise absolute value.
    pub fn max_abs(&self) -> T {
        let mut worst = T::zero();
        for row in &self.entries {
            for e in row {
                worst = worst.max(e.norm());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> T {
        let mut sum = T::zero();
        for row in &self.entries {
            for e in row {
                sum += e.norm_sqr();
            }
        }
        sum.sqrt()
    }

    /// Hilbert–Schmidt inner product `Tr(A† B)`.
    pub fn hs_inner(&self, other: &Self) -> Complex<T> {
        let mut sum = Complex::zero();
        for i in 0..2 {
            for j in 0..2 {
                sum += self.entries[i][j].conj() * other.entries[i][j];
            }
        }
        sum
    }

    /// Bloch decomposition `M = c0·I + c⃗·σ⃗` of a Hermitian matrix.
    ///
    /// Anti-Hermitian parts are discarded; callers that need the check should
    /// test [`hermiticity_deviation`](Self::hermiticity_deviation) first.
    pub fn bloch_components(&self) -> (T, [T; 3]) {
        let half = real::<T>(0.5);
        let c0 = (self.entries[0][0].re + self.entries[1][1].re) * half;
        let cx = (self.entries[0][1].re + self.entries[1][0].re) * half;
        let cy = (self.entries[1][0].im - self.entries[0][1].im) * half;
        let cz = (self.entries[0][0].re - self.entries[1][1].re) * half;
        (c0, [cx, cy, cz])
    }

    /// Closed-form eigenvalues of a Hermitian matrix, descending.
    pub fn hermitian_eigenvalues(&self) -> [T; 2] {
        let (c0, c) = self.bloch_components();
        let r = bloch_radius(c);
        [c0 + r, c0 - r]
    }

    /// Apply a real function to a Hermitian matrix through its closed-form
    /// spectral decomposition.
    pub fn hermitian_map(&self, f: impl Fn(T) -> T) -> Self {
        let (c0, c) = self.bloch_components();
        let r = bloch_radius(c);
        let scale = c0.abs() + r;
        if r <= scale * T::epsilon() * real::<T>(4.0) || r.is_zero() {
            return Self::identity().scale(f(c0));
        }
        let half = real::<T>(0.5);
        let fp = f(c0 + r);
        let fm = f(c0 - r);
        let mean = (fp + fm) * half;
        let diff = (fp - fm) * half / r;
        Self::from_bloch(mean, [c[0] * diff, c[1] * diff, c[2] * diff])
    }
}

fn bloch_radius<T: Real>(c: [T; 3]) -> T {
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt()
}

impl<T: Real> Add for ComplexMatrix2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.entries[i][j] += rhs.entries[i][j];
            }
        }
        out
    }
}

impl<T: Real> Sub for ComplexMatrix2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        for i in 0..2 {
            for j in 0..2 {
                out.entries[i][j] -= rhs.entries[i][j];
            }
        }
        out
    }
}

impl<T: Real> Neg for ComplexMatrix2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Real> Mul for ComplexMatrix2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.entries;
        let b = &rhs.entries;
        let mut out = Self::zero();
        for i in 0..2 {
            for j in 0..2 {
                out.entries[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        out
    }
}

/// `[a, b] = ab - ba`.
pub fn commutator<T: Real>(a: &ComplexMatrix2<T>, b: &ComplexMatrix2<T>) -> ComplexMatrix2<T> {
    *a * *b - *b * *a
}

/// `{a, b} = ab + ba`.
pub fn anticommutator<T: Real>(a: &ComplexMatrix2<T>, b: &ComplexMatrix2<T>) -> ComplexMatrix2<T> {
    *a * *b + *b * *a
}

/// Hermitian matrix exponential via the closed-form spectral decomposition.
pub fn matrix_exp<T: Real>(m: &ComplexMatrix2<T>) -> ComplexMatrix2<T> {
    m.hermitian_map(|x| x.exp())
}

/// Which Pauli axis an observable couples through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservableLabel {
    X,
    Y,
    Z,
    Custom,
}

/// A Hermitian detector observable.
#[derive(Clone, Copy, Debug)]
pub struct Observable<T: Real> {
    matrix: ComplexMatrix2<T>,
    label: ObservableLabel,
}

impl<T: Real> Observable<T> {
    pub fn sigma_x() -> Self {
        Self {
            matrix: ComplexMatrix2::sigma_x(),
            label: ObservableLabel::X,
        }
    }

    pub fn sigma_y() -> Self {
        Self {
            matrix: ComplexMatrix2::sigma_y(),
            label: ObservableLabel::Y,
        }
    }

    pub fn sigma_z() -> Self {
        Self {
            matrix: ComplexMatrix2::sigma_z(),
            label: ObservableLabel::Z,
        }
    }

    /// Observable `n⃗·σ⃗` along a unit Bloch direction.
    pub fn along_axis(direction: [T; 3]) -> Result<Self> {
        check_unit(direction)?;
        Ok(Self {
            matrix: ComplexMatrix2::from_bloch(T::zero(), direction),
            label: ObservableLabel::Custom,
        })
    }

    /// Arbitrary Hermitian observable.
    pub fn custom(matrix: ComplexMatrix2<T>) -> Result<Self> {
        let dev = matrix.hermiticity_deviation();
        if dev > internal_tol(HERMITICITY_TOL) {
            return Err(Error::NotHermitian {
                deviation: dev.into(),
            });
        }
        Ok(Self {
            matrix,
            label: ObservableLabel::Custom,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix2<T> {
        &self.matrix
    }

    pub fn label(&self) -> ObservableLabel {
        self.label
    }
}

/// A validated 2×2 density matrix: Hermitian, unit trace, positive
/// semidefinite within fixed tolerances.
#[derive(Clone, Copy, Debug)]
pub struct DensityMatrix<T: Real> {
    matrix: ComplexMatrix2<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validate and wrap a matrix as a physical state.
    pub fn new(matrix: ComplexMatrix2<T>) -> Result<Self> {
        let herm = matrix.hermiticity_deviation();
        if herm > internal_tol(HERMITICITY_TOL) {
            return Err(Error::NotHermitian {
                deviation: herm.into(),
            });
        }
        let tr = matrix.trace();
        let tr_dev = (tr - Complex::one()).norm();
        if tr_dev > internal_tol(TRACE_TOL) {
            return Err(Error::NotUnitTrace {
                deviation: tr_dev.into(),
            });
        }
        let [_, lo] = matrix.hermitian_eigenvalues();
        if lo < -internal_tol::<T>(POSITIVITY_TOL) {
            return Err(Error::NotPositive {
                eigenvalue: lo.into(),
            });
        }
        Ok(Self { matrix })
    }

    /// `(I + r⃗·σ⃗)/2` for a Bloch vector with `|r⃗| ≤ 1`.
    pub fn from_bloch(r: [T; 3]) -> Result<Self> {
        let half = real::<T>(0.5);
        let m = ComplexMatrix2::from_bloch(T::one(), r).scale(half);
        Self::new(m)
    }

    pub fn maximally_mixed() -> Self {
        Self {
            matrix: ComplexMatrix2::identity().scale(real(0.5)),
        }
    }

    /// Pure state `|0⟩⟨0|` in the σ_z eigenbasis.
    pub fn z_plus() -> Self {
        Self {
            matrix: ComplexMatrix2::from_real([
                [T::one(), T::zero()],
                [T::zero(), T::zero()],
            ]),
        }
    }

    /// Pure state `|1⟩⟨1|` in the σ_z eigenbasis.
    pub fn z_minus() -> Self {
        Self {
            matrix: ComplexMatrix2::from_real([
                [T::zero(), T::zero()],
                [T::zero(), T::one()],
            ]),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix2<T> {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix2<T> {
        self.matrix
    }

    pub fn bloch_vector(&self) -> [T; 3] {
        let (_, c) = self.matrix.bloch_components();
        let two = real::<T>(2.0);
        [c[0] * two, c[1] * two, c[2] * two]
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> [T; 2] {
        self.matrix.hermitian_eigenvalues()
    }
}

fn check_unit<T: Real>(direction: [T; 3]) -> Result<()> {
    let norm = bloch_radius(direction);
    if (norm - T::one()).abs() > internal_tol(HERMITICITY_TOL) {
        return Err(Error::NonUnitDirection { norm: norm.into() });
    }
    Ok(())
}

/// Thermal state of a Pauli generator: `e^{-s n⃗·σ⃗} / (2 cosh s)`, which
/// reduces to `(I - tanh(s)·n⃗·σ⃗)/2`.
pub fn pauli_gibbs<T: Real>(direction: [T; 3], s: T) -> Result<DensityMatrix<T>> {
    check_unit(direction)?;
    let t = s.tanh();
    let half = real::<T>(0.5);
    let m = ComplexMatrix2::from_bloch(T::one(), [
        -t * direction[0],
        -t * direction[1],
        -t * direction[2],
    ])
    .scale(half);
    DensityMatrix::new(m)
}

/// Hermitian logarithm of a full-rank state via spectral decomposition.
///
/// Fails with a support violation if an eigenvalue sits at or below the
/// [`EIGENVALUE_FLOOR`].
pub fn matrix_log<T: Real>(rho: &DensityMatrix<T>) -> Result<ComplexMatrix2<T>> {
    let [_, lo] = rho.eigenvalues();
    let floor = real::<T>(EIGENVALUE_FLOOR);
    if lo <= floor {
        return Err(Error::SupportViolation {
            eigenvalue: lo.into(),
            floor: EIGENVALUE_FLOOR,
        });
    }
    Ok(rho.matrix().hermitian_map(|x| x.ln()))
}

/// Trace distance `½ Σ |eig(a - b)|`.
pub fn trace_distance<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> T {
    trace_norm(&(*a.matrix() - *b.matrix())) * real(0.5)
}

/// Trace norm (sum of absolute eigenvalues) of a Hermitian matrix.
pub fn trace_norm<T: Real>(m: &ComplexMatrix2<T>) -> T {
    let [hi, lo] = m.hermitian_eigenvalues();
    hi.abs() + lo.abs()
}
