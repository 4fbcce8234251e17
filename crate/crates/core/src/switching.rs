//! Compactly supported switching functions and the ordered two-leg coupling
//! protocols they define.

use num_complex::Complex;

use crate::algebra::Observable;
use crate::error::{Error, Result};
use crate::quad::{Estimate, Integrator};
use crate::scalar::{internal_tol, real, Real};

/// Profile shape of a switching window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `A cos²(π(τ-t₀)/(2w))` inside the support; Fourier transform in
    /// closed form.
    CosineBump,
    /// `A exp(1 - 1/(1-u²))`, `u = (τ-t₀)/w`; smooth at the support edge.
    SmoothBump,
}

/// A non-negative switching profile supported exactly on `[t₀-w, t₀+w]`.
#[derive(Clone, Copy, Debug)]
pub struct SwitchingFunction<T: Real> {
    shape: Shape,
    center: T,
    half_width: T,
    amplitude: T,
}

impl<T: Real> SwitchingFunction<T> {
    pub fn new(shape: Shape, center: T, half_width: T, amplitude: T) -> Result<Self> {
        if !(half_width > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "half width must be positive (got {half_width})"
            )));
        }
        if amplitude < T::zero() {
            return Err(Error::InvalidInput(format!(
                "amplitude must be non-negative (got {amplitude})"
            )));
        }
        Ok(Self {
            shape,
            center,
            half_width,
            amplitude,
        })
    }

    pub fn cosine_bump(center: T, half_width: T, amplitude: T) -> Result<Self> {
        Self::new(Shape::CosineBump, center, half_width, amplitude)
    }

    pub fn smooth_bump(center: T, half_width: T, amplitude: T) -> Result<Self> {
        Self::new(Shape::SmoothBump, center, half_width, amplitude)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn center(&self) -> T {
        self.center
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    pub fn amplitude(&self) -> T {
        self.amplitude
    }

    /// Support interval `[t₀-w, t₀+w]`.
    pub fn support(&self) -> (T, T) {
        (self.center - self.half_width, self.center + self.half_width)
    }

    /// χ(τ); identically zero outside the support.
    pub fn evaluate(&self, tau: T) -> T {
        let u = (tau - self.center) / self.half_width;
        if u.abs() >= T::one() {
            return T::zero();
        }
        match self.shape {
            Shape::CosineBump => {
                let c = (T::PI() * u * real::<T>(0.5)).cos();
                self.amplitude * c * c
            }
            Shape::SmoothBump => {
                self.amplitude * (T::one() - T::one() / (T::one() - u * u)).exp()
            }
        }
    }

    /// Fourier transform `χ̃(ω) = ∫ χ(τ) e^{iωτ} dτ`.
    ///
    /// Closed form for the cosine bump (a short sum of sinc terms times the
    /// translation phase), adaptive quadrature for the smooth bump.
    pub fn fourier(&self, omega: T) -> Result<Estimate<Complex<T>, T>> {
        let phase = Complex::new(T::zero(), omega * self.center).exp();
        let x = omega * self.half_width;
        match self.shape {
            Shape::CosineBump => {
                let pi = T::PI();
                let half = real::<T>(0.5);
                let envelope = sinc(x) + half * (sinc(x - pi) + sinc(x + pi));
                let value = phase.scale(self.amplitude * self.half_width * envelope);
                Ok(Estimate {
                    value,
                    error: T::zero(),
                })
            }
            Shape::SmoothBump => {
                // Even profile: transform is a cosine integral times the phase.
                let quad = Integrator::with_tolerance(internal_tol(1e-13));
                let panels = (x.abs().into() / 3.0).ceil().max(4.0) as usize;
                let est = quad.integrate_seeded(
                    |u: T| {
                        let v = T::one() - u * u;
                        if v <= T::zero() {
                            T::zero()
                        } else {
                            (T::one() - T::one() / v).exp() * (x * u).cos()
                        }
                    },
                    -T::one(),
                    T::one(),
                    panels,
                )?;
                let scale = self.amplitude * self.half_width;
                Ok(Estimate {
                    value: phase.scale(scale * est.value),
                    error: scale * est.error,
                })
            }
        }
    }

    /// ∫ χ dτ, through the zero-frequency transform.
    pub fn integral(&self) -> Result<Estimate<T, T>> {
        let est = self.fourier(T::zero())?;
        Ok(Estimate {
            value: est.value.re,
            error: est.error,
        })
    }
}

fn sinc<T: Real>(x: T) -> T {
    if x.abs() < real(1e-4) {
        let x2 = x * x;
        T::one() - x2 / real::<T>(6.0) + x2 * x2 / real::<T>(120.0)
    } else {
        x.sin() / x
    }
}

/// Whether two supports are strictly disjoint, along with the gap between
/// them (negative when they overlap).
pub fn supports_disjoint<T: Real>(
    a: &SwitchingFunction<T>,
    b: &SwitchingFunction<T>,
) -> (bool, T) {
    let gap = (a.center - b.center).abs() - (a.half_width + b.half_width);
    (gap > T::zero(), gap)
}

/// Which composition order a two-leg protocol is applied in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProtocolOrder {
    FirstThenSecond,
    SecondThenFirst,
}

impl ProtocolOrder {
    pub fn reversed(self) -> Self {
        match self {
            Self::FirstThenSecond => Self::SecondThenFirst,
            Self::SecondThenFirst => Self::FirstThenSecond,
        }
    }
}

/// One interaction leg: a detector observable switched by a compact profile.
#[derive(Clone, Copy, Debug)]
pub struct Leg<T: Real> {
    pub observable: Observable<T>,
    pub switching: SwitchingFunction<T>,
}

impl<T: Real> Leg<T> {
    pub fn new(observable: Observable<T>, switching: SwitchingFunction<T>) -> Self {
        Self {
            observable,
            switching,
        }
    }
}

/// An ordered pair of legs with a common coupling strength λ.
///
/// Construction requires the two supports to be disjoint with a strictly
/// positive gap, so the time-ordered evolution factorizes into the two leg
/// unitaries without boundary ambiguity.
#[derive(Clone, Copy, Debug)]
pub struct Protocol<T: Real> {
    first: Leg<T>,
    second: Leg<T>,
    lambda: T,
}

impl<T: Real> Protocol<T> {
    pub fn new(first: Leg<T>, second: Leg<T>, lambda: T) -> Result<Self> {
        let (disjoint, gap) = supports_disjoint(&first.switching, &second.switching);
        if !disjoint {
            return Err(Error::OverlappingSupports { gap: gap.into() });
        }
        Ok(Self {
            first,
            second,
            lambda,
        })
    }

    pub fn first(&self) -> &Leg<T> {
        &self.first
    }

    pub fn second(&self) -> &Leg<T> {
        &self.second
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: T) -> Self {
        Self { lambda, ..*self }
    }

    /// The same legs composed in the opposite order.
    pub fn reversed(&self) -> Self {
        Self {
            first: self.second,
            second: self.first,
            lambda: self.lambda,
        }
    }

    /// Gap between the two supports.
    pub fn support_gap(&self) -> T {
        supports_disjoint(&self.first.switching, &self.second.switching).1
    }
}
