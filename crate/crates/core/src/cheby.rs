//! Chebyshev interpolation of smooth functions on an interval.
//!
//! Used to tabulate correlation-function kernels once so that nested
//! quadratures can evaluate them at interpolation cost.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Chebyshev interpolant on `[a, b]`.
#[derive(Clone, Debug)]
pub struct Chebyshev<T: Real> {
    a: T,
    b: T,
    /// Folded coefficients: `p(x) = Σ_k coeffs[k] T_k(x)`.
    coeffs: Vec<T>,
    tail: T,
}

impl<T: Real> Chebyshev<T> {
    /// Fit `f` on `[a, b]`, doubling the node count until the relative size
    /// of the trailing coefficients drops below `tol_rel`.
    ///
    /// The integrand may itself fail (it is typically a quadrature); errors
    /// propagate.
    pub fn fit(
        mut f: impl FnMut(T) -> Result<T>,
        a: T,
        b: T,
        tol_rel: T,
        max_n: usize,
    ) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidInput(format!(
                "interpolation interval must be increasing (got [{a}, {b}])"
            )));
        }
        let half = real::<T>(0.5);
        let mid = (a + b) * half;
        let rad = (b - a) * half;
        let pi = T::PI();

        let mut n = 32usize;
        // Values at the Chebyshev–Lobatto points x_j = cos(πj/n); reused on
        // doubling because the old grid is every second point of the new one.
        let mut values: Vec<T> = Vec::new();
        for j in 0..=n {
            let x = (pi * real::<T>(j as f64) / real::<T>(n as f64)).cos();
            values.push(f(mid + rad * x)?);
        }

        loop {
            let coeffs = lobatto_coefficients(&values);
            let scale = coeffs
                .iter()
                .fold(T::zero(), |acc, c| acc.max(c.abs()))
                .max(T::min_positive_value());
            let tail_len = (n / 8).max(2);
            let tail = coeffs[coeffs.len() - tail_len..]
                .iter()
                .fold(T::zero(), |acc, c| acc.max(c.abs()));
            if tail <= tol_rel * scale {
                return Ok(Self {
                    a,
                    b,
                    coeffs,
                    tail,
                });
            }
            if 2 * n > max_n {
                return Err(Error::FitConvergence {
                    achieved: (tail / scale).into(),
                    requested: tol_rel.into(),
                });
            }
            // Double: interleave new values at odd multiples of π/(2n).
            let mut next = Vec::with_capacity(2 * n + 1);
            for j in 0..=2 * n {
                if j % 2 == 0 {
                    next.push(values[j / 2]);
                } else {
                    let x = (pi * real::<T>(j as f64) / real::<T>(2.0 * n as f64)).cos();
                    next.push(f(mid + rad * x)?);
                }
            }
            values = next;
            n *= 2;
        }
    }

    /// Clenshaw evaluation. `x` must lie inside the fitted interval
    /// (a small tolerance of rounding slack is accepted).
    pub fn eval(&self, x: T) -> T {
        let half = real::<T>(0.5);
        let mid = (self.a + self.b) * half;
        let rad = (self.b - self.a) * half;
        let t = ((x - mid) / rad).max(-T::one()).min(T::one());
        let two_t = t + t;
        let mut b1 = T::zero();
        let mut b2 = T::zero();
        for &c in self.coeffs.iter().skip(1).rev() {
            let next = two_t * b1 - b2 + c;
            b2 = b1;
            b1 = next;
        }
        t * b1 - b2 + self.coeffs[0]
    }

    /// Magnitude of the trailing coefficients, a proxy for the interpolation
    /// error.
    pub fn tail_estimate(&self) -> T {
        self.tail
    }

    pub fn interval(&self) -> (T, T) {
        (self.a, self.b)
    }
}

/// Interpolation coefficients from Lobatto samples (type-I DCT, folded so
/// that `p(x) = Σ c_k T_k`).
fn lobatto_coefficients<T: Real>(values: &[T]) -> Vec<T> {
    let n = values.len() - 1;
    let pi = T::PI();
    let nf = real::<T>(n as f64);
    let half = real::<T>(0.5);
    let mut coeffs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let mut sum = values[0] * half;
        for (j, &v) in values.iter().enumerate().skip(1).take(n - 1) {
            sum += v * (pi * real::<T>((j * k) as f64) / nf).cos();
        }
        let end = if k % 2 == 0 { values[n] } else { -values[n] };
        sum += end * half;
        let mut c = sum * real::<T>(2.0) / nf;
        if k == 0 || k == n {
            c *= half;
        }
        coeffs.push(c);
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_smooth_function() {
        let f = |x: f64| (2.5 * x).cos() * (-0.3 * x * x).exp();
        let cheb = Chebyshev::fit(|x| Ok(f(x)), -4.0, 3.0, 1e-14, 1024).unwrap();
        for i in 0..200 {
            let x = -4.0 + 7.0 * (i as f64) / 199.0;
            assert!((cheb.eval(x) - f(x)).abs() < 1e-12, "at {x}");
        }
    }

    #[test]
    fn refuses_rough_function_at_budget() {
        let res = Chebyshev::fit(|x: f64| Ok(x.abs().sqrt()), -1.0, 1.0, 1e-12, 256);
        assert!(matches!(res, Err(Error::FitConvergence { .. })));
    }
}
