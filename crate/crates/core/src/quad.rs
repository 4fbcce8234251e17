//! Adaptive quadrature on finite intervals with per-panel error estimates,
//! plus Gauss rule generation (Legendre and measure-adapted).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::scalar::{internal_tol, real, Real};

/// A value together with an absolute error estimate.
#[derive(Clone, Copy, Debug)]
pub struct Estimate<V, T> {
    pub value: V,
    pub error: T,
}

/// Values an integrand may produce: the working scalar or a complex number
/// over it.
pub trait IntegralValue<T: Real>: Copy + Send {
    fn zero_value() -> Self;
    fn add_value(self, other: Self) -> Self;
    fn scale_value(self, s: T) -> Self;
    fn magnitude(self) -> T;
}

impl<T: Real> IntegralValue<T> for T {
    fn zero_value() -> Self {
        T::zero()
    }
    fn add_value(self, other: Self) -> Self {
        self + other
    }
    fn scale_value(self, s: T) -> Self {
        self * s
    }
    fn magnitude(self) -> T {
        self.abs()
    }
}

impl<T: Real> IntegralValue<T> for Complex<T> {
    fn zero_value() -> Self {
        Complex::zero()
    }
    fn add_value(self, other: Self) -> Self {
        self + other
    }
    fn scale_value(self, s: T) -> Self {
        self * s
    }
    fn magnitude(self) -> T {
        self.norm()
    }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule<T: Real> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    /// Nodes and weights by Newton iteration on the Legendre polynomial.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 2, "rule order must be at least 2");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = real::<T>(n as f64);
        for k in 0..n {
            // Tricomi initial guess.
            let theta = real::<T>(std::f64::consts::PI) * (real::<T>(k as f64) + real::<T>(0.75))
                / (nf + real::<T>(0.5));
            let mut x = theta.cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() <= T::epsilon() * real::<T>(4.0) {
                    break;
                }
            }
            let (_, deriv) = legendre_with_derivative(n, x);
            nodes[k] = x;
            weights[k] = real::<T>(2.0) / ((T::one() - x * x) * deriv * deriv);
        }
        Self { nodes, weights }
    }

    /// Integrate `f` over `[a, b]` with this fixed rule.
    pub fn integrate<V, F>(&self, f: &F, a: T, b: T) -> V
    where
        V: IntegralValue<T>,
        F: Fn(T) -> V,
    {
        let half = (b - a) * real::<T>(0.5);
        let mid = (a + b) * real::<T>(0.5);
        let mut sum = V::zero_value();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            sum = sum.add_value(f(mid + half * x).scale_value(w));
        }
        sum.scale_value(half)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = (b - a) * real::<T>(0.5);
        let mid = (a + b) * real::<T>(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

fn legendre_with_derivative<T: Real>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    for j in 2..=n {
        let jf = real::<T>(j as f64);
        let p2 = ((real::<T>(2.0) * jf - T::one()) * x * p1 - (jf - T::one()) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let dp = real::<T>(n as f64) * (x * p1 - p0) / (x * x - T::one());
    (p1, dp)
}

/// Options for the adaptive integrator.
#[derive(Clone, Copy, Debug)]
pub struct IntegratorOptions<T> {
    /// Absolute error target.
    pub abs_tol: T,
    /// Relative error target (against the accumulated value).
    pub rel_tol: T,
    /// Number of uniform panels the interval is seeded with.
    pub initial_panels: usize,
    /// Refinement budget before giving up.
    pub max_panels: usize,
}

impl<T: Real> IntegratorOptions<T> {
    pub fn with_tolerance(abs_tol: T) -> Self {
        Self {
            abs_tol,
            rel_tol: internal_tol(1e-14),
            initial_panels: 8,
            max_panels: 30_000,
        }
    }
}

struct Panel<V, T> {
    a: T,
    b: T,
    value: V,
    error: T,
}

impl<V, T: Real> PartialEq for Panel<V, T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<V, T: Real> Eq for Panel<V, T> {}
impl<V, T: Real> PartialOrd for Panel<V, T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V, T: Real> Ord for Panel<V, T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive quadrature driven by a low/high Gauss rule pair.
///
/// The worst panel (largest `|high - low|` discrepancy) is bisected until the
/// summed discrepancy meets the tolerance.
pub struct Integrator<T: Real> {
    low: GaussRule<T>,
    high: GaussRule<T>,
    opts: IntegratorOptions<T>,
}

impl<T: Real> Integrator<T> {
    pub fn new(opts: IntegratorOptions<T>) -> Self {
        Self {
            low: GaussRule::legendre(15),
            high: GaussRule::legendre(25),
            opts,
        }
    }

    pub fn with_tolerance(abs_tol: T) -> Self {
        Self::new(IntegratorOptions::with_tolerance(abs_tol))
    }

    fn evaluate_panel<V, F>(&self, f: &F, a: T, b: T) -> Result<Panel<V, T>>
    where
        V: IntegralValue<T>,
        F: Fn(T) -> V,
    {
        let lo: V = self.low.integrate(f, a, b);
        let hi: V = self.high.integrate(f, a, b);
        let error = hi.add_value(lo.scale_value(-T::one())).magnitude();
        if !error.is_finite() || !hi.magnitude().is_finite() {
            return Err(Error::InvalidInput(
                "integrand produced a non-finite value".into(),
            ));
        }
        Ok(Panel {
            a,
            b,
            value: hi,
            error,
        })
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<V, F>(&self, f: F, a: T, b: T) -> Result<Estimate<V, T>>
    where
        V: IntegralValue<T>,
        F: Fn(T) -> V,
    {
        self.integrate_seeded(f, a, b, self.opts.initial_panels)
    }

    /// Integrate with an explicit number of initial uniform panels; useful
    /// when the caller knows the oscillation scale of the integrand.
    pub fn integrate_seeded<V, F>(
        &self,
        f: F,
        a: T,
        b: T,
        initial_panels: usize,
    ) -> Result<Estimate<V, T>>
    where
        V: IntegralValue<T>,
        F: Fn(T) -> V,
    {
        if !(b > a) {
            return Err(Error::InvalidInput(format!(
                "integration bounds must be increasing (got [{a}, {b}])"
            )));
        }
        let n0 = initial_panels.clamp(1, self.opts.max_panels);
        let width = (b - a) / real::<T>(n0 as f64);
        let mut heap: BinaryHeap<Panel<V, T>> = BinaryHeap::new();
        let mut total_err = T::zero();
        let mut total_mag = T::zero();
        for i in 0..n0 {
            let pa = a + width * real::<T>(i as f64);
            let pb = if i + 1 == n0 {
                b
            } else {
                a + width * real::<T>((i + 1) as f64)
            };
            let p = self.evaluate_panel(&f, pa, pb)?;
            total_err += p.error;
            total_mag += p.value.magnitude();
            heap.push(p);
        }

        let tolerance =
            |mag: T, opts: &IntegratorOptions<T>| opts.abs_tol.max(opts.rel_tol * mag);

        while total_err > tolerance(total_mag, &self.opts) {
            if heap.len() >= self.opts.max_panels {
                return Err(Error::QuadratureConvergence {
                    achieved: total_err.into(),
                    requested: tolerance(total_mag, &self.opts).into(),
                });
            }
            let worst = heap.pop().expect("heap is non-empty");
            total_err -= worst.error;
            total_mag -= worst.value.magnitude();
            let mid = (worst.a + worst.b) * real::<T>(0.5);
            if mid <= worst.a || mid >= worst.b {
                // Interval narrower than the floating-point grid; accept it.
                heap.push(worst);
                break;
            }
            for (pa, pb) in [(worst.a, mid), (mid, worst.b)] {
                let p = self.evaluate_panel(&f, pa, pb)?;
                total_err += p.error;
                total_mag += p.value.magnitude();
                heap.push(p);
            }
        }

        // One final clean summation over all panels.
        let mut value = V::zero_value();
        let mut error = T::zero();
        for p in heap.iter() {
            value = value.add_value(p.value);
            error += p.error;
        }
        Ok(Estimate { value, error })
    }
}

/// Nodes and squared weights of a Gauss rule adapted to a measure.
#[derive(Clone, Debug)]
pub struct MeasureRule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

/// Build the `k`-point Gauss rule for the measure `density(x) dx` on
/// `[a, b]`, so that `Σ w_i f(x_i) ≈ ∫ density f`.
///
/// Uses the discretized Stieltjes procedure on an `n_ref`-point Legendre
/// grid followed by a Sturm-bisection solve of the Jacobi matrix.
pub fn gauss_from_measure<T: Real>(
    density: impl Fn(T) -> T,
    a: T,
    b: T,
    k: usize,
    n_ref: usize,
) -> Result<MeasureRule<T>> {
    if k == 0 {
        return Err(Error::InvalidInput("need at least one node".into()));
    }
    if n_ref < 4 * k {
        return Err(Error::InvalidInput(format!(
            "reference grid ({n_ref}) too coarse for {k} nodes"
        )));
    }
    let reference = GaussRule::legendre(n_ref);
    let mut xs = Vec::with_capacity(n_ref);
    let mut ws = Vec::with_capacity(n_ref);
    for (x, w) in reference.mapped(a, b) {
        let d = density(x);
        if d < -real::<T>(1e-12) {
            return Err(Error::InvalidInput(format!(
                "measure density is negative at x = {x}"
            )));
        }
        xs.push(x);
        ws.push(w * d.max(T::zero()));
    }
    let beta0: T = ws.iter().fold(T::zero(), |acc, &w| acc + w);
    if !(beta0 > T::zero()) {
        return Err(Error::InvalidInput("measure has no mass".into()));
    }

    // Monic three-term recurrence by discretized Stieltjes.
    let n = xs.len();
    let mut alphas = vec![T::zero(); k];
    let mut betas = vec![T::zero(); k]; // betas[0] = beta0 by convention
    betas[0] = beta0;
    let mut p_prev = vec![T::zero(); n];
    let mut p_cur = vec![T::one(); n];
    let mut norm_cur = beta0;
    for j in 0..k {
        let mut xp = T::zero();
        for i in 0..n {
            xp += ws[i] * xs[i] * p_cur[i] * p_cur[i];
        }
        alphas[j] = xp / norm_cur;
        if j + 1 < k {
            let beta_j = if j == 0 { T::zero() } else { betas[j] };
            let mut p_next = vec![T::zero(); n];
            for i in 0..n {
                p_next[i] = (xs[i] - alphas[j]) * p_cur[i] - beta_j * p_prev[i];
            }
            let mut norm_next = T::zero();
            for i in 0..n {
                norm_next += ws[i] * p_next[i] * p_next[i];
            }
            betas[j + 1] = norm_next / norm_cur;
            p_prev = p_cur;
            p_cur = p_next;
            norm_cur = norm_next;
        }
    }

    // Jacobi matrix: diagonal alphas, off-diagonal sqrt(betas[1..]).
    let off: Vec<T> = betas[1..].iter().map(|&b| b.sqrt()).collect();
    let nodes = tridiagonal_eigenvalues(&alphas, &off);

    // Golub–Welsch weights via the orthonormal polynomials.
    let mut weights = Vec::with_capacity(k);
    for &lambda in &nodes {
        let mut sum_sq = T::zero();
        let mut q_prev = T::zero();
        let mut q_cur = T::one() / beta0.sqrt();
        sum_sq += q_cur * q_cur;
        for j in 0..k - 1 {
            let bj = if j == 0 { T::zero() } else { off[j - 1] };
            let q_next = ((lambda - alphas[j]) * q_cur - bj * q_prev) / off[j];
            q_prev = q_cur;
            q_cur = q_next;
            sum_sq += q_cur * q_cur;
        }
        weights.push(T::one() / sum_sq);
    }
    Ok(MeasureRule { nodes, weights })
}

/// Eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence bisection,
/// ascending.
pub fn tridiagonal_eigenvalues<T: Real>(diag: &[T], off: &[T]) -> Vec<T> {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal length must be n-1");
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![diag[0]];
    }
    // Gershgorin bounds.
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let mut radius = T::zero();
        if i > 0 {
            radius += off[i - 1].abs();
        }
        if i + 1 < n {
            radius += off[i].abs();
        }
        lo = lo.min(diag[i] - radius);
        hi = hi.max(diag[i] + radius);
    }
    let span = (hi - lo).max(T::epsilon());
    lo -= span * T::epsilon();
    hi += span * T::epsilon();

    let count_below = |x: T| -> usize {
        let tiny = T::min_positive_value();
        let mut count = 0;
        let mut d = diag[0] - x;
        if d < T::zero() {
            count += 1;
        }
        for i in 1..n {
            if d.abs() < tiny {
                d = tiny;
            }
            d = (diag[i] - x) - off[i - 1] * off[i - 1] / d;
            if d < T::zero() {
                count += 1;
            }
        }
        count
    };

    (0..n)
        .map(|idx| {
            let mut a = lo;
            let mut b = hi;
            for _ in 0..160 {
                let mid = (a + b) * real::<T>(0.5);
                if mid <= a || mid >= b {
                    break;
                }
                if count_below(mid) > idx {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            (a + b) * real::<T>(0.5)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn legendre_rule_reference_values() {
        // 5-point nodes/weights against published values.
        let rule = GaussRule::<f64>::legendre(5);
        let mut nodes = rule.nodes.clone();
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let expected = [
            -0.906179845938664,
            -0.538469310105683,
            0.0,
            0.538469310105683,
            0.906179845938664,
        ];
        for (n, e) in nodes.iter().zip(expected) {
            assert!((n - e).abs() < 1e-14, "node {n} vs {e}");
        }
        let weight_sum: f64 = rule.weights.iter().sum();
        assert!((weight_sum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_is_exact() {
        let rule = GaussRule::<f64>::legendre(8);
        let value: f64 = rule.integrate(&|x: f64| x.powi(14) - 3.0 * x.powi(3) + 1.0, -1.0, 1.0);
        let exact = 2.0 / 15.0 + 2.0;
        assert!((value - exact).abs() < 1e-13);
    }

    #[test]
    fn adaptive_oscillatory_integral() {
        let quad = Integrator::with_tolerance(1e-12);
        // ∫_0^10 cos(20 x) e^{-x} dx has a closed form.
        let est = quad
            .integrate(|x: f64| (20.0 * x).cos() * (-x).exp(), 0.0, 10.0)
            .unwrap();
        let exact = (1.0 - (-10.0f64).exp() * ((200.0f64).cos() - 20.0 * (200.0f64).sin()))
            / 401.0;
        assert!((est.value - exact).abs() < 1e-11, "err {}", est.value - exact);
    }

    #[test]
    fn adaptive_complex_integral() {
        let quad = Integrator::with_tolerance(1e-12);
        // ∫_0^1 e^{i ω x} dx = (e^{iω} - 1)/(iω)
        let omega = 13.0;
        let est = quad
            .integrate(
                |x: f64| Complex64::new(0.0, omega * x).exp(),
                0.0,
                1.0,
            )
            .unwrap();
        let exact = (Complex64::new(0.0, omega).exp() - 1.0) / Complex64::new(0.0, omega);
        assert!((est.value - exact).norm() < 1e-11);
    }

    #[test]
    fn convergence_failure_is_reported() {
        let opts = IntegratorOptions {
            abs_tol: 1e-13,
            rel_tol: 1e-15,
            initial_panels: 1,
            max_panels: 4,
        };
        let quad = Integrator::new(opts);
        let res = quad.integrate(|x: f64| (300.0 * x).cos().abs(), 0.0, 10.0);
        assert!(matches!(res, Err(Error::QuadratureConvergence { .. })));
    }

    #[test]
    fn tridiagonal_eigenvalues_match_known_matrix() {
        // Second-difference matrix of size 4: eigenvalues 2 - 2 cos(kπ/5).
        let diag = [2.0f64; 4];
        let off = [-1.0f64; 3];
        let eig = tridiagonal_eigenvalues(&diag, &off);
        for (i, &e) in eig.iter().enumerate() {
            let expected = 2.0 - 2.0 * (std::f64::consts::PI * (i + 1) as f64 / 5.0).cos();
            assert!((e - expected).abs() < 1e-12, "{e} vs {expected}");
        }
    }

    #[test]
    fn measure_rule_reproduces_legendre() {
        // Unit density on [-1, 1] must recover the Legendre rule.
        let rule = gauss_from_measure(|_: f64| 1.0, -1.0, 1.0, 5, 200).unwrap();
        let reference = GaussRule::<f64>::legendre(5);
        let mut expected: Vec<f64> = reference.nodes.clone();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (n, e) in rule.nodes.iter().zip(expected) {
            assert!((n - e).abs() < 1e-10, "{n} vs {e}");
        }
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-12);
    }

    #[test]
    fn measure_rule_integrates_smooth_functions() {
        // Gaussian-weighted moments on [0, 8].
        let density = |x: f64| x * (-x * x / 4.0).exp();
        let rule = gauss_from_measure(density, 0.0, 8.0, 10, 400).unwrap();
        let quad = Integrator::with_tolerance(1e-13);
        for f in [
            |x: f64| x.cos(),
            |x: f64| 1.0 / (1.0 + x),
            |x: f64| (0.3 * x).sin() + x,
        ] {
            let approx: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &w)| w * f(x))
                .sum();
            let exact = quad
                .integrate(|x: f64| density(x) * f(x), 0.0, 8.0)
                .unwrap()
                .value;
            assert!((approx - exact).abs() < 1e-5, "{approx} vs {exact}");
        }
    }
}
