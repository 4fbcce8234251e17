//! Information geometry of effective two-level Gibbs states with rotated
//! generators: relative entropy, its closed form on the rotation family, and
//! the BKM and Bures metrics with independent numerical cross-checks.
//!
//! The family is `ρ_θ = e^{-s σ_θ} / (2 cosh s)` with
//! `σ_θ = cos θ σ_x + sin θ σ_y`; every closed form below is checked against
//! a generic eigendecomposition route.
//!
//! Metric conventions: the BKM metric is normalized through the expansion
//! `D(ρ_θ‖ρ_0) ≈ ½ g θ²` and the Bures metric through
//! `g = lim 4 d_B²/θ²` with `d_B² = 2(1-√F)`; these are the unique
//! normalizations under which the finite-difference cross-checks reproduce
//! `s tanh s` and `tanh² s` simultaneously.

use crate::algebra::{
    matrix_exp, matrix_log, pauli_gibbs, ComplexMatrix2, DensityMatrix, EIGENVALUE_FLOOR,
};
use crate::error::{Error, Result};
use crate::scalar::{real, Real};

/// Relative entropy, with the infinite (support-violating) case kept as a
/// distinct signal so callers must branch instead of comparing magnitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Divergence<T> {
    Finite(T),
    Infinite,
}

impl<T: Real> Divergence<T> {
    pub fn is_finite(&self) -> bool {
        matches!(self, Self::Finite(_))
    }

    pub fn finite(self) -> Option<T> {
        match self {
            Self::Finite(v) => Some(v),
            Self::Infinite => None,
        }
    }

    pub fn expect_finite(self, context: &str) -> T {
        match self {
            Self::Finite(v) => v,
            Self::Infinite => panic!("divergence is infinite: {context}"),
        }
    }
}

/// The one-parameter family of effective Gibbs states with generator rotated
/// in the x–y operator plane.
#[derive(Clone, Copy, Debug)]
pub struct RotationFamily<T: Real> {
    s: T,
}

impl<T: Real> RotationFamily<T> {
    pub fn new(s: T) -> Result<Self> {
        if s < T::zero() {
            return Err(Error::InvalidInput(format!(
                "family parameter s must be non-negative (got {s})"
            )));
        }
        Ok(Self { s })
    }

    pub fn s(&self) -> T {
        self.s
    }

    /// `ρ_θ = (I - tanh s · σ_θ)/2`.
    pub fn state(&self, theta: T) -> DensityMatrix<T> {
        pauli_gibbs([theta.cos(), theta.sin(), T::zero()], self.s)
            .expect("rotation direction is unit by construction")
    }
}

/// `D(ρ‖σ) = Tr(ρ log ρ - ρ log σ)` through the closed-form
/// eigendecompositions, clamped to zero within `1e-12` of it.
pub fn relative_entropy<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Divergence<T> {
    let floor = real::<T>(EIGENVALUE_FLOOR);
    let [_, sigma_lo] = sigma.eigenvalues();
    if sigma_lo <= floor {
        // Rank-deficient σ: in two dimensions the support condition forces
        // ρ = σ, giving zero; anything else diverges.
        return if (*rho.matrix() - *sigma.matrix()).max_abs() <= real(1e-12) {
            Divergence::Finite(T::zero())
        } else {
            Divergence::Infinite
        };
    }
    let [p_hi, p_lo] = rho.eigenvalues();
    let plogp = |p: T| if p > floor { p * p.ln() } else { T::zero() };
    let entropy_term = plogp(p_hi) + plogp(p_lo);
    let log_sigma = matrix_log(sigma).expect("σ verified full rank");
    let cross_term = (*rho.matrix() * log_sigma).trace().re;
    let d = entropy_term - cross_term;
    if d.abs() <= real(1e-12) {
        Divergence::Finite(T::zero())
    } else {
        Divergence::Finite(d)
    }
}

/// Closed form of `D(ρ_θ‖ρ_0)` on the rotation family:
/// `s tanh s (1 - cos θ)`.
pub fn family_entropy_closed<T: Real>(s: T, theta: T) -> T {
    s * s.tanh() * (T::one() - theta.cos())
}

/// `D(ρ_θ‖ρ_0)` computed generically, with the closed form asserted against
/// it to `1e-12`.
pub fn relative_entropy_family<T: Real>(s: T, theta: T) -> Result<T> {
    let family = RotationFamily::new(s)?;
    let generic = relative_entropy(&family.state(theta), &family.state(T::zero()))
        .expect_finite("rotation family is full rank");
    let closed = family_entropy_closed(s, theta);
    if (generic - closed).abs() > real(1e-12) {
        let gap: f64 = (generic - closed).abs().into();
        return Err(Error::Consistency(format!(
            "family relative entropy disagrees with closed form by {gap:e}"
        )));
    }
    Ok(generic)
}

/// A metric value together with its finite-difference cross-check residual.
#[derive(Clone, Copy, Debug)]
pub struct MetricValue<T> {
    pub value: T,
    /// `|finite difference - closed form| / max(closed form, 1e-12)`.
    pub crosscheck_residual: T,
    /// False when the family is too close to pure for the generic route
    /// (eigenvalues under the support floor), in which case the residual is
    /// reported as zero.
    pub crosscheck_ran: bool,
}

/// Relative tolerance of the finite-difference metric cross-checks.
pub const METRIC_CROSSCHECK_TOL: f64 = 1e-5;

/// Finite-difference step for the metric cross-checks, refined once by
/// Richardson extrapolation at half step.
pub const METRIC_FD_THETA: f64 = 1e-3;

fn crosscheck_feasible<T: Real>(s: T) -> bool {
    // The quadratic expansion at θ = 1e-3 produces differences of order
    // 1e-7·g, resolvable only when the scalar carries double precision, and
    // the generic route needs both family eigenvalues comfortably above the
    // logarithm support floor.
    if T::epsilon() > real(1e-12) {
        return false;
    }
    let lo = (T::one() - s.tanh()) * real::<T>(0.5);
    lo > real::<T>(EIGENVALUE_FLOOR) * real::<T>(1e3)
}

fn richardson<T: Real>(quotient: impl Fn(T) -> T) -> T {
    let theta = real::<T>(METRIC_FD_THETA);
    let coarse = quotient(theta);
    let fine = quotient(theta * real::<T>(0.5));
    (real::<T>(4.0) * fine - coarse) / real::<T>(3.0)
}

fn residual_against<T: Real>(fd: T, closed: T) -> T {
    (fd - closed).abs() / closed.abs().max(real(1e-12))
}

/// BKM metric on the rotation family: `s tanh s`, cross-checked against the
/// quadratic expansion `D(ρ_θ‖ρ_0) ≈ ½ g θ²` evaluated with the generic
/// relative entropy.
pub fn bkm_metric<T: Real>(s: T) -> Result<MetricValue<T>> {
    let family = RotationFamily::new(s)?;
    let value = s * s.tanh();
    if !crosscheck_feasible(s) {
        return Ok(MetricValue {
            value,
            crosscheck_residual: T::zero(),
            crosscheck_ran: false,
        });
    }
    let origin = family.state(T::zero());
    let fd = richardson(|theta: T| {
        let d = relative_entropy(&family.state(theta), &origin)
            .expect_finite("family state is full rank");
        real::<T>(2.0) * d / (theta * theta)
    });
    let crosscheck_residual = residual_against(fd, value);
    if crosscheck_residual > real(METRIC_CROSSCHECK_TOL) {
        let r: f64 = crosscheck_residual.into();
        return Err(Error::Consistency(format!(
            "BKM finite-difference cross-check residual {r:e} exceeds {METRIC_CROSSCHECK_TOL:e}"
        )));
    }
    Ok(MetricValue {
        value,
        crosscheck_residual,
        crosscheck_ran: true,
    })
}

/// Uhlmann fidelity of two qubit states from their Bloch vectors:
/// `F = ½ (1 + r⃗·r⃗' + √((1-|r⃗|²)(1-|r⃗'|²)))`.
pub fn fidelity<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> T {
    let ra = a.bloch_vector();
    let rb = b.bloch_vector();
    let dot = ra[0] * rb[0] + ra[1] * rb[1] + ra[2] * rb[2];
    let pa = (T::one() - ra.iter().fold(T::zero(), |acc, &x| acc + x * x)).max(T::zero());
    let pb = (T::one() - rb.iter().fold(T::zero(), |acc, &x| acc + x * x)).max(T::zero());
    ((T::one() + dot + (pa * pb).sqrt()) * real(0.5)).min(T::one())
}

/// Bures metric on the rotation family: `tanh² s`, cross-checked against the
/// fidelity route `g = lim 4·d_B²/θ²` with `d_B² = 2(1-√F)`.
pub fn bures_metric<T: Real>(s: T) -> Result<MetricValue<T>> {
    let family = RotationFamily::new(s)?;
    let t = s.tanh();
    let value = t * t;
    if T::epsilon() > real(1e-12) {
        return Ok(MetricValue {
            value,
            crosscheck_residual: T::zero(),
            crosscheck_ran: false,
        });
    }
    let origin = family.state(T::zero());
    let fd = richardson(|theta: T| {
        let f = fidelity(&family.state(theta), &origin);
        let d_b2 = real::<T>(2.0) * (T::one() - f.sqrt());
        real::<T>(4.0) * d_b2 / (theta * theta)
    });
    let crosscheck_residual = residual_against(fd, value);
    if crosscheck_residual > real(METRIC_CROSSCHECK_TOL) {
        let r: f64 = crosscheck_residual.into();
        return Err(Error::Consistency(format!(
            "Bures finite-difference cross-check residual {r:e} exceeds {METRIC_CROSSCHECK_TOL:e}"
        )));
    }
    Ok(MetricValue {
        value,
        crosscheck_residual,
        crosscheck_ran: true,
    })
}

/// `g_BKM / g_Bures = s / tanh s`, extended continuously to 1 at s = 0.
pub fn metric_ratio<T: Real>(s: T) -> T {
    if s.abs() < real(1e-8) {
        T::one() + s * s / real::<T>(3.0)
    } else {
        s / s.tanh()
    }
}

/// Modular generator `K = -log ρ` of a faithful state.
pub fn modular_generator<T: Real>(rho: &DensityMatrix<T>) -> Result<ComplexMatrix2<T>> {
    Ok(-matrix_log(rho)?)
}

/// Everything the geometry layer reports for one value of `s = βΔ`.
#[derive(Clone, Copy, Debug)]
pub struct GeometryReport<T: Real> {
    pub s: T,
    /// `D(ρ_y ‖ ρ_x)` from the generic routine.
    pub relative_entropy: T,
    pub bkm: T,
    pub bures: T,
    pub ratio: T,
    pub bkm_residual: T,
    pub bures_residual: T,
}

/// Compute the full geometry row at one `s`.
pub fn geometry_report<T: Real>(s: T) -> Result<GeometryReport<T>> {
    let family = RotationFamily::new(s)?;
    let d = relative_entropy(
        &family.state(T::FRAC_PI_2()),
        &family.state(T::zero()),
    )
    .expect_finite("family states are full rank");
    let bkm = bkm_metric(s)?;
    let bures = bures_metric(s)?;
    Ok(GeometryReport {
        s,
        relative_entropy: d,
        bkm: bkm.value,
        bures: bures.value,
        ratio: metric_ratio(s),
        bkm_residual: bkm.crosscheck_residual,
        bures_residual: bures.crosscheck_residual,
    })
}

/// One row of the positivity table.
#[derive(Clone, Copy, Debug)]
pub struct PositivityRow<T> {
    pub s: T,
    pub divergence: T,
}

/// Tabulated `D(ρ_y‖ρ_x)` over an `s` grid with the headline structural
/// facts: non-negativity everywhere, strict growth, and a unique zero at
/// `s = 0`.
#[derive(Clone, Debug)]
pub struct PositivityReport<T> {
    pub rows: Vec<PositivityRow<T>>,
    pub all_non_negative: bool,
    pub strictly_increasing: bool,
    pub zero_count: usize,
}

pub fn entropy_positivity_report<T: Real>(grid: &[T]) -> Result<PositivityReport<T>> {
    let mut rows = Vec::with_capacity(grid.len());
    for &s in grid {
        let family = RotationFamily::new(s)?;
        let divergence = relative_entropy(
            &family.state(T::FRAC_PI_2()),
            &family.state(T::zero()),
        )
        .expect_finite("family states are full rank");
        rows.push(PositivityRow { s, divergence });
    }
    let all_non_negative = rows.iter().all(|r| r.divergence >= T::zero());
    let strictly_increasing = rows
        .windows(2)
        .all(|w| w[1].divergence > w[0].divergence || w[1].s <= w[0].s);
    let zero_count = rows
        .iter()
        .filter(|r| r.divergence <= real(1e-12))
        .count();
    Ok(PositivityReport {
        rows,
        all_non_negative,
        strictly_increasing,
        zero_count,
    })
}

/// `e^{-K}/Tr e^{-K}`, the inverse of [`modular_generator`].
pub fn gibbs_from_generator<T: Real>(k: &ComplexMatrix2<T>) -> Result<DensityMatrix<T>> {
    let unnormalized = matrix_exp(&-*k);
    let z = unnormalized.trace().re;
    DensityMatrix::new(unnormalized.scale(T::one() / z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Observable;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_density(rng: &mut impl Rng) -> DensityMatrix<f64> {
        loop {
            let r: [f64; 3] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let n = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if n < 0.98 {
                return DensityMatrix::from_bloch(r).unwrap();
            }
        }
    }

    #[test]
    fn self_entropy_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..20 {
            let rho = random_density(&mut rng);
            assert_eq!(relative_entropy(&rho, &rho).finite(), Some(0.0));
        }
    }

    #[test]
    fn headline_value_at_s_one() {
        let family = RotationFamily::new(1.0).unwrap();
        let d = relative_entropy(
            &family.state(std::f64::consts::FRAC_PI_2),
            &family.state(0.0),
        )
        .expect_finite("full rank");
        assert!((d - 0.761_594_155_955_764_9).abs() <= 1e-12);
    }

    #[test]
    fn closed_form_across_s() {
        for &s in &[0.1, 0.5, 1.0, 2.0, 5.0] {
            let family = RotationFamily::new(s).unwrap();
            let d = relative_entropy(
                &family.state(std::f64::consts::FRAC_PI_2),
                &family.state(0.0),
            )
            .expect_finite("full rank");
            assert!(
                (d - s * s.tanh()).abs() <= 1e-12,
                "s = {s}: {d} vs {}",
                s * s.tanh()
            );
        }
    }

    #[test]
    fn family_entropy_examples() {
        assert_eq!(relative_entropy_family(0.7, 0.0).unwrap(), 0.0);
        let s = 1.3;
        let d = relative_entropy_family(s, std::f64::consts::FRAC_PI_2).unwrap();
        assert!((d - s * s.tanh()).abs() <= 1e-12);
        // θ = π, s = 1: the antipodal pair gives 2 tanh 1.
        let d = relative_entropy_family(1.0, std::f64::consts::PI).unwrap();
        assert!((d - 1.523_188_311_911_529_7).abs() <= 1e-12);
    }

    #[test]
    fn family_entropy_is_symmetric_under_argument_exchange() {
        let family = RotationFamily::new(1.7).unwrap();
        for i in 1..8 {
            let theta = 0.4 * i as f64;
            let fwd = relative_entropy(&family.state(theta), &family.state(0.0))
                .expect_finite("full rank");
            let rev = relative_entropy(&family.state(0.0), &family.state(theta))
                .expect_finite("full rank");
            assert!((fwd - rev).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_is_positive_and_faithful_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(67);
        for _ in 0..50 {
            let a = random_density(&mut rng);
            let b = random_density(&mut rng);
            let d = relative_entropy(&a, &b).expect_finite("full rank samples");
            assert!(d >= 0.0);
            let gap = (*a.matrix() - *b.matrix()).max_abs();
            if gap > 1e-3 {
                assert!(d > 0.0, "distinct states must have positive divergence");
            }
        }
    }

    #[test]
    fn support_violation_is_a_distinct_signal() {
        let pure = DensityMatrix::z_plus();
        let mixed = DensityMatrix::maximally_mixed();
        assert_eq!(relative_entropy(&mixed, &pure), Divergence::Infinite);
        assert_eq!(relative_entropy(&pure, &pure).finite(), Some(0.0));
        // Full-rank σ always gives a finite answer, even for pure ρ.
        let d = relative_entropy(&pure, &mixed).expect_finite("σ full rank");
        assert!((d - 2.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bkm_metric_values() {
        assert_eq!(bkm_metric(0.0f64).unwrap().value, 0.0);
        let m = bkm_metric(1.0f64).unwrap();
        assert!((m.value - 0.761_594_155_955_764_9).abs() < 1e-12);
        assert!(m.crosscheck_ran);
        assert!(m.crosscheck_residual <= 1e-5);
        // Large s: the metric saturates to s itself; the generic route is
        // skipped once the family approaches rank deficiency.
        let big = bkm_metric(20.0f64).unwrap();
        assert!(!big.crosscheck_ran);
        assert!((big.value / 20.0 - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn bures_metric_values() {
        assert_eq!(bures_metric(0.0f64).unwrap().value, 0.0);
        let m = bures_metric(1.0f64).unwrap();
        let expected = 1.0f64.tanh().powi(2);
        assert!((m.value - expected).abs() < 1e-12);
        assert!(m.crosscheck_residual <= 1e-5);
        // Strict ordering of the metrics away from s = 0.
        for i in 1..40 {
            let s = 0.25 * i as f64;
            assert!(bures_metric(s).unwrap().value < bkm_metric(s).unwrap().value);
        }
    }

    #[test]
    fn ratio_limits_and_monotonicity() {
        assert!((metric_ratio(1e-4f64) - 1.0).abs() <= 1e-8);
        assert!((metric_ratio(5.0f64) - 5.000_454_019_910_097).abs() < 1e-12);
        let mut last = metric_ratio(0.0f64);
        for i in 1..=200 {
            let s = 20.0 * i as f64 / 200.0;
            let r = metric_ratio(s);
            assert!(r > last, "ratio must increase (s = {s})");
            last = r;
        }
    }

    #[test]
    fn ratio_matches_metric_quotient() {
        for &s in &[0.3f64, 1.0, 2.5, 5.0] {
            let quotient = bkm_metric(s).unwrap().value / bures_metric(s).unwrap().value;
            assert!((metric_ratio(s) - quotient).abs() < 1e-12);
        }
    }

    #[test]
    fn modular_generator_examples() {
        let k = modular_generator(&DensityMatrix::maximally_mixed()).unwrap();
        assert!((k - ComplexMatrix2::identity().scale(2.0f64.ln())).max_abs() < 1e-15);

        let s = 1.4f64;
        let rho = pauli_gibbs([1.0, 0.0, 0.0], s).unwrap();
        let k = modular_generator(&rho).unwrap();
        let expected = ComplexMatrix2::identity().scale((2.0 * s.cosh()).ln())
            + ComplexMatrix2::sigma_x().scale(s);
        assert!((k - expected).max_abs() <= 1e-12);

        // Round trip through the Gibbs construction.
        let back = gibbs_from_generator(&k).unwrap();
        assert!((*back.matrix() - *rho.matrix()).max_abs() <= 1e-10);

        assert!(matches!(
            modular_generator(&DensityMatrix::<f64>::z_plus()),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn positivity_report_structure() {
        let grid: Vec<f64> = (0..=60).map(|i| 0.1 * i as f64).collect();
        let report = entropy_positivity_report(&grid).unwrap();
        assert!(report.all_non_negative);
        assert!(report.strictly_increasing);
        assert_eq!(report.zero_count, 1);
        assert_eq!(report.rows[0].divergence, 0.0);
    }

    #[test]
    fn geometry_report_is_consistent() {
        let report = geometry_report(2.0f64).unwrap();
        assert!((report.relative_entropy - 2.0 * 2.0f64.tanh()).abs() < 1e-12);
        assert!((report.bkm - report.relative_entropy).abs() < 1e-12);
        assert!(report.ratio >= 1.0);
        assert!(report.bkm_residual <= 1e-5 && report.bures_residual <= 1e-5);
    }

    #[test]
    fn observable_gibbs_matches_family() {
        // The family state at θ is the Gibbs state of the rotated axis
        // observable.
        let s = 0.9;
        let theta = 0.6f64;
        let family = RotationFamily::new(s).unwrap();
        let axis = [theta.cos(), theta.sin(), 0.0];
        let obs = Observable::along_axis(axis).unwrap();
        let direct = matrix_exp(&obs.matrix().scale(-s));
        let z = direct.trace().re;
        assert!((*family.state(theta).matrix() - direct.scale(1.0 / z)).max_abs() < 1e-14);
    }
}
