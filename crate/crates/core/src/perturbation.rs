//! Second-order reduced detector states for both protocol orderings, and the
//! ordering asymmetry Δρ_D computed three independent ways: the full Dyson
//! expansion, the time-domain commutator formula, and the frequency-domain
//! KMS formula.
//!
//! For legs coupling through observables μ₁ (first) and μ₂ (second), the
//! ordering difference to second order is
//!
//! ```text
//! Δρ_D = λ² ( Re w₁₂ · [[μ₁,μ₂], ρ] + i Im w₁₂ · [{μ₁,μ₂}, ρ] )
//! w₁₂  = ∫∫ dτ dτ' χ₁(τ) χ₂(τ') W(τ-τ')
//! ```
//!
//! With μ₁ = σ_x, μ₂ = σ_y the anticommutator channel drops and this is
//! `iλ² c [σ_z, ρ]` with `c = ∫∫ χ₁ χ₂ G¹`, the Hadamard overlap integral
//! reported in [`AsymmetryResult::coefficient`].

use std::cell::Cell;

use num_complex::Complex;

use crate::algebra::{
    anticommutator, commutator, ComplexMatrix2, DensityMatrix, POSITIVITY_TOL,
};
use crate::cheby::Chebyshev;
use crate::error::{Error, Result};
use crate::kms::{hadamard_time, sine_time, DiscreteModeSet, SpectralModel};
use crate::quad::{Estimate, Integrator};
use crate::scalar::{internal_tol, real, Real};
use crate::switching::{Protocol, ProtocolOrder, SwitchingFunction};

/// Which evaluation route produced an [`AsymmetryResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Dyson,
    TimeDomain,
    FrequencyDomain,
}

/// The ordering asymmetry and the scalar it factors through.
#[derive(Clone, Copy, Debug)]
pub struct AsymmetryResult<T: Real> {
    /// Hadamard overlap integral `c = ∫∫ χ₁ χ₂ G¹(τ-τ')`.
    pub coefficient: T,
    /// `Δρ_D = ρ_{1→2} - ρ_{2→1}` to second order.
    pub delta_rho: ComplexMatrix2<T>,
    pub method: Method,
    /// Absolute error estimate on `coefficient` from quadrature.
    pub quadrature_error: T,
}

/// Truncated second-order reduced state for one ordering.
#[derive(Clone, Copy, Debug)]
pub struct PerturbedState<T: Real> {
    pub matrix: ComplexMatrix2<T>,
    pub min_eigenvalue: T,
    /// False when the truncation pushed an eigenvalue below the positivity
    /// tolerance; the matrix is still returned.
    pub psd_ok: bool,
    pub trace_deviation: T,
    pub quadrature_error: T,
}

impl<T: Real> PerturbedState<T> {
    /// Validate the truncated state as a physical density matrix.
    pub fn density(&self) -> Result<DensityMatrix<T>> {
        DensityMatrix::new(self.matrix)
    }
}

/// Wightman function in the time domain, `W(Δτ) = ∫ dω/2π W̃(ω) e^{-iωΔτ}`,
/// assembled from its even (Hadamard) and odd (commutator) transforms as
/// `W = (G¹ - iS)/2`.
pub fn wightman_time<T: Real>(
    model: &SpectralModel<T>,
    dt: T,
    abs_tol: T,
) -> Result<Estimate<Complex<T>, T>> {
    let g = hadamard_time(model, dt, abs_tol)?;
    let s = sine_time(model, dt, abs_tol)?;
    let half = real::<T>(0.5);
    Ok(Estimate {
        value: Complex::new(g.value * half, -s.value * half),
        error: (g.error + s.error) * half,
    })
}

/// Correlation kernels over the relative-time window a protocol explores.
///
/// Discrete-mode models evaluate their closed sums directly; continuum
/// models are tabulated once as Chebyshev interpolants of the even Hadamard
/// part and the odd commutator part, so the nested support quadratures pay
/// interpolation cost per point instead of a full frequency integral.
struct CorrelationKernel<T: Real> {
    kind: KernelKind<T>,
    build_error: T,
}

enum KernelKind<T: Real> {
    Exact(DiscreteModeSet<T>),
    Proxy {
        hadamard: Chebyshev<T>,
        sine: Chebyshev<T>,
    },
}

impl<T: Real> CorrelationKernel<T> {
    fn build(model: &SpectralModel<T>, u_max: T, abs_tol: T) -> Result<Self> {
        if let Some(modes) = model.modes() {
            return Ok(Self {
                kind: KernelKind::Exact(modes.clone()),
                build_error: T::zero(),
            });
        }
        let node_tol = abs_tol * real::<T>(0.05);
        let worst_node_err: Cell<T> = Cell::new(T::zero());
        let span = u_max * real::<T>(1.01);
        let hadamard = Chebyshev::fit(
            |u| {
                let est = hadamard_time(model, u, node_tol)?;
                worst_node_err.set(worst_node_err.get().max(est.error));
                Ok(est.value)
            },
            T::zero(),
            span,
            internal_tol(1e-12),
            4096,
        )?;
        let sine = Chebyshev::fit(
            |u| {
                let est = sine_time(model, u, node_tol)?;
                worst_node_err.set(worst_node_err.get().max(est.error));
                Ok(est.value)
            },
            T::zero(),
            span,
            internal_tol(1e-12),
            4096,
        )?;
        let build_error =
            worst_node_err.get() + hadamard.tail_estimate() + sine.tail_estimate();
        Ok(Self {
            kind: KernelKind::Proxy { hadamard, sine },
            build_error,
        })
    }

    /// G¹(u); even in u.
    fn hadamard(&self, u: T) -> T {
        match &self.kind {
            KernelKind::Exact(modes) => modes.hadamard_closed(u),
            KernelKind::Proxy { hadamard, .. } => hadamard.eval(u.abs()),
        }
    }

    /// S(u); odd in u. `W(u) = (G¹(u) - iS(u))/2`.
    fn sine(&self, u: T) -> T {
        match &self.kind {
            KernelKind::Exact(modes) => modes.sine_closed(u),
            KernelKind::Proxy { sine, .. } => {
                let v = sine.eval(u.abs());
                if u < T::zero() {
                    -v
                } else {
                    v
                }
            }
        }
    }

    fn oscillation_scale(&self, model: &SpectralModel<T>) -> T {
        match &self.kind {
            KernelKind::Exact(modes) => modes.max_frequency(),
            KernelKind::Proxy { .. } => model.uv_cutoff() * real(2.5),
        }
    }
}

fn support_panels<T: Real>(width: T, osc: T) -> usize {
    let cycles: f64 = (width * osc).into() / std::f64::consts::PI;
    (cycles.ceil() as usize).clamp(4, 512)
}

/// Relative-time span a protocol's double integrals explore.
fn relative_time_span<T: Real>(protocol: &Protocol<T>) -> T {
    let a = protocol.first().switching;
    let b = protocol.second().switching;
    let cross = (a.center() - b.center()).abs() + a.half_width() + b.half_width();
    let w1 = a.half_width() * real::<T>(2.0);
    let w2 = b.half_width() * real::<T>(2.0);
    cross.max(w1).max(w2)
}

/// `∫ dτ χ_o(τ) ∫ dτ' χ_i(τ') f(τ, τ')` by nested adaptive quadrature over
/// the two compact supports. The error budget gives the outer integral a
/// third of the tolerance and the inner integrals the rest.
fn nested_double<T: Real>(
    outer: &SwitchingFunction<T>,
    inner: &SwitchingFunction<T>,
    f: impl Fn(T, T) -> T,
    abs_tol: T,
    osc: T,
) -> Result<Estimate<T, T>> {
    let (oa, ob) = outer.support();
    let (ia, ib) = inner.support();
    let outer_mass = (outer.amplitude() * outer.half_width()).max(T::min_positive_value());
    let third = abs_tol / real::<T>(3.0);
    let inner_quad =
        Integrator::with_tolerance((abs_tol - third) / outer_mass / real::<T>(2.0));
    let outer_quad = Integrator::with_tolerance(third);
    let inner_panels = support_panels(ib - ia, osc);
    let outer_panels = support_panels(ob - oa, osc);

    let worst_inner: Cell<T> = Cell::new(T::zero());
    let failure: Cell<Option<Error>> = Cell::new(None);
    let est = outer_quad.integrate_seeded(
        |tau: T| {
            let weight = outer.evaluate(tau);
            if weight == T::zero() || failure_set(&failure) {
                return T::zero();
            }
            match inner_quad.integrate_seeded(
                |tp: T| inner.evaluate(tp) * f(tau, tp),
                ia,
                ib,
                inner_panels,
            ) {
                Ok(e) => {
                    worst_inner.set(worst_inner.get().max(e.error));
                    weight * e.value
                }
                Err(e) => {
                    failure.set(Some(e));
                    T::zero()
                }
            }
        },
        oa,
        ob,
        outer_panels,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(Estimate {
        value: est.value,
        error: est.error + worst_inner.get() * outer_mass * real::<T>(2.0),
    })
}

fn failure_set(cell: &Cell<Option<Error>>) -> bool {
    let v = cell.take();
    let flag = v.is_some();
    cell.set(v);
    flag
}

/// Time-ordered variant: `∫ dτ χ(τ) ∫_{τ' < τ} dτ' χ(τ') f(τ - τ')` over a
/// single support, i.e. the lower triangle of the square domain.
fn nested_triangle<T: Real>(
    chi: &SwitchingFunction<T>,
    f: impl Fn(T) -> T,
    abs_tol: T,
    osc: T,
) -> Result<Estimate<T, T>> {
    let (a, b) = chi.support();
    let mass = (chi.amplitude() * chi.half_width()).max(T::min_positive_value());
    let third = abs_tol / real::<T>(3.0);
    let inner_quad = Integrator::with_tolerance((abs_tol - third) / mass / real::<T>(2.0));
    let outer_quad = Integrator::with_tolerance(third);
    let panels = support_panels(b - a, osc);

    let worst_inner: Cell<T> = Cell::new(T::zero());
    let failure: Cell<Option<Error>> = Cell::new(None);
    let est = outer_quad.integrate_seeded(
        |tau: T| {
            let weight = chi.evaluate(tau);
            if weight == T::zero() || tau <= a || failure_set(&failure) {
                return T::zero();
            }
            let hi = tau.min(b);
            let inner_panels = support_panels(hi - a, osc);
            match inner_quad.integrate_seeded(
                |tp: T| chi.evaluate(tp) * f(tau - tp),
                a,
                hi,
                inner_panels,
            ) {
                Ok(e) => {
                    worst_inner.set(worst_inner.get().max(e.error));
                    weight * e.value
                }
                Err(e) => {
                    failure.set(Some(e));
                    T::zero()
                }
            }
        },
        a,
        b,
        panels,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(Estimate {
        value: est.value,
        error: est.error + worst_inner.get() * mass * real::<T>(2.0),
    })
}

/// Whether the anticommutator channel can contribute: `[{μ₁,μ₂}, ρ]` is
/// identically zero when the anticommutator is a multiple of the identity,
/// as it is for any pair of Pauli-axis observables.
fn anticommutator_channel_active<T: Real>(acomm: &ComplexMatrix2<T>) -> bool {
    let half_trace = acomm.trace().scale(real::<T>(0.5));
    let traceless = *acomm - ComplexMatrix2::identity().scale_complex(half_trace);
    traceless.max_abs() > real(1e-14)
}

fn assemble_delta<T: Real>(
    protocol: &Protocol<T>,
    rho: &DensityMatrix<T>,
    c: T,
    q: T,
    error: T,
    method: Method,
) -> AsymmetryResult<T> {
    let mu1 = protocol.first().observable.matrix();
    let mu2 = protocol.second().observable.matrix();
    let comm = commutator(mu1, mu2);
    let acomm = anticommutator(mu1, mu2);
    let l2 = protocol.lambda() * protocol.lambda();
    let half = real::<T>(0.5);
    let generator =
        comm.scale(l2 * c * half) + acomm.scale_complex(Complex::new(T::zero(), l2 * q));
    AsymmetryResult {
        coefficient: c,
        delta_rho: commutator(&generator, rho.matrix()),
        method,
        quadrature_error: error,
    }
}

/// Ordering asymmetry from the closed commutator formula in the time domain:
/// `c = ∫∫ dτ dτ' χ₁(τ) χ₂(τ') G¹(τ-τ')` by nested adaptive quadrature over
/// the compact supports, plus the odd-channel companion for observable pairs
/// whose anticommutator is not a multiple of the identity.
pub fn delta_rho_commutator_time<T: Real>(
    protocol: &Protocol<T>,
    model: &SpectralModel<T>,
    rho: &DensityMatrix<T>,
    abs_tol: T,
) -> Result<AsymmetryResult<T>> {
    let kernel = CorrelationKernel::build(model, relative_time_span(protocol), abs_tol)?;
    let osc = kernel.oscillation_scale(model);
    let chi1 = &protocol.first().switching;
    let chi2 = &protocol.second().switching;
    let c = nested_double(chi1, chi2, |t, tp| kernel.hadamard(t - tp), abs_tol, osc)?;

    let acomm = anticommutator(
        protocol.first().observable.matrix(),
        protocol.second().observable.matrix(),
    );
    let (q, q_err) = if anticommutator_channel_active(&acomm) {
        let est = nested_double(
            chi1,
            chi2,
            |t, tp| -kernel.sine(t - tp) * real::<T>(0.5),
            abs_tol,
            osc,
        )?;
        (est.value, est.error)
    } else {
        (T::zero(), T::zero())
    };

    let error = c.error + q_err + kernel.build_error;
    Ok(assemble_delta(
        protocol,
        rho,
        c.value,
        q,
        error,
        Method::TimeDomain,
    ))
}

/// Ordering asymmetry from the frequency-domain KMS formula:
/// `c = ∫ dω/2π G̃¹(ω) χ̃₁(-ω) χ̃₂(ω)`; the imaginary part must vanish and is
/// asserted against the quadrature error before being discarded. Discrete
/// models reduce to thermally weighted mode sums.
pub fn delta_rho_frequency<T: Real>(
    protocol: &Protocol<T>,
    model: &SpectralModel<T>,
    rho: &DensityMatrix<T>,
    abs_tol: T,
) -> Result<AsymmetryResult<T>> {
    let chi1 = &protocol.first().switching;
    let chi2 = &protocol.second().switching;
    let acomm = anticommutator(
        protocol.first().observable.matrix(),
        protocol.second().observable.matrix(),
    );
    let want_q = anticommutator_channel_active(&acomm);

    if let Some(modes) = model.modes() {
        let mut c = T::zero();
        let mut q = T::zero();
        let mut err = T::zero();
        for (k, m) in modes.modes().iter().enumerate() {
            let g2 = m.coupling * m.coupling;
            let f1 = chi1.fourier(-m.frequency)?;
            let f2 = chi2.fourier(m.frequency)?;
            let cross = f1.value * f2.value;
            let coth = real::<T>(2.0) * modes.occupation(k) + T::one();
            c += real::<T>(2.0) * g2 * coth * cross.re;
            if want_q {
                q += g2 * cross.im;
            }
            err += g2 * (f1.error + f2.error) * (coth + T::one());
        }
        return Ok(assemble_delta(
            protocol,
            rho,
            c,
            q,
            err,
            Method::FrequencyDomain,
        ));
    }

    let range = model.frequency_range();
    let centers_gap = (chi1.center() - chi2.center()).abs();
    let panels = support_panels(range * real::<T>(2.0), centers_gap.max(T::one()));
    let quad = Integrator::with_tolerance(abs_tol);
    let two_pi = real::<T>(2.0) * T::PI();

    let worst_fourier: Cell<T> = Cell::new(T::zero());
    let failure: Cell<Option<Error>> = Cell::new(None);
    let cross_at = |omega: T| -> Complex<T> {
        match (chi1.fourier(-omega), chi2.fourier(omega)) {
            (Ok(a), Ok(b)) => {
                worst_fourier.set(worst_fourier.get().max(a.error).max(b.error));
                a.value * b.value
            }
            (Err(e), _) | (_, Err(e)) => {
                failure.set(Some(e));
                Complex::new(T::zero(), T::zero())
            }
        }
    };

    let c_est = quad.integrate_seeded(
        |omega: T| {
            let g1 = model
                .hadamard_spectrum(omega)
                .expect("continuum model has pointwise spectra");
            cross_at(omega).scale(g1)
        },
        -range,
        range,
        panels,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let c = c_est.value.re / two_pi;
    let c_err = c_est.error / two_pi + worst_fourier.get();
    let imag = c_est.value.im.abs() / two_pi;
    if imag > real::<T>(10.0) * (c_err + abs_tol) {
        let imag: f64 = imag.into();
        return Err(Error::Consistency(format!(
            "frequency-domain coefficient has imaginary residue {imag:e} beyond error budget"
        )));
    }

    let (q, q_err) = if want_q {
        let est = quad.integrate_seeded(
            |omega: T| {
                let delta = model
                    .delta_spectrum(omega)
                    .expect("continuum model has pointwise spectra");
                delta * cross_at(omega).im
            },
            -range,
            range,
            panels,
        )?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        (
            est.value / (real::<T>(2.0) * two_pi),
            est.error / (real::<T>(2.0) * two_pi),
        )
    } else {
        (T::zero(), T::zero())
    };

    Ok(assemble_delta(
        protocol,
        rho,
        c,
        q,
        c_err + q_err,
        Method::FrequencyDomain,
    ))
}

/// The field-trace integrals entering the second-order expansion. All are
/// quadratic in the coupling; λ² is folded in at assembly time.
struct SecondOrderTerms<T: Real> {
    /// `w_jj = ∫∫ χ_j χ_j W(τ-τ')`; real because the domain is symmetric.
    w11: T,
    w22: T,
    /// `w₁₂ = ∫∫ χ₁(τ) χ₂(τ') W(τ-τ')`.
    w12: Complex<T>,
    /// Imaginary parts of the time-ordered self-energies
    /// `b_j = ∫∫ χ_j χ_j W(|τ-τ'|)`; the real parts equal `w_jj` identically
    /// (split the square along τ = τ' and use the even Hadamard part), which
    /// is what makes the expansion trace-preserving by construction.
    b1_im: T,
    b2_im: T,
    error: T,
}

fn second_order_terms<T: Real>(
    protocol: &Protocol<T>,
    model: &SpectralModel<T>,
    abs_tol: T,
) -> Result<SecondOrderTerms<T>> {
    let kernel = CorrelationKernel::build(model, relative_time_span(protocol), abs_tol)?;
    let osc = kernel.oscillation_scale(model);
    let chi1 = &protocol.first().switching;
    let chi2 = &protocol.second().switching;
    let half = real::<T>(0.5);

    let w11 = nested_double(chi1, chi1, |t, tp| kernel.hadamard(t - tp) * half, abs_tol, osc)?;
    let w22 = nested_double(chi2, chi2, |t, tp| kernel.hadamard(t - tp) * half, abs_tol, osc)?;
    let w12_re =
        nested_double(chi1, chi2, |t, tp| kernel.hadamard(t - tp) * half, abs_tol, osc)?;
    let w12_im =
        nested_double(chi1, chi2, |t, tp| -kernel.sine(t - tp) * half, abs_tol, osc)?;
    let b1 = nested_triangle(chi1, |u| -kernel.sine(u), abs_tol, osc)?;
    let b2 = nested_triangle(chi2, |u| -kernel.sine(u), abs_tol, osc)?;

    let error = w11.error
        + w22.error
        + w12_re.error
        + w12_im.error
        + b1.error
        + b2.error
        + kernel.build_error * real::<T>(6.0);
    Ok(SecondOrderTerms {
        w11: w11.value,
        w22: w22.value,
        w12: Complex::new(w12_re.value, w12_im.value),
        b1_im: b1.value,
        b2_im: b2.value,
        error,
    })
}

fn assemble_second_order<T: Real>(
    protocol: &Protocol<T>,
    rho: &DensityMatrix<T>,
    terms: &SecondOrderTerms<T>,
    order: ProtocolOrder,
) -> ComplexMatrix2<T> {
    let mu1 = *protocol.first().observable.matrix();
    let mu2 = *protocol.second().observable.matrix();
    let r = *rho.matrix();
    let l2 = protocol.lambda() * protocol.lambda();
    let half = real::<T>(0.5);

    let w12 = terms.w12;
    let w21 = w12.conj();
    let b1 = Complex::new(terms.w11, terms.b1_im);
    let b2 = Complex::new(terms.w22, terms.b2_im);

    // Σ_{jk} w_kj μ_j ρ μ_k
    let sandwich = (mu1 * r * mu1).scale(terms.w11)
        + (mu2 * r * mu2).scale(terms.w22)
        + (mu1 * r * mu2).scale_complex(w21)
        + (mu2 * r * mu1).scale_complex(w12);

    // -½ (b_j μ_j² ρ + b̄_j ρ μ_j²)
    let m1sq = mu1 * mu1;
    let m2sq = mu2 * mu2;
    let self_energy = ((m1sq * r).scale_complex(b1)
        + (r * m1sq).scale_complex(b1.conj())
        + (m2sq * r).scale_complex(b2)
        + (r * m2sq).scale_complex(b2.conj()))
    .scale(-half);

    // Ordered cross terms; the only piece that differs between orderings.
    let cross = match order {
        ProtocolOrder::FirstThenSecond => {
            (mu2 * mu1 * r).scale_complex(-w21) + (r * mu1 * mu2).scale_complex(-w12)
        }
        ProtocolOrder::SecondThenFirst => {
            (mu1 * mu2 * r).scale_complex(-w12) + (r * mu2 * mu1).scale_complex(-w21)
        }
    };

    r + (sandwich + self_energy + cross).scale(l2)
}

/// Full second-order reduced state for one composition order. The expansion
/// preserves the trace by construction; positivity of the truncated state is
/// checked and flagged rather than assumed.
pub fn second_order_state<T: Real>(
    protocol: &Protocol<T>,
    model: &SpectralModel<T>,
    rho: &DensityMatrix<T>,
    order: ProtocolOrder,
    abs_tol: T,
) -> Result<PerturbedState<T>> {
    let terms = second_order_terms(protocol, model, abs_tol)?;
    let matrix = assemble_second_order(protocol, rho, &terms, order);
    let [_, min_eigenvalue] = matrix.hermitian_eigenvalues();
    let trace_deviation = (matrix.trace() - Complex::new(T::one(), T::zero())).norm();
    let l2 = protocol.lambda() * protocol.lambda();
    Ok(PerturbedState {
        matrix,
        min_eigenvalue,
        psd_ok: min_eigenvalue >= -real::<T>(POSITIVITY_TOL),
        trace_deviation,
        quadrature_error: terms.error * l2,
    })
}

/// Ordering asymmetry as the difference of the two full Dyson states. The
/// order-independent terms cancel in the difference; the reported scalar is
/// the Hadamard-channel component extracted by projecting the difference
/// onto `[[μ₁,μ₂], ρ]` (jointly with the anticommutator channel when that is
/// active).
pub fn delta_rho_dyson<T: Real>(
    protocol: &Protocol<T>,
    model: &SpectralModel<T>,
    rho: &DensityMatrix<T>,
    abs_tol: T,
) -> Result<AsymmetryResult<T>> {
    let terms = second_order_terms(protocol, model, abs_tol)?;
    let forward = assemble_second_order(protocol, rho, &terms, ProtocolOrder::FirstThenSecond);
    let reversed = assemble_second_order(protocol, rho, &terms, ProtocolOrder::SecondThenFirst);
    let delta = forward - reversed;

    let mu1 = protocol.first().observable.matrix();
    let mu2 = protocol.second().observable.matrix();
    let comm_channel = commutator(&commutator(mu1, mu2), rho.matrix());
    let acomm_channel = commutator(&anticommutator(mu1, mu2), rho.matrix())
        .scale_complex(Complex::new(T::zero(), T::one()));
    let l2 = protocol.lambda() * protocol.lambda();

    let a11 = comm_channel.hs_inner(&comm_channel).re;
    let a22 = acomm_channel.hs_inner(&acomm_channel).re;
    let a12 = comm_channel.hs_inner(&acomm_channel).re;
    let r1 = comm_channel.hs_inner(&delta).re;
    let tiny = real::<T>(1e-24);
    let p = if a11 <= tiny || l2 == T::zero() {
        T::zero()
    } else if a22 <= tiny {
        r1 / (a11 * l2)
    } else {
        let r2 = acomm_channel.hs_inner(&delta).re;
        let det = a11 * a22 - a12 * a12;
        if det.abs() <= tiny * a11 * a22 {
            r1 / (a11 * l2)
        } else {
            (r1 * a22 - r2 * a12) / (det * l2)
        }
    };

    Ok(AsymmetryResult {
        coefficient: real::<T>(2.0) * p,
        delta_rho: delta,
        method: Method::Dyson,
        quadrature_error: terms.error * real(4.0),
    })
}
