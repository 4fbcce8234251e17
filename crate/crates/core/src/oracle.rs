//! Non-perturbative ground truth: the detector joined to a finite bosonic
//! field (K modes, truncated Fock spaces) in an exact thermal state, evolved
//! under both protocol orderings by dense time stepping of the propagator.
//!
//! The perturbative engine is fed the same [`DiscreteModeSet`], so both
//! sides of every comparison use the identical Wightman function and the
//! residual is purely the higher-order remainder.

use num_complex::Complex;
use rayon::prelude::*;

use crate::algebra::{trace_norm, ComplexMatrix2, DensityMatrix};
use crate::error::{Error, Result};
use crate::kms::{DiscreteModeSet, SpectralModel};
use crate::perturbation::delta_rho_frequency;
use crate::scalar::{real, Real};
use crate::switching::{Protocol, ProtocolOrder};

/// Detector ⊗ K truncated oscillator modes in a thermal state.
///
/// The field operator is `φ(τ) = Σ_k g_k (a_k e^{-iω_kτ} + a_k† e^{iω_kτ})`
/// and the thermal weights per mode follow `e^{-βω_k n}`, renormalized on
/// the truncated ladder so the joint state has exactly unit trace.
#[derive(Clone, Debug)]
pub struct TruncatedField<T: Real> {
    modes: DiscreteModeSet<T>,
    n_max: usize,
}

impl<T: Real> TruncatedField<T> {
    pub fn new(modes: DiscreteModeSet<T>, n_max: usize) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidInput(
                "Fock truncation must keep at least two levels".into(),
            ));
        }
        let dim: usize = (n_max + 1)
            .checked_pow(modes.len() as u32)
            .filter(|m| m.checked_mul(2).is_some() && *m < 1 << 20)
            .ok_or_else(|| Error::InvalidInput("truncated Hilbert space too large".into()))?;
        let _ = dim;
        Ok(Self { modes, n_max })
    }

    pub fn modes(&self) -> &DiscreteModeSet<T> {
        &self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Total joint dimension `2 (n_max+1)^K`.
    pub fn dimension(&self) -> usize {
        2 * self.field_dimension()
    }

    fn field_dimension(&self) -> usize {
        (self.n_max + 1).pow(self.modes.len() as u32)
    }

    fn occupation_of(&self, field_index: usize, mode: usize) -> usize {
        let m = self.n_max + 1;
        (field_index / m.pow(mode as u32)) % m
    }

    /// Thermal weight of each field basis state, truncated-renormalized per
    /// mode.
    fn thermal_weights(&self) -> Vec<T> {
        let m = self.n_max + 1;
        let beta = self.modes.beta();
        let per_mode: Vec<Vec<T>> = self
            .modes
            .modes()
            .iter()
            .map(|mode| {
                let mut w: Vec<T> = (0..m)
                    .map(|n| (-beta * mode.frequency * real::<T>(n as f64)).exp())
                    .collect();
                let z = w.iter().fold(T::zero(), |acc, &x| acc + x);
                for x in &mut w {
                    *x /= z;
                }
                w
            })
            .collect();
        (0..self.field_dimension())
            .map(|f| {
                (0..self.modes.len()).fold(T::one(), |acc, k| {
                    acc * per_mode[k][self.occupation_of(f, k)]
                })
            })
            .collect()
    }
}

/// Fixed-step integration parameters and the coupling grid for scaling
/// studies.
#[derive(Clone, Debug)]
pub struct EvolutionSpec<T: Real> {
    /// Time step of the classical 4th-order scheme.
    pub step: T,
    /// Integrator order; only 4 is implemented.
    pub order: u32,
    /// Strictly positive, geometric coupling grid.
    pub lambda_grid: Vec<T>,
    /// When set, the evolution is repeated at half step and the reduced
    /// states must agree to this trace distance.
    pub step_tolerance: Option<T>,
    /// Maximum tolerated population in the top Fock level of any mode.
    pub leakage_threshold: T,
}

impl<T: Real> EvolutionSpec<T> {
    pub fn new(step: T, lambda_grid: Vec<T>) -> Result<Self> {
        let spec = Self {
            step,
            order: 4,
            lambda_grid,
            step_tolerance: Some(real(1e-8)),
            leakage_threshold: real(1e-6),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Geometric grid of `points` couplings from `start` to `stop`.
    pub fn geometric_grid(start: T, stop: T, points: usize) -> Result<Vec<T>> {
        if points < 2 || !(start > T::zero()) || !(stop > start) {
            return Err(Error::InvalidInput(
                "geometric grid needs points ≥ 2 and 0 < start < stop".into(),
            ));
        }
        let ratio = (stop / start).powf(T::one() / real::<T>((points - 1) as f64));
        Ok((0..points)
            .map(|i| start * ratio.powi(i as i32))
            .collect())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "step must be positive (got {})",
                self.step
            )));
        }
        if self.order != 4 {
            return Err(Error::InvalidInput(format!(
                "only the classical 4th-order scheme is implemented (got order {})",
                self.order
            )));
        }
        if self.lambda_grid.is_empty() {
            return Err(Error::InvalidInput("coupling grid is empty".into()));
        }
        for &l in &self.lambda_grid {
            if !(l > T::zero()) {
                return Err(Error::InvalidInput(
                    "coupling grid must be strictly positive".into(),
                ));
            }
        }
        for w in self.lambda_grid.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(
                    "coupling grid must be strictly increasing".into(),
                ));
            }
        }
        if self.lambda_grid.len() >= 3 {
            let r0 = self.lambda_grid[1] / self.lambda_grid[0];
            for w in self.lambda_grid.windows(2) {
                let r = w[1] / w[0];
                if ((r - r0) / r0).abs() > real(1e-6) {
                    return Err(Error::InvalidInput(
                        "coupling grid must be geometric".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Outcome of one exact evolution, reduced to the detector.
#[derive(Clone, Debug)]
pub struct EvolvedState<T: Real> {
    pub reduced: DensityMatrix<T>,
    /// Top-Fock-level population per mode after the run.
    pub leakage: Vec<T>,
    /// Worst deviation of a propagator column norm from 1.
    pub unitarity_drift: T,
    /// Trace distance between the full-step and half-step results, when the
    /// step check ran.
    pub step_difference: Option<T>,
}

/// Exact ordering asymmetry together with both evolved endpoints.
#[derive(Clone, Debug)]
pub struct ExactAsymmetry<T: Real> {
    pub delta: ComplexMatrix2<T>,
    pub forward: EvolvedState<T>,
    pub reversed: EvolvedState<T>,
}

/// One coupling point of the scaling study.
#[derive(Clone, Copy, Debug)]
pub struct ScalingRow<T> {
    pub lambda: T,
    pub exact_norm: T,
    pub perturbative_norm: T,
    pub difference_norm: T,
}

/// Log-log fit of `‖Δρ_exact(λ) - Δρ_pert(λ)‖₁` against λ.
#[derive(Clone, Debug)]
pub struct ScalingFit<T: Real> {
    pub rows: Vec<ScalingRow<T>>,
    /// Couplings that failed to evolve, with the reason.
    pub failures: Vec<(T, Error)>,
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
    /// Set when `r² < 0.99`, flagging departure from the clean power-law
    /// regime.
    pub regime_warning: bool,
}

// ---------------------------------------------------------------------------
// Dense propagator machinery.

/// Sparse action of `μ ⊗ a_k` on the joint space: each entry links the state
/// `hi = (s', f)` to `lo = (s, f - e_k)` with amplitude `μ_{ss'} √n_k(f)`.
/// The adjoint `μ ⊗ a_k†` reuses the same entries transposed and conjugated.
struct ModeCoupling<T> {
    frequency: T,
    coupling: T,
    hi: Vec<u32>,
    lo: Vec<u32>,
    amp: Vec<Complex<T>>,
}

fn build_couplings<T: Real>(
    field: &TruncatedField<T>,
    mu: &ComplexMatrix2<T>,
) -> Vec<ModeCoupling<T>> {
    let m = field.n_max + 1;
    let fd = field.field_dimension();
    field
        .modes
        .modes()
        .iter()
        .enumerate()
        .map(|(k, mode)| {
            let stride = m.pow(k as u32);
            let mut hi = Vec::new();
            let mut lo = Vec::new();
            let mut amp = Vec::new();
            for f in 0..fd {
                let n = field.occupation_of(f, k);
                if n == 0 {
                    continue;
                }
                let root = real::<T>(n as f64).sqrt();
                for s_from in 0..2 {
                    for s_to in 0..2 {
                        let mu_el = mu.entry(s_to, s_from);
                        if mu_el.norm_sqr() == T::zero() {
                            continue;
                        }
                        hi.push((s_from * fd + f) as u32);
                        lo.push((s_to * fd + f - stride) as u32);
                        amp.push(mu_el.scale(root));
                    }
                }
            }
            ModeCoupling {
                frequency: mode.frequency,
                coupling: mode.coupling,
                hi,
                lo,
                amp,
            }
        })
        .collect()
}

/// `out += -i λ χ(τ) Σ_k g_k (e^{-iω_kτ} μ⊗a_k + e^{iω_kτ} μ⊗a_k†) v`,
/// writing rows of the row-major propagator buffers.
fn add_hamiltonian_action<T: Real>(
    couplings: &[ModeCoupling<T>],
    weight: T, // λ χ(τ)
    tau: T,
    v: &[Complex<T>],
    out: &mut [Complex<T>],
    dim: usize,
) {
    let minus_i = Complex::new(T::zero(), -T::one());
    for mode in couplings {
        let phase = Complex::new(T::zero(), -mode.frequency * tau).exp();
        let z_lower = minus_i * phase.scale(weight * mode.coupling);
        let z_raise = minus_i * phase.conj().scale(weight * mode.coupling);
        for ((&hi, &lo), &amp) in mode.hi.iter().zip(&mode.lo).zip(&mode.amp) {
            let hi = hi as usize * dim;
            let lo = lo as usize * dim;
            let c_down = z_lower * amp;
            let c_up = z_raise * amp.conj();
            // a_k: row lo accumulates from row hi; a_k†: the reverse.
            if hi < lo {
                let (head, tail) = out.split_at_mut(lo);
                let dst_lo = &mut tail[..dim];
                let dst_hi = &mut head[hi..hi + dim];
                let src_hi = &v[hi..hi + dim];
                let src_lo = &v[lo..lo + dim];
                for j in 0..dim {
                    dst_lo[j] += c_down * src_hi[j];
                    dst_hi[j] += c_up * src_lo[j];
                }
            } else {
                let (head, tail) = out.split_at_mut(hi);
                let dst_hi = &mut tail[..dim];
                let dst_lo = &mut head[lo..lo + dim];
                let src_hi = &v[hi..hi + dim];
                let src_lo = &v[lo..lo + dim];
                for j in 0..dim {
                    dst_lo[j] += c_down * src_hi[j];
                    dst_hi[j] += c_up * src_lo[j];
                }
            }
        }
    }
}

struct Workspace<T: Real> {
    dim: usize,
    k1: Vec<Complex<T>>,
    k2: Vec<Complex<T>>,
    k3: Vec<Complex<T>>,
    k4: Vec<Complex<T>>,
    tmp: Vec<Complex<T>>,
}

impl<T: Real> Workspace<T> {
    fn new(dim: usize) -> Self {
        let zeros = vec![Complex::new(T::zero(), T::zero()); dim * dim];
        Self {
            dim,
            k1: zeros.clone(),
            k2: zeros.clone(),
            k3: zeros.clone(),
            k4: zeros.clone(),
            tmp: zeros,
        }
    }
}

fn zero_buffer<T: Real>(buf: &mut [Complex<T>]) {
    let z = Complex::new(T::zero(), T::zero());
    for x in buf.iter_mut() {
        *x = z;
    }
}

/// Classical fixed-step 4th-order integration of `dU/dτ = -iH(τ)U` across
/// one leg's switching window.
fn evolve_leg<T: Real>(
    field: &TruncatedField<T>,
    protocol: &Protocol<T>,
    leg_index: usize,
    h_target: T,
    u: &mut [Complex<T>],
    ws: &mut Workspace<T>,
) {
    let leg = if leg_index == 0 {
        protocol.first()
    } else {
        protocol.second()
    };
    let couplings = build_couplings(field, leg.observable.matrix());
    let chi = leg.switching;
    let (t0, t1) = chi.support();
    let lambda = protocol.lambda();
    if lambda == T::zero() || chi.amplitude() == T::zero() {
        return;
    }
    let span = t1 - t0;
    let n_steps: usize = ((span / h_target).into().ceil() as usize).max(1);
    let h = span / real::<T>(n_steps as f64);
    let dim = ws.dim;
    let half = real::<T>(0.5);
    let sixth = h / real::<T>(6.0);
    let two = real::<T>(2.0);

    let rhs = |tau: T, v: &[Complex<T>], out: &mut [Complex<T>]| {
        zero_buffer(out);
        let w = lambda * chi.evaluate(tau);
        if w != T::zero() {
            add_hamiltonian_action(&couplings, w, tau, v, out, dim);
        }
    };

    for step in 0..n_steps {
        let t = t0 + h * real::<T>(step as f64);
        rhs(t, u, &mut ws.k1);
        axpy_into(&mut ws.tmp, u, &ws.k1, h * half);
        rhs(t + h * half, &ws.tmp, &mut ws.k2);
        axpy_into(&mut ws.tmp, u, &ws.k2, h * half);
        rhs(t + h * half, &ws.tmp, &mut ws.k3);
        axpy_into(&mut ws.tmp, u, &ws.k3, h);
        rhs(t + h, &ws.tmp, &mut ws.k4);
        for (((ui, &a), (&b, &c)), &d) in u
            .iter_mut()
            .zip(&ws.k1)
            .zip(ws.k2.iter().zip(&ws.k3))
            .zip(&ws.k4)
        {
            *ui += (a + (b + c).scale(two) + d).scale(sixth);
        }
    }
}

fn axpy_into<T: Real>(
    out: &mut [Complex<T>],
    base: &[Complex<T>],
    k: &[Complex<T>],
    factor: T,
) {
    for ((o, &b), &ki) in out.iter_mut().zip(base).zip(k) {
        *o = b + ki.scale(factor);
    }
}

/// Row-major dense product `out = a · b`.
fn mat_mul<T: Real>(a: &[Complex<T>], b: &[Complex<T>], out: &mut [Complex<T>], dim: usize) {
    zero_buffer(out);
    for i in 0..dim {
        let out_row = &mut out[i * dim..(i + 1) * dim];
        let a_row = &a[i * dim..(i + 1) * dim];
        for (k, &aik) in a_row.iter().enumerate() {
            if aik.norm_sqr() == T::zero() {
                continue;
            }
            let b_row = &b[k * dim..(k + 1) * dim];
            for (o, &bkj) in out_row.iter_mut().zip(b_row) {
                *o += aik * bkj;
            }
        }
    }
}

fn identity_buffer<T: Real>(dim: usize) -> Vec<Complex<T>> {
    let mut u = vec![Complex::new(T::zero(), T::zero()); dim * dim];
    for i in 0..dim {
        u[i * dim + i] = Complex::new(T::one(), T::zero());
    }
    u
}

/// Trace out the field from `U (ρ_D ⊗ ρ_φ) U†`, also collecting the top-level
/// populations and the propagator column-norm drift.
fn reduce_detector<T: Real>(
    field: &TruncatedField<T>,
    u: &[Complex<T>],
    rho_d: &DensityMatrix<T>,
    weights: &[T],
) -> (ComplexMatrix2<T>, Vec<T>, T) {
    let fd = field.field_dimension();
    let dim = 2 * fd;
    let r = rho_d.matrix();
    let zero = Complex::new(T::zero(), T::zero());
    let mut reduced = [[zero; 2]; 2];
    let mut leak = vec![T::zero(); field.modes.len()];

    // Rows whose field part sits at the truncation edge, grouped by mode.
    let leak_rows: Vec<Vec<usize>> = (0..field.modes.len())
        .map(|k| {
            (0..dim)
                .filter(|&row| field.occupation_of(row % fd, k) == field.n_max)
                .collect()
        })
        .collect();

    for f in 0..fd {
        let p = weights[f];
        if p == T::zero() {
            continue;
        }
        let c0 = f;
        let c1 = fd + f;
        // v_b(row) = Σ_a U[row, (a,f)] ρ[a,b]
        // reduced[s][s'] += p Σ_m v_b((s,m)) conj(U[(s',m),(b,f)])
        for row_s in 0..2 {
            for col_s in 0..2 {
                let mut acc = zero;
                for m in 0..fd {
                    let row = row_s * fd + m;
                    let crow = col_s * fd + m;
                    for b in 0..2 {
                        let v_b = u[row * dim + c0] * r.entry(0, b)
                            + u[row * dim + c1] * r.entry(1, b);
                        let u_conj = u[crow * dim + if b == 0 { c0 } else { c1 }].conj();
                        acc += v_b * u_conj;
                    }
                }
                reduced[row_s][col_s] += acc.scale(p);
            }
        }
        for (k, rows) in leak_rows.iter().enumerate() {
            let mut acc = T::zero();
            for &row in rows {
                for b in 0..2 {
                    for a in 0..2 {
                        let col_a = if a == 0 { c0 } else { c1 };
                        let col_b = if b == 0 { c0 } else { c1 };
                        acc += (u[row * dim + col_a] * r.entry(a, b)
                                * u[row * dim + col_b].conj())
                            .re;
                    }
                }
            }
            leak[k] += acc * p;
        }
    }

    let mut drift = T::zero();
    for col in 0..dim {
        let mut norm = T::zero();
        for row in 0..dim {
            norm += u[row * dim + col].norm_sqr();
        }
        drift = drift.max((norm - T::one()).abs());
    }

    (ComplexMatrix2::new(reduced), leak, drift)
}

/// The two leg propagators composed in the requested order, reduced to the
/// detector.
fn run_once<T: Real>(
    field: &TruncatedField<T>,
    protocol: &Protocol<T>,
    rho_d: &DensityMatrix<T>,
    h: T,
    weights: &[T],
) -> Result<RawRun<T>> {
    let dim = field.dimension();
    let mut ws = Workspace::new(dim);
    let mut u1 = identity_buffer(dim);
    evolve_leg(field, protocol, 0, h, &mut u1, &mut ws);
    let mut u2 = identity_buffer(dim);
    evolve_leg(field, protocol, 1, h, &mut u2, &mut ws);

    let mut composed = vec![Complex::new(T::zero(), T::zero()); dim * dim];
    mat_mul(&u2, &u1, &mut composed, dim);
    let (fwd, leak_fwd, drift_fwd) = reduce_detector(field, &composed, rho_d, weights);
    mat_mul(&u1, &u2, &mut composed, dim);
    let (rev, leak_rev, drift_rev) = reduce_detector(field, &composed, rho_d, weights);

    Ok(RawRun {
        forward: fwd,
        reversed: rev,
        leakage: leak_fwd
            .iter()
            .zip(&leak_rev)
            .map(|(&a, &b)| a.max(b))
            .collect(),
        drift: drift_fwd.max(drift_rev),
    })
}

struct RawRun<T: Real> {
    forward: ComplexMatrix2<T>,
    reversed: ComplexMatrix2<T>,
    leakage: Vec<T>,
    drift: T,
}

fn to_density<T: Real>(matrix: ComplexMatrix2<T>) -> Result<DensityMatrix<T>> {
    // The sandwich construction keeps the state Hermitian and PSD; the trace
    // picks up the propagator's unitarity drift, so renormalize it away.
    let tr = matrix.trace().re;
    DensityMatrix::new(matrix.scale(T::one() / tr))
}

fn check_leakage<T: Real>(leakage: &[T], threshold: T) -> Result<()> {
    for (mode, &p) in leakage.iter().enumerate() {
        if p > threshold {
            return Err(Error::TruncationLeakage {
                mode,
                population: p.into(),
                threshold: threshold.into(),
            });
        }
    }
    Ok(())
}

/// Exact time-ordered evolution of the joint state under one composition
/// order, traced down to the detector.
pub fn evolve_protocol<T: Real>(
    field: &TruncatedField<T>,
    protocol: &Protocol<T>,
    rho_d: &DensityMatrix<T>,
    order: ProtocolOrder,
    spec: &EvolutionSpec<T>,
) -> Result<EvolvedState<T>> {
    let asym = ordering_asymmetry_runs(field, protocol, rho_d, spec)?;
    Ok(match order {
        ProtocolOrder::FirstThenSecond => asym.forward,
        ProtocolOrder::SecondThenFirst => asym.reversed,
    })
}

/// `Δρ_exact = ρ_{1→2} - ρ_{2→1}` from the exact evolution.
pub fn ordering_asymmetry_exact<T: Real>(
    field: &TruncatedField<T>,
    protocol: &Protocol<T>,
    rho_d: &DensityMatrix<T>,
    spec: &EvolutionSpec<T>,
) -> Result<ExactAsymmetry<T>> {
    ordering_asymmetry_runs(field, protocol, rho_d, spec)
}

fn ordering_asymmetry_runs<T: Real>(
    field: &TruncatedField<T>,
    protocol: &Protocol<T>,
    rho_d: &DensityMatrix<T>,
    spec: &EvolutionSpec<T>,
) -> Result<ExactAsymmetry<T>> {
    spec.validate()?;
    let weights = field.thermal_weights();
    let (run, step_difference) = if let Some(tol) = spec.step_tolerance {
        let fine = run_once(field, protocol, rho_d, spec.step * real(0.5), &weights)?;
        let coarse = run_once(field, protocol, rho_d, spec.step, &weights)?;
        let delta_f = trace_norm(&(fine.forward - coarse.forward)) * real::<T>(0.5);
        let delta_r = trace_norm(&(fine.reversed - coarse.reversed)) * real::<T>(0.5);
        let delta = delta_f.max(delta_r);
        if delta > tol {
            return Err(Error::StepConvergence {
                delta: delta.into(),
                tolerance: tol.into(),
            });
        }
        (fine, Some(delta))
    } else {
        (run_once(field, protocol, rho_d, spec.step, &weights)?, None)
    };
    check_leakage(&run.leakage, spec.leakage_threshold)?;

    let forward = EvolvedState {
        reduced: to_density(run.forward)?,
        leakage: run.leakage.clone(),
        unitarity_drift: run.drift,
        step_difference,
    };
    let reversed = EvolvedState {
        reduced: to_density(run.reversed)?,
        leakage: run.leakage,
        unitarity_drift: run.drift,
        step_difference,
    };
    let delta = *forward.reduced.matrix() - *reversed.reduced.matrix();
    Ok(ExactAsymmetry {
        delta,
        forward,
        reversed,
    })
}

/// Sweep the coupling grid, compare the exact asymmetry against the
/// quadratic perturbative prediction, and fit the log-log slope of the
/// remainder.
///
/// The step-halving check runs once at the largest coupling (the integrator
/// error grows with λ, so that is the binding case); the remaining grid
/// points reuse the validated step.
pub fn scaling_fit<T: Real>(
    field: &TruncatedField<T>,
    protocol: &Protocol<T>,
    rho_d: &DensityMatrix<T>,
    spec: &EvolutionSpec<T>,
) -> Result<ScalingFit<T>> {
    spec.validate()?;
    if spec.lambda_grid.len() < 4 {
        return Err(Error::InsufficientPoints(format!(
            "scaling fit needs at least 4 couplings, got {}",
            spec.lambda_grid.len()
        )));
    }
    let first = spec.lambda_grid[0];
    let last = *spec.lambda_grid.last().expect("non-empty grid");
    let decades: f64 = (last / first).into().log10();
    if decades < 1.0 {
        return Err(Error::InsufficientPoints(format!(
            "coupling grid spans {decades:.2} decades; need at least 1"
        )));
    }

    // Quadratic reference at unit coupling; Δρ_pert(λ) = λ² Δρ_pert(1).
    let model = SpectralModel::discrete(field.modes().clone());
    let unit = delta_rho_frequency(&protocol.with_lambda(T::one()), &model, rho_d, real(1e-12))?;

    // Validate the step size once at the largest coupling.
    {
        let probe = protocol.with_lambda(last);
        let mut probe_spec = spec.clone();
        probe_spec.lambda_grid = vec![last];
        ordering_asymmetry_runs(field, &probe, rho_d, &probe_spec)?;
    }
    let mut sweep_spec = spec.clone();
    sweep_spec.step_tolerance = None;

    let outcomes: Vec<(T, Result<ScalingRow<T>>)> = spec
        .lambda_grid
        .par_iter()
        .map(|&lambda| {
            let run = ordering_asymmetry_runs(
                field,
                &protocol.with_lambda(lambda),
                rho_d,
                &sweep_spec,
            );
            let row = run.map(|asym| {
                let pert = unit.delta_rho.scale(lambda * lambda);
                ScalingRow {
                    lambda,
                    exact_norm: trace_norm(&asym.delta),
                    perturbative_norm: trace_norm(&pert),
                    difference_norm: trace_norm(&(asym.delta - pert)),
                }
            });
            (lambda, row)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (lambda, outcome) in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(e) => failures.push((lambda, e)),
        }
    }
    if rows.len() < 4 {
        return Err(Error::InsufficientPoints(format!(
            "only {} couplings evolved successfully",
            rows.len()
        )));
    }

    let points: Vec<(T, T)> = rows
        .iter()
        .map(|r| (r.lambda.ln(), r.difference_norm.max(T::min_positive_value()).ln()))
        .collect();
    let (slope, intercept, r_squared) = linear_fit(&points);
    Ok(ScalingFit {
        rows,
        failures,
        slope,
        intercept,
        r_squared,
        regime_warning: r_squared < real(0.99),
    })
}

fn linear_fit<T: Real>(points: &[(T, T)]) -> (T, T, T) {
    let n = real::<T>(points.len() as f64);
    let mut sx = T::zero();
    let mut sy = T::zero();
    for &(x, y) in points {
        sx += x;
        sy += y;
    }
    let mx = sx / n;
    let my = sy / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for &(x, y) in points {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = syy - slope * sxy;
    let r_squared = if syy > T::zero() {
        T::one() - ss_res / syy
    } else {
        T::one()
    };
    (slope, intercept, r_squared)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{trace_distance, Observable};
    use crate::kms::Mode;
    use crate::perturbation::{delta_rho_commutator_time, second_order_state};
    use crate::switching::{Leg, SwitchingFunction};

    fn modes(beta: f64) -> DiscreteModeSet<f64> {
        DiscreteModeSet::new(
            vec![
                Mode {
                    frequency: 2.0,
                    coupling: 0.4,
                },
                Mode {
                    frequency: 4.4,
                    coupling: 0.35,
                },
            ],
            beta,
        )
        .unwrap()
    }

    fn xy_protocol(lambda: f64) -> Protocol<f64> {
        let chi1 = SwitchingFunction::cosine_bump(-2.0, 1.0, 1.0).unwrap();
        let chi2 = SwitchingFunction::cosine_bump(2.0, 1.0, 1.0).unwrap();
        Protocol::new(
            Leg::new(Observable::sigma_x(), chi1),
            Leg::new(Observable::sigma_y(), chi2),
            lambda,
        )
        .unwrap()
    }

    fn rho() -> DensityMatrix<f64> {
        DensityMatrix::from_bloch([0.8, 0.0, 0.0]).unwrap()
    }

    fn quick_spec(step: f64) -> EvolutionSpec<f64> {
        EvolutionSpec::new(step, vec![0.05, 0.1]).unwrap()
    }

    #[test]
    fn zero_coupling_returns_initial_state() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let protocol = xy_protocol(0.0);
        let spec = quick_spec(0.01);
        let out = evolve_protocol(
            &field,
            &protocol,
            &rho(),
            ProtocolOrder::FirstThenSecond,
            &spec,
        )
        .unwrap();
        // Exact up to the rounding of the thermal-weight normalization.
        assert!(trace_distance(&out.reduced, &rho()) < 1e-15);
        assert_eq!(out.unitarity_drift, 0.0);
    }

    #[test]
    fn single_leg_orderings_coincide() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let chi1 = SwitchingFunction::cosine_bump(-2.0, 1.0, 1.0).unwrap();
        let chi2 = SwitchingFunction::cosine_bump(2.0, 1.0, 0.0).unwrap();
        let protocol = Protocol::new(
            Leg::new(Observable::sigma_x(), chi1),
            Leg::new(Observable::sigma_y(), chi2),
            0.2,
        )
        .unwrap();
        let spec = quick_spec(0.005);
        let asym = ordering_asymmetry_exact(&field, &protocol, &rho(), &spec).unwrap();
        assert!(trace_norm(&asym.delta) < 1e-12);
    }

    #[test]
    fn commuting_couplings_give_identical_orderings() {
        // Same observable on both legs: the leg unitaries commute up to a
        // global phase, so the orderings agree to integrator accuracy.
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let chi1 = SwitchingFunction::cosine_bump(-2.0, 1.0, 1.0).unwrap();
        let chi2 = SwitchingFunction::cosine_bump(2.0, 1.0, 1.0).unwrap();
        let protocol = Protocol::new(
            Leg::new(Observable::sigma_x(), chi1),
            Leg::new(Observable::sigma_x(), chi2),
            0.1,
        )
        .unwrap();
        let spec = quick_spec(0.004);
        let asym = ordering_asymmetry_exact(&field, &protocol, &rho(), &spec).unwrap();
        assert!(
            trace_norm(&asym.delta) <= 1e-9,
            "distance {}",
            trace_norm(&asym.delta)
        );
    }

    #[test]
    fn reversal_flips_the_exact_asymmetry() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let protocol = xy_protocol(0.1);
        let spec = quick_spec(0.005);
        let fwd = ordering_asymmetry_exact(&field, &protocol, &rho(), &spec).unwrap();
        let rev = ordering_asymmetry_exact(&field, &protocol.reversed(), &rho(), &spec).unwrap();
        assert!((fwd.delta + rev.delta).max_abs() < 1e-12);
    }

    #[test]
    fn matches_second_order_state_at_small_coupling() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let spec = quick_spec(0.004);
        let model = SpectralModel::discrete(field.modes().clone());
        let mut ratios = Vec::new();
        for &lambda in &[0.05, 0.1] {
            let protocol = xy_protocol(lambda);
            let exact = evolve_protocol(
                &field,
                &protocol,
                &rho(),
                ProtocolOrder::FirstThenSecond,
                &spec,
            )
            .unwrap();
            let pert =
                second_order_state(&protocol, &model, &rho(), ProtocolOrder::FirstThenSecond, 1e-11)
                    .unwrap();
            let td = trace_distance(&exact.reduced, &pert.density().unwrap());
            assert!(td < lambda.powi(3), "λ={lambda}: distance {td}");
            ratios.push(td);
        }
        // Gaussian state: odd orders vanish, so the remainder is ~λ⁴.
        let ratio = ratios[1] / ratios[0];
        assert!(
            (8.0..40.0).contains(&ratio),
            "remainder ratio {ratio} not consistent with λ³-or-better"
        );
    }

    #[test]
    fn asymmetry_matches_perturbative_formula_at_small_coupling() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let lambda = 0.05;
        let protocol = xy_protocol(lambda);
        let spec = quick_spec(0.004);
        let asym = ordering_asymmetry_exact(&field, &protocol, &rho(), &spec).unwrap();
        let model = SpectralModel::discrete(field.modes().clone());
        let pert = delta_rho_commutator_time(&protocol, &model, &rho(), 1e-11).unwrap();
        let gap = trace_norm(&(asym.delta - pert.delta_rho));
        let scale = trace_norm(&pert.delta_rho);
        assert!(gap / scale < 0.01, "relative gap {}", gap / scale);
    }

    #[test]
    fn vacuum_limit_matches_perturbative_formula() {
        // β = 50: the thermal state is numerically the vacuum and the
        // coth weights saturate at 1.
        let field = TruncatedField::new(modes(50.0), 6).unwrap();
        let lambda = 0.05;
        let protocol = xy_protocol(lambda);
        let spec = quick_spec(0.004);
        let asym = ordering_asymmetry_exact(&field, &protocol, &rho(), &spec).unwrap();
        assert!(trace_norm(&asym.delta) > 1e-7, "asymmetry persists");
        let model = SpectralModel::discrete(field.modes().clone());
        let pert = delta_rho_frequency(&protocol, &model, &rho(), 1e-12).unwrap();
        // coth → 1 means the coefficient approaches the vacuum overlap.
        let mut vacuum_c = 0.0;
        for m in field.modes().modes() {
            let f1 = protocol.first().switching.fourier(m.frequency).unwrap().value;
            let f2 = protocol.second().switching.fourier(m.frequency).unwrap().value;
            vacuum_c += 2.0 * m.coupling * m.coupling * (f1 * f2.conj()).re;
        }
        assert!((pert.coefficient - vacuum_c).abs() < 1e-10);
        let gap = trace_norm(&(asym.delta - pert.delta_rho));
        assert!(gap / trace_norm(&pert.delta_rho) < 0.01);
    }

    #[test]
    fn diagonal_state_control_in_exact_evolution() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let protocol = xy_protocol(0.01);
        let spec = quick_spec(0.004);
        let rho_diag = DensityMatrix::from_bloch([0.0, 0.0, 0.6]).unwrap();
        let asym = ordering_asymmetry_exact(&field, &protocol, &rho_diag, &spec).unwrap();
        assert!(
            trace_norm(&asym.delta) * 0.5 <= 1e-10,
            "trace distance {}",
            trace_norm(&asym.delta) * 0.5
        );
    }

    #[test]
    fn odd_channel_of_commuting_pair_matches_engine() {
        // σ_x paired with the identity: the observables commute, so the
        // Hadamard channel is absent, but the field-commutator channel
        // Δρ = 2iλ² Im(w₁₂)[σ_x, ρ] survives. The exact evolution must
        // reproduce the engine's two-channel formula.
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let chi1 = SwitchingFunction::cosine_bump(-2.0, 1.0, 1.0).unwrap();
        let chi2 = SwitchingFunction::cosine_bump(2.0, 1.0, 1.0).unwrap();
        let protocol = Protocol::new(
            Leg::new(Observable::sigma_x(), chi1),
            Leg::new(
                Observable::custom(crate::algebra::ComplexMatrix2::identity()).unwrap(),
                chi2,
            ),
            0.05,
        )
        .unwrap();
        let rho_in = DensityMatrix::from_bloch([0.2, 0.5, 0.5]).unwrap();
        let spec = quick_spec(0.004);
        let asym = ordering_asymmetry_exact(&field, &protocol, &rho_in, &spec).unwrap();
        let model = SpectralModel::discrete(field.modes().clone());
        let pert = delta_rho_commutator_time(&protocol, &model, &rho_in, 1e-11).unwrap();
        let scale = trace_norm(&pert.delta_rho);
        assert!(scale > 1e-6, "odd channel must be resolvable, got {scale}");
        let gap = trace_norm(&(asym.delta - pert.delta_rho));
        assert!(gap / scale < 0.01, "relative gap {}", gap / scale);
    }

    #[test]
    fn leakage_is_detected() {
        // A hot, hard-driven two-level truncation must trip the leakage
        // check.
        let small = DiscreteModeSet::new(
            vec![Mode {
                frequency: 0.4,
                coupling: 1.0,
            }],
            0.2,
        )
        .unwrap();
        let field = TruncatedField::new(small, 1).unwrap();
        let protocol = xy_protocol(0.5);
        let spec = EvolutionSpec::new(0.01, vec![0.5]).unwrap();
        let err = ordering_asymmetry_exact(&field, &protocol, &rho(), &spec).unwrap_err();
        assert!(matches!(err, Error::TruncationLeakage { .. }), "{err}");
    }

    #[test]
    fn unitarity_drift_is_small() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let protocol = xy_protocol(0.3);
        let spec = quick_spec(0.003);
        let out = evolve_protocol(
            &field,
            &protocol,
            &rho(),
            ProtocolOrder::FirstThenSecond,
            &spec,
        )
        .unwrap();
        assert!(out.unitarity_drift <= 1e-9, "drift {}", out.unitarity_drift);
        assert!(out.step_difference.unwrap() <= 1e-8);
    }

    #[test]
    fn scaling_fit_slope_is_at_least_cubic() {
        let field = TruncatedField::new(modes(1.0), 8).unwrap();
        let protocol = xy_protocol(1.0);
        let grid = EvolutionSpec::geometric_grid(0.02, 0.25, 6).unwrap();
        let spec = EvolutionSpec::new(0.005, grid).unwrap();
        let fit = scaling_fit(&field, &protocol, &rho(), &spec).unwrap();
        assert!(fit.failures.is_empty());
        assert!(fit.slope >= 2.8, "slope {}", fit.slope);
        assert!(fit.r_squared >= 0.99, "r² {}", fit.r_squared);
        assert!(!fit.regime_warning);
        // The perturbative column is exactly quadratic.
        for w in fit.rows.windows(2) {
            let scaled0 = w[0].perturbative_norm / (w[0].lambda * w[0].lambda);
            let scaled1 = w[1].perturbative_norm / (w[1].lambda * w[1].lambda);
            assert!((scaled0 - scaled1).abs() <= 1e-12 * scaled0.abs());
        }
    }

    #[test]
    fn scaling_fit_refuses_single_point() {
        let field = TruncatedField::new(modes(1.0), 4).unwrap();
        let protocol = xy_protocol(1.0);
        let spec = EvolutionSpec::new(0.01, vec![0.1]).unwrap();
        assert!(matches!(
            scaling_fit(&field, &protocol, &rho(), &spec),
            Err(Error::InsufficientPoints(_))
        ));
    }

    #[test]
    fn leakage_decreases_with_truncation_depth() {
        let protocol = xy_protocol(0.2);
        let mut spec = quick_spec(0.005);
        spec.leakage_threshold = 1.0; // measure, don't reject
        spec.step_tolerance = None;
        let mut last = f64::INFINITY;
        for n_max in [4, 6, 8] {
            let field = TruncatedField::new(modes(1.0), n_max).unwrap();
            let out = evolve_protocol(
                &field,
                &protocol,
                &rho(),
                ProtocolOrder::FirstThenSecond,
                &spec,
            )
            .unwrap();
            let worst = out.leakage.iter().cloned().fold(0.0f64, f64::max);
            assert!(worst < last, "n_max {n_max}: leakage {worst} vs {last}");
            last = worst;
        }
    }

    #[test]
    fn grid_validation() {
        assert!(EvolutionSpec::new(0.01, vec![0.1, 0.05]).is_err());
        assert!(EvolutionSpec::new(0.01, vec![0.1, 0.2, 0.5]).is_err());
        assert!(EvolutionSpec::new(0.01, vec![-0.1]).is_err());
        let geo = EvolutionSpec::geometric_grid(0.01, 0.3, 10).unwrap();
        assert_eq!(geo.len(), 10);
        EvolutionSpec::new(0.01, geo).unwrap();
        let mut bad = EvolutionSpec::new(0.01, vec![0.1, 0.2, 0.4]).unwrap();
        bad.order = 2;
        assert!(bad.validate().is_err());
    }
}
