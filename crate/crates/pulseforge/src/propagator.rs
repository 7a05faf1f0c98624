//! Propagator backends: exact, Trotter, and Trotter-Suzuki via the diagonal
//! factorization, with offset shifting and the robustness ensemble.
//!
//! The exact backend evaluates V_j = exp(-i (H0 + H_j) dt) with a full
//! matrix exponential per step and is the reference for everything else.
//! The suzuki backend conjugates the x-aligned Trotter-Suzuki splitting into
//! the Hadamard basis,
//!
//!   V_j ~= exp(-i phi_j Fz) W1 exp(-i alpha'_j Fz dt) W2 exp(+i phi_j Fz),
//!
//! where W1 = exp(-i H0' dt/2) H^(q) and W2 = H^(q) exp(-i H0' dt/2) are
//! precomputed once per offset in a [`PropagatorPlan`]. All explicit
//! exponentials are then diagonal, and a sub-propagator costs one general
//! matrix product. Offsets Omega shift part of the control into the
//! background, H0' = H0 + Omega Fx, leaving the residual
//! alpha' = alpha - Omega as small as possible.
//!
//! Heteronuclear systems get one channel per species; channel operators
//! commute, so the diagonal exponentials combine into a single diagonal with
//! summed exponents.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::counters;
use crate::error::{Error, Result};
use crate::linalg::{
    diag_exp_into, matmul, matmul_into, sandwich_product_into, DenseMatrix, DiagonalVector,
    ExpmWorkspace,
};
use crate::pulse::{Amplitude, ControlPulse};
use crate::spin::{hadamard_basis, Axis, ControlChannel, SpinSystem};

/// Engine outputs must stay unitary to this residual.
pub const UNITARITY_TOL: f64 = 1e-8;

/// A dense unitary with lazily computed unitarity diagnostics.
#[derive(Debug, Clone)]
pub struct Unitary {
    matrix: DenseMatrix,
    residual: OnceLock<f64>,
}

impl Unitary {
    pub fn new(matrix: DenseMatrix) -> Self {
        Unitary {
            matrix,
            residual: OnceLock::new(),
        }
    }

    /// Wrap a matrix that is supposed to be unitary, rejecting it when the
    /// residual exceeds `tol`.
    pub fn checked(matrix: DenseMatrix, tol: f64) -> Result<Self> {
        let u = Unitary::new(matrix);
        let r = u.unitarity_residual();
        if !(r <= tol) {
            return Err(Error::NonUnitary(r));
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        Unitary::new(DenseMatrix::identity(dim))
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// max-norm(V^dag V - I), computed once and cached.
    pub fn unitarity_residual(&self) -> f64 {
        *self.residual.get_or_init(|| self.matrix.unitarity_residual())
    }
}

/// Which rule evaluates each sub-propagator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    /// Full matrix exponential per step (Eq. reference for the others).
    Exact,
    /// First-order splitting; error-order comparisons only.
    Trotter,
    /// Phase transform + symmetric splitting in the Hadamard basis.
    Suzuki,
}

impl Backend {
    pub fn label(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::Trotter => "trotter",
            Backend::Suzuki => "suzuki",
        }
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Backend::Exact),
            "trotter" => Ok(Backend::Trotter),
            "suzuki" => Ok(Backend::Suzuki),
            other => Err(Error::InvalidArgument(format!(
                "unknown backend '{other}' (expected exact|trotter|suzuki)"
            ))),
        }
    }
}

struct ChannelOps {
    species: String,
    fx: DenseMatrix,
    fy: DenseMatrix,
    fz_spec: Vec<f64>,
}

struct OffsetVariant {
    /// One offset per channel, rad/s.
    omegas: Vec<f64>,
    /// exp(-i H0' dt/2) H^(q)
    w1: DenseMatrix,
    /// H^(q) exp(-i H0' dt/2)
    w2: DenseMatrix,
}

/// Precomputed data for the approximate pipeline: per-offset basis matrices,
/// channel operators, and F^z spectra. Read-only after construction and
/// shareable across threads; per-worker scratch lives in [`StepWorkspace`].
pub struct PropagatorPlan {
    dt: f64,
    dim: usize,
    h0: DenseMatrix,
    hadamard: DenseMatrix,
    channels: Vec<ChannelOps>,
    /// Per-channel offsets, sorted ascending.
    offsets: Vec<Vec<f64>>,
    variants: Vec<OffsetVariant>,
    strides: Vec<usize>,
    expm_calls: u64,
    /// exp(-i H0 dt) H^(q), built on first trotter use (zero-offset plans).
    trotter_t1: OnceLock<DenseMatrix>,
}

impl PropagatorPlan {
    /// Build a plan with one offset list per control channel. Each
    /// combination of per-channel offsets costs exactly one matrix
    /// exponential; these are the only exponentials in the approximate
    /// pipeline.
    pub fn build(system: &SpinSystem, dt: f64, offsets_per_channel: &[Vec<f64>]) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument("plan time step must be positive".into()));
        }
        let chans = system.channels();
        if offsets_per_channel.len() != chans.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} offset lists for {} channels",
                offsets_per_channel.len(),
                chans.len()
            )));
        }
        let mut offsets: Vec<Vec<f64>> = Vec::with_capacity(chans.len());
        for list in offsets_per_channel {
            if list.is_empty() {
                return Err(Error::InvalidArgument("each channel needs >= 1 offset".into()));
            }
            if list.iter().any(|o| !o.is_finite()) {
                return Err(Error::Numeric("non-finite offset".into()));
            }
            let mut sorted = list.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            offsets.push(sorted);
        }

        let dim = system.dim();
        let h0 = system.h0();
        let hadamard = hadamard_basis(system.spin_count());
        let mut channels = Vec::with_capacity(chans.len());
        for ch in &chans {
            channels.push(ChannelOps {
                fx: system.total_spin_op(Axis::X, Some(&ch.species))?,
                fy: system.total_spin_op(Axis::Y, Some(&ch.species))?,
                fz_spec: system.fz_spectrum(Some(&ch.species))?,
                species: ch.species.clone(),
            });
        }

        // strides for row-major variant indexing over channels
        let mut strides = vec![1usize; offsets.len()];
        for k in (0..offsets.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * offsets[k + 1].len();
        }
        let variant_count: usize = offsets.iter().map(Vec::len).product();

        let mut ws = ExpmWorkspace::new(dim);
        let mut exponent = DenseMatrix::zeros(dim);
        let mut half = DenseMatrix::zeros(dim);
        let mut variants = Vec::with_capacity(variant_count);
        let mut expm_calls = 0u64;
        for v in 0..variant_count {
            let omegas: Vec<f64> = offsets
                .iter()
                .zip(strides.iter())
                .map(|(list, stride)| list[(v / stride) % list.len()])
                .collect();
            exponent.copy_from(&h0);
            for (k, om) in omegas.iter().enumerate() {
                if *om != 0.0 {
                    exponent.add_scaled(Complex64::new(*om, 0.0), &channels[k].fx);
                }
            }
            exponent.scale(Complex64::new(0.0, -dt / 2.0));
            crate::linalg::expm_into(&exponent, &mut ws, &mut half)?;
            expm_calls += 1;
            let w1 = matmul(&half, &hadamard)?;
            let w2 = matmul(&hadamard, &half)?;
            variants.push(OffsetVariant { omegas, w1, w2 });
        }

        Ok(PropagatorPlan {
            dt,
            dim,
            h0,
            hadamard,
            channels,
            offsets,
            variants,
            strides,
            expm_calls,
            trotter_t1: OnceLock::new(),
        })
    }

    /// Plan with Omega = 0 on every channel.
    pub fn plain(system: &SpinSystem, dt: f64) -> Result<Self> {
        let lists = vec![vec![0.0]; system.channels().len()];
        Self::build(system, dt, &lists)
    }

    /// Plan with one offset per channel at the pulse's mean amplitude.
    /// Intended for per-iteration rebuild inside the optimizer; costs one
    /// matrix exponential.
    pub fn mean_offset(system: &SpinSystem, dt: f64, pulse: &ControlPulse) -> Result<Self> {
        let lists: Vec<Vec<f64>> = pulse.mean_alpha().into_iter().map(|m| vec![m]).collect();
        Self::build(system, dt, &lists)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h0(&self) -> &DenseMatrix {
        &self.h0
    }

    pub fn hadamard(&self) -> &DenseMatrix {
        &self.hadamard
    }

    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn channel_fx(&self, channel: usize) -> &DenseMatrix {
        &self.channels[channel].fx
    }

    pub fn channel_fy(&self, channel: usize) -> &DenseMatrix {
        &self.channels[channel].fy
    }

    pub fn channel_fz_spectrum(&self, channel: usize) -> &[f64] {
        &self.channels[channel].fz_spec
    }

    /// Matrix exponentials spent building this plan.
    pub fn expm_calls(&self) -> u64 {
        self.expm_calls
    }

    pub fn variant_count(&self) -> usize {
        self.variants.len()
    }

    pub fn offsets(&self, channel: usize) -> &[f64] {
        &self.offsets[channel]
    }

    pub fn variant_omegas(&self, variant: usize) -> &[f64] {
        &self.variants[variant].omegas
    }

    /// Basis matrices of one offset variant (W1, W2).
    pub fn variant_bases(&self, variant: usize) -> (&DenseMatrix, &DenseMatrix) {
        (&self.variants[variant].w1, &self.variants[variant].w2)
    }

    /// Nearest offset to `alpha` on one channel; ties break toward the
    /// smaller Omega.
    pub fn select_offset(&self, channel: usize, alpha: f64) -> usize {
        let list = &self.offsets[channel];
        let mut best = 0;
        let mut best_d = (alpha - list[0]).abs();
        for (i, om) in list.iter().enumerate().skip(1) {
            let d = (alpha - om).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Variant index for one step's (scaled) amplitudes.
    pub fn select_variant(&self, amps: &[Amplitude], scale: f64) -> usize {
        let mut v = 0;
        for (k, amp) in amps.iter().enumerate() {
            v += self.select_offset(k, scale * amp.alpha()) * self.strides[k];
        }
        v
    }

    fn check_pulse(&self, pulse: &ControlPulse) -> Result<()> {
        if pulse.channel_count() != self.channels.len() {
            return Err(Error::DimensionMismatch(format!(
                "pulse has {} channels, plan has {}",
                pulse.channel_count(),
                self.channels.len()
            )));
        }
        for (pc, ch) in pulse.channels().iter().zip(self.channels.iter()) {
            if pc.species != ch.species {
                return Err(Error::InvalidArgument(format!(
                    "pulse channel species '{}' does not match plan channel '{}'",
                    pc.species, ch.species
                )));
            }
        }
        Ok(())
    }

    fn is_zero_offset(&self) -> bool {
        self.variants.len() == 1 && self.variants[0].omegas.iter().all(|o| *o == 0.0)
    }

    /// exp(-i H0 dt) H^(q) = W1 W2 H^(q); no extra matrix exponential.
    fn trotter_t1(&self) -> Result<&DenseMatrix> {
        if !self.is_zero_offset() {
            return Err(Error::InvalidArgument(
                "trotter backend requires a plain (zero-offset) plan".into(),
            ));
        }
        Ok(self.trotter_t1.get_or_init(|| {
            let v = &self.variants[0];
            let prod = matmul(&v.w1, &v.w2).expect("plan matrices share one dimension");
            matmul(&prod, &self.hadamard).expect("plan matrices share one dimension")
        }))
    }

    /// Channels as pulse-facing descriptors.
    pub fn pulse_channels(&self) -> Vec<ControlChannel> {
        self.channels
            .iter()
            .map(|c| ControlChannel { species: c.species.clone() })
            .collect()
    }
}

/// Per-worker scratch buffers for step evaluation and accumulation.
pub struct StepWorkspace {
    scratch: DenseMatrix,
    vj: DenseMatrix,
    acc: DenseMatrix,
    acc2: DenseMatrix,
    hbuild: DenseMatrix,
    expm_ws: ExpmWorkspace,
    exps: Vec<f64>,
    phase: DiagonalVector,
    central: DiagonalVector,
}

impl StepWorkspace {
    pub fn new(dim: usize) -> Self {
        StepWorkspace {
            scratch: DenseMatrix::zeros(dim),
            vj: DenseMatrix::zeros(dim),
            acc: DenseMatrix::zeros(dim),
            acc2: DenseMatrix::zeros(dim),
            hbuild: DenseMatrix::zeros(dim),
            expm_ws: ExpmWorkspace::new(dim),
            exps: vec![0.0; dim],
            phase: DiagonalVector::ones(dim),
            central: DiagonalVector::ones(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.vj.dim()
    }
}

/// Compute the step's phase diagonal exp(-i sum_k phi_k Fz_k) into
/// `ws.phase`. This is the rank-1 phase pattern of the sandwich product;
/// the robustness ensemble computes it once per step and shares it across
/// RF scalings.
fn compute_phase(plan: &PropagatorPlan, amps: &[Amplitude], ws: &mut StepWorkspace) -> Result<()> {
    counters::record_phase_pattern();
    ws.exps.fill(0.0);
    for (k, amp) in amps.iter().enumerate() {
        let phi = amp.phi();
        if phi != 0.0 {
            for (e, fz) in ws.exps.iter_mut().zip(plan.channels[k].fz_spec.iter()) {
                *e += phi * fz;
            }
        }
    }
    diag_exp_into(&ws.exps, Complex64::new(0.0, -1.0), &mut ws.phase)
}

/// Compute the central diagonal exp(-i dt sum_k alpha'_k Fz_k) into
/// `ws.central`, with alpha'_k = scale * alpha_k - omega_k.
fn compute_central(
    plan: &PropagatorPlan,
    amps: &[Amplitude],
    scale: f64,
    omegas: &[f64],
    ws: &mut StepWorkspace,
) -> Result<()> {
    ws.exps.fill(0.0);
    for (k, amp) in amps.iter().enumerate() {
        let residual = scale * amp.alpha() - omegas[k];
        if residual != 0.0 {
            for (e, fz) in ws.exps.iter_mut().zip(plan.channels[k].fz_spec.iter()) {
                *e += residual * fz;
            }
        }
    }
    diag_exp_into(&ws.exps, Complex64::new(0.0, -plan.dt), &mut ws.central)
}

/// Suzuki factorization for one step, assuming `ws.phase` already holds the
/// step's phase pattern.
fn suzuki_apply(
    plan: &PropagatorPlan,
    amps: &[Amplitude],
    scale: f64,
    variant: usize,
    ws: &mut StepWorkspace,
    out: &mut DenseMatrix,
) -> Result<()> {
    compute_central(plan, amps, scale, &plan.variants[variant].omegas, ws)?;
    counters::record_subprop();
    let v = &plan.variants[variant];
    sandwich_product_into(&ws.phase, &v.w1, &ws.central, &v.w2, &mut ws.scratch, out)
}

fn suzuki_step_into(
    plan: &PropagatorPlan,
    amps: &[Amplitude],
    scale: f64,
    variant: Option<usize>,
    ws: &mut StepWorkspace,
    out: &mut DenseMatrix,
) -> Result<()> {
    let variant = match variant {
        Some(v) => {
            if v >= plan.variants.len() {
                return Err(Error::IndexOutOfRange(format!(
                    "offset variant {v} of {}",
                    plan.variants.len()
                )));
            }
            v
        }
        None => plan.select_variant(amps, scale),
    };
    compute_phase(plan, amps, ws)?;
    suzuki_apply(plan, amps, scale, variant, ws, out)
}

fn trotter_step_into(
    plan: &PropagatorPlan,
    amps: &[Amplitude],
    scale: f64,
    ws: &mut StepWorkspace,
    out: &mut DenseMatrix,
) -> Result<()> {
    let t1 = plan.trotter_t1()?;
    compute_phase(plan, amps, ws)?;
    compute_central(plan, amps, scale, &plan.variants[0].omegas, ws)?;
    counters::record_subprop();
    sandwich_product_into(&ws.phase, t1, &ws.central, &plan.hadamard, &mut ws.scratch, out)
}

fn exact_step_into(
    plan: &PropagatorPlan,
    amps: &[Amplitude],
    scale: f64,
    ws: &mut StepWorkspace,
    out: &mut DenseMatrix,
) -> Result<()> {
    counters::record_subprop();
    ws.hbuild.copy_from(&plan.h0);
    for (k, amp) in amps.iter().enumerate() {
        let a = amp.scaled(scale);
        if a.x != 0.0 {
            ws.hbuild.add_scaled(Complex64::new(a.x, 0.0), &plan.channels[k].fx);
        }
        if a.y != 0.0 {
            ws.hbuild.add_scaled(Complex64::new(a.y, 0.0), &plan.channels[k].fy);
        }
    }
    ws.hbuild.scale(Complex64::new(0.0, -plan.dt));
    crate::linalg::expm_into(&ws.hbuild, &mut ws.expm_ws, out)
}

fn step_into(
    plan: &PropagatorPlan,
    backend: Backend,
    amps: &[Amplitude],
    scale: f64,
    variant: Option<usize>,
    ws: &mut StepWorkspace,
    out: &mut DenseMatrix,
) -> Result<()> {
    match backend {
        Backend::Exact => exact_step_into(plan, amps, scale, ws, out),
        Backend::Trotter => trotter_step_into(plan, amps, scale, ws, out),
        Backend::Suzuki => suzuki_step_into(plan, amps, scale, variant, ws, out),
    }
}

/// V_j = exp(-i (H0 + H_j) dt) by full matrix exponential: the reference
/// backend. `step` is 0-based.
pub fn exact_step(
    plan: &PropagatorPlan,
    pulse: &ControlPulse,
    step: usize,
    ws: &mut StepWorkspace,
) -> Result<Unitary> {
    plan.check_pulse(pulse)?;
    pulse.check_step(step)?;
    let mut out = DenseMatrix::zeros(plan.dim);
    exact_step_into(plan, pulse.step(step), 1.0, ws, &mut out)?;
    Ok(Unitary::new(out))
}

/// First-order splitting exp(-i phi Fz) exp(-i H0 dt) H exp(-i alpha Fz dt)
/// H exp(i phi Fz); requires a zero-offset plan. Provided for the
/// error-order comparison; the optimizer never uses it.
pub fn trotter_step(
    plan: &PropagatorPlan,
    pulse: &ControlPulse,
    step: usize,
    ws: &mut StepWorkspace,
) -> Result<Unitary> {
    plan.check_pulse(pulse)?;
    pulse.check_step(step)?;
    let mut out = DenseMatrix::zeros(plan.dim);
    trotter_step_into(plan, pulse.step(step), 1.0, ws, &mut out)?;
    Ok(Unitary::new(out))
}

/// Suzuki factorization for one step, selecting the nearest offset unless
/// `variant` pins one. No matrix exponential is evaluated.
pub fn suzuki_step(
    plan: &PropagatorPlan,
    pulse: &ControlPulse,
    step: usize,
    variant: Option<usize>,
    ws: &mut StepWorkspace,
) -> Result<Unitary> {
    plan.check_pulse(pulse)?;
    pulse.check_step(step)?;
    let mut out = DenseMatrix::zeros(plan.dim);
    suzuki_step_into(plan, pulse.step(step), 1.0, variant, ws, &mut out)?;
    Ok(Unitary::new(out))
}

/// Total propagator V = V_n ... V_1 (step 0 applied first), accumulated in
/// reused buffers.
pub fn total_propagator(
    plan: &PropagatorPlan,
    pulse: &ControlPulse,
    backend: Backend,
    ws: &mut StepWorkspace,
) -> Result<Unitary> {
    plan.check_pulse(pulse)?;
    let n = pulse.step_count();
    let mut first = DenseMatrix::zeros(plan.dim);
    step_into(plan, backend, pulse.step(0), 1.0, None, ws, &mut first)?;
    ws.acc.copy_from(&first);
    for j in 1..n {
        step_into(plan, backend, pulse.step(j), 1.0, None, ws, &mut first)?;
        matmul_into(&first, &ws.acc, &mut ws.acc2)?;
        std::mem::swap(&mut ws.acc, &mut ws.acc2);
    }
    Ok(Unitary::new(ws.acc.clone()))
}

/// Total propagators at scaled RF amplitudes (phi unchanged), e.g.
/// scalings = [0.95, 1.0, 1.05] for an RF-inhomogeneity ensemble. With the
/// suzuki and trotter backends the phase pattern is computed once per step
/// and shared across all scalings.
pub fn robustness_ensemble(
    plan: &PropagatorPlan,
    pulse: &ControlPulse,
    backend: Backend,
    scalings: &[f64],
    ws: &mut StepWorkspace,
) -> Result<Vec<Unitary>> {
    plan.check_pulse(pulse)?;
    if scalings.is_empty() {
        return Err(Error::InvalidArgument("ensemble needs >= 1 scaling".into()));
    }
    if scalings.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument("ensemble scalings must be positive".into()));
    }
    let n = pulse.step_count();
    let mut accs: Vec<DenseMatrix> = Vec::new();
    let mut step_buf = DenseMatrix::zeros(plan.dim);
    for j in 0..n {
        let amps = pulse.step(j);
        if backend != Backend::Exact {
            compute_phase(plan, amps, ws)?;
        }
        for (i, &scale) in scalings.iter().enumerate() {
            match backend {
                Backend::Exact => exact_step_into(plan, amps, scale, ws, &mut step_buf)?,
                Backend::Trotter => {
                    let t1 = plan.trotter_t1()?;
                    compute_central(plan, amps, scale, &plan.variants[0].omegas, ws)?;
                    counters::record_subprop();
                    sandwich_product_into(
                        &ws.phase,
                        t1,
                        &ws.central,
                        &plan.hadamard,
                        &mut ws.scratch,
                        &mut step_buf,
                    )?;
                }
                Backend::Suzuki => {
                    let variant = plan.select_variant(amps, scale);
                    suzuki_apply(plan, amps, scale, variant, ws, &mut step_buf)?;
                }
            }
            if j == 0 {
                accs.push(step_buf.clone());
            } else {
                matmul_into(&step_buf, &accs[i], &mut ws.acc2)?;
                std::mem::swap(&mut accs[i], &mut ws.acc2);
            }
        }
    }
    Ok(accs.into_iter().map(Unitary::new).collect())
}

/// [`robustness_ensemble`] with members split across `jobs` threads. Each
/// worker owns its scratch and folds its operation counts back into the
/// caller's thread. Note that each worker computes its own phase patterns,
/// so `jobs > 1` trades the pattern sharing for parallelism.
pub fn robustness_ensemble_jobs(
    plan: &PropagatorPlan,
    pulse: &ControlPulse,
    backend: Backend,
    scalings: &[f64],
    jobs: usize,
    ws: &mut StepWorkspace,
) -> Result<Vec<Unitary>> {
    if jobs <= 1 || scalings.len() <= 1 {
        return robustness_ensemble(plan, pulse, backend, scalings, ws);
    }
    let chunk = scalings.len().div_ceil(jobs);
    let results: Vec<Result<(Vec<Unitary>, counters::OpCounts)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = scalings
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    let before = counters::snapshot();
                    let mut local = StepWorkspace::new(plan.dim());
                    let out = robustness_ensemble(plan, pulse, backend, part, &mut local)?;
                    Ok((out, counters::snapshot().since(&before)))
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut all = Vec::with_capacity(scalings.len());
    for r in results {
        let (part, delta) = r?;
        counters::add(delta);
        all.extend(part);
    }
    Ok(all)
}

/// Evolve `pulse` under the pinned phase pattern machinery but with an
/// externally supplied per-step amplitude transform; exposed for the
/// optimizer's ensemble-averaged gradients.
pub(crate) fn step_into_for(
    plan: &PropagatorPlan,
    backend: Backend,
    amps: &[Amplitude],
    scale: f64,
    ws: &mut StepWorkspace,
    out: &mut DenseMatrix,
) -> Result<()> {
    step_into(plan, backend, amps, scale, None, ws, out)
}

/// Shared phase + per-member suzuki/trotter/exact step used by the gradient
/// ensemble path: computes the phase once, then one step per scaling.
pub(crate) fn steps_all_scalings_into(
    plan: &PropagatorPlan,
    backend: Backend,
    amps: &[Amplitude],
    scalings: &[f64],
    ws: &mut StepWorkspace,
    outs: &mut [DenseMatrix],
) -> Result<()> {
    debug_assert_eq!(scalings.len(), outs.len());
    if backend != Backend::Exact {
        compute_phase(plan, amps, ws)?;
    }
    for (out, &scale) in outs.iter_mut().zip(scalings.iter()) {
        match backend {
            Backend::Exact => exact_step_into(plan, amps, scale, ws, out)?,
            Backend::Trotter => {
                let t1 = plan.trotter_t1()?;
                compute_central(plan, amps, scale, &plan.variants[0].omegas, ws)?;
                counters::record_subprop();
                sandwich_product_into(&ws.phase, t1, &ws.central, &plan.hadamard, &mut ws.scratch, out)?;
            }
            Backend::Suzuki => {
                let variant = plan.select_variant(amps, scale);
                suzuki_apply(plan, amps, scale, variant, ws, out)?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
