//! Time integration of the ρ-MCTDH flow.
//!
//! One step of length `τ` is `K(τ/2) ∘ P(τ) ∘ K(τ/2)`: the kinetic flow `K` is
//! applied exactly to each SPF in Fourier space, the remaining flow `P`
//! (trap, absorber, interaction) is integrated with classical RK4.
//! Imaginary-time relaxation of pure states uses unsplit RK4.

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fock::{basis_transform, FockBasis};
use crate::grid::free_propagate;
use crate::linalg::{all_finite, c, CMat};
use crate::liouville::num_steps;
use crate::mctdh::{derivative, energy_complex, reduced_one_body_with, DensityPower, GridModel, MctdhState, SpfSolveInfo};
use crate::pure::{self, PsiState, TimeKind};

/// Orthonormality drift above which the SPFs are re-orthonormalized.
pub const REORTHONORMALIZE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub tau: f64,
    pub t_final: f64,
    pub record_every: usize,
    pub eps_reg: f64,
}

impl PropagationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(invalid("time step must be positive"));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(invalid("final time must be non-negative"));
        }
        if self.record_every == 0 {
            return Err(invalid("record interval must be at least one step"));
        }
        if !(self.eps_reg >= 0.0) {
            return Err(invalid("regularization must be non-negative"));
        }
        Ok(())
    }
}

/// Observables recorded along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub t: f64,
    /// `p_n = tr(B_n)` for `n = 0..=N`.
    pub probabilities: Vec<f64>,
    pub energy: f64,
    pub trace: f64,
    pub sigma_min: f64,
    /// Particle density `n(x)` on the grid nodes.
    pub density: Vec<f64>,
    pub hermiticity_residual: f64,
    pub orthonormality_drift: f64,
}

/// Notifications emitted while propagating.
#[derive(Debug, Clone, PartialEq)]
pub enum Event<'a> {
    Record(&'a TrajectoryRecord),
    Reorthonormalized { t: f64, drift: f64 },
    NearSingular { t: f64, sigma_min: f64 },
}

/// Exact free flow of every SPF over `dt`; `B` is untouched.
pub fn kinetic_half_step(model: &GridModel, state: &mut MctdhState, dt: f64) {
    let phi = state.spfs.matrix_mut();
    for j in 0..phi.ncols() {
        let mut col: Vec<_> = phi.column(j).iter().copied().collect();
        free_propagate(&model.grid, &mut col, dt);
        phi.column_mut(j).copy_from_slice(&col);
    }
}

fn shifted(state: &MctdhState, dphi: &CMat, db: &[CMat], h: f64) -> MctdhState {
    let mut s = state.clone();
    *s.spfs.matrix_mut() += dphi * c(h);
    s.b.axpy(h, db);
    s
}

fn rk4(basis: &FockBasis, model: &GridModel, state: &mut MctdhState, dt: f64, eps_reg: f64, kinetic: bool) -> Result<SpfSolveInfo> {
    let (k1, info) = derivative(basis, model, state, kinetic, eps_reg)?;
    let (k2, _) = derivative(basis, model, &shifted(state, &k1.dphi, &k1.db, 0.5 * dt), kinetic, eps_reg)?;
    let (k3, _) = derivative(basis, model, &shifted(state, &k2.dphi, &k2.db, 0.5 * dt), kinetic, eps_reg)?;
    let (k4, _) = derivative(basis, model, &shifted(state, &k3.dphi, &k3.db, dt), kinetic, eps_reg)?;
    let w = dt / 6.0;
    *state.spfs.matrix_mut() += (k1.dphi + k2.dphi * c(2.0) + k3.dphi * c(2.0) + k4.dphi) * c(w);
    state.b.axpy(w, &k1.db);
    state.b.axpy(2.0 * w, &k2.db);
    state.b.axpy(2.0 * w, &k3.db);
    state.b.axpy(w, &k4.db);
    if !all_finite(state.spfs.matrix()) || !state.b.is_finite() {
        return Err(Error::NumericalBlowup { t: state.t, what: "non-finite values in RK4 step".into() });
    }
    Ok(info)
}

/// One RK4 step of the coupled `(φ, B)` system without the kinetic energy.
pub fn potential_step(basis: &FockBasis, model: &GridModel, state: &mut MctdhState, dt: f64, eps_reg: f64) -> Result<SpfSolveInfo> {
    rk4(basis, model, state, dt, eps_reg, false)
}

/// Unsplit RK4 step with the full one-body operator; advances `state.t` by `dt`.
///
/// Restricted to `dt` well below `1 / max(k²/2)`; used as a reference integrator.
pub fn rk4_step(basis: &FockBasis, model: &GridModel, state: &mut MctdhState, dt: f64, eps_reg: f64) -> Result<SpfSolveInfo> {
    let info = rk4(basis, model, state, dt, eps_reg, true)?;
    state.t += dt;
    Ok(info)
}

/// One full step of the symmetric splitting scheme; advances `state.t` by `tau`.
pub fn split_step(basis: &FockBasis, model: &GridModel, state: &mut MctdhState, tau: f64, eps_reg: f64) -> Result<SpfSolveInfo> {
    kinetic_half_step(model, state, 0.5 * tau);
    let info = potential_step(basis, model, state, tau, eps_reg)?;
    kinetic_half_step(model, state, 0.5 * tau);
    state.t += tau;
    Ok(info)
}

/// Gram–Schmidt on the SPFs with the congruent update of `B`, keeping `ρ` fixed.
pub fn reorthonormalize(basis: &FockBasis, state: &mut MctdhState) -> Result<()> {
    let r = state.spfs.orthonormalize()?;
    let transform = basis_transform(basis, basis, &r)?;
    state.b = state.b.transformed(&transform);
    Ok(())
}

/// Particle density `n(x) = Σ_jk conj(φ_j(x)) φ_k(x) tr(c_j† c_k B)`.
pub fn density(basis: &FockBasis, state: &MctdhState) -> Vec<f64> {
    let s1 = reduced_one_body_with(basis, &state.b, DensityPower::First);
    let phi = state.spfs.matrix();
    let l = phi.ncols();
    (0..phi.nrows())
        .map(|a| {
            let mut acc = 0.0;
            for j in 0..l {
                for k in 0..l {
                    acc += (phi[(a, j)].conj() * phi[(a, k)] * s1[(j, k)]).re;
                }
            }
            acc
        })
        .collect()
}

/// `tr(H ρ)`, failing if its imaginary part exceeds `1e-8`.
pub fn energy(basis: &FockBasis, model: &GridModel, state: &MctdhState) -> Result<f64> {
    let e = energy_complex(basis, model, state)?;
    if e.im.abs() > 1e-8 {
        return Err(Error::Consistency(format!("energy has imaginary part {:e}", e.im)));
    }
    Ok(e.re)
}

/// Snapshot of the observables at the current state.
pub fn record(basis: &FockBasis, model: &GridModel, state: &MctdhState) -> Result<TrajectoryRecord> {
    let s = reduced_one_body_with(basis, &state.b, DensityPower::Squared);
    Ok(TrajectoryRecord {
        t: state.t,
        probabilities: state.b.probabilities(),
        energy: energy(basis, model, state)?,
        trace: state.b.trace().re,
        sigma_min: crate::mctdh::min_eig_s(&s),
        density: density(basis, state),
        hermiticity_residual: state.b.hermiticity_residual(),
        orthonormality_drift: state.spfs.orthonormality_error(),
    })
}

/// Repeated [`split_step`] with a record at `t = 0` and every `record_every`
/// steps. Record times are `k · record_every · τ` exactly.
pub fn propagate(
    basis: &FockBasis,
    model: &GridModel,
    state: &mut MctdhState,
    config: &PropagationConfig,
    mut observer: impl FnMut(Event<'_>),
) -> Result<Vec<TrajectoryRecord>> {
    config.validate()?;
    let t0 = state.t;
    let steps = num_steps(config.t_final, config.tau);
    let mut records = Vec::with_capacity(steps / config.record_every + 1);
    let first = record(basis, model, state)?;
    observer(Event::Record(&first));
    records.push(first);
    for step in 1..=steps {
        let info = split_step(basis, model, state, config.tau, config.eps_reg)?;
        state.t = t0 + step as f64 * config.tau;
        if info.near_singular {
            observer(Event::NearSingular { t: state.t, sigma_min: info.sigma_min });
        }
        let drift = state.spfs.orthonormality_error();
        if drift > REORTHONORMALIZE_THRESHOLD {
            reorthonormalize(basis, state)?;
            observer(Event::Reorthonormalized { t: state.t, drift });
        }
        if step % config.record_every == 0 || step == steps {
            let r = record(basis, model, state)?;
            observer(Event::Record(&r));
            records.push(r);
        }
    }
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxConfig {
    pub tau: f64,
    /// Stop once `|ΔE| / Δs` drops below this.
    pub tolerance: f64,
    pub max_steps: usize,
    pub eps_reg: f64,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        Self { tau: 0.01, tolerance: 1e-10, max_steps: 200_000, eps_reg: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxed {
    pub state: PsiState,
    pub energy: f64,
    pub steps: usize,
}

/// Imaginary-time Ψ-MCTDH relaxation. After each RK4 step the coefficient
/// vector is normalized and the SPFs re-orthonormalized (with the matching
/// transformation of the coefficients).
pub fn relax_imaginary(basis: &FockBasis, model: &GridModel, initial: PsiState, config: &RelaxConfig) -> Result<Relaxed> {
    if !(config.tau > 0.0) {
        return Err(invalid("relaxation step must be positive"));
    }
    if model.has_cap() {
        return Err(invalid("imaginary-time relaxation requires a model without absorber"));
    }
    let mut state = initial;
    normalize_psi(basis, &mut state)?;
    let mut e_prev = pure::energy(basis, model, &state)?;
    for step in 1..=config.max_steps {
        pure::rk4_step(basis, model, &mut state, TimeKind::Imaginary, config.tau, config.eps_reg)?;
        normalize_psi(basis, &mut state)?;
        let e = pure::energy(basis, model, &state)?;
        if !e.is_finite() {
            return Err(Error::NumericalBlowup { t: state.t, what: "energy diverged during relaxation".into() });
        }
        if Float::abs(e - e_prev) / config.tau < config.tolerance {
            return Ok(Relaxed { state, energy: e, steps: step });
        }
        e_prev = e;
    }
    Err(Error::ConvergenceFailure { steps: config.max_steps, energy: e_prev })
}

fn normalize_psi(basis: &FockBasis, state: &mut PsiState) -> Result<()> {
    let r = state.spfs.orthonormalize()?;
    let transform = basis_transform(basis, basis, &r)?;
    state.coeffs = &transform[state.n] * &state.coeffs;
    let norm = state.coeffs.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::NumericalBlowup { t: state.t, what: format!("coefficient norm {norm}") });
    }
    state.coeffs /= c(norm);
    Ok(())
}
