//! Ψ-MCTDH for a pure state with a fixed particle number: the coefficient
//! vector `A` over block `n` plus the SPFs.
//!
//! Reduced densities are evaluated from the vector itself,
//! `ρ_jk = ⟨c_j A|c_k A⟩` and `ρ2_jklm = ⟨c_k c_j A|c_m c_l A⟩`.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::fock::FockBasis;
use crate::grid::{apply_one_body, OneBodyOp, SpfSet, Tensor4};
use crate::linalg::{c, CMat, CVec, C64, I};
use crate::mctdh::{compute_integrals, lindblad_operators, min_eig_s, regularized_solve, GridModel, SpfSolveInfo};

#[derive(Debug, Clone, PartialEq)]
pub struct PsiState {
    pub spfs: SpfSet,
    pub n: usize,
    pub coeffs: CVec,
    pub t: f64,
}

impl PsiState {
    pub fn new(basis: &FockBasis, spfs: SpfSet, n: usize, coeffs: CVec) -> Result<Self> {
        if spfs.count() != basis.modes() {
            return Err(invalid("SPF count does not match the Fock basis"));
        }
        if n > basis.max_particles() || coeffs.len() != basis.block_dim(n) {
            return Err(invalid("coefficient vector does not fit the basis block"));
        }
        Ok(Self { spfs, n, coeffs, t: 0.0 })
    }
}

/// Real-time or imaginary-time flow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeKind {
    /// `iȦ = (H - iG) A`.
    Real,
    /// `Ȧ = -(H - E) A` with `E = ⟨A|H|A⟩ / ⟨A|A⟩`.
    Imaginary,
}

/// `ρ_jk = ⟨A|c_j† c_k|A⟩`.
pub fn one_body_density(basis: &FockBasis, n: usize, a: &CVec) -> CMat {
    let l = basis.modes();
    if n == 0 {
        return CMat::zeros(l, l);
    }
    let lowered: Vec<CVec> = (0..l).map(|k| basis.apply_annihilator(k, n, a)).collect();
    CMat::from_fn(l, l, |j, k| lowered[j].dotc(&lowered[k]))
}

/// `ρ2_jklm = ⟨A|c_j† c_k† c_m c_l|A⟩`.
pub fn two_body_density(basis: &FockBasis, n: usize, a: &CVec) -> Tensor4 {
    let l = basis.modes();
    let mut out = Tensor4::zeros(l);
    if n < 2 {
        return out;
    }
    // pairs[l][m] = c_m c_l A
    let mut pairs: Vec<CVec> = Vec::with_capacity(l * l);
    for ll in 0..l {
        let once = basis.apply_annihilator(ll, n, a);
        for m in 0..l {
            pairs.push(basis.apply_annihilator(m, n - 1, &once));
        }
    }
    for j in 0..l {
        for k in 0..l {
            let bra = &pairs[j * l + k];
            for ll in 0..l {
                for m in 0..l {
                    out.set(j, k, ll, m, bra.dotc(&pairs[ll * l + m]));
                }
            }
        }
    }
    out
}

/// Derivatives `(φ̇, Ȧ)` of the Ψ-MCTDH equations, plus `⟨A|H|A⟩/⟨A|A⟩`.
pub fn derivative(
    basis: &FockBasis,
    model: &GridModel,
    state: &PsiState,
    kind: TimeKind,
    eps_reg: f64,
) -> Result<(CMat, CVec, f64, SpfSolveInfo)> {
    let integrals = compute_integrals(model, &state.spfs, true);
    let ops = lindblad_operators(basis, &integrals)?;
    let h = &ops.hamiltonian.blocks[state.n];
    let g = &ops.cap.blocks[state.n];
    let a = &state.coeffs;
    let ha = h * a;
    let norm2 = a.norm_squared();
    let e = (a.dotc(&ha) / norm2).re;

    let da = match kind {
        TimeKind::Real => &ha * (-I) - g * a,
        TimeKind::Imaginary => -(&ha - a * c(e)),
    };

    let l = basis.modes();
    let rho = one_body_density(basis, state.n, a) / c(norm2);
    let rho2 = two_body_density(basis, state.n, a);
    let phi = state.spfs.matrix();
    let npts = state.spfs.n_points();

    let h_phi = apply_one_body(&model.grid, OneBodyOp::Hamiltonian { kinetic: true, potential: &model.potential }, phi);
    let g_phi = apply_one_body(&model.grid, OneBodyOp::Cap(&model.cap), phi);
    let f_phi = match kind {
        TimeKind::Real => h_phi - g_phi * I,
        TimeKind::Imaginary => h_phi,
    };

    // r_j = Σ_k f φ_k ρ_jk + Σ_klm U_km φ_l ρ2_jklm, assembled column by column.
    let mut r = CMat::zeros(npts, l);
    let mut w = CVec::zeros(npts);
    for j in 0..l {
        let mut col = CVec::zeros(npts);
        for k in 0..l {
            col.axpy(rho[(j, k)], &f_phi.column(k), c(1.0));
        }
        for k in 0..l {
            for m in 0..l {
                w.fill(C64::new(0.0, 0.0));
                let mut any = false;
                for ll in 0..l {
                    let coeff = rho2.get(j, k, ll, m) / norm2;
                    if coeff != C64::new(0.0, 0.0) {
                        w.axpy(coeff, &phi.column(ll), c(1.0));
                        any = true;
                    }
                }
                if any {
                    col += integrals.mean_fields[k * l + m].component_mul(&w);
                }
            }
        }
        r.set_column(j, &col);
    }
    let r = state.spfs.project_complement_matrix(&r);
    let sigma_min = min_eig_s(&rho);
    // Σ_k φ̇_k ρ_jk = -i r_j  (real)   or   -r_j  (imaginary)
    let factor = match kind {
        TimeKind::Real => -I,
        TimeKind::Imaginary => c(-1.0),
    };
    let dphi = regularized_solve(&rho, &(r.transpose() * factor), eps_reg).transpose();
    let dphi = state.spfs.project_complement_matrix(&dphi);
    Ok((dphi, da, e, SpfSolveInfo { sigma_min, near_singular: sigma_min < 100.0 * eps_reg }))
}

/// `⟨A|H|A⟩ / ⟨A|A⟩` with the full Hamiltonian.
pub fn energy(basis: &FockBasis, model: &GridModel, state: &PsiState) -> Result<f64> {
    let integrals = compute_integrals(model, &state.spfs, true);
    let ops = lindblad_operators(basis, &integrals)?;
    let a = &state.coeffs;
    Ok((a.dotc(&(&ops.hamiltonian.blocks[state.n] * a)) / c(a.norm_squared())).re)
}

/// One classical RK4 step of the Ψ-MCTDH equations (no splitting).
pub fn rk4_step(basis: &FockBasis, model: &GridModel, state: &mut PsiState, kind: TimeKind, dt: f64, eps_reg: f64) -> Result<SpfSolveInfo> {
    let stage = |s: &PsiState, dphi: &CMat, da: &CVec, h: f64| {
        let mut t = s.clone();
        *t.spfs.matrix_mut() += dphi * c(h);
        t.coeffs += da * c(h);
        t
    };
    let (p1, a1, _, info) = derivative(basis, model, state, kind, eps_reg)?;
    let s2 = stage(state, &p1, &a1, 0.5 * dt);
    let (p2, a2, _, _) = derivative(basis, model, &s2, kind, eps_reg)?;
    let s3 = stage(state, &p2, &a2, 0.5 * dt);
    let (p3, a3, _, _) = derivative(basis, model, &s3, kind, eps_reg)?;
    let s4 = stage(state, &p3, &a3, dt);
    let (p4, a4, _, _) = derivative(basis, model, &s4, kind, eps_reg)?;
    let w = dt / 6.0;
    *state.spfs.matrix_mut() += (p1 + p2 * c(2.0) + p3 * c(2.0) + p4) * c(w);
    state.coeffs += (a1 + a2 * c(2.0) + a3 * c(2.0) + a4) * c(w);
    state.t += dt;
    Ok(info)
}
