//! ρ-MCTDH equations of motion.
//!
//! The state is `ρ = Σ |Φ_J⟩ B_JK ⟨Φ_K|` with determinants (or permanents)
//! built from `L` orthonormal SPFs. Under the gauge `⟨φ_j|φ̇_k⟩ = 0`:
//!
//! ```text
//! Ḃ = -i[H, B] - {G, B} + 2 Σ_jk Γ_jk c_k B c_j†
//! i Σ_k φ̇_k S_jk = Q [ Σ_k (h - iΓ) φ_k S_jk + Σ_klm U_km φ_l S2_jklm ]
//! ```
//!
//! with `S_jk = tr(c_j† c_k B²)` and `S2_jklm = tr(c_j† c_k† c_m c_l B²)`.

use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::fock::{galerkin_one_body, galerkin_two_body, FockBasis};
use crate::grid::{
    apply_one_body, mean_fields, one_body_integrals, two_body_from_mean_fields, GridSpec, OneBodyCoeffs, OneBodyOp, PairPotential, SpfSet,
    Tensor4, TwoBodyCoeffs,
};
use crate::linalg::{c, hermitian_eigen, min_hermitian_eigenvalue, trace, CMat, CVec, C64, I};
use crate::liouville::{lindblad_rhs, BlockDensityMatrix, LindbladOperators};

/// Default regularization strength for inverting `S`.
pub const DEFAULT_EPS_REG: f64 = 1e-8;

/// One-dimensional many-body model on a grid: trap, absorber and pair potential.
#[derive(Debug, Clone)]
pub struct GridModel {
    pub grid: GridSpec,
    pub potential: Vec<f64>,
    pub cap: Vec<f64>,
    pub pair: PairPotential,
}

impl GridModel {
    pub fn new(grid: GridSpec, potential: Vec<f64>, cap: Vec<f64>, pair: PairPotential) -> Result<Self> {
        let n = grid.n_points();
        if potential.len() != n || cap.len() != n || pair.n_points() != n {
            return Err(invalid("model potentials do not match the grid"));
        }
        if cap.iter().any(|&g| g < 0.0) {
            return Err(invalid("absorbing potential must be non-negative"));
        }
        Ok(Self { grid, potential, cap, pair })
    }

    /// Same model with the absorber switched off.
    pub fn without_cap(&self) -> Self {
        Self { cap: alloc::vec![0.0; self.grid.n_points()], ..self.clone() }
    }

    pub fn has_cap(&self) -> bool {
        self.cap.iter().any(|&g| g != 0.0)
    }
}

/// Point on the ρ-MCTDH manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct MctdhState {
    pub spfs: SpfSet,
    pub b: BlockDensityMatrix,
    pub t: f64,
}

impl MctdhState {
    pub fn new(spfs: SpfSet, b: BlockDensityMatrix, basis: &FockBasis) -> Result<Self> {
        if spfs.count() != basis.modes() {
            return Err(invalid("SPF count does not match the Fock basis"));
        }
        b.check_basis(basis)?;
        Ok(Self { spfs, b, t: 0.0 })
    }
}

/// Integrals of the current SPFs.
#[derive(Debug, Clone)]
pub struct Integrals {
    /// `h_jk` (`T + V`) or `V_jk` alone when the kinetic part is split off.
    pub one_body: OneBodyCoeffs,
    pub cap: OneBodyCoeffs,
    pub two_body: TwoBodyCoeffs,
    /// `U_km`, indexed `k * L + m`.
    pub mean_fields: Vec<CVec>,
    pub kinetic: bool,
}

pub fn compute_integrals(model: &GridModel, spfs: &SpfSet, kinetic: bool) -> Integrals {
    let one_body = one_body_integrals(&model.grid, spfs, OneBodyOp::Hamiltonian { kinetic, potential: &model.potential });
    let cap = one_body_integrals(&model.grid, spfs, OneBodyOp::Cap(&model.cap));
    let (two_body, fields) = if model.pair.is_zero() {
        let l = spfs.count();
        (Tensor4::zeros(l), alloc::vec![CVec::zeros(spfs.n_points()); l * l])
    } else {
        let fields = mean_fields(spfs, &model.pair);
        (two_body_from_mean_fields(spfs, &fields), fields)
    };
    Integrals { one_body, cap, two_body, mean_fields: fields, kinetic }
}

/// Galerkin matrices `H`, `G` and the CAP coefficients for the current SPFs.
pub fn lindblad_operators(basis: &FockBasis, integrals: &Integrals) -> Result<LindbladOperators> {
    let mut hamiltonian = galerkin_one_body(basis, &integrals.one_body.matrix)?;
    hamiltonian.add_assign(&galerkin_two_body(basis, &integrals.two_body)?);
    let cap = galerkin_one_body(basis, &integrals.cap.matrix)?;
    Ok(LindbladOperators { hamiltonian, cap, cap_coeffs: integrals.cap.matrix.clone() })
}

/// Which power of `B` enters a reduced matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityPower {
    /// `tr(c† c B)`: expectation values.
    First,
    /// `tr(c† c B²)`: the matrices of the SPF equation.
    Squared,
}

fn powered_blocks(b: &BlockDensityMatrix, power: DensityPower) -> Vec<CMat> {
    match power {
        DensityPower::First => b.blocks.clone(),
        DensityPower::Squared => b.blocks.iter().map(|m| m * m).collect(),
    }
}

/// `tr(c_j† c_k Bᵖ)`.
pub fn reduced_one_body_with(basis: &FockBasis, b: &BlockDensityMatrix, power: DensityPower) -> CMat {
    let l = basis.modes();
    let blocks = powered_blocks(b, power);
    let mut s = CMat::zeros(l, l);
    for n in 1..=basis.max_particles() {
        let m = &blocks[n];
        for col in 0..basis.block_dim(n) {
            for k in 0..l {
                let Some((mid, a)) = basis.annihilate_index(k, n, col) else { continue };
                for j in 0..l {
                    let Some((row, bb)) = basis.create_index(j, n - 1, mid) else { continue };
                    s[(j, k)] += m[(col, row)] * (a * bb);
                }
            }
        }
    }
    s
}

/// `tr(c_j† c_k† c_m c_l Bᵖ)`.
pub fn reduced_two_body_with(basis: &FockBasis, b: &BlockDensityMatrix, power: DensityPower) -> Tensor4 {
    let l = basis.modes();
    let blocks = powered_blocks(b, power);
    let mut s2 = Tensor4::zeros(l);
    for n in 2..=basis.max_particles() {
        let m = &blocks[n];
        for col in 0..basis.block_dim(n) {
            for ll in 0..l {
                let Some((s1, a1)) = basis.annihilate_index(ll, n, col) else { continue };
                for mm in 0..l {
                    let Some((st2, a2)) = basis.annihilate_index(mm, n - 1, s1) else { continue };
                    for k in 0..l {
                        let Some((s3, a3)) = basis.create_index(k, n - 2, st2) else { continue };
                        for j in 0..l {
                            let Some((row, a4)) = basis.create_index(j, n - 1, s3) else { continue };
                            let v = s2.get(j, k, ll, mm) + m[(col, row)] * (a1 * a2 * a3 * a4);
                            s2.set(j, k, ll, mm, v);
                        }
                    }
                }
            }
        }
    }
    s2
}

/// `S` and `S2` of the SPF equation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedDensities {
    pub s: CMat,
    pub s2: Tensor4,
}

pub fn reduced_one_body(basis: &FockBasis, state: &MctdhState) -> CMat {
    reduced_one_body_with(basis, &state.b, DensityPower::Squared)
}

pub fn reduced_two_body(basis: &FockBasis, state: &MctdhState) -> Tensor4 {
    reduced_two_body_with(basis, &state.b, DensityPower::Squared)
}

pub fn reduced_densities(basis: &FockBasis, state: &MctdhState) -> ReducedDensities {
    ReducedDensities { s: reduced_one_body(basis, state), s2: reduced_two_body(basis, state) }
}

/// Smallest eigenvalue of `S`.
pub fn min_eig_s(s: &CMat) -> f64 {
    min_hermitian_eigenvalue(s)
}

/// `S_reg⁻¹ Y` with `S_reg = S + ε exp(-S/ε)` taken in the eigenbasis of `S`.
pub fn regularized_solve(s: &CMat, rhs: &CMat, eps: f64) -> CMat {
    let (values, vectors) = hermitian_eigen(s);
    let mut projected = vectors.adjoint() * rhs;
    for (k, &sigma) in values.iter().enumerate() {
        let reg = if eps > 0.0 { sigma + eps * Float::exp(-sigma / eps) } else { sigma };
        let inv = 1.0 / reg;
        projected.row_mut(k).scale_mut(inv);
    }
    vectors * projected
}

/// `Ḃ` for the current SPFs; identical to the fixed-basis Lindblad generator
/// with SPF-dependent coefficients.
pub fn b_rhs(basis: &FockBasis, state: &MctdhState, integrals: &Integrals) -> Result<Vec<CMat>> {
    if integrals.one_body.matrix.nrows() != basis.modes() || integrals.two_body.modes() != basis.modes() {
        return Err(invalid("integrals were computed for a different SPF count"));
    }
    lindblad_rhs(basis, &state.b, &lindblad_operators(basis, integrals)?)
}

/// Diagnostics attached to an SPF derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpfSolveInfo {
    pub sigma_min: f64,
    /// `σ_min < 100 ε`: the regularization visibly alters the solve.
    pub near_singular: bool,
}

/// SPF time derivatives (columns), solving the projected SPF equation.
pub fn spf_rhs(
    model: &GridModel,
    spfs: &SpfSet,
    densities: &ReducedDensities,
    integrals: &Integrals,
    eps_reg: f64,
) -> Result<(CMat, SpfSolveInfo)> {
    let l = spfs.count();
    if densities.s.nrows() != l || integrals.mean_fields.len() != l * l {
        return Err(invalid("reduced densities or integrals do not match the SPF set"));
    }
    let phi = spfs.matrix();
    let n = spfs.n_points();
    let s = &densities.s;

    // one-body part: ((h - iΓ) Φ) Sᵀ
    let h_phi = apply_one_body(&model.grid, OneBodyOp::Hamiltonian { kinetic: integrals.kinetic, potential: &model.potential }, phi);
    let g_phi = apply_one_body(&model.grid, OneBodyOp::Cap(&model.cap), phi);
    let mut r = (h_phi - g_phi * I) * s.transpose();

    // two-body part: Σ_km U_km ⊙ (Σ_l φ_l S2_jklm)
    if !integrals.two_body.is_zero() {
        let mut w = CVec::zeros(n);
        for j in 0..l {
            for k in 0..l {
                for m in 0..l {
                    w.fill(C64::new(0.0, 0.0));
                    let mut any = false;
                    for ll in 0..l {
                        let coeff = densities.s2.get(j, k, ll, m);
                        if coeff != C64::new(0.0, 0.0) {
                            w.axpy(coeff, &phi.column(ll), c(1.0));
                            any = true;
                        }
                    }
                    if !any {
                        continue;
                    }
                    let field = &integrals.mean_fields[k * l + m];
                    let mut col = r.column_mut(j);
                    for a in 0..n {
                        col[a] += field[a] * w[a];
                    }
                }
            }
        }
    }

    let r = spfs.project_complement_matrix(&r);
    let sigma_min = min_eig_s(s);
    let solved = regularized_solve(s, &r.transpose(), eps_reg);
    let mut dphi = solved.transpose() * (-I);
    // Re-project to remove round-off components along the SPFs.
    dphi = spfs.project_complement_matrix(&dphi);
    Ok((dphi, SpfSolveInfo { sigma_min, near_singular: sigma_min < 100.0 * eps_reg }))
}

/// Tangent vector `(φ̇, Ḃ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub dphi: CMat,
    pub db: Vec<CMat>,
}

/// Full derivative of the coupled system at `state`.
///
/// With `kinetic == false` the one-body operator is `V` alone, as used by the
/// potential step of the splitting scheme.
pub fn derivative(
    basis: &FockBasis,
    model: &GridModel,
    state: &MctdhState,
    kinetic: bool,
    eps_reg: f64,
) -> Result<(Tangent, SpfSolveInfo)> {
    let integrals = compute_integrals(model, &state.spfs, kinetic);
    let db = b_rhs(basis, state, &integrals)?;
    let densities = reduced_densities(basis, state);
    let (dphi, info) = spf_rhs(model, &state.spfs, &densities, &integrals, eps_reg)?;
    Ok((Tangent { dphi, db }, info))
}

/// `tr(H ρ)` with the full Hamiltonian (kinetic included).
pub fn energy_complex(basis: &FockBasis, model: &GridModel, state: &MctdhState) -> Result<C64> {
    let integrals = compute_integrals(model, &state.spfs, true);
    let ops = lindblad_operators(basis, &integrals)?;
    Ok(ops.hamiltonian.blocks.iter().zip(&state.b.blocks).map(|(h, b)| trace(&(h * b))).sum())
}
