//! Fixed-basis Lindblad dynamics of a block-diagonal density matrix and the
//! non-Hermitian Schrödinger equation of a single block.
//!
//! For a CAP `Γ = Σ Γ_jk c_j† c_k` the generator acts block by block:
//!
//! ```text
//! Ḃ_n = -i[H, B_n] - {G, B_n} + 2 Σ_jk Γ_jk c_k B_{n+1} c_j†,   B_{N+1} ≡ 0
//! ```

use alloc::format;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::fock::{BlockOperator, FockBasis};
use crate::linalg::{all_finite, c, hermiticity_residual, min_hermitian_eigenvalue, trace, CMat, CVec, C64, I};

/// Hermitian, block-diagonal density matrix `B = (B_0, …, B_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDensityMatrix {
    pub blocks: Vec<CMat>,
}

impl BlockDensityMatrix {
    pub fn zeros(basis: &FockBasis) -> Self {
        Self { blocks: basis.block_dims().into_iter().map(|d| CMat::zeros(d, d)).collect() }
    }

    /// `|ψ⟩⟨ψ|` in block `n`, all other blocks zero.
    pub fn pure(basis: &FockBasis, n: usize, psi: &CVec) -> Result<Self> {
        if n > basis.max_particles() || psi.len() != basis.block_dim(n) {
            return Err(invalid("pure state does not fit the basis block"));
        }
        let mut b = Self::zeros(basis);
        b.blocks[n] = psi * psi.adjoint();
        Ok(b)
    }

    pub fn max_particles(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn check_basis(&self, basis: &FockBasis) -> Result<()> {
        let dims = basis.block_dims();
        if dims.len() != self.blocks.len() || dims.iter().zip(&self.blocks).any(|(&d, b)| b.nrows() != d || b.ncols() != d) {
            return Err(invalid("density matrix blocks do not match the Fock basis"));
        }
        Ok(())
    }

    pub fn trace(&self) -> C64 {
        self.blocks.iter().map(trace).sum()
    }

    /// `p_n = tr(B_n)` (real parts).
    pub fn probabilities(&self) -> Vec<f64> {
        self.blocks.iter().map(|b| trace(b).re).collect()
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.blocks.iter().map(hermiticity_residual).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks.iter().filter(|b| b.nrows() > 0).map(min_hermitian_eigenvalue).fold(f64::INFINITY, f64::min)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(all_finite)
    }

    /// `self += scale · other`, blockwise.
    pub fn axpy(&mut self, scale: f64, other: &[CMat]) {
        for (a, b) in self.blocks.iter_mut().zip(other) {
            *a += b * c(scale);
        }
    }

    /// Replaces every block by its Hermitian part.
    pub fn symmetrize(&mut self) {
        for b in &mut self.blocks {
            let h = (&*b + b.adjoint()) * c(0.5);
            *b = h;
        }
    }

    /// Maximum blockwise deviation `max_n max |A_n - B_n|`.
    pub fn max_deviation(&self, other: &BlockDensityMatrix) -> f64 {
        self.blocks.iter().zip(&other.blocks).map(|(a, b)| (a - b).iter().fold(0.0f64, |m, z| m.max(z.norm()))).fold(0.0, f64::max)
    }

    /// Congruence `B_n → 𝒯_n B_n 𝒯_n†`.
    pub fn transformed(&self, transform: &[CMat]) -> Self {
        Self { blocks: self.blocks.iter().zip(transform).map(|(b, t)| t * b * t.adjoint()).collect() }
    }
}

/// Coefficient vector of a single particle-number block.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    pub n: usize,
    pub coeffs: CVec,
}

impl PureState {
    pub fn norm_squared(&self) -> f64 {
        self.coeffs.norm_squared()
    }
}

/// Galerkin matrices of `H` and `Γ` together with the CAP coefficients `Γ_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladOperators {
    pub hamiltonian: BlockOperator,
    pub cap: BlockOperator,
    pub cap_coeffs: CMat,
}

impl LindbladOperators {
    fn check(&self, basis: &FockBasis) -> Result<()> {
        let dims = basis.block_dims();
        let ok = |op: &BlockOperator| {
            op.blocks.len() == dims.len() && op.blocks.iter().zip(&dims).all(|(b, &d)| b.nrows() == d && b.ncols() == d)
        };
        if !ok(&self.hamiltonian) || !ok(&self.cap) {
            return Err(invalid("Galerkin operators do not match the Fock basis"));
        }
        if self.cap_coeffs.nrows() != basis.modes() || self.cap_coeffs.ncols() != basis.modes() {
            return Err(invalid("CAP coefficients do not match the number of modes"));
        }
        Ok(())
    }
}

/// `2 Σ_jk Γ_jk c_k B_{n+1} c_j†` for the block above `n`.
pub(crate) fn sandwich(basis: &FockBasis, gamma: &CMat, upper: &CMat, n: usize) -> CMat {
    let l = basis.modes();
    let lower = basis.block_dim(n);
    let dim_up = basis.block_dim(n + 1);
    // c_k B_{n+1}: rows of B routed through the annihilator images.
    let mut ck_b: Vec<CMat> = Vec::with_capacity(l);
    for k in 0..l {
        let mut m = CMat::zeros(lower, dim_up);
        for col in 0..dim_up {
            if let Some((row, a)) = basis.annihilate_index(k, n + 1, col) {
                for s in 0..dim_up {
                    m[(row, s)] += upper[(col, s)] * a;
                }
            }
        }
        ck_b.push(m);
    }
    let mut out = CMat::zeros(lower, lower);
    for j in 0..l {
        let mut w = CMat::zeros(lower, dim_up);
        for k in 0..l {
            let g = gamma[(j, k)];
            if g != C64::new(0.0, 0.0) {
                w += &ck_b[k] * g;
            }
        }
        // (W c_j†)_{I,J} = Σ_K W_{I,K} (c_j)_{J,K}
        for col in 0..dim_up {
            if let Some((row, a)) = basis.annihilate_index(j, n + 1, col) {
                for i in 0..lower {
                    out[(i, row)] += w[(i, col)] * a;
                }
            }
        }
    }
    out * c(2.0)
}

/// Lindblad right-hand side for every block.
pub fn lindblad_rhs(basis: &FockBasis, b: &BlockDensityMatrix, ops: &LindbladOperators) -> Result<Vec<CMat>> {
    b.check_basis(basis)?;
    ops.check(basis)?;
    let top = basis.max_particles();
    let mut out = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let bn = &b.blocks[n];
        let h = &ops.hamiltonian.blocks[n];
        let g = &ops.cap.blocks[n];
        let hb = h * bn;
        let gb = g * bn;
        let mut d = (&hb - hb.adjoint()) * (-I) - (&gb + gb.adjoint());
        if n < top {
            d += sandwich(basis, &ops.cap_coeffs, &b.blocks[n + 1], n);
        }
        out.push(d);
    }
    Ok(out)
}

/// `ψ̇ = -i (H - iG) ψ`.
pub fn nh_schrodinger_rhs(psi: &PureState, hamiltonian: &CMat, cap: &CMat) -> CVec {
    (hamiltonian * &psi.coeffs) * (-I) - cap * &psi.coeffs
}

/// Classical fixed-step RK4 on [`lindblad_rhs`]. The final step is shortened
/// so that the integration ends exactly at `t_final`.
pub fn oracle_propagate(
    basis: &FockBasis,
    b0: &BlockDensityMatrix,
    ops: &LindbladOperators,
    t_final: f64,
    tau: f64,
) -> Result<BlockDensityMatrix> {
    let mut b = b0.clone();
    oracle_trajectory(basis, &mut b, ops, t_final, tau, |_, _| {})?;
    Ok(b)
}

/// Like [`oracle_propagate`], calling `observe(t, B)` after every step and at `t = 0`.
pub fn oracle_trajectory(
    basis: &FockBasis,
    b: &mut BlockDensityMatrix,
    ops: &LindbladOperators,
    t_final: f64,
    tau: f64,
    mut observe: impl FnMut(f64, &BlockDensityMatrix),
) -> Result<()> {
    if !(tau > 0.0) {
        return Err(invalid("time step must be positive"));
    }
    observe(0.0, b);
    let steps = num_steps(t_final, tau);
    let mut t = 0.0;
    for step in 0..steps {
        let dt = if step + 1 == steps { t_final - t } else { tau };
        rk4_step(basis, b, ops, dt)?;
        t = if step + 1 == steps { t_final } else { t + dt };
        if !b.is_finite() {
            return Err(Error::NumericalBlowup { t, what: format!("non-finite density matrix after step {step}") });
        }
        observe(t, b);
    }
    Ok(())
}

pub(crate) fn num_steps(t_final: f64, tau: f64) -> usize {
    let ratio = t_final / tau;
    let rounded = Float::round(ratio);
    if (ratio - rounded).abs() < 1e-9 * ratio.max(1.0) {
        rounded as usize
    } else {
        Float::ceil(ratio) as usize
    }
}

fn rk4_step(basis: &FockBasis, b: &mut BlockDensityMatrix, ops: &LindbladOperators, dt: f64) -> Result<()> {
    let k1 = lindblad_rhs(basis, b, ops)?;
    let mut tmp = b.clone();
    tmp.axpy(0.5 * dt, &k1);
    let k2 = lindblad_rhs(basis, &tmp, ops)?;
    let mut tmp = b.clone();
    tmp.axpy(0.5 * dt, &k2);
    let k3 = lindblad_rhs(basis, &tmp, ops)?;
    let mut tmp = b.clone();
    tmp.axpy(dt, &k3);
    let k4 = lindblad_rhs(basis, &tmp, ops)?;
    b.axpy(dt / 6.0, &k1);
    b.axpy(dt / 3.0, &k2);
    b.axpy(dt / 3.0, &k3);
    b.axpy(dt / 6.0, &k4);
    Ok(())
}
