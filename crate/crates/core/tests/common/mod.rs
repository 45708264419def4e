#![allow(dead_code)]

use rhomctdh_core::fock::FockBasis;
use rhomctdh_core::grid::{GridSpec, SpfSet};
use rhomctdh_core::liouville::BlockDensityMatrix;
use rhomctdh_core::{CMat, C64};

/// Small deterministic generator so that test data does not depend on an RNG crate.
pub struct Lcg(u64);

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self(seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((self.0 >> 11) as f64) / ((1u64 << 53) as f64)
    }

    pub fn symmetric(&mut self) -> f64 {
        2.0 * self.uniform() - 1.0
    }

    pub fn complex(&mut self) -> C64 {
        C64::new(self.symmetric(), self.symmetric())
    }

    pub fn matrix(&mut self, rows: usize, cols: usize) -> CMat {
        CMat::from_fn(rows, cols, |_, _| self.complex())
    }
}

pub fn to_complex(m: &nalgebra::DMatrix<f64>) -> CMat {
    m.map(|x| C64::new(x, 0.0))
}

/// Block-diagonal density matrix as one dense matrix on the truncated Fock space.
pub fn dense(basis: &FockBasis, b: &BlockDensityMatrix) -> CMat {
    let d = basis.dimension();
    let mut m = CMat::zeros(d, d);
    for (n, block) in b.blocks.iter().enumerate() {
        let o = basis.offset(n);
        m.view_mut((o, o), block.shape()).copy_from(block);
    }
    m
}

pub fn blocks(basis: &FockBasis, m: &CMat) -> BlockDensityMatrix {
    let mut b = BlockDensityMatrix::zeros(basis);
    for n in 0..=basis.max_particles() {
        let o = basis.offset(n);
        let d = basis.block_dim(n);
        b.blocks[n] = m.view((o, o), (d, d)).into_owned();
    }
    b
}

/// Mixed state with the given block probabilities and random eigenvectors.
pub fn random_density(basis: &FockBasis, weights: &[f64], rng: &mut Lcg) -> BlockDensityMatrix {
    let mut b = BlockDensityMatrix::zeros(basis);
    for (n, &w) in weights.iter().enumerate() {
        let d = basis.block_dim(n);
        let a = rng.matrix(d, d);
        let p = &a * a.adjoint();
        let tr = p.trace().re;
        b.blocks[n] = p * C64::new(w / tr, 0.0);
    }
    b
}

/// Random orthonormal SPFs on the grid.
pub fn random_spfs(grid: &GridSpec, count: usize, rng: &mut Lcg) -> SpfSet {
    let phi = rng.matrix(grid.n_points(), count);
    let mut s = SpfSet::from_matrix(phi, grid.dx());
    s.orthonormalize().unwrap();
    s
}

/// Plane-wave kinetic matrix on the grid, built from the explicit DFT sum.
pub fn dft_kinetic(grid: &GridSpec) -> CMat {
    let n = grid.n_points();
    let dx = grid.dx();
    let length = n as f64 * dx;
    CMat::from_fn(n, n, |i, j| {
        let mut sum = C64::new(0.0, 0.0);
        for m in 0..n {
            let signed = if m < n / 2 { m as f64 } else { m as f64 - n as f64 };
            let k = 2.0 * std::f64::consts::PI * signed / length;
            let phase = k * (i as f64 - j as f64) * dx;
            sum += C64::new(0.0, phase).exp() * (0.5 * k * k);
        }
        sum / n as f64
    })
}

/// SPF-to-grid coefficients `⟨δ_i|φ_j⟩` for the orthonormal point basis `δ_i = e_i / √Δx`.
pub fn grid_coefficients(spfs: &SpfSet) -> CMat {
    spfs.matrix() * C64::new(spfs.dx().sqrt(), 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
