//! Truncated Fock space over `L` modes: basis enumeration, ladder operators and
//! particle-number-conserving Galerkin matrices.
//!
//! Fermion states are `L`-bit integers with mode `j` on bit `j`, and
//! `|Φ_J⟩ = c†_{j1} c†_{j2} ⋯ |vac⟩` for `j1 < j2 < ⋯`, so `c_j` picks up the sign
//! `(-1)^{#occupied modes below j}`. Boson states are normalized permanents.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::grid::TwoBodyCoeffs;
use crate::linalg::{c, CMat, CVec, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Statistics {
    Fermion,
    Boson,
}

/// Occupation-number state.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FockState {
    Fermion { modes: usize, bits: u64 },
    Boson { occupations: Vec<u32> },
}

impl FockState {
    pub fn vacuum(statistics: Statistics, modes: usize) -> Self {
        match statistics {
            Statistics::Fermion => FockState::Fermion { modes, bits: 0 },
            Statistics::Boson => FockState::Boson { occupations: vec![0; modes] },
        }
    }

    /// Fermion determinant with the given occupied modes.
    pub fn fermion(modes: usize, occupied: &[usize]) -> Self {
        let bits = occupied.iter().fold(0u64, |b, &j| b | (1 << j));
        FockState::Fermion { modes, bits }
    }

    pub fn boson(occupations: Vec<u32>) -> Self {
        FockState::Boson { occupations }
    }

    pub fn statistics(&self) -> Statistics {
        match self {
            FockState::Fermion { .. } => Statistics::Fermion,
            FockState::Boson { .. } => Statistics::Boson,
        }
    }

    pub fn modes(&self) -> usize {
        match self {
            FockState::Fermion { modes, .. } => *modes,
            FockState::Boson { occupations } => occupations.len(),
        }
    }

    pub fn particle_number(&self) -> usize {
        match self {
            FockState::Fermion { bits, .. } => bits.count_ones() as usize,
            FockState::Boson { occupations } => occupations.iter().map(|&o| o as usize).sum(),
        }
    }

    pub fn occupation(&self, j: usize) -> u32 {
        match self {
            FockState::Fermion { bits, .. } => ((bits >> j) & 1) as u32,
            FockState::Boson { occupations } => occupations[j],
        }
    }
}

/// `c_j |state⟩`, or `None` when the result vanishes.
pub fn annihilate(state: &FockState, j: usize) -> Option<(f64, FockState)> {
    assert!(j < state.modes(), "mode index out of range");
    match state {
        FockState::Fermion { modes, bits } => {
            if bits & (1 << j) == 0 {
                return None;
            }
            let below = (bits & ((1u64 << j) - 1)).count_ones();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            Some((sign, FockState::Fermion { modes: *modes, bits: bits & !(1 << j) }))
        }
        FockState::Boson { occupations } => {
            let n = occupations[j];
            if n == 0 {
                return None;
            }
            let mut occ = occupations.clone();
            occ[j] -= 1;
            Some((Float::sqrt(n as f64), FockState::Boson { occupations: occ }))
        }
    }
}

/// `c_j† |state⟩` truncated to at most `cap` particles.
pub fn create(state: &FockState, j: usize, cap: usize) -> Option<(f64, FockState)> {
    assert!(j < state.modes(), "mode index out of range");
    if state.particle_number() + 1 > cap {
        return None;
    }
    match state {
        FockState::Fermion { modes, bits } => {
            if bits & (1 << j) != 0 {
                return None;
            }
            let below = (bits & ((1u64 << j) - 1)).count_ones();
            let sign = if below % 2 == 0 { 1.0 } else { -1.0 };
            Some((sign, FockState::Fermion { modes: *modes, bits: bits | (1 << j) }))
        }
        FockState::Boson { occupations } => {
            let mut occ = occupations.clone();
            occ[j] += 1;
            Some((Float::sqrt(occ[j] as f64), FockState::Boson { occupations: occ }))
        }
    }
}

/// Sparse image of one basis column under a ladder operator.
pub type LadderEntry = Option<(usize, f64)>;

/// Enumerated truncated Fock basis with precomputed ladder maps.
#[derive(Debug, Clone)]
pub struct FockBasis {
    modes: usize,
    max_particles: usize,
    statistics: Statistics,
    blocks: Vec<Vec<FockState>>,
    lookup: BTreeMap<FockState, (usize, usize)>,
    // annihilators[j][n][col] : block n → n-1 (n ≥ 1)
    annihilators: Vec<Vec<Vec<LadderEntry>>>,
    // creators[j][n][col] : block n → n+1 (n < N)
    creators: Vec<Vec<Vec<LadderEntry>>>,
}

impl FockBasis {
    pub fn new(modes: usize, max_particles: usize, statistics: Statistics) -> Result<Self> {
        if modes == 0 {
            return Err(invalid("Fock basis needs at least one mode"));
        }
        if statistics == Statistics::Fermion {
            if max_particles > modes {
                return Err(invalid("fermion particle cap exceeds mode count"));
            }
            if modes > 63 {
                return Err(invalid("at most 63 fermion modes are supported"));
            }
        }
        let mut blocks: Vec<Vec<FockState>> = Vec::with_capacity(max_particles + 1);
        for n in 0..=max_particles {
            blocks.push(match statistics {
                Statistics::Fermion => fermion_block(modes, n),
                Statistics::Boson => boson_block(modes, n),
            });
        }
        let mut lookup = BTreeMap::new();
        for (n, block) in blocks.iter().enumerate() {
            for (i, s) in block.iter().enumerate() {
                lookup.insert(s.clone(), (n, i));
            }
        }
        let mut basis = Self { modes, max_particles, statistics, blocks, lookup, annihilators: Vec::new(), creators: Vec::new() };
        for j in 0..modes {
            let mut ann = Vec::with_capacity(max_particles + 1);
            let mut cre = Vec::with_capacity(max_particles + 1);
            for n in 0..=max_particles {
                ann.push(basis.blocks[n].iter().map(|s| annihilate(s, j).map(|(a, t)| (basis.lookup[&t].1, a))).collect());
                cre.push(basis.blocks[n].iter().map(|s| create(s, j, max_particles).map(|(a, t)| (basis.lookup[&t].1, a))).collect());
            }
            basis.annihilators.push(ann);
            basis.creators.push(cre);
        }
        Ok(basis)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn max_particles(&self) -> usize {
        self.max_particles
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn block(&self, n: usize) -> &[FockState] {
        &self.blocks[n]
    }

    pub fn block_dim(&self, n: usize) -> usize {
        self.blocks[n].len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn dimension(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Offset of block `n` in the concatenated ordering.
    pub fn offset(&self, n: usize) -> usize {
        self.blocks[..n].iter().map(Vec::len).sum()
    }

    pub fn index_of(&self, state: &FockState) -> Option<(usize, usize)> {
        self.lookup.get(state).copied()
    }

    pub fn states(&self) -> impl Iterator<Item = &FockState> {
        self.blocks.iter().flatten()
    }

    /// `c_j` on column `col` of block `n`.
    #[inline]
    pub fn annihilate_index(&self, j: usize, n: usize, col: usize) -> LadderEntry {
        if n == 0 {
            None
        } else {
            self.annihilators[j][n][col]
        }
    }

    /// `c_j†` on column `col` of block `n`.
    #[inline]
    pub fn create_index(&self, j: usize, n: usize, col: usize) -> LadderEntry {
        self.creators[j][n][col]
    }

    /// Per-block annihilator map of mode `j` (`blocks[n]` maps block `n` to `n-1`).
    pub fn annihilator_matrix(&self, j: usize) -> LadderMatrix {
        let blocks = (0..=self.max_particles)
            .map(|n| {
                if n == 0 {
                    Vec::new()
                } else {
                    self.annihilators[j][n].iter().enumerate().filter_map(|(col, e)| e.map(|(row, a)| (row, col, a))).collect()
                }
            })
            .collect();
        LadderMatrix { blocks }
    }

    /// Dense matrix of `c_j` on the whole truncated space.
    pub fn annihilator_dense(&self, j: usize) -> DMatrix<f64> {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        for n in 1..=self.max_particles {
            let (ro, co) = (self.offset(n - 1), self.offset(n));
            for (col, e) in self.annihilators[j][n].iter().enumerate() {
                if let Some((row, a)) = e {
                    m[(ro + row, co + col)] = *a;
                }
            }
        }
        m
    }

    /// Dense matrix of the truncated `c_j†`.
    pub fn creator_dense(&self, j: usize) -> DMatrix<f64> {
        let d = self.dimension();
        let mut m = DMatrix::zeros(d, d);
        for n in 0..self.max_particles {
            let (ro, co) = (self.offset(n + 1), self.offset(n));
            for (col, e) in self.creators[j][n].iter().enumerate() {
                if let Some((row, a)) = e {
                    m[(ro + row, co + col)] = *a;
                }
            }
        }
        m
    }

    /// `c_j v` for `v` in block `n`.
    pub fn apply_annihilator(&self, j: usize, n: usize, v: &CVec) -> CVec {
        assert!(n >= 1);
        let mut out = CVec::zeros(self.block_dim(n - 1));
        for (col, e) in self.annihilators[j][n].iter().enumerate() {
            if let Some((row, a)) = e {
                out[*row] += v[col] * *a;
            }
        }
        out
    }

    /// `c_j† v` for `v` in block `n < N`.
    pub fn apply_creator(&self, j: usize, n: usize, v: &CVec) -> CVec {
        assert!(n < self.max_particles);
        let mut out = CVec::zeros(self.block_dim(n + 1));
        for (col, e) in self.creators[j][n].iter().enumerate() {
            if let Some((row, a)) = e {
                out[*row] += v[col] * *a;
            }
        }
        out
    }

    fn check_modes(&self, l: usize) -> Result<()> {
        if l != self.modes {
            return Err(invalid("coefficient dimension does not match the number of modes"));
        }
        Ok(())
    }
}

fn fermion_block(modes: usize, n: usize) -> Vec<FockState> {
    (0u64..(1u64 << modes)).filter(|b| b.count_ones() as usize == n).map(|bits| FockState::Fermion { modes, bits }).collect()
}

fn boson_block(modes: usize, n: usize) -> Vec<FockState> {
    fn fill(prefix: &mut Vec<u32>, modes: usize, left: u32, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == modes {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in (0..=left).rev() {
            prefix.push(k);
            fill(prefix, modes, left - k, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(modes), modes, n as u32, &mut out);
    out.into_iter().map(|occupations| FockState::Boson { occupations }).collect()
}

/// Sparse ladder operator stored per source block as `(row, col, amplitude)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderMatrix {
    pub blocks: Vec<Vec<(usize, usize, f64)>>,
}

/// Particle-number-conserving operator stored as dense diagonal blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockOperator {
    pub blocks: Vec<CMat>,
}

impl BlockOperator {
    pub fn zeros(basis: &FockBasis) -> Self {
        Self { blocks: basis.block_dims().into_iter().map(|d| CMat::zeros(d, d)).collect() }
    }

    pub fn add_assign(&mut self, other: &BlockOperator) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b;
        }
    }

    pub fn dense(&self) -> CMat {
        let d: usize = self.blocks.iter().map(|b| b.nrows()).sum();
        let mut m = CMat::zeros(d, d);
        let mut off = 0;
        for b in &self.blocks {
            m.view_mut((off, off), (b.nrows(), b.ncols())).copy_from(b);
            off += b.nrows();
        }
        m
    }
}

/// `Σ_jk M_jk c_j† c_k`.
pub fn galerkin_one_body(basis: &FockBasis, coeffs: &CMat) -> Result<BlockOperator> {
    basis.check_modes(coeffs.nrows())?;
    basis.check_modes(coeffs.ncols())?;
    let l = basis.modes();
    let mut op = BlockOperator::zeros(basis);
    for n in 1..=basis.max_particles() {
        let block = &mut op.blocks[n];
        for col in 0..basis.block_dim(n) {
            for k in 0..l {
                let Some((mid, a)) = basis.annihilate_index(k, n, col) else { continue };
                for j in 0..l {
                    let Some((row, b)) = basis.create_index(j, n - 1, mid) else { continue };
                    block[(row, col)] += coeffs[(j, k)] * (a * b);
                }
            }
        }
    }
    Ok(op)
}

/// `½ Σ_jklm u_jklm c_j† c_k† c_m c_l`.
pub fn galerkin_two_body(basis: &FockBasis, coeffs: &TwoBodyCoeffs) -> Result<BlockOperator> {
    basis.check_modes(coeffs.modes())?;
    let l = basis.modes();
    let mut op = BlockOperator::zeros(basis);
    for n in 2..=basis.max_particles() {
        let block = &mut op.blocks[n];
        for col in 0..basis.block_dim(n) {
            for ll in 0..l {
                let Some((s1, a1)) = basis.annihilate_index(ll, n, col) else { continue };
                for m in 0..l {
                    let Some((s2, a2)) = basis.annihilate_index(m, n - 1, s1) else { continue };
                    for k in 0..l {
                        let Some((s3, a3)) = basis.create_index(k, n - 2, s2) else { continue };
                        for j in 0..l {
                            let Some((row, a4)) = basis.create_index(j, n - 1, s3) else { continue };
                            block[(row, col)] += coeffs.get(j, k, ll, m) * (0.5 * a1 * a2 * a3 * a4);
                        }
                    }
                }
            }
        }
    }
    Ok(op)
}

/// Many-body representation of a one-body basis change.
///
/// With `φ_j = Σ_k ψ_k T_kj` expressing the modes of `from` in terms of the
/// modes of `to`, returns per block `n` the matrix `𝒯_n` with
/// `Φ_J(φ) = Σ_I Φ_I(ψ) (𝒯_n)_IJ`. A block density matrix transforms as
/// `B' = 𝒯 B 𝒯†`.
pub fn basis_transform(from: &FockBasis, to: &FockBasis, t: &CMat) -> Result<Vec<CMat>> {
    if from.statistics() != to.statistics() {
        return Err(invalid("basis transform between different statistics"));
    }
    if t.nrows() != to.modes() || t.ncols() != from.modes() {
        return Err(invalid("basis transform matrix has wrong shape"));
    }
    if to.max_particles() < from.max_particles() {
        return Err(invalid("target basis holds fewer particles"));
    }
    let mut out = Vec::with_capacity(from.max_particles() + 1);
    for n in 0..=from.max_particles() {
        let mut block = CMat::zeros(to.block_dim(n), from.block_dim(n));
        for (col, state) in from.block(n).iter().enumerate() {
            let mut v = CVec::from_element(1, c(1.0));
            let mut count = 0usize;
            let mut norm = 1.0;
            // Build from the highest mode down so the lowest creator is leftmost.
            for j in (0..from.modes()).rev() {
                let occ = state.occupation(j);
                for _ in 0..occ {
                    let mut next = CVec::zeros(to.block_dim(count + 1));
                    for k in 0..to.modes() {
                        let coeff = t[(k, j)];
                        if coeff != C64::new(0.0, 0.0) {
                            next += to.apply_creator(k, count, &v) * coeff;
                        }
                    }
                    v = next;
                    count += 1;
                }
                for f in 2..=occ {
                    norm *= f as f64;
                }
            }
            block.set_column(col, &(v / c(Float::sqrt(norm))));
        }
        out.push(block);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binomial(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn dimensions() {
        let b = FockBasis::new(5, 3, Statistics::Fermion).unwrap();
        assert_eq!(b.block_dims(), vec![1, 5, 10, 10]);
        assert_eq!(b.dimension(), 26);
        let b = FockBasis::new(2, 2, Statistics::Boson).unwrap();
        assert_eq!(b.dimension(), 6);
        let b = FockBasis::new(1, 1, Statistics::Fermion).unwrap();
        assert_eq!(b.block(0), &[FockState::fermion(1, &[])]);
        assert_eq!(b.block(1), &[FockState::fermion(1, &[0])]);
        for l in 1..5 {
            for n in 0..4 {
                let bb = FockBasis::new(l, n, Statistics::Boson).unwrap();
                for k in 0..=n {
                    assert_eq!(bb.block_dim(k), binomial(l + k - 1, k));
                }
            }
        }
        assert!(FockBasis::new(2, 3, Statistics::Fermion).is_err());
        assert!(FockBasis::new(0, 0, Statistics::Fermion).is_err());
    }

    #[test]
    fn ordering_is_ascending() {
        let b = FockBasis::new(4, 2, Statistics::Fermion).unwrap();
        let bits: Vec<u64> = b
            .block(2)
            .iter()
            .map(|s| match s {
                FockState::Fermion { bits, .. } => *bits,
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(bits, vec![0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        let b = FockBasis::new(2, 2, Statistics::Boson).unwrap();
        assert_eq!(b.block(2)[0], FockState::boson(vec![2, 0]));
        assert_eq!(b.block(2)[2], FockState::boson(vec![0, 2]));
    }

    #[test]
    fn ladder_examples() {
        let s = FockState::fermion(2, &[0, 1]);
        assert_eq!(annihilate(&s, 0), Some((1.0, FockState::fermion(2, &[1]))));
        assert_eq!(annihilate(&s, 1), Some((-1.0, FockState::fermion(2, &[0]))));
        let s1 = FockState::fermion(2, &[0]);
        assert_eq!(create(&s1, 1, 2), Some((-1.0, FockState::fermion(2, &[0, 1]))));
        assert_eq!(create(&s1, 0, 2), None);
        assert_eq!(annihilate(&FockState::fermion(2, &[1]), 0), None);

        let b = FockState::boson(vec![2]);
        let (amp, t) = annihilate(&b, 0).unwrap();
        assert!((amp - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(t, FockState::boson(vec![1]));
        assert_eq!(create(&FockState::boson(vec![3]), 0, 3), None);
        assert_eq!(annihilate(&FockState::boson(vec![0, 1]), 0), None);
    }

    #[test]
    fn single_mode_annihilator_matrix() {
        let b = FockBasis::new(1, 1, Statistics::Fermion).unwrap();
        let m = b.annihilator_dense(0);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let sparse = b.annihilator_matrix(0);
        assert_eq!(sparse.blocks[1], vec![(0, 0, 1.0)]);
    }

    #[test]
    fn fermion_columns_single_signed_entry() {
        let b = FockBasis::new(4, 3, Statistics::Fermion).unwrap();
        for j in 0..4 {
            let m = b.annihilator_dense(j);
            for col in 0..m.ncols() {
                let nz: Vec<f64> = m.column(col).iter().copied().filter(|&v| v != 0.0).collect();
                assert!(nz.len() <= 1);
                assert!(nz.iter().all(|v| v.abs() == 1.0));
            }
        }
    }

    #[test]
    fn one_body_galerkin_examples() {
        let b = FockBasis::new(2, 1, Statistics::Fermion).unwrap();
        let m = CMat::from_row_slice(2, 2, &[c(1.0), C64::new(0.5, 0.2), C64::new(0.5, -0.2), c(-3.0)]);
        let op = galerkin_one_body(&b, &m).unwrap();
        assert_eq!(op.blocks[0], CMat::zeros(1, 1));
        assert_eq!(op.blocks[1], m);

        let b = FockBasis::new(3, 3, Statistics::Fermion).unwrap();
        let op = galerkin_one_body(&b, &CMat::identity(3, 3)).unwrap();
        for n in 0..=3 {
            assert_eq!(op.blocks[n], CMat::identity(b.block_dim(n), b.block_dim(n)) * c(n as f64));
        }
        assert!(galerkin_one_body(&b, &CMat::identity(2, 2)).is_err());
    }

    #[test]
    fn two_body_galerkin_low_blocks_vanish() {
        let b = FockBasis::new(3, 3, Statistics::Fermion).unwrap();
        let mut u = TwoBodyCoeffs::zeros(3);
        for j in 0..3 {
            for k in 0..3 {
                u.set(j, k, j, k, c(1.0 + j as f64 + k as f64));
            }
        }
        let op = galerkin_two_body(&b, &u).unwrap();
        assert!(op.blocks[0].iter().all(|z| z.norm() == 0.0));
        assert!(op.blocks[1].iter().all(|z| z.norm() == 0.0));
        assert!(galerkin_two_body(&b, &TwoBodyCoeffs::zeros(2)).is_err());
    }

    #[test]
    fn basis_transform_identity_and_embedding() {
        let from = FockBasis::new(2, 2, Statistics::Fermion).unwrap();
        let to = FockBasis::new(3, 3, Statistics::Fermion).unwrap();
        let mut t = CMat::zeros(3, 2);
        t[(0, 0)] = c(1.0);
        t[(1, 1)] = c(1.0);
        let blocks = basis_transform(&from, &to, &t).unwrap();
        // |{0,1}⟩ maps onto the same determinant in the bigger basis.
        let (_, idx) = to.index_of(&FockState::fermion(3, &[0, 1])).unwrap();
        assert_eq!(blocks[2][(idx, 0)], c(1.0));
        // Swapping the two modes flips the sign of the pair determinant.
        let swap = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let blocks = basis_transform(&from, &from, &swap).unwrap();
        assert_eq!(blocks[2][(0, 0)], c(-1.0));

        let bos = FockBasis::new(2, 2, Statistics::Boson).unwrap();
        let h = 1.0 / 2f64.sqrt();
        let rot = CMat::from_row_slice(2, 2, &[c(h), c(h), c(h), c(-h)]);
        let blocks = basis_transform(&bos, &bos, &rot).unwrap();
        for m in &blocks {
            assert!((m.adjoint() * m - CMat::identity(m.ncols(), m.ncols())).norm() < 1e-12);
        }
    }
}
