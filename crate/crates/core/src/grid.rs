//! Uniform periodic grid, local potentials, the spectral kinetic operator and
//! the one- and two-body integrals over single-particle functions.
//!
//! Inner products use the rectangle rule `⟨f|g⟩ = Δx Σ_i conj(f_i) g_i`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::fft::Fft;
use crate::linalg::{c, hermitian_eigen, CMat, CVec, C64};

/// Periodic grid on `[-R, R)` with `n_points` nodes.
#[derive(Debug, Clone)]
pub struct GridSpec {
    half_width: f64,
    n_points: usize,
    dx: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    fft: Fft,
}

impl GridSpec {
    pub fn new(half_width: f64, n_points: usize) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(invalid("grid half-width must be positive"));
        }
        if n_points < 2 {
            return Err(invalid("grid needs at least two points"));
        }
        let fft = Fft::new(n_points)?;
        let dx = 2.0 * half_width / n_points as f64;
        let nodes = (0..n_points).map(|i| -half_width + i as f64 * dx).collect();
        let dk = PI / half_width;
        let wavenumbers = (0..n_points)
            .map(|i| {
                let m = if i < n_points / 2 { i as f64 } else { i as f64 - n_points as f64 };
                m * dk
            })
            .collect();
        Ok(Self { half_width, n_points, dx, nodes, wavenumbers, fft })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers in standard FFT ordering (Nyquist entry negative).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn fft(&self) -> &Fft {
        &self.fft
    }

    /// Real function sampled at the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// Complex function sampled at the nodes.
    pub fn sample_complex(&self, f: impl Fn(f64) -> C64) -> GridFunction {
        GridFunction::new(self.nodes.iter().map(|&x| f(x)).collect::<Vec<_>>(), self.dx)
    }
}

/// Alias matching the operation name used by drivers.
pub fn make_grid(half_width: f64, n_points: usize) -> Result<GridSpec> {
    GridSpec::new(half_width, n_points)
}

/// Complex values on the grid, carrying the quadrature weight `Δx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: CVec,
    pub dx: f64,
}

impl GridFunction {
    pub fn new(values: impl Into<CVec>, dx: f64) -> Self {
        Self { values: values.into(), dx }
    }

    pub fn from_real(values: &[f64], dx: f64) -> Self {
        Self::new(CVec::from_iterator(values.len(), values.iter().map(|&v| c(v))), dx)
    }

    pub fn inner(&self, other: &GridFunction) -> C64 {
        self.values.dotc(&other.values) * self.dx
    }

    pub fn norm(&self) -> f64 {
        Float::sqrt(self.values.norm_squared() * self.dx)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Gaussian trap `V(x) = -depth · exp(-x² / width)`.
pub fn eval_trap(grid: &GridSpec, depth: f64, width: f64) -> Vec<f64> {
    grid.sample(|x| -depth * Float::exp(-x * x / width))
}

/// Quadratic absorber `Γ(x) = (|x| - R')²` outside `[-R', R']`, zero inside.
pub fn eval_cap(grid: &GridSpec, onset: f64) -> Result<Vec<f64>> {
    if !(onset > 0.0) || onset >= grid.half_width() {
        return Err(invalid("CAP onset must satisfy 0 < R' < R"));
    }
    Ok(grid.sample(|x| {
        let d = Float::abs(x) - onset;
        if d > 0.0 {
            d * d
        } else {
            0.0
        }
    }))
}

/// `T f = -½ f''` evaluated spectrally.
pub fn kinetic_apply(grid: &GridSpec, f: &[C64]) -> Vec<C64> {
    let mut work = f.to_vec();
    grid.fft().forward(&mut work);
    for (z, &k) in work.iter_mut().zip(grid.wavenumbers()) {
        *z *= 0.5 * k * k;
    }
    grid.fft().inverse(&mut work);
    work
}

/// Multiplies each Fourier component by `exp(-i dt k²/2)`, i.e. exact free
/// propagation over `dt`.
pub fn free_propagate(grid: &GridSpec, f: &mut [C64], dt: f64) {
    grid.fft().forward(f);
    for (z, &k) in f.iter_mut().zip(grid.wavenumbers()) {
        let phase = -0.5 * dt * k * k;
        *z *= C64::new(Float::cos(phase), Float::sin(phase));
    }
    grid.fft().inverse(f);
}

/// Multiplies each Fourier component by `exp(-ds k²/2)` (imaginary-time free flow).
pub fn free_diffuse(grid: &GridSpec, f: &mut [C64], ds: f64) {
    grid.fft().forward(f);
    for (z, &k) in f.iter_mut().zip(grid.wavenumbers()) {
        *z *= Float::exp(-0.5 * ds * k * k);
    }
    grid.fft().inverse(f);
}

/// Dense matrix of `T + V` in the orthonormal node basis `e_a / √Δx`.
pub fn one_body_matrix(grid: &GridSpec, potential: &[f64]) -> CMat {
    let n = grid.n_points();
    let mut h = CMat::zeros(n, n);
    let mut unit = vec![C64::new(0.0, 0.0); n];
    for b in 0..n {
        unit.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        unit[b] = c(1.0);
        let col = kinetic_apply(grid, &unit);
        for a in 0..n {
            h[(a, b)] = col[a];
        }
        h[(b, b)] += potential[b];
    }
    // Symmetrize away FFT round-off.
    let ht = h.adjoint();
    (h + ht) * c(0.5)
}

/// The `count` lowest eigenpairs of the discretized `T + V`; eigenfunctions are
/// returned as an orthonormal SPF set.
pub fn lowest_eigenstates(grid: &GridSpec, potential: &[f64], count: usize) -> Result<(Vec<f64>, SpfSet)> {
    if count == 0 || count > grid.n_points() {
        return Err(invalid("eigenstate count out of range"));
    }
    let (values, vectors) = hermitian_eigen(&one_body_matrix(grid, potential));
    let mut phi = vectors.columns(0, count).into_owned() * c(1.0 / Float::sqrt(grid.dx()));
    // Fix the global phase so the largest component is real and positive.
    for j in 0..count {
        let mut col = phi.column_mut(j);
        let (imax, _) =
            col.iter().enumerate().fold((0, 0.0), |(bi, bv), (i, z)| if z.norm() > bv + 1e-12 { (i, z.norm()) } else { (bi, bv) });
        let z = col[imax];
        let phase = z.conj() / z.norm();
        col *= phase;
    }
    Ok((values[..count].to_vec(), SpfSet::from_matrix(phi, grid.dx())))
}

/// Orthonormal single-particle functions stored as the columns of an
/// `n_points × L` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpfSet {
    phi: CMat,
    dx: f64,
}

impl SpfSet {
    /// Wraps `phi` without checking orthonormality.
    pub fn from_matrix(phi: CMat, dx: f64) -> Self {
        Self { phi, dx }
    }

    /// Wraps `phi`, rejecting sets whose overlap deviates from identity by more than `tol`.
    pub fn orthonormal(phi: CMat, dx: f64, tol: f64) -> Result<Self> {
        let s = Self { phi, dx };
        if s.orthonormality_error() > tol {
            return Err(invalid("single-particle functions are not orthonormal"));
        }
        Ok(s)
    }

    pub fn from_functions(functions: &[GridFunction]) -> Result<Self> {
        let first = functions.first().ok_or_else(|| invalid("empty SPF set"))?;
        let n = first.len();
        if functions.iter().any(|f| f.len() != n) {
            return Err(invalid("SPFs live on different grids"));
        }
        let mut phi = CMat::zeros(n, functions.len());
        for (j, f) in functions.iter().enumerate() {
            phi.set_column(j, &f.values);
        }
        Self::orthonormal(phi, first.dx, 1e-10)
    }

    pub fn count(&self) -> usize {
        self.phi.ncols()
    }

    pub fn n_points(&self) -> usize {
        self.phi.nrows()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn matrix(&self) -> &CMat {
        &self.phi
    }

    pub fn matrix_mut(&mut self) -> &mut CMat {
        &mut self.phi
    }

    pub fn function(&self, j: usize) -> GridFunction {
        GridFunction::new(self.phi.column(j).into_owned(), self.dx)
    }

    /// Overlap matrix `⟨φ_j|φ_k⟩`.
    pub fn overlap(&self) -> CMat {
        self.phi.adjoint() * &self.phi * c(self.dx)
    }

    /// `max_jk |⟨φ_j|φ_k⟩ - δ_jk|`.
    pub fn orthonormality_error(&self) -> f64 {
        let s = self.overlap();
        let mut err = 0.0f64;
        for j in 0..s.nrows() {
            for k in 0..s.ncols() {
                let target = if j == k { 1.0 } else { 0.0 };
                err = err.max((s[(j, k)] - c(target)).norm());
            }
        }
        err
    }

    /// Coefficients `⟨φ_j|v⟩` for every column of `v`.
    pub fn project_coefficients(&self, v: &CMat) -> CMat {
        self.phi.adjoint() * v * c(self.dx)
    }

    /// `Q v = v - Σ_k |φ_k⟩⟨φ_k|v⟩`, column by column.
    pub fn project_complement_matrix(&self, v: &CMat) -> CMat {
        v - &self.phi * self.project_coefficients(v)
    }

    /// Modified Gram–Schmidt. Returns the upper-triangular `R` with
    /// `φ_old = φ_new R`.
    pub fn orthonormalize(&mut self) -> Result<CMat> {
        let l = self.count();
        let mut r = CMat::zeros(l, l);
        for j in 0..l {
            for k in 0..j {
                let proj = self.phi.column(k).dotc(&self.phi.column(j)) * self.dx;
                r[(k, j)] = proj;
                let col_k = self.phi.column(k).into_owned();
                let mut col_j = self.phi.column_mut(j);
                col_j.axpy(-proj, &col_k, c(1.0));
            }
            let norm = Float::sqrt(self.phi.column(j).norm_squared() * self.dx);
            if !(norm > 1e-300) || !norm.is_finite() {
                return Err(invalid("linearly dependent single-particle functions"));
            }
            r[(j, j)] = c(norm);
            let mut col_j = self.phi.column_mut(j);
            col_j /= c(norm);
        }
        Ok(r)
    }
}

/// `Q v` for a single function.
pub fn project_complement(spfs: &SpfSet, v: &GridFunction) -> GridFunction {
    let m = CMat::from_column_slice(v.len(), 1, v.values.as_slice());
    let q = spfs.project_complement_matrix(&m);
    GridFunction::new(q.column(0).into_owned(), v.dx)
}

/// Which one-body operator to integrate.
#[derive(Debug, Clone, Copy)]
pub enum OneBodyOp<'a> {
    /// `T + V` (or `V` alone when `kinetic` is false).
    Hamiltonian { kinetic: bool, potential: &'a [f64] },
    /// The absorbing potential `Γ(x)`.
    Cap(&'a [f64]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OneBodyLabel {
    Hamiltonian,
    Cap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyCoeffs {
    pub matrix: CMat,
    pub label: OneBodyLabel,
}

/// Applies a one-body operator to every column of `phi`.
pub fn apply_one_body(grid: &GridSpec, op: OneBodyOp<'_>, phi: &CMat) -> CMat {
    let mut out = CMat::zeros(phi.nrows(), phi.ncols());
    for j in 0..phi.ncols() {
        let col = phi.column(j);
        match op {
            OneBodyOp::Hamiltonian { kinetic, potential } => {
                if kinetic {
                    let t = kinetic_apply(grid, col.as_slice());
                    for a in 0..phi.nrows() {
                        out[(a, j)] = t[a] + col[a] * potential[a];
                    }
                } else {
                    for a in 0..phi.nrows() {
                        out[(a, j)] = col[a] * potential[a];
                    }
                }
            }
            OneBodyOp::Cap(gamma) => {
                for a in 0..phi.nrows() {
                    out[(a, j)] = col[a] * gamma[a];
                }
            }
        }
    }
    out
}

/// `M_jk = ⟨φ_j|op|φ_k⟩`.
pub fn one_body_integrals(grid: &GridSpec, spfs: &SpfSet, op: OneBodyOp<'_>) -> OneBodyCoeffs {
    let applied = apply_one_body(grid, op, spfs.matrix());
    let matrix = spfs.project_coefficients(&applied);
    let label = match op {
        OneBodyOp::Hamiltonian { .. } => OneBodyLabel::Hamiltonian,
        OneBodyOp::Cap(_) => OneBodyLabel::Cap,
    };
    OneBodyCoeffs { matrix, label }
}

/// Pair potential `u(x_a, x_b)` tabulated on the grid (real).
#[derive(Debug, Clone, PartialEq)]
pub struct PairPotential {
    n: usize,
    /// Column-major: `table[b * n + a] = u(x_a, x_b)`.
    table: Vec<f64>,
}

impl PairPotential {
    pub fn from_fn(grid: &GridSpec, u: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n_points();
        let x = grid.nodes();
        let mut table = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                table[b * n + a] = u(x[a], x[b]);
            }
        }
        Self { n, table }
    }

    /// `u(x, y) = strength / sqrt((x - y)² + smoothing²)`.
    pub fn smoothed_coulomb(grid: &GridSpec, strength: f64, smoothing: f64) -> Self {
        let s2 = smoothing * smoothing;
        Self::from_fn(grid, |x, y| strength / Float::sqrt((x - y) * (x - y) + s2))
    }

    pub fn constant(grid: &GridSpec, value: f64) -> Self {
        Self::from_fn(grid, |_, _| value)
    }

    pub fn zero(grid: &GridSpec) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.table[b * self.n + a]
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|&v| v == 0.0)
    }

    /// `(u g)(x_a) = Σ_b u(x_a, x_b) g(x_b)`.
    fn apply(&self, g: &[C64], out: &mut [C64]) {
        out.fill(C64::new(0.0, 0.0));
        for (b, &z) in g.iter().enumerate() {
            let col = &self.table[b * self.n..(b + 1) * self.n];
            for (o, &w) in out.iter_mut().zip(col) {
                *o += z * w;
            }
        }
    }

    fn apply_real(&self, g: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (b, &z) in g.iter().enumerate() {
            let col = &self.table[b * self.n..(b + 1) * self.n];
            for (o, &w) in out.iter_mut().zip(col) {
                *o += z * w;
            }
        }
    }
}

/// Dense `L⁴` complex tensor indexed `[j][k][l][m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    l: usize,
    data: Vec<C64>,
}

impl Tensor4 {
    pub fn zeros(l: usize) -> Self {
        Self { l, data: vec![C64::new(0.0, 0.0); l * l * l * l] }
    }

    pub fn modes(&self) -> usize {
        self.l
    }

    #[inline]
    fn index(&self, j: usize, k: usize, l: usize, m: usize) -> usize {
        ((j * self.l + k) * self.l + l) * self.l + m
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, l: usize, m: usize) -> C64 {
        self.data[self.index(j, k, l, m)]
    }

    pub fn set(&mut self, j: usize, k: usize, l: usize, m: usize, v: C64) {
        let i = self.index(j, k, l, m);
        self.data[i] = v;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| *z == C64::new(0.0, 0.0))
    }

    pub fn max_abs_diff(&self, other: &Tensor4) -> f64 {
        self.data.iter().zip(&other.data).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
    }
}

/// Two-body integrals `u_jklm = ⟨φ_j φ_k|u|φ_l φ_m⟩` (not antisymmetrized).
pub type TwoBodyCoeffs = Tensor4;

/// Mean fields `U_km(x) = ∫ conj(φ_k(y)) u(x, y) φ_m(y) dy`, indexed `k * L + m`.
///
/// `u` is real, so `U_mk = conj(U_km)` and only `k ≤ m` is integrated.
pub fn mean_fields(spfs: &SpfSet, pair: &PairPotential) -> Vec<CVec> {
    let l = spfs.count();
    let n = spfs.n_points();
    let phi = spfs.matrix();
    let mut out = vec![CVec::zeros(n); l * l];
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut u_re = vec![0.0; n];
    let mut u_im = vec![0.0; n];
    for k in 0..l {
        for m in k..l {
            for b in 0..n {
                let d = phi[(b, k)].conj() * phi[(b, m)] * spfs.dx();
                re[b] = d.re;
                im[b] = d.im;
            }
            pair.apply_real(&re, &mut u_re);
            pair.apply_real(&im, &mut u_im);
            let u = CVec::from_fn(n, |a, _| C64::new(u_re[a], u_im[a]));
            if m != k {
                out[m * l + k] = u.map(|z| z.conj());
            }
            out[k * l + m] = u;
        }
    }
    out
}

/// A single mean field `U_km`.
pub fn mean_field(spfs: &SpfSet, k: usize, m: usize, pair: &PairPotential) -> GridFunction {
    let n = spfs.n_points();
    let phi = spfs.matrix();
    let density: Vec<C64> = (0..n).map(|b| phi[(b, k)].conj() * phi[(b, m)] * spfs.dx()).collect();
    let mut u = CVec::zeros(n);
    pair.apply(&density, u.as_mut_slice());
    GridFunction::new(u, spfs.dx())
}

/// Two-body integrals from precomputed mean fields:
/// `u_jklm = Δx Σ_a conj(φ_j(x_a)) φ_l(x_a) U_km(x_a)`.
///
/// Only pairs `(j,l) ≤ (k,m)` are evaluated; the rest are filled from
/// `u_jklm = u_kjml`, so that symmetry holds bitwise.
pub fn two_body_from_mean_fields(spfs: &SpfSet, fields: &[CVec]) -> TwoBodyCoeffs {
    let l = spfs.count();
    let n = spfs.n_points();
    let phi = spfs.matrix();
    let dx = spfs.dx();
    let split = |v: &mut dyn Iterator<Item = C64>| -> (Vec<f64>, Vec<f64>) { v.map(|z| (z.re, z.im)).unzip() };
    let densities: Vec<(Vec<f64>, Vec<f64>)> = (0..l * l)
        .map(|p| {
            let (j, lm) = (p / l, p % l);
            split(&mut (0..n).map(|a| phi[(a, j)].conj() * phi[(a, lm)] * dx))
        })
        .collect();
    let fields: Vec<(Vec<f64>, Vec<f64>)> = fields.iter().map(|f| split(&mut f.iter().copied())).collect();
    let mut out = TwoBodyCoeffs::zeros(l);
    for (p, (dr, di)) in densities.iter().enumerate() {
        let (j, lm) = (p / l, p % l);
        for (q, (fr, fi)) in fields.iter().enumerate().skip(p) {
            let (k, m) = (q / l, q % l);
            let v = C64::new(dot(dr, fr) - dot(di, fi), dot(dr, fi) + dot(di, fr));
            out.set(j, k, lm, m, v);
            out.set(k, j, m, lm, v);
        }
    }
    out
}

/// Real dot product with four independent accumulators.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = (a.chunks_exact(4), a.chunks_exact(4).remainder());
    let rb = b.chunks_exact(4).remainder();
    for (x, y) in ca.zip(b.chunks_exact(4)) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn two_body_integrals(spfs: &SpfSet, pair: &PairPotential) -> TwoBodyCoeffs {
    two_body_from_mean_fields(spfs, &mean_fields(spfs, pair))
}
