//! Invariant suite on small instances, independent of the full experiment.
//!
//! * complete SPF set: the MCTDH trajectory equals the fixed-basis Lindblad
//!   solution in the grid-point occupation basis
//! * a pure initial state without absorber follows Ψ-MCTDH and stays pure
//! * the ladder operators obey the canonical relations and adjointness
//! * trace, Hermiticity, orthonormality and the particle-number sum rule hold
//!   along the trajectories above

use anyhow::{ensure, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rhomctdh_core::fock::{basis_transform, FockBasis, Statistics};
use rhomctdh_core::grid::{eval_cap, eval_trap, lowest_eigenstates, GridSpec, PairPotential, SpfSet};
use rhomctdh_core::linalg::hermitian_eigen;
use rhomctdh_core::liouville::{oracle_propagate, BlockDensityMatrix};
use rhomctdh_core::mctdh::{compute_integrals, lindblad_operators, GridModel, MctdhState};
use rhomctdh_core::propagate::{density, rk4_step, split_step};
use rhomctdh_core::pure::{self, PsiState, TimeKind};
use rhomctdh_core::{CMat, CVec, C64};

/// One named check with its measured value and bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Self { name: name.into(), value, tolerance }
    }

    pub fn passed(&self) -> bool {
        self.value.is_finite() && self.value < self.tolerance
    }
}

fn complex(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| complex(rng))
}

/// Mixed density with the given block probabilities.
pub fn random_density(basis: &FockBasis, weights: &[f64], rng: &mut ChaCha8Rng) -> BlockDensityMatrix {
    let mut b = BlockDensityMatrix::zeros(basis);
    for (n, &w) in weights.iter().enumerate() {
        let d = basis.block_dim(n);
        let a = random_matrix(rng, d, d);
        let p = &a * a.adjoint();
        let tr = p.trace().re;
        b.blocks[n] = p * C64::new(w / tr, 0.0);
    }
    b
}

pub fn random_spfs(grid: &GridSpec, count: usize, rng: &mut ChaCha8Rng) -> Result<SpfSet> {
    let mut s = SpfSet::from_matrix(random_matrix(rng, grid.n_points(), count), grid.dx());
    s.orthonormalize()?;
    Ok(s)
}

/// Lowest eigenfunctions of `T + V` with a small admixture of the next three,
/// so that the SPFs move.
pub fn smooth_spfs(model: &GridModel, count: usize, rng: &mut ChaCha8Rng) -> Result<SpfSet> {
    let (_, eig) = lowest_eigenstates(&model.grid, &model.potential, count + 3)?;
    let mix = CMat::from_fn(count + 3, count, |i, j| if i == j { C64::new(1.0, 0.0) } else { complex(rng) * 0.2 });
    let mut s = SpfSet::from_matrix(eig.matrix() * mix, model.grid.dx());
    s.orthonormalize()?;
    Ok(s)
}

/// Trap, absorber over the outer half of the box and smoothed Coulomb
/// interaction on a grid of `points` nodes over `[-4, 4)`.
pub fn small_model(points: usize, cap: bool) -> Result<GridModel> {
    let grid = GridSpec::new(4.0, points)?;
    let v = eval_trap(&grid, 8.0, 1.25);
    let gamma = if cap { eval_cap(&grid, 2.0)? } else { vec![0.0; points] };
    let pair = PairPotential::smoothed_coulomb(&grid, 2.0, 0.1);
    Ok(GridModel::new(grid, v, gamma, pair)?)
}

/// `B` expressed in the grid-point occupation basis.
fn on_grid(basis: &FockBasis, state: &MctdhState) -> Result<BlockDensityMatrix> {
    let coeffs = state.spfs.matrix() * C64::new(state.spfs.dx().sqrt(), 0.0);
    Ok(state.b.transformed(&basis_transform(basis, basis, &coeffs)?))
}

/// Conservation diagnostics accumulated along a trajectory.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Conservation {
    pub trace: f64,
    pub hermiticity: f64,
    pub orthonormality: f64,
    pub sum_rule: f64,
}

impl Conservation {
    pub fn observe(&mut self, basis: &FockBasis, model: &GridModel, state: &MctdhState, initial_trace: f64) {
        let particles: f64 = state.b.probabilities().iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let integral = density(basis, state).iter().sum::<f64>() * model.grid.dx();
        self.trace = self.trace.max((state.b.trace().re - initial_trace).abs());
        self.hermiticity = self.hermiticity.max(state.b.hermiticity_residual());
        self.orthonormality = self.orthonormality.max(state.spfs.orthonormality_error());
        self.sum_rule = self.sum_rule.max((integral - particles).abs());
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    /// Largest blockwise deviation at the comparison times.
    pub deviation: f64,
    pub conservation: Conservation,
}

/// Propagates `N = 2` particles in `points` complete SPFs with the splitting
/// scheme at step `tau` and compares with the fixed-basis RK4 solution
/// (step `1e-3`) every `0.1` up to `t = 1`.
pub fn oracle_equivalence(points: usize, statistics: Statistics, tau: f64, seed: u64) -> Result<OracleComparison> {
    let model = small_model(points, true)?;
    let basis = FockBasis::new(points, 2, statistics)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spfs = random_spfs(&model.grid, points, &mut rng)?;
    let b = random_density(&basis, &[0.1, 0.3, 0.6], &mut rng);
    let mut state = MctdhState::new(spfs, b, &basis)?;

    let grid_spfs = SpfSet::from_matrix(CMat::identity(points, points) / C64::new(model.grid.dx().sqrt(), 0.0), model.grid.dx());
    let ops = lindblad_operators(&basis, &compute_integrals(&model, &grid_spfs, true))?;
    let mut reference = on_grid(&basis, &state)?;

    let substeps = (0.1 / tau).round() as usize;
    ensure!(substeps >= 1 && ((substeps as f64) * tau - 0.1).abs() < 1e-12, "tau must divide 0.1");
    let mut deviation: f64 = 0.0;
    let mut conservation = Conservation::default();
    for _ in 0..10 {
        for _ in 0..substeps {
            split_step(&basis, &model, &mut state, tau, 1e-8)?;
        }
        reference = oracle_propagate(&basis, &reference, &ops, 0.1, 1e-3)?;
        deviation = deviation.max(on_grid(&basis, &state)?.max_deviation(&reference));
        conservation.observe(&basis, &model, &state, 1.0);
    }
    Ok(OracleComparison { deviation, conservation })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureReduction {
    /// Largest deviation of SPFs and `B` from the Ψ-MCTDH solution.
    pub deviation: f64,
    /// Largest second eigenvalue of the occupied block.
    pub rank_residual: f64,
    /// Largest change of the SPFs, to show the dynamics is not trivial.
    pub spf_motion: f64,
    pub conservation: Conservation,
}

/// Follows a rank-one block `n` state with unsplit RK4 for both the
/// density-operator and the wave-function equations. The model must not
/// absorb.
pub fn pure_state_reduction(
    basis: &FockBasis,
    model: &GridModel,
    initial: PsiState,
    t_final: f64,
    dt: f64,
    eps_reg: f64,
) -> Result<PureReduction> {
    ensure!(!model.has_cap(), "pure-state reduction requires a model without absorber");
    let n = initial.n;
    let spfs = initial.spfs.clone();
    let mut rho = MctdhState::new(spfs.clone(), BlockDensityMatrix::pure(basis, n, &initial.coeffs)?, basis)?;
    let mut psi = initial;
    let steps = (t_final / dt).round() as usize;
    let mut out = PureReduction { deviation: 0.0, rank_residual: 0.0, spf_motion: 0.0, conservation: Conservation::default() };
    for _ in 0..steps {
        pure::rk4_step(basis, model, &mut psi, TimeKind::Real, dt, eps_reg)?;
        rk4_step(basis, model, &mut rho, dt, eps_reg)?;
        let reference = BlockDensityMatrix::pure(basis, n, &psi.coeffs)?;
        let spf_dev = (rho.spfs.matrix() - psi.spfs.matrix()).camax();
        out.deviation = out.deviation.max(rho.b.max_deviation(&reference)).max(spf_dev);
        let (values, _) = hermitian_eigen(&rho.b.blocks[n]);
        if values.len() > 1 {
            out.rank_residual = out.rank_residual.max(values[values.len() - 2].abs());
        }
        out.spf_motion = out.spf_motion.max((rho.spfs.matrix() - spfs.matrix()).camax());
        out.conservation.observe(basis, model, &rho, 1.0);
    }
    Ok(out)
}

/// Largest residual of `{c_j, c_k†}_± = δ_jk` (on states below the top block),
/// `{c_j, c_k}_± = 0` and `c_j† = (c_j)ᵀ` over all bases with up to
/// `max_modes` modes and `N ≤ L`, both statistics.
pub fn ladder_algebra(max_modes: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for statistics in [Statistics::Fermion, Statistics::Boson] {
        let sign = if statistics == Statistics::Fermion { 1.0 } else { -1.0 };
        for l in 1..=max_modes {
            for n in 0..=l {
                let basis = FockBasis::new(l, n, statistics)?;
                let below = basis.offset(n);
                let a: Vec<_> = (0..l).map(|j| basis.annihilator_dense(j)).collect();
                let ad: Vec<_> = (0..l).map(|j| basis.creator_dense(j)).collect();
                for j in 0..l {
                    worst = worst.max((&ad[j] - a[j].transpose()).amax());
                    for k in 0..l {
                        let mixed = &a[j] * &ad[k] + &ad[k] * &a[j] * sign;
                        let lowers = &a[j] * &a[k] + &a[k] * &a[j] * sign;
                        worst = worst.max(lowers.amax());
                        for r in 0..below {
                            for s in 0..below {
                                let expected = if r == s && j == k { 1.0 } else { 0.0 };
                                worst = worst.max((mixed[(r, s)] - expected).abs());
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

/// The whole suite; `points` is the size of the complete SPF set used for
/// the oracle comparison (a power of two).
pub fn run_checks(points: usize) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    for statistics in [Statistics::Fermion, Statistics::Boson] {
        let label = if statistics == Statistics::Fermion { "fermions" } else { "bosons" };
        let c = oracle_equivalence(points, statistics, 1e-3, 7)?;
        out.push(CheckOutcome::new(format!("complete-basis oracle, {label}: max deviation"), c.deviation, 1e-6));
        out.push(CheckOutcome::new(format!("complete-basis oracle, {label}: trace drift"), c.conservation.trace, 1e-8));
        out.push(CheckOutcome::new(format!("complete-basis oracle, {label}: Hermiticity"), c.conservation.hermiticity, 1e-10));
        out.push(CheckOutcome::new(format!("complete-basis oracle, {label}: orthonormality"), c.conservation.orthonormality, 1e-8));
        out.push(CheckOutcome::new(format!("complete-basis oracle, {label}: sum rule"), c.conservation.sum_rule, 1e-8));
    }

    let model = small_model(32, false)?;
    let basis = FockBasis::new(4, 2, Statistics::Fermion)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spfs = smooth_spfs(&model, 4, &mut rng)?;
    let mut a = CVec::from_fn(basis.block_dim(2), |_, _| complex(&mut rng));
    a /= C64::new(a.norm(), 0.0);
    let p = pure_state_reduction(&basis, &model, PsiState::new(&basis, spfs, 2, a)?, 0.5, 1e-3, 1e-8)?;
    out.push(CheckOutcome::new("pure-state reduction: deviation from wave-function MCTDH", p.deviation, 1e-8));
    out.push(CheckOutcome::new("pure-state reduction: second eigenvalue", p.rank_residual, 1e-10));

    out.push(CheckOutcome::new("ladder algebra, L <= 4", ladder_algebra(4)?, 1e-12));
    Ok(out)
}
