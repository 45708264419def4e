mod common;

use common::*;
use rhomctdh_core::fock::{FockBasis, Statistics};
use rhomctdh_core::grid::{eval_cap, eval_trap, lowest_eigenstates, GridSpec, PairPotential, SpfSet};
use rhomctdh_core::liouville::{nh_schrodinger_rhs, BlockDensityMatrix, PureState};
use rhomctdh_core::mctdh::{derivative, GridModel, MctdhState};
use rhomctdh_core::propagate::{
    density, energy, kinetic_half_step, potential_step, propagate, relax_imaginary, rk4_step, split_step, Event, PropagationConfig,
    RelaxConfig,
};
use rhomctdh_core::pure::{self, PsiState, TimeKind};
use rhomctdh_core::{CMat, CVec, C64};

fn small_model(cap: bool, interacting: bool) -> GridModel {
    let grid = GridSpec::new(8.0, 32).unwrap();
    let v = eval_trap(&grid, 8.0, 1.25);
    let gamma = if cap { eval_cap(&grid, 5.0).unwrap() } else { vec![0.0; 32] };
    let pair = if interacting { PairPotential::smoothed_coulomb(&grid, 2.0, 0.1) } else { PairPotential::zero(&grid) };
    GridModel::new(grid, v, gamma, pair).unwrap()
}

/// Lowest eigenfunctions mixed with a few excited ones, so that `QHφ ≠ 0`.
fn mixed_spfs(model: &GridModel, l: usize, seed: u64) -> SpfSet {
    let (_, eig) = lowest_eigenstates(&model.grid, &model.potential, l + 3).unwrap();
    let mut rng = Lcg::new(seed);
    let mix = CMat::from_fn(l + 3, l, |i, j| if i == j { C64::new(1.0, 0.0) } else { rng.complex() * 0.2 });
    let mut s = SpfSet::from_matrix(eig.matrix() * mix, model.grid.dx());
    s.orthonormalize().unwrap();
    s
}

fn distance(a: &MctdhState, b: &MctdhState) -> f64 {
    max_abs(&(a.spfs.matrix() - b.spfs.matrix())).max(a.b.max_deviation(&b.b))
}

#[test]
fn pure_state_reduction_matches_psi_mctdh() {
    let model = small_model(false, true);
    let basis = FockBasis::new(4, 2, Statistics::Fermion).unwrap();
    let spfs = mixed_spfs(&model, 4, 1);
    let mut rng = Lcg::new(2);
    let mut a = CVec::from_fn(basis.block_dim(2), |_, _| rng.complex());
    a /= C64::new(a.norm(), 0.0);
    let mut psi = PsiState::new(&basis, spfs.clone(), 2, a.clone()).unwrap();
    let mut rho = MctdhState::new(spfs, BlockDensityMatrix::pure(&basis, 2, &a).unwrap(), &basis).unwrap();
    let dt = 2e-3;
    let mut worst: f64 = 0.0;
    let mut worst_rank: f64 = 0.0;
    for _ in 0..500 {
        pure::rk4_step(&basis, &model, &mut psi, TimeKind::Real, dt, 1e-8).unwrap();
        rk4_step(&basis, &model, &mut rho, dt, 1e-8).unwrap();
        let reference = BlockDensityMatrix::pure(&basis, 2, &psi.coeffs).unwrap();
        worst = worst.max(rho.b.max_deviation(&reference));
        worst = worst.max(max_abs(&(rho.spfs.matrix() - psi.spfs.matrix())));
        let (values, _) = rhomctdh_core::linalg::hermitian_eigen(&rho.b.blocks[2]);
        worst_rank = worst_rank.max(values[values.len() - 2].abs());
    }
    assert!(worst < 1e-8, "deviation {worst:e}");
    assert!(worst_rank < 1e-10, "second eigenvalue {worst_rank:e}");
    // the dynamics did something
    assert!(max_abs(&(rho.spfs.matrix() - mixed_spfs(&model, 4, 1).matrix())) > 1e-2);
}

fn split_state() -> (FockBasis, GridModel, MctdhState) {
    let model = small_model(true, true);
    let basis = FockBasis::new(3, 2, Statistics::Fermion).unwrap();
    let spfs = mixed_spfs(&model, 3, 5);
    let mut rng = Lcg::new(6);
    let b = random_density(&basis, &[0.2, 0.3, 0.5], &mut rng);
    let state = MctdhState::new(spfs, b, &basis).unwrap();
    (basis, model, state)
}

#[test]
fn split_step_local_error_is_third_order() {
    let (basis, model, x) = split_state();
    let local = |tau: f64| {
        let mut one = x.clone();
        split_step(&basis, &model, &mut one, tau, 1e-10).unwrap();
        let mut two = x.clone();
        split_step(&basis, &model, &mut two, 0.5 * tau, 1e-10).unwrap();
        split_step(&basis, &model, &mut two, 0.5 * tau, 1e-10).unwrap();
        distance(&one, &two)
    };
    let e: Vec<f64> = [0.04, 0.02, 0.01].iter().map(|&t| local(t)).collect();
    for w in e.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 3.0).abs() < 0.2, "slope {slope}, errors {e:?}");
    }
}

#[test]
fn potential_step_is_fourth_order_on_single_mode_decay() {
    let grid = GridSpec::new(4.0, 16).unwrap();
    let gamma = 1.5;
    let model = GridModel::new(grid.clone(), vec![0.0; 16], vec![gamma; 16], PairPotential::zero(&grid)).unwrap();
    let basis = FockBasis::new(1, 1, Statistics::Fermion).unwrap();
    let mut phi = grid.sample_complex(|x| C64::new((-x * x).exp(), 0.0));
    let norm = phi.norm();
    phi.values /= C64::new(norm, 0.0);
    let spfs = SpfSet::from_functions(&[phi]).unwrap();
    let mut b = BlockDensityMatrix::zeros(&basis);
    b.blocks[0][(0, 0)] = C64::new(0.3, 0.0);
    b.blocks[1][(0, 0)] = C64::new(0.7, 0.0);
    let start = MctdhState::new(spfs, b, &basis).unwrap();
    let exact = 0.7 * (-2.0 * gamma).exp();
    let error = |steps: usize| {
        let mut s = start.clone();
        let dt = 1.0 / steps as f64;
        for _ in 0..steps {
            potential_step(&basis, &model, &mut s, dt, 1e-10).unwrap();
        }
        assert!((s.b.trace().re - 1.0).abs() < 1e-14);
        assert!(max_abs(&(s.spfs.matrix() - start.spfs.matrix())) < 1e-14);
        (s.b.blocks[1][(0, 0)].re - exact).abs()
    };
    let e: Vec<f64> = [10, 20, 40].iter().map(|&n| error(n)).collect();
    for w in e.windows(2) {
        let slope = (w[0] / w[1]).log2();
        assert!((slope - 4.0).abs() < 0.2, "slope {slope}, errors {e:?}");
    }
}

#[test]
fn free_gaussian_spreads_as_predicted() {
    let grid = GridSpec::new(30.0, 256).unwrap();
    let model = GridModel::new(grid.clone(), vec![0.0; 256], vec![0.0; 256], PairPotential::zero(&grid)).unwrap();
    let basis = FockBasis::new(1, 1, Statistics::Fermion).unwrap();
    let (sigma, k0, t) = (1.0f64, 1.5f64, 2.0f64);
    let packet = |x: f64, t: f64| {
        // ψ(x,t) for ψ(x,0) ∝ exp(-x²/(4σ²) + i k0 x)
        let i = C64::new(0.0, 1.0);
        let s = C64::new(1.0, 0.0) + i * t / (2.0 * sigma * sigma);
        let arg = -(C64::new(x, 0.0) - k0 * t).powi(2) / (4.0 * sigma * sigma * s) + i * k0 * (x - 0.5 * k0 * t);
        arg.exp() / s.sqrt()
    };
    let mut phi0 = grid.sample_complex(|x| packet(x, 0.0));
    let norm = phi0.norm();
    phi0.values /= C64::new(norm, 0.0);
    let spfs = SpfSet::from_functions(&[phi0]).unwrap();
    let mut state = MctdhState::new(spfs, BlockDensityMatrix::zeros(&basis), &basis).unwrap();
    kinetic_half_step(&model, &mut state, t);
    let expected = grid.sample_complex(|x| packet(x, t) / norm);
    let dev = state.spfs.function(0).values - expected.values;
    assert!(dev.iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-10);
}

#[test]
fn closed_system_is_time_reversible() {
    let model = small_model(false, true);
    let basis = FockBasis::new(3, 2, Statistics::Fermion).unwrap();
    let spfs = mixed_spfs(&model, 3, 8);
    let mut rng = Lcg::new(9);
    let b = random_density(&basis, &[0.2, 0.3, 0.5], &mut rng);
    let start = MctdhState::new(spfs, b, &basis).unwrap();
    let mut s = start.clone();
    for _ in 0..100 {
        split_step(&basis, &model, &mut s, 0.005, 1e-10).unwrap();
    }
    assert!(distance(&s, &start) > 1e-2);
    for _ in 0..100 {
        split_step(&basis, &model, &mut s, -0.005, 1e-10).unwrap();
    }
    assert!(distance(&s, &start) < 1e-8, "{:e}", distance(&s, &start));
}

fn random_pure(basis: &FockBasis, n: usize, rng: &mut Lcg) -> BlockDensityMatrix {
    let mut a = CVec::from_fn(basis.block_dim(n), |_, _| rng.complex());
    a /= C64::new(a.norm(), 0.0);
    BlockDensityMatrix::pure(basis, n, &a).unwrap()
}

/// `d tr(Hρ)/dt` along the exact tangent, by a central difference.
fn energy_rate(basis: &FockBasis, model: &GridModel, state: &MctdhState) -> f64 {
    let (tangent, _) = derivative(basis, model, state, true, 0.0).unwrap();
    let h = 1e-5;
    let shifted = |sign: f64| {
        let mut s = state.clone();
        *s.spfs.matrix_mut() += &tangent.dphi * C64::new(sign * h, 0.0);
        s.b.axpy(sign * h, &tangent.db);
        energy(basis, model, &s).unwrap()
    };
    (shifted(1.0) - shifted(-1.0)) / (2.0 * h)
}

#[test]
fn energy_rate_vanishes_for_pure_and_for_noninteracting_states() {
    let basis = FockBasis::new(3, 2, Statistics::Fermion).unwrap();
    let mut rng = Lcg::new(15);
    let interacting = small_model(false, true);
    let free = small_model(false, false);
    let spfs = mixed_spfs(&interacting, 3, 16);
    let pure = MctdhState::new(spfs.clone(), random_pure(&basis, 2, &mut rng), &basis).unwrap();
    assert!(energy_rate(&basis, &interacting, &pure).abs() < 1e-8);
    let mixed = MctdhState::new(spfs, random_density(&basis, &[0.2, 0.3, 0.5], &mut rng), &basis).unwrap();
    assert!(energy_rate(&basis, &free, &mixed).abs() < 1e-8);
}

#[test]
fn closed_system_conserves_trace_and_energy() {
    let model = small_model(false, true);
    let basis = FockBasis::new(3, 2, Statistics::Fermion).unwrap();
    let spfs = mixed_spfs(&model, 3, 10);
    let mut rng = Lcg::new(11);
    let b = random_pure(&basis, 2, &mut rng);
    let mut s = MctdhState::new(spfs, b, &basis).unwrap();
    let config = PropagationConfig { tau: 1e-3, t_final: 2.0, record_every: 100, eps_reg: 1e-10 };
    let records = propagate(&basis, &model, &mut s, &config, |_| {}).unwrap();
    assert_eq!(records.len(), 21);
    let e0 = records[0].energy;
    for r in &records {
        assert!((r.trace - 1.0).abs() < 1e-12);
        assert!((r.energy - e0).abs() < 1e-6, "{} vs {e0}", r.energy);
        assert!(r.hermiticity_residual < 1e-12);
        assert!(r.orthonormality_drift < 1e-8);
    }
}

#[test]
fn absorber_moves_probability_downwards() {
    let (basis, model, mut s) = split_state();
    let config = PropagationConfig { tau: 5e-3, t_final: 3.0, record_every: 20, eps_reg: 1e-8 };
    let mut events = 0;
    let records = propagate(&basis, &model, &mut s, &config, |e| {
        if matches!(e, Event::Record(_)) {
            events += 1;
        }
    })
    .unwrap();
    assert_eq!(events, records.len());
    let first = &records[0];
    let last = records.last().unwrap();
    assert!((last.t - 3.0).abs() < 1e-12);
    assert!(last.probabilities[2] < first.probabilities[2]);
    assert!(last.probabilities[0] > first.probabilities[0]);
    for r in &records {
        assert!((r.trace - 1.0).abs() < 1e-10);
        let particles: f64 = r.probabilities.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let integral: f64 = r.density.iter().sum::<f64>() * model.grid.dx();
        assert!((integral - particles).abs() < 1e-8, "{integral} vs {particles}");
    }
}

#[test]
fn norm_decay_matches_absorber_expectation() {
    // d‖ψ‖²/dt = -2⟨ψ|G|ψ⟩, checked with a central difference of an RK4 trajectory
    let mut rng = Lcg::new(12);
    let d = 6;
    let a = rng.matrix(d, d);
    let h = &a + a.adjoint();
    let b = rng.matrix(d, d);
    let g = &b * b.adjoint();
    let mut psi = PureState { n: 1, coeffs: CVec::from_fn(d, |_, _| rng.complex()) };
    let step = |p: &PureState, dt: f64| {
        let f = |c: &CVec| nh_schrodinger_rhs(&PureState { n: 1, coeffs: c.clone() }, &h, &g);
        let k1 = f(&p.coeffs);
        let k2 = f(&(&p.coeffs + &k1 * C64::new(0.5 * dt, 0.0)));
        let k3 = f(&(&p.coeffs + &k2 * C64::new(0.5 * dt, 0.0)));
        let k4 = f(&(&p.coeffs + &k3 * C64::new(dt, 0.0)));
        PureState { n: 1, coeffs: &p.coeffs + (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0) }
    };
    let dt = 1e-4;
    for _ in 0..3 {
        let forward = step(&psi, dt);
        let backward = step(&psi, -dt);
        let fd = (forward.norm_squared() - backward.norm_squared()) / (2.0 * dt);
        let exact = -2.0 * psi.coeffs.dotc(&(&g * &psi.coeffs)).re;
        assert!(((fd - exact) / exact).abs() < 1e-4);
        psi = step(&psi, 0.05);
    }
}

#[test]
fn relaxation_of_free_fermions_fills_lowest_orbitals() {
    let model = small_model(false, false);
    let (eps, _) = lowest_eigenstates(&model.grid, &model.potential, 2).unwrap();
    let basis = FockBasis::new(2, 2, Statistics::Fermion).unwrap();
    let spfs = mixed_spfs(&model, 2, 13);
    let guess = PsiState::new(&basis, spfs, 2, CVec::from_element(1, C64::new(1.0, 0.0))).unwrap();
    let relaxed = relax_imaginary(&basis, &model, guess, &RelaxConfig::default()).unwrap();
    assert!((relaxed.energy - eps[0] - eps[1]).abs() < 1e-8, "{} vs {}", relaxed.energy, eps[0] + eps[1]);
}

#[test]
fn relaxation_in_complete_basis_reaches_exact_ground_state() {
    let grid = GridSpec::new(4.0, 8).unwrap();
    let model =
        GridModel::new(grid.clone(), eval_trap(&grid, 8.0, 1.25), vec![0.0; 8], PairPotential::smoothed_coulomb(&grid, 2.0, 0.1)).unwrap();
    // two-fermion Hamiltonian on antisymmetric pairs of grid points
    let t = dft_kinetic(&grid);
    let mut h1 = t.clone();
    for i in 0..8 {
        h1[(i, i)] += C64::new(model.potential[i], 0.0);
    }
    let pairs: Vec<(usize, usize)> = (0..8).flat_map(|a| (a + 1..8).map(move |b| (a, b))).collect();
    let h = CMat::from_fn(pairs.len(), pairs.len(), |r, c| {
        let (a, b) = pairs[r];
        let (p, q) = pairs[c];
        let mut v = C64::new(0.0, 0.0);
        // ⟨ab|h⊗1 + 1⊗h|pq⟩ antisymmetrized
        let one = |x: usize, y: usize| h1[(x, y)];
        let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
        v += one(a, p) * delta(b, q) + one(b, q) * delta(a, p);
        v -= one(a, q) * delta(b, p) + one(b, p) * delta(a, q);
        if r == c {
            v += C64::new(model.pair.at(a, b), 0.0);
        }
        v
    });
    let (exact, _) = rhomctdh_core::linalg::hermitian_eigen(&h);

    let basis = FockBasis::new(8, 2, Statistics::Fermion).unwrap();
    let (_, eig) = lowest_eigenstates(&grid, &model.potential, 8).unwrap();
    let mut coeffs = CVec::zeros(basis.block_dim(2));
    coeffs[0] = C64::new(1.0, 0.0);
    let guess = PsiState::new(&basis, eig, 2, coeffs).unwrap();
    let relaxed = relax_imaginary(&basis, &model, guess, &RelaxConfig::default()).unwrap();
    assert!((relaxed.energy - exact[0]).abs() < 1e-8, "{} vs {}", relaxed.energy, exact[0]);
}

#[test]
fn relaxation_refuses_absorbing_models() {
    let model = small_model(true, false);
    let basis = FockBasis::new(1, 1, Statistics::Fermion).unwrap();
    let spfs = mixed_spfs(&model, 1, 14);
    let guess = PsiState::new(&basis, spfs, 1, CVec::from_element(1, C64::new(1.0, 0.0))).unwrap();
    assert!(relax_imaginary(&basis, &model, guess, &RelaxConfig::default()).is_err());
}

#[test]
fn determinant_mixture_energy_and_density() {
    let model = small_model(false, false);
    let (eps, spfs) = lowest_eigenstates(&model.grid, &model.potential, 3).unwrap();
    let basis = FockBasis::new(3, 2, Statistics::Fermion).unwrap();
    let mut b = BlockDensityMatrix::zeros(&basis);
    // block 2 is ordered {0,1}, {0,2}, {1,2}
    b.blocks[2][(0, 0)] = C64::new(0.25, 0.0);
    b.blocks[2][(2, 2)] = C64::new(0.75, 0.0);
    let state = MctdhState::new(spfs.clone(), b, &basis).unwrap();
    let e = energy(&basis, &model, &state).unwrap();
    let expected = 0.25 * (eps[0] + eps[1]) + 0.75 * (eps[1] + eps[2]);
    assert!((e - expected).abs() < 1e-10);

    let n = density(&basis, &state);
    let m = spfs.matrix();
    for (a, value) in n.iter().enumerate() {
        let p = |j: usize| m[(a, j)].norm_sqr();
        let expected = 0.25 * (p(0) + p(1)) + 0.75 * (p(1) + p(2));
        assert!((value - expected).abs() < 1e-12);
    }
    let total: f64 = n.iter().sum::<f64>() * model.grid.dx();
    assert!((total - 2.0).abs() < 1e-10);
}
