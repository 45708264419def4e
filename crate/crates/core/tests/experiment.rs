use rhomctdh_core::experiment::{bound_state_count, prepare_initial_state, relax_ground_state, ExperimentConfig};
use rhomctdh_core::grid::eval_trap;
use rhomctdh_core::linalg::hermitian_eigen;
use rhomctdh_core::propagate::density;
use rhomctdh_core::C64;

#[test]
fn default_configuration_is_valid_and_well_has_four_bound_states() {
    let config = ExperimentConfig::default();
    config.validate().unwrap();
    let grid = config.grid().unwrap();
    assert_eq!(grid.n_points(), 128);
    assert!((grid.dx() - 0.3125).abs() < 1e-15);
    let v = eval_trap(&grid, config.trap_depth, config.trap_width);
    assert_eq!(bound_state_count(&grid, &v), 4);
}

#[test]
fn invalid_configurations_are_rejected() {
    let bad = [
        ExperimentConfig { cap_onset: 25.0, ..Default::default() },
        ExperimentConfig { l_total: 200, ..Default::default() },
        ExperimentConfig { l_total: 4, ..Default::default() },
        ExperimentConfig { n_points: 100, ..Default::default() },
        ExperimentConfig { tau: 0.0, ..Default::default() },
        ExperimentConfig { n_particles: 0, ..Default::default() },
    ];
    for config in bad {
        assert!(config.validate().is_err() || config.grid().is_err(), "{config:?}");
        assert!(prepare_initial_state(&config).is_err());
    }
}

#[test]
fn initial_state_is_a_pure_three_fermion_state() {
    let config = ExperimentConfig::default();
    let prep = prepare_initial_state(&config).unwrap();
    let state = &prep.state;
    let dx = prep.model.grid.dx();

    // relaxed two-fermion energy lies just above the exact grid value -7.47465
    assert!(prep.ground.energy > -7.47466 && prep.ground.energy < -7.47);

    assert!(state.spfs.orthonormality_error() < 1e-10);
    let phi = state.spfs.matrix();
    for j in 0..4 {
        let overlap = phi.column(j).dotc(&phi.column(4)) * C64::new(dx, 0.0);
        assert!(overlap.norm() < 1e-10);
    }
    let p = state.b.probabilities();
    assert_eq!(p.len(), 4);
    assert!((p[3] - 1.0).abs() < 1e-12);
    assert!(p[0] == 0.0 && p[1] == 0.0 && p[2] == 0.0);
    let (values, _) = hermitian_eigen(&state.b.blocks[3]);
    assert!(values[..values.len() - 1].iter().all(|v| v.abs() < 1e-12));

    let n = density(&prep.basis, state);
    assert!((n.iter().sum::<f64>() * dx - 3.0).abs() < 1e-10);
    assert!(n.iter().all(|&v| v > -1e-10));

    // the packet SPF is centred near x = -2 with mean momentum close to 3
    let g = state.spfs.function(4);
    let x = prep.model.grid.nodes();
    let mean_x: f64 = g.values.iter().zip(x).map(|(z, x)| z.norm_sqr() * x).sum::<f64>() * dx;
    assert!((mean_x + 2.0).abs() < 0.5, "{mean_x}");
}

#[test]
fn relaxed_energy_is_stable_under_step_halving() {
    let config = ExperimentConfig::default();
    let model = config.model().unwrap();
    let (_, coarse) = relax_ground_state(&config, &model).unwrap();
    let fine_config = ExperimentConfig { relax_tau: 0.5 * config.relax_tau, ..config };
    let (_, fine) = relax_ground_state(&fine_config, &model).unwrap();
    assert!((coarse.energy - fine.energy).abs() < 1e-8, "{} vs {}", coarse.energy, fine.energy);
}
