//! End-to-end runs: the scattering experiment and the ground-state-only
//! absorption control.

use std::time::Instant;

use anyhow::Result;
use log::{debug, info, warn};
use rhomctdh_core::experiment::{bound_state_count, ground_state_density, prepare_initial_state, relax_ground_state, ExperimentConfig};
use rhomctdh_core::fock::FockBasis;
use rhomctdh_core::mctdh::{GridModel, MctdhState};
use rhomctdh_core::propagate::{propagate, Event, TrajectoryRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunKind {
    /// `N`-particle scattering run from `c†(g)|Ψ⟩⟨Ψ|c(g)`.
    Experiment,
    /// The relaxed `(N-1)`-particle state alone, propagated with the absorber.
    GroundState,
}

impl RunKind {
    pub fn name(self) -> &'static str {
        match self {
            RunKind::Experiment => "experiment",
            RunKind::GroundState => "ground_state",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub relax_seconds: f64,
    pub propagate_seconds: f64,
}

/// Everything a run produces; [`crate::output`] turns it into files.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub kind: RunKind,
    pub config: ExperimentConfig,
    pub nodes: Vec<f64>,
    pub bound_states: usize,
    pub relaxed_energy: f64,
    pub relax_steps: usize,
    pub records: Vec<TrajectoryRecord>,
    pub reorthonormalizations: usize,
    pub near_singular_steps: usize,
    pub final_state: MctdhState,
    pub basis: FockBasis,
    pub model: GridModel,
    pub timings: Timings,
}

pub fn run(kind: RunKind, config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let start = Instant::now();
    let (model, basis, state, relaxed_energy, relax_steps) = match kind {
        RunKind::Experiment => {
            let p = prepare_initial_state(config)?;
            (p.model, p.basis, p.state, p.ground.energy, p.ground.steps)
        }
        RunKind::GroundState => {
            let model = config.model()?;
            let (basis, relaxed) = relax_ground_state(config, &model)?;
            let state = ground_state_density(&basis, &relaxed)?;
            (model, basis, state, relaxed.energy, relaxed.steps)
        }
    };
    let relax_seconds = start.elapsed().as_secs_f64();
    info!("relaxed ground state: E = {relaxed_energy:.10} after {relax_steps} steps ({relax_seconds:.2} s)");

    let bound_states = bound_state_count(&model.grid, &model.potential);
    let mut state = state;
    let mut reorthonormalizations = 0;
    let mut near_singular_steps = 0;
    let start = Instant::now();
    let records = propagate(&basis, &model, &mut state, &config.propagation(), |event| match event {
        Event::Record(r) => debug!("t = {:.4}: p = {:?}, E = {:.10}", r.t, r.probabilities, r.energy),
        Event::Reorthonormalized { t, drift } => {
            reorthonormalizations += 1;
            warn!("re-orthonormalized SPFs at t = {t} (drift {drift:e})");
        }
        Event::NearSingular { t, sigma_min } => {
            if near_singular_steps == 0 {
                info!("S nearly singular from t = {t} (sigma_min {sigma_min:e}); regularization active");
            }
            near_singular_steps += 1;
        }
    })?;
    let propagate_seconds = start.elapsed().as_secs_f64();
    info!("{} {} records in {propagate_seconds:.2} s", kind.name(), records.len());

    Ok(RunOutput {
        kind,
        config: config.clone(),
        nodes: model.grid.nodes().to_vec(),
        bound_states,
        relaxed_energy,
        relax_steps,
        records,
        reorthonormalizations,
        near_singular_steps,
        final_state: state,
        basis,
        model,
        timings: Timings { relax_seconds, propagate_seconds },
    })
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutput> {
    run(RunKind::Experiment, config)
}

pub fn run_ground_state(config: &ExperimentConfig) -> Result<RunOutput> {
    run(RunKind::GroundState, config)
}
