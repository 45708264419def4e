//! The scattering experiment: a particle packet hitting a bound two-fermion
//! state in a Gaussian well, with a quadratic absorber near the box edges.

use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::fock::{basis_transform, FockBasis, FockState, Statistics};
use crate::grid::{eval_cap, eval_trap, lowest_eigenstates, one_body_matrix, project_complement, GridSpec, PairPotential, SpfSet};
use crate::linalg::{c, hermitian_eigen, CMat, CVec, C64};
use crate::liouville::BlockDensityMatrix;
use crate::mctdh::{GridModel, MctdhState};
use crate::propagate::{relax_imaginary, PropagationConfig, RelaxConfig, Relaxed};
use crate::pure::PsiState;

/// Every constant of the experiment. Defaults reproduce the reference setup.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(default, deny_unknown_fields))]
pub struct ExperimentConfig {
    pub half_width: f64,
    pub n_points: usize,
    pub cap_onset: f64,
    pub trap_depth: f64,
    pub trap_width: f64,
    pub coulomb_strength: f64,
    pub coulomb_smoothing: f64,
    pub packet_center: f64,
    pub packet_width: f64,
    pub packet_momentum: f64,
    pub l_ground: usize,
    pub l_total: usize,
    pub n_particles: usize,
    pub t_final: f64,
    pub tau: f64,
    pub eps_reg: f64,
    pub record_interval: f64,
    pub relax_tau: f64,
    pub relax_tolerance: f64,
    pub relax_max_steps: usize,
    pub relax_eps_reg: f64,
    pub gamma_off: bool,
    pub output_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let relax = RelaxConfig::default();
        Self {
            half_width: 20.0,
            n_points: 128,
            cap_onset: 16.0,
            trap_depth: 8.0,
            trap_width: 1.25,
            coulomb_strength: 2.0,
            coulomb_smoothing: 0.1,
            packet_center: -2.0,
            packet_width: 0.75,
            packet_momentum: 3.0,
            l_ground: 4,
            l_total: 5,
            n_particles: 3,
            t_final: 30.0,
            tau: 5e-4,
            eps_reg: crate::mctdh::DEFAULT_EPS_REG,
            record_interval: 0.1,
            relax_tau: relax.tau,
            relax_tolerance: relax.tolerance,
            relax_max_steps: relax.max_steps,
            relax_eps_reg: relax.eps_reg,
            gamma_off: false,
            output_dir: String::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cap_onset > 0.0 && self.cap_onset < self.half_width) {
            return Err(invalid("cap_onset must satisfy 0 < cap_onset < half_width"));
        }
        if self.l_total > self.n_points {
            return Err(invalid("l_total must not exceed n_points"));
        }
        if self.l_ground == 0 || self.l_total != self.l_ground + 1 {
            return Err(invalid("l_total must equal l_ground + 1"));
        }
        if self.n_particles == 0 || self.n_particles - 1 > self.l_ground {
            return Err(invalid("n_particles - 1 fermions must fit into l_ground SPFs"));
        }
        if !(self.packet_width > 0.0) {
            return Err(invalid("packet_width must be positive"));
        }
        if !(self.record_interval > 0.0) {
            return Err(invalid("record_interval must be positive"));
        }
        self.propagation().validate()?;
        if !(self.relax_tau > 0.0) || self.relax_max_steps == 0 {
            return Err(invalid("relaxation step and step limit must be positive"));
        }
        Ok(())
    }

    pub fn record_every(&self) -> usize {
        (Float::round(self.record_interval / self.tau) as usize).max(1)
    }

    pub fn propagation(&self) -> PropagationConfig {
        PropagationConfig { tau: self.tau, t_final: self.t_final, record_every: self.record_every(), eps_reg: self.eps_reg }
    }

    pub fn relax(&self) -> RelaxConfig {
        RelaxConfig { tau: self.relax_tau, tolerance: self.relax_tolerance, max_steps: self.relax_max_steps, eps_reg: self.relax_eps_reg }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(self.half_width, self.n_points)
    }

    /// Trap, absorber (zero when `gamma_off`) and smoothed Coulomb interaction.
    pub fn model(&self) -> Result<GridModel> {
        let grid = self.grid()?;
        let potential = eval_trap(&grid, self.trap_depth, self.trap_width);
        let mut cap = eval_cap(&grid, self.cap_onset)?;
        if self.gamma_off {
            cap.iter_mut().for_each(|g| *g = 0.0);
        }
        let pair = PairPotential::smoothed_coulomb(&grid, self.coulomb_strength, self.coulomb_smoothing);
        GridModel::new(grid, potential, cap, pair)
    }

    /// Unprojected packet `exp(-(x - x0)²/w + i k x)`.
    pub fn packet(&self, x: f64) -> C64 {
        let d = x - self.packet_center;
        C64::new(-d * d / self.packet_width, self.packet_momentum * x).exp()
    }
}

/// Number of negative eigenvalues of the discretized `T + V`.
pub fn bound_state_count(grid: &GridSpec, potential: &[f64]) -> usize {
    hermitian_eigen(&one_body_matrix(grid, potential)).0.iter().filter(|&&e| e < 0.0).count()
}

/// Everything produced while setting up the initial state.
#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub model: GridModel,
    pub basis: FockBasis,
    pub state: MctdhState,
    pub ground_basis: FockBasis,
    pub ground: Relaxed,
}

/// Relaxes the `(N-1)`-fermion ground state without absorber.
///
/// The initial guess uses the lowest `l_ground` eigenfunctions of `T + V` as
/// SPFs and the determinant of the lowest `N-1` of them.
pub fn relax_ground_state(config: &ExperimentConfig, model: &GridModel) -> Result<(FockBasis, Relaxed)> {
    let n_ground = config.n_particles - 1;
    let basis = FockBasis::new(config.l_ground, n_ground, Statistics::Fermion)?;
    let (_, spfs) = lowest_eigenstates(&model.grid, &model.potential, config.l_ground)?;
    let occupied: Vec<usize> = (0..n_ground).collect();
    let (_, idx) = basis
        .index_of(&FockState::fermion(config.l_ground, &occupied))
        .ok_or_else(|| invalid("ground-state determinant missing from basis"))?;
    let mut coeffs = CVec::zeros(basis.block_dim(n_ground));
    coeffs[idx] = c(1.0);
    let initial = PsiState::new(&basis, spfs, n_ground, coeffs)?;
    let relaxed = relax_imaginary(&basis, &model.without_cap(), initial, &config.relax())?;
    Ok((basis, relaxed))
}

/// The relaxed ground state as a density-operator state (pure, block `N-1`).
pub fn ground_state_density(basis: &FockBasis, relaxed: &Relaxed) -> Result<MctdhState> {
    let b = BlockDensityMatrix::pure(basis, relaxed.state.n, &relaxed.state.coeffs)?;
    MctdhState::new(relaxed.state.spfs.clone(), b, basis)
}

/// `ρ(0) = c†(g)|Ψ⟩⟨Ψ|c(g)` with `g` the normalized complement projection of
/// the packet, appended as the last SPF.
pub fn prepare_initial_state(config: &ExperimentConfig) -> Result<PreparedExperiment> {
    config.validate()?;
    let model = config.model()?;
    let (ground_basis, ground) = relax_ground_state(config, &model)?;
    let state = add_packet(config, &model, &ground_basis, &ground)?;
    let basis = FockBasis::new(config.l_total, config.n_particles, Statistics::Fermion)?;
    Ok(PreparedExperiment { model, basis, state, ground_basis, ground })
}

fn add_packet(config: &ExperimentConfig, model: &GridModel, ground_basis: &FockBasis, ground: &Relaxed) -> Result<MctdhState> {
    let packet = model.grid.sample_complex(|x| config.packet(x));
    let mut g = project_complement(&ground.state.spfs, &packet);
    let norm = g.norm();
    if !(norm > 1e-12) {
        return Err(invalid("packet lies inside the ground-state SPF space"));
    }
    g.values /= c(norm);

    let l = config.l_total;
    let n = config.n_particles;
    let npts = model.grid.n_points();
    let mut phi = CMat::zeros(npts, l);
    phi.view_mut((0, 0), (npts, config.l_ground)).copy_from(ground.state.spfs.matrix());
    phi.set_column(l - 1, &g.values);
    let spfs = SpfSet::orthonormal(phi, model.grid.dx(), 1e-10)?;

    let basis = FockBasis::new(l, n, Statistics::Fermion)?;
    let embed = CMat::identity(l, config.l_ground);
    let transform = basis_transform(ground_basis, &basis, &embed)?;
    let psi = &transform[n - 1] * &ground.state.coeffs;
    let added = basis.apply_creator(l - 1, n - 1, &psi);
    let b = BlockDensityMatrix::pure(&basis, n, &added)?;
    MctdhState::new(spfs, b, &basis)
}
