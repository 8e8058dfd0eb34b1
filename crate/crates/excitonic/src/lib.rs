//! Steady-state exciton transport along a biased molecular chain.
//!
//! A chain of two-level sites with a linear energy bias is coupled to a shared
//! ground state, an extraction center, and a set of thermal environments
//! (per-site vibrations, a collective optical field, injection / extraction /
//! load contacts). Populations of the system eigenstates obey a Pauli master
//! equation whose rates follow from golden-rule sandwiches of the coupling
//! operators between eigenstates, weighted by bath spectral densities.
//!
//! The crate computes the stationary populations, the current / voltage /
//! power delivered to the load, and optimizes the on-site energy landscape to
//! maximize either delivered power or extracted current. Analysis routines
//! cover parameter sweeps, loss grids, and logarithmic sensitivity of the
//! optimal power to every model parameter.
//!
//! Units: energies, rates, and spectral widths in eV (hbar = 1, elementary
//! charge = 1, so rates are eV and power comes out in eV^2); temperatures in
//! kelvin.

pub mod analysis;
pub mod environment;
pub mod hamiltonian;
pub mod model;
pub mod observables;
pub mod optimize;
pub mod steadystate;

pub use analysis::{
    loss_grid, point_seed, sensitivity, sweep_de, sweep_j, sweep_phonon, zero_bias_study,
    AnalysisError, PhononAxis, SensitivityEntry, SensitivityReport, SweepPoint, SweepResult,
};
pub use environment::{assemble_rates, bose_einstein, spectral_density, RateModel, RatePieces};
pub use hamiltonian::{build, diagonalize, eigen_residual, EigenBasis, SystemHamiltonian};
pub use model::{
    ChainSpec, Config, CouplingLaw, EnvProcess, GridSpec, LoadRate, ModelError, ModelParams,
    Objective, OperatorPattern, SpectralDensity, StateLabel, K_BOLTZMANN, MAX_CHAIN_SITES,
    MAX_GRID_POINTS,
};
pub use observables::{
    basis_population, brightness, emission_report, enhancement, max_power, power_reading,
    steady_current, EmissionReport, ObservableError, PowerReading, FAST_EC_RATE,
};
pub use optimize::{
    perturbed_starts, run_ensemble, run_grouped, run_local, single_lbfgs_demo, DemoPoint,
    EnergyProblem, GroupProblem, Method, OptRun, OptimizeError, Parameterization,
};
pub use steadystate::{closed_classes, evolve, residual, solve_stationary, steady_state, SteadyStateError};
