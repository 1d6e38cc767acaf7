//! Phase-sensitive nonadiabatic dressed states (PSNADS).
//!
//! Simulation and analysis of a driven, damped few-level quantum system:
//!
//! * [`model`]: level systems, pulses and the Hamiltonian in lab and rotating frames
//! * [`tdse`]: adaptive integration of the Schrodinger equation and numeric phase extraction
//! * [`dressed`]: mixing angles, quasi-energies and multi-level dressed decompositions
//! * [`ledger`]: accumulated material phases of every dressed component
//! * [`coherence`]: fast/slow phase correlations, visibility and stochastic phase noise
//! * [`oracle`]: comparisons of the analytic ledger with integrated dynamics

pub mod coherence;
pub mod dressed;
pub mod error;
pub mod ledger;
pub mod model;
pub mod oracle;
pub mod table;
pub mod tdse;

pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use coherence::{
    classify, fast_correlation, inject_phase_noise, interference_visibility, slow_correlation, Classification,
    CorrelationKind, CorrelationReport, NoiseEnsemble, NoiseModel, NoiseReport, DEFAULT_EPS_SLOW,
};
pub use dressed::{
    build_psnads, decompose_trajectory, decomposition_series, mixing_angle, quasi_energies, quasi_energy_series,
    DressedAmplitudes, DressedDecomposition, QuasiEnergies, QuasiEnergySeries, VirtualComponent,
};
pub use error::{Error, Result};
pub use ledger::{ledger_multilevel, ledger_two_level, nonadiabatic_phase, PhaseLedger};
pub use model::{
    field_amplitude, field_phase_total, hamiltonian, Dipole, Envelope, FieldPulse, Frame, HamiltonianMatrix, Level,
    LevelSystem, PhaseModulation,
};
pub use oracle::{oracle_check, OracleReport};
pub use table::Table;
pub use tdse::{
    extract_numeric_phase, integrate, uniform_grid, IntegrateOptions, Method, PhaseSeries, StateVector, Trajectory,
};
