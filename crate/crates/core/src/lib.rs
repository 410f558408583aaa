//! Exact-diagonalization toolkit for comparing direct and two-step
//! (symmetry-breaking then symmetric) relaxation protocols in a disordered
//! XYZ spin chain, in real and imaginary time.
//!
//! The pieces, bottom up:
//! - [`hilbert`]: basis conventions, charge sectors, Hamiltonian and rotation builders
//! - [`state`]: tilted ferromagnetic and Néel product states
//! - [`evolution`]: block-aware spectral decomposition and protocol propagation
//! - [`observables`]: entanglement asymmetry, energy, charge statistics, overlap histograms
//! - [`diagnostics`]: level-spacing ratio and ground-state charge census
//! - [`ensemble`]: seeded disorder sweeps and aggregation
//! - [`config`] and [`commands`]: the JSON-driven command-line front end

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod evolution;
pub mod hilbert;
pub mod observables;
pub mod state;

pub use error::{Error, Result};
pub use evolution::{
    decompose_model, propagate_imag, propagate_real, run_protocol, spectral_decompose,
    ProtocolStage, SpectralDecomposition, TimeKind,
};
pub use hilbert::{ChargeSector, ModelParams, Operator};
pub use state::StateVector;

pub use faer::c64;
