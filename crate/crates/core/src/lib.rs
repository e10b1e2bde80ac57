//! Simulation and optimization of a fast flux-activated √iSWAP-like gate on
//! two capacitively coupled fluxonium qubits.
//!
//! Units: energies are stored as frequencies E/h in GHz, times in ns and
//! fluxes as reduced phases in radians. A Hamiltonian `H` (GHz) therefore
//! generates the propagator `exp(-i·2π·H·t)`.
//!
//! The crate is organized bottom-up:
//!
//! * [`fluxonium`] builds and truncates a single fluxonium,
//! * [`coupled`] assembles the two-qubit system and its dressed spectrum,
//! * [`pulse`] describes the flat-top Gaussian flux pulse,
//! * [`evolution`] propagates states, unitaries and density matrices,
//! * [`metrics`] holds the ideal gate family and every fidelity figure,
//! * [`gate`] ties the pieces into a single-pulse pipeline,
//! * [`optimizer`] runs pulse optimization and parameter scans,
//! * [`export`] writes CSV/JSON data files.

pub mod coupled;
pub mod error;
pub mod evolution;
pub mod export;
pub mod fluxonium;
pub mod gate;
pub mod linalg;
pub mod metrics;
pub mod optimizer;
pub mod pulse;

pub use coupled::{DressedLabels, DressedSpectrum, TwoLevelModel, TwoQubitSystem};
pub use error::{FluxError, Result};
pub use evolution::{ChiMatrix, IntegratorMethod, IntegratorOptions, PropagatorResult, TrajectoryPoint};
pub use fluxonium::{CircuitParams, OscillatorRep, TruncatedQubit};
pub use evolution::{Dissipation, RelaxationConvention};
pub use gate::GateSimulation;
pub use metrics::{CalibratedGate, FidelityReport, IdealGateSpec};
pub use optimizer::{OptimizationSpec, ScanResult};
pub use pulse::PulseParams;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// `2π`: converts a frequency in GHz into an angular rate in rad/ns.
pub const TWO_PI: f64 = std::f64::consts::TAU;
